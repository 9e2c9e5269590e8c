#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "anoheal/image.hpp"

namespace anoheal {

// On-disk tensor container: 4-byte magic "ANHT", little-endian uint32 header
// length, JSON header {shape, dtype:"f32", layout:"row-major",
// endianness:"little", version:1}, then the raw float32 payload.
inline constexpr char kTensorMagic[4] = {'A', 'N', 'H', 'T'};
inline constexpr int kTensorFormatVersion = 1;

void save_tensor(const std::filesystem::path& path, const std::vector<int>& shape,
                 const float* data);

struct LoadedTensor {
    std::vector<int> shape;
    std::vector<float> data;
};

LoadedTensor load_tensor(const std::filesystem::path& path);

// Reads only the header; useful for manifest validation.
std::vector<int> peek_tensor_shape(const std::filesystem::path& path);

void save_image(const std::filesystem::path& path, const Image& img);
Image load_image(const std::filesystem::path& path);

} // namespace anoheal
