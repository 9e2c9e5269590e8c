#include "anoheal/tensor_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "tensor container assumes a little-endian host");

namespace anoheal {

namespace {

using nlohmann::json;

size_t element_count(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    return n;
}

void validate_shape(const std::vector<int>& shape) {
    if (shape.empty()) throw ConfigError("tensor shape must have at least one dimension");
    for (int d : shape) {
        if (d <= 0) throw ConfigError("tensor shape has non-positive dimension");
    }
}

} // namespace

void save_tensor(const std::filesystem::path& path, const std::vector<int>& shape,
                 const float* data) {
    validate_shape(shape);

    json header;
    header["shape"] = shape;
    header["dtype"] = "f32";
    header["layout"] = "row-major";
    header["endianness"] = "little";
    header["version"] = kTensorFormatVersion;
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());

    out.write(kTensorMagic, 4);
    const uint32_t header_len = static_cast<uint32_t>(header_str.size());
    out.write(reinterpret_cast<const char*>(&header_len), 4);
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(element_count(shape) * sizeof(float)));
    if (!out) throw DataError("write failed: " + path.string());
}

namespace {

json read_header(std::ifstream& in, const std::filesystem::path& path,
                 std::vector<int>* shape_out) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kTensorMagic, 4) != 0) {
        throw MalformedHeaderError("bad magic in " + path.string());
    }
    uint32_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), 4);
    if (!in || header_len == 0 || header_len > (1u << 20)) {
        throw MalformedHeaderError("bad header length in " + path.string());
    }
    std::string header_str(header_len, '\0');
    in.read(header_str.data(), header_len);
    if (!in) throw MalformedHeaderError("header cut short in " + path.string());

    json header = json::parse(header_str, nullptr, false);
    if (header.is_discarded()) {
        throw MalformedHeaderError("header is not valid JSON in " + path.string());
    }
    if (!header.contains("shape") || !header.contains("dtype") || !header.contains("version") ||
        !header["shape"].is_array()) {
        throw MalformedHeaderError("header missing required keys in " + path.string());
    }
    if (header["dtype"] != "f32") {
        throw DtypeError("unsupported dtype '" + header["dtype"].dump() + "' in " + path.string());
    }
    if (header.value("endianness", "little") != "little") {
        throw DtypeError("unsupported endianness in " + path.string());
    }

    std::vector<int> shape;
    for (const auto& d : header["shape"]) {
        if (!d.is_number_integer() || d.get<int64_t>() <= 0) {
            throw MalformedHeaderError("invalid shape entry in " + path.string());
        }
        shape.push_back(d.get<int>());
    }
    if (shape.empty()) throw MalformedHeaderError("empty shape in " + path.string());
    *shape_out = shape;
    return header;
}

} // namespace

LoadedTensor load_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path.string());

    LoadedTensor t;
    read_header(in, path, &t.shape);

    const size_t n = element_count(t.shape);
    t.data.resize(n);
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
    if (static_cast<size_t>(in.gcount()) != n * sizeof(float)) {
        throw TruncatedPayloadError("payload shorter than header shape in " + path.string());
    }
    // A longer-than-declared payload is as suspect as a shorter one.
    char extra;
    in.read(&extra, 1);
    if (in.gcount() != 0) {
        throw TruncatedPayloadError("trailing bytes after payload in " + path.string());
    }
    return t;
}

std::vector<int> peek_tensor_shape(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path.string());
    std::vector<int> shape;
    read_header(in, path, &shape);
    return shape;
}

void save_image(const std::filesystem::path& path, const Image& img) {
    save_tensor(path, {img.h, img.w}, img.v.data());
}

Image load_image(const std::filesystem::path& path) {
    LoadedTensor t = load_tensor(path);
    if (t.shape.size() != 2) {
        throw DtypeError("expected a 2D tensor in " + path.string() + ", got " +
                         std::to_string(t.shape.size()) + "D");
    }
    Image img(t.shape[0], t.shape[1]);
    img.v = std::move(t.data);
    return img;
}

} // namespace anoheal
