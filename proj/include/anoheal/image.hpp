#pragma once

#include <cstddef>
#include <vector>

#include "anoheal/errors.hpp"

namespace anoheal {

// Single-channel 2D image, row-major, values nominally in [0, 1].
struct Image {
    int h = 0;
    int w = 0;
    std::vector<float> v;

    Image() = default;
    Image(int height, int width, float fill = 0.0f)
        : h(height), w(width), v(static_cast<size_t>(height) * width, fill) {}

    float& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
    float at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }

    size_t size() const { return v.size(); }
    bool same_shape(const Image& o) const { return h == o.h && w == o.w; }
};

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(a.h) + "x" +
                         std::to_string(a.w) + " vs " + std::to_string(b.h) + "x" +
                         std::to_string(b.w) + ")");
    }
}

inline bool in_unit_range(const Image& img) {
    for (float x : img.v) {
        if (!(x >= 0.0f && x <= 1.0f)) return false;
    }
    return true;
}

inline void clamp_unit(Image& img) {
    for (float& x : img.v) {
        if (x < 0.0f) x = 0.0f;
        if (x > 1.0f) x = 1.0f;
    }
}

} // namespace anoheal
