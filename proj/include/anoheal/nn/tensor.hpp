#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "anoheal/errors.hpp"

namespace anoheal::nn {

// Dense NCHW tensor. Feature vectors use c as the feature axis with h=w=1.
template <typename T>
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          v(static_cast<size_t>(n_) * c_ * h_ * w_, T(0)) {}

    size_t size() const { return v.size(); }
    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    // Pointer to the (n, c) plane.
    T* plane(int ni, int ci) {
        return v.data() + (static_cast<size_t>(ni) * c + ci) * h * w;
    }
    const T* plane(int ni, int ci) const {
        return v.data() + (static_cast<size_t>(ni) * c + ci) * h * w;
    }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
};

template <typename T>
void add_inplace(Tensor<T>& dst, const Tensor<T>& src) {
    if (!dst.same_shape(src)) throw ShapeError("add_inplace: shape mismatch");
    for (size_t i = 0; i < dst.v.size(); ++i) dst.v[i] += src.v[i];
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.n != b.n || a.h != b.h || a.w != b.w) {
        throw ShapeError("concat_channels: incompatible shapes");
    }
    Tensor<T> out(a.n, a.c + b.c, a.h, a.w);
    const size_t plane = static_cast<size_t>(a.h) * a.w;
    for (int ni = 0; ni < a.n; ++ni) {
        std::copy_n(a.plane(ni, 0), plane * a.c, out.plane(ni, 0));
        std::copy_n(b.plane(ni, 0), plane * b.c, out.plane(ni, a.c));
    }
    return out;
}

template <typename T>
void split_channels(const Tensor<T>& joint, Tensor<T>& a, Tensor<T>& b, int c_a) {
    a = Tensor<T>(joint.n, c_a, joint.h, joint.w);
    b = Tensor<T>(joint.n, joint.c - c_a, joint.h, joint.w);
    const size_t plane = static_cast<size_t>(joint.h) * joint.w;
    for (int ni = 0; ni < joint.n; ++ni) {
        std::copy_n(joint.plane(ni, 0), plane * a.c, a.plane(ni, 0));
        std::copy_n(joint.plane(ni, c_a), plane * b.c, b.plane(ni, 0));
    }
}

} // namespace anoheal::nn
