#pragma once

#include <cmath>
#include <vector>

#include "anoheal/nn/blas.hpp"
#include "anoheal/nn/tensor.hpp"
#include "anoheal/rng.hpp"

namespace anoheal::nn {

template <typename T>
struct ParamRef {
    std::vector<T>* value;
    std::vector<T>* grad;
};

template <typename T>
struct Param {
    std::vector<T> value;
    std::vector<T> grad;

    void resize(size_t n) {
        value.assign(n, T(0));
        grad.assign(n, T(0));
    }
    void collect(std::vector<ParamRef<T>>& out) { out.push_back({&value, &grad}); }
};

template <typename T>
void init_normal(std::vector<T>& v, Rng& rng, double std_dev) {
    for (T& x : v) x = static_cast<T>(normal(rng) * std_dev);
}

// ---------------------------------------------------------------------------
// Conv2d: im2col + GEMM batched over all images so BLAS sees one large
// multiply per layer. Columns are laid out (in*k*k) x (n*oh*ow).
// ---------------------------------------------------------------------------
template <typename T>
class Conv2d {
public:
    Conv2d() = default;
    Conv2d(int in_ch, int out_ch, int kernel, int stride, int pad)
        : in_ch_(in_ch), out_ch_(out_ch), k_(kernel), stride_(stride), pad_(pad) {
        weight_.resize(static_cast<size_t>(out_ch) * in_ch * kernel * kernel);
        bias_.resize(static_cast<size_t>(out_ch));
    }

    void init(Rng& rng, double scale = 1.0) {
        const double fan_in = static_cast<double>(in_ch_) * k_ * k_;
        init_normal(weight_.value, rng, scale * std::sqrt(2.0 / fan_in));
        std::fill(bias_.value.begin(), bias_.value.end(), T(0));
    }

    Tensor<T> forward(const Tensor<T>& x) {
        if (x.c != in_ch_) throw ShapeError("Conv2d: channel mismatch");
        x_cache_ = x;
        const int oh = out_dim(x.h), ow = out_dim(x.w);
        Tensor<T> y(x.n, out_ch_, oh, ow);
        const int spatial = oh * ow;
        const int total = x.n * spatial;
        const int krows = is_pointwise() ? in_ch_ : in_ch_ * k_ * k_;

        const T* src;
        if (is_pointwise()) {
            src = gather(x, xg_);
        } else {
            im2col(x, oh, ow, cols_);
            src = cols_.data();
        }

        // Small problems run channels-major straight into y; large ones run
        // pixels-major (faster for narrow channel counts) plus a tiled
        // transpose on the way out.
        if (2.0 * krows * out_ch_ * total < 2e7) {
            yt_.resize(static_cast<size_t>(out_ch_) * total);
            T* dst = x.n == 1 ? y.data() : yt_.data();
            gemm(false, false, out_ch_, total, krows, T(1), weight_.value.data(), krows, src,
                 total, T(0), dst, total);
            scatter_with_bias(dst, y);
        } else {
            yt_.resize(static_cast<size_t>(out_ch_) * total);
            gemm(true, true, total, out_ch_, krows, T(1), src, total, weight_.value.data(),
                 krows, T(0), yt_.data(), out_ch_);
            transpose_scatter_bias(yt_.data(), y);
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const Tensor<T>& x = x_cache_;
        const int oh = dy.h, ow = dy.w;
        const int spatial = oh * ow;
        const int total = x.n * spatial;
        Tensor<T> dx(x.n, x.c, x.h, x.w);
        const int krows = is_pointwise() ? in_ch_ : in_ch_ * k_ * k_;

        const T* dyt = gather(dy, dyg_);
        for (int co = 0; co < out_ch_; ++co) {
            const T* row = dyt + static_cast<size_t>(co) * total;
            T acc = T(0);
            for (int j = 0; j < total; ++j) acc += row[j];
            bias_.grad[co] += acc;
        }

        // forward() always runs right before backward() on the same batch, so
        // the column/gather buffers it filled are still current.
        const T* src = is_pointwise() ? (x.n == 1 ? x.data() : xg_.data()) : cols_.data();

        // Weight gradient, computed transposed (krows-major) for speed when
        // large, then folded into the (out, krows) gradient in fixed order.
        if (2.0 * krows * out_ch_ * total < 2e7) {
            gemm_raw(false, true, out_ch_, krows, total, T(1), dyt, total, src, total, T(1),
                     weight_.grad.data(), krows);
        } else {
            dwt_.assign(static_cast<size_t>(krows) * out_ch_, T(0));
            gemm_acc_ksplit(true, krows, out_ch_, total, src, total, dyt, total, dwt_.data(),
                            out_ch_, ksplit_scratch_);
            for (int r = 0; r < krows; ++r) {
                for (int co = 0; co < out_ch_; ++co) {
                    weight_.grad[static_cast<size_t>(co) * krows + r] +=
                        dwt_[static_cast<size_t>(r) * out_ch_ + co];
                }
            }
        }

        // Input gradient: krows is comfortably large, keep channels-major.
        if (is_pointwise()) {
            dxt_.resize(static_cast<size_t>(in_ch_) * total);
            T* dst = x.n == 1 ? dx.data() : dxt_.data();
            gemm(true, false, in_ch_, total, out_ch_, T(1), weight_.value.data(), in_ch_, dyt,
                 total, T(0), dst, total);
            if (x.n != 1) scatter_plain(dxt_.data(), dx);
        } else {
            dcols_.resize(static_cast<size_t>(krows) * total);
            gemm(true, false, krows, total, out_ch_, T(1), weight_.value.data(), krows, dyt,
                 total, T(0), dcols_.data(), total);
            col2im(dcols_, dx, oh, ow);
        }
        return dx;
    }

    void collect_params(std::vector<ParamRef<T>>& out) {
        weight_.collect(out);
        bias_.collect(out);
    }

    size_t param_count() const { return weight_.value.size() + bias_.value.size(); }
    int out_dim(int in) const { return (in + 2 * pad_ - k_) / stride_ + 1; }

private:
    bool is_pointwise() const { return k_ == 1 && stride_ == 1 && pad_ == 0; }

    // NCHW -> (c, n*spatial); single-image tensors are already in that layout.
    const T* gather(const Tensor<T>& t, std::vector<T>& buf) {
        const size_t plane = static_cast<size_t>(t.h) * t.w;
        if (t.n == 1) return t.data();
        buf.resize(static_cast<size_t>(t.c) * t.n * plane);
        for (int ci = 0; ci < t.c; ++ci) {
            for (int ni = 0; ni < t.n; ++ni) {
                std::copy_n(t.plane(ni, ci), plane,
                            buf.data() + (static_cast<size_t>(ci) * t.n + ni) * plane);
            }
        }
        return buf.data();
    }

    void scatter_with_bias(const T* src, Tensor<T>& y) const {
        const size_t plane = static_cast<size_t>(y.h) * y.w;
        for (int co = 0; co < y.c; ++co) {
            const T b = bias_.value[co];
            for (int ni = 0; ni < y.n; ++ni) {
                const T* s = src + (static_cast<size_t>(co) * y.n + ni) * plane;
                T* d = y.plane(ni, co);
                for (size_t j = 0; j < plane; ++j) d[j] = s[j] + b;
            }
        }
    }

    void scatter_plain(const T* src, Tensor<T>& t) const {
        const size_t plane = static_cast<size_t>(t.h) * t.w;
        for (int ci = 0; ci < t.c; ++ci) {
            for (int ni = 0; ni < t.n; ++ni) {
                std::copy_n(src + (static_cast<size_t>(ci) * t.n + ni) * plane, plane,
                            t.plane(ni, ci));
            }
        }
    }

    // src is (n*spatial, out_ch) row-major; tiles keep the strided reads in L1.
    void transpose_scatter_bias(const T* src, Tensor<T>& y) const {
        const size_t plane = static_cast<size_t>(y.h) * y.w;
        constexpr size_t kTile = 64;
        for (int ni = 0; ni < y.n; ++ni) {
            const T* base = src + static_cast<size_t>(ni) * plane * y.c;
            for (size_t p0 = 0; p0 < plane; p0 += kTile) {
                const size_t p1 = std::min(plane, p0 + kTile);
                for (int co = 0; co < y.c; ++co) {
                    const T b = bias_.value[co];
                    T* dst = y.plane(ni, co);
                    for (size_t p = p0; p < p1; ++p) {
                        dst[p] = base[p * y.c + co] + b;
                    }
                }
            }
        }
    }

    // Writes every entry exactly once (valid copies plus explicit zero fill),
    // so the buffer needs no prior clearing.
    void im2col(const Tensor<T>& x, int oh, int ow, std::vector<T>& cols) const {
        const int spatial = oh * ow;
        const size_t total = static_cast<size_t>(x.n) * spatial;
        cols.resize(static_cast<size_t>(in_ch_) * k_ * k_ * total);
        for (int ci = 0; ci < in_ch_; ++ci) {
            for (int ky = 0; ky < k_; ++ky) {
                for (int kx = 0; kx < k_; ++kx) {
                    T* row = cols.data() +
                             (static_cast<size_t>(ci) * k_ * k_ + ky * k_ + kx) * total;
                    // Valid output x-range for this kernel column.
                    int x_lo = 0;
                    while (x_lo < ow && x_lo * stride_ - pad_ + kx < 0) ++x_lo;
                    int x_hi = ow;
                    while (x_hi > x_lo && (x_hi - 1) * stride_ - pad_ + kx >= x.w) --x_hi;

                    for (int ni = 0; ni < x.n; ++ni) {
                        const T* plane = x.plane(ni, ci);
                        T* base = row + static_cast<size_t>(ni) * spatial;
                        for (int oy = 0; oy < oh; ++oy) {
                            T* dst = base + static_cast<size_t>(oy) * ow;
                            const int iy = oy * stride_ - pad_ + ky;
                            if (iy < 0 || iy >= x.h) {
                                std::fill_n(dst, ow, T(0));
                                continue;
                            }
                            const T* srow = plane + static_cast<size_t>(iy) * x.w;
                            std::fill_n(dst, x_lo, T(0));
                            if (stride_ == 1) {
                                std::copy_n(srow + (x_lo - pad_ + kx), x_hi - x_lo, dst + x_lo);
                            } else {
                                for (int ox = x_lo; ox < x_hi; ++ox) {
                                    dst[ox] = srow[ox * stride_ - pad_ + kx];
                                }
                            }
                            std::fill_n(dst + x_hi, ow - x_hi, T(0));
                        }
                    }
                }
            }
        }
    }

    void col2im(const std::vector<T>& cols, Tensor<T>& dx, int oh, int ow) const {
        const int spatial = oh * ow;
        const size_t total = static_cast<size_t>(dx.n) * spatial;
        for (int ci = 0; ci < in_ch_; ++ci) {
            for (int ky = 0; ky < k_; ++ky) {
                for (int kx = 0; kx < k_; ++kx) {
                    const T* row = cols.data() +
                                   (static_cast<size_t>(ci) * k_ * k_ + ky * k_ + kx) * total;
                    int x_lo = 0;
                    while (x_lo < ow && x_lo * stride_ - pad_ + kx < 0) ++x_lo;
                    int x_hi = ow;
                    while (x_hi > x_lo && (x_hi - 1) * stride_ - pad_ + kx >= dx.w) --x_hi;

                    for (int ni = 0; ni < dx.n; ++ni) {
                        T* plane = dx.plane(ni, ci);
                        const T* base = row + static_cast<size_t>(ni) * spatial;
                        for (int oy = 0; oy < oh; ++oy) {
                            const int iy = oy * stride_ - pad_ + ky;
                            if (iy < 0 || iy >= dx.h) continue;
                            const T* srow = base + static_cast<size_t>(oy) * ow;
                            T* drow = plane + static_cast<size_t>(iy) * dx.w;
                            for (int ox = x_lo; ox < x_hi; ++ox) {
                                drow[ox * stride_ - pad_ + kx] += srow[ox];
                            }
                        }
                    }
                }
            }
        }
    }

    int in_ch_ = 0, out_ch_ = 0, k_ = 3, stride_ = 1, pad_ = 1;
    Param<T> weight_, bias_;
    Tensor<T> x_cache_;
    std::vector<T> cols_, dcols_, xg_, dyg_, yt_, dxt_, dwt_, ksplit_scratch_;
};

// ---------------------------------------------------------------------------
// GroupNorm with affine parameters.
// ---------------------------------------------------------------------------
template <typename T>
class GroupNorm {
public:
    GroupNorm() = default;
    GroupNorm(int channels, int groups) : channels_(channels), groups_(groups) {
        if (channels % groups != 0) {
            throw ConfigError("GroupNorm: channels must be divisible by groups");
        }
        gamma_.resize(static_cast<size_t>(channels));
        beta_.resize(static_cast<size_t>(channels));
        std::fill(gamma_.value.begin(), gamma_.value.end(), T(1));
    }

    Tensor<T> forward(const Tensor<T>& x) {
        if (x.c != channels_) throw ShapeError("GroupNorm: channel mismatch");
        const int cpg = channels_ / groups_;
        const size_t plane = static_cast<size_t>(x.h) * x.w;
        const size_t group_elems = plane * cpg;

        xhat_ = Tensor<T>(x.n, x.c, x.h, x.w);
        invstd_.assign(static_cast<size_t>(x.n) * groups_, T(0));
        Tensor<T> y(x.n, x.c, x.h, x.w);

        for (int ni = 0; ni < x.n; ++ni) {
            for (int g = 0; g < groups_; ++g) {
                const T* src = x.plane(ni, g * cpg);
                T mean = T(0);
                for (size_t i = 0; i < group_elems; ++i) mean += src[i];
                mean /= static_cast<T>(group_elems);
                T var = T(0);
                for (size_t i = 0; i < group_elems; ++i) {
                    const T d = src[i] - mean;
                    var += d * d;
                }
                var /= static_cast<T>(group_elems);
                const T inv = T(1) / std::sqrt(var + static_cast<T>(kEps));
                invstd_[static_cast<size_t>(ni) * groups_ + g] = inv;

                T* xh = xhat_.plane(ni, g * cpg);
                T* dst = y.plane(ni, g * cpg);
                for (int cc = 0; cc < cpg; ++cc) {
                    const T gam = gamma_.value[g * cpg + cc];
                    const T bet = beta_.value[g * cpg + cc];
                    const T* s = src + static_cast<size_t>(cc) * plane;
                    T* xhp = xh + static_cast<size_t>(cc) * plane;
                    T* dp = dst + static_cast<size_t>(cc) * plane;
                    for (size_t i = 0; i < plane; ++i) {
                        xhp[i] = (s[i] - mean) * inv;
                        dp[i] = gam * xhp[i] + bet;
                    }
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const int cpg = channels_ / groups_;
        const size_t plane = static_cast<size_t>(dy.h) * dy.w;
        const size_t group_elems = plane * cpg;
        Tensor<T> dx(dy.n, dy.c, dy.h, dy.w);

        for (int ni = 0; ni < dy.n; ++ni) {
            for (int g = 0; g < groups_; ++g) {
                const T inv = invstd_[static_cast<size_t>(ni) * groups_ + g];
                const T* dyp = dy.plane(ni, g * cpg);
                const T* xh = xhat_.plane(ni, g * cpg);

                T sum_dxhat = T(0), sum_dxhat_xhat = T(0);
                for (int cc = 0; cc < cpg; ++cc) {
                    const T gam = gamma_.value[g * cpg + cc];
                    const T* dyr = dyp + static_cast<size_t>(cc) * plane;
                    const T* xhr = xh + static_cast<size_t>(cc) * plane;
                    T dg = T(0), db = T(0);
                    for (size_t i = 0; i < plane; ++i) {
                        dg += dyr[i] * xhr[i];
                        db += dyr[i];
                        const T dxh = dyr[i] * gam;
                        sum_dxhat += dxh;
                        sum_dxhat_xhat += dxh * xhr[i];
                    }
                    gamma_.grad[g * cpg + cc] += dg;
                    beta_.grad[g * cpg + cc] += db;
                }

                const T m = static_cast<T>(group_elems);
                T* dxp = dx.plane(ni, g * cpg);
                for (int cc = 0; cc < cpg; ++cc) {
                    const T gam = gamma_.value[g * cpg + cc];
                    const T* dyr = dyp + static_cast<size_t>(cc) * plane;
                    const T* xhr = xh + static_cast<size_t>(cc) * plane;
                    T* dxr = dxp + static_cast<size_t>(cc) * plane;
                    for (size_t i = 0; i < plane; ++i) {
                        const T dxh = dyr[i] * gam;
                        dxr[i] = inv * (dxh - sum_dxhat / m - xhr[i] * sum_dxhat_xhat / m);
                    }
                }
            }
        }
        return dx;
    }

    void collect_params(std::vector<ParamRef<T>>& out) {
        gamma_.collect(out);
        beta_.collect(out);
    }
    size_t param_count() const { return gamma_.value.size() + beta_.value.size(); }

private:
    static constexpr double kEps = 1e-5;
    int channels_ = 0, groups_ = 1;
    Param<T> gamma_, beta_;
    Tensor<T> xhat_;
    std::vector<T> invstd_;
};

// ---------------------------------------------------------------------------
// SiLU activation.
// ---------------------------------------------------------------------------
template <typename T>
class SiLU {
public:
    Tensor<T> forward(const Tensor<T>& x) {
        x_cache_ = x;
        Tensor<T> y = x;
        for (T& v : y.v) {
            const T s = T(1) / (T(1) + std::exp(-v));
            v = v * s;
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx = dy;
        for (size_t i = 0; i < dx.v.size(); ++i) {
            const T x = x_cache_.v[i];
            const T s = T(1) / (T(1) + std::exp(-x));
            dx.v[i] *= s * (T(1) + x * (T(1) - s));
        }
        return dx;
    }

private:
    Tensor<T> x_cache_;
};

// ---------------------------------------------------------------------------
// Linear layer over (n, features) tensors.
// ---------------------------------------------------------------------------
template <typename T>
class Linear {
public:
    Linear() = default;
    Linear(int in_features, int out_features) : in_(in_features), out_(out_features) {
        weight_.resize(static_cast<size_t>(out_features) * in_features);
        bias_.resize(static_cast<size_t>(out_features));
    }

    void init(Rng& rng, double scale = 1.0) {
        init_normal(weight_.value, rng, scale * std::sqrt(2.0 / in_));
        std::fill(bias_.value.begin(), bias_.value.end(), T(0));
    }

    Tensor<T> forward(const Tensor<T>& x) {
        if (x.c != in_ || x.h != 1 || x.w != 1) throw ShapeError("Linear: bad input shape");
        x_cache_ = x;
        Tensor<T> y(x.n, out_, 1, 1);
        gemm(false, true, x.n, out_, in_, T(1), x.data(), in_, weight_.value.data(), in_, T(0),
             y.data(), out_);
        for (int ni = 0; ni < x.n; ++ni) {
            for (int o = 0; o < out_; ++o) y.v[static_cast<size_t>(ni) * out_ + o] += bias_.value[o];
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const Tensor<T>& x = x_cache_;
        for (int ni = 0; ni < dy.n; ++ni) {
            for (int o = 0; o < out_; ++o) {
                bias_.grad[o] += dy.v[static_cast<size_t>(ni) * out_ + o];
            }
        }
        gemm(true, false, out_, in_, dy.n, T(1), dy.data(), out_, x.data(), in_, T(1),
             weight_.grad.data(), in_);
        Tensor<T> dx(x.n, in_, 1, 1);
        gemm(false, false, dy.n, in_, out_, T(1), dy.data(), out_, weight_.value.data(), in_,
             T(0), dx.data(), in_);
        return dx;
    }

    void collect_params(std::vector<ParamRef<T>>& out) {
        weight_.collect(out);
        bias_.collect(out);
    }
    size_t param_count() const { return weight_.value.size() + bias_.value.size(); }

private:
    int in_ = 0, out_ = 0;
    Param<T> weight_, bias_;
    Tensor<T> x_cache_;
};

// ---------------------------------------------------------------------------
// Single-head spatial self-attention with a residual connection.
// ---------------------------------------------------------------------------
template <typename T>
class AttentionBlock {
public:
    AttentionBlock() = default;
    AttentionBlock(int channels, int groups)
        : channels_(channels),
          norm_(channels, groups),
          to_q_(channels, channels, 1, 1, 0),
          to_k_(channels, channels, 1, 1, 0),
          to_v_(channels, channels, 1, 1, 0),
          proj_(channels, channels, 1, 1, 0) {}

    void init(Rng& rng) {
        to_q_.init(rng);
        to_k_.init(rng);
        to_v_.init(rng);
        proj_.init(rng, kProjScale);
    }

    Tensor<T> forward(const Tensor<T>& x) {
        const int tokens = x.h * x.w;
        Tensor<T> h = norm_.forward(x);
        q_ = to_q_.forward(h);
        k_ = to_k_.forward(h);
        v_ = to_v_.forward(h);

        attn_ = Tensor<T>(x.n, 1, tokens, tokens);
        Tensor<T> o(x.n, channels_, x.h, x.w);
        const T scale = T(1) / std::sqrt(static_cast<T>(channels_));
        for (int ni = 0; ni < x.n; ++ni) {
            T* a = attn_.plane(ni, 0);
            // S = Q^T K / sqrt(C); rows index queries.
            gemm(true, false, tokens, tokens, channels_, scale, q_.plane(ni, 0), tokens,
                 k_.plane(ni, 0), tokens, T(0), a, tokens);
            softmax_rows(a, tokens);
            // O = V A^T so that O_i = sum_j A_ij V_j.
            gemm(false, true, channels_, tokens, tokens, T(1), v_.plane(ni, 0), tokens, a, tokens,
                 T(0), o.plane(ni, 0), tokens);
        }
        Tensor<T> y = proj_.forward(o);
        add_inplace(y, x);
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const int tokens = dy.h * dy.w;
        Tensor<T> d_o = proj_.backward(dy);
        Tensor<T> dq(dy.n, channels_, dy.h, dy.w);
        Tensor<T> dk(dy.n, channels_, dy.h, dy.w);
        Tensor<T> dv(dy.n, channels_, dy.h, dy.w);

        const T scale = T(1) / std::sqrt(static_cast<T>(channels_));
        std::vector<T> da(static_cast<size_t>(tokens) * tokens);
        for (int ni = 0; ni < dy.n; ++ni) {
            const T* a = attn_.plane(ni, 0);
            // dV = dO A ; dA = dO^T V.
            gemm(false, false, channels_, tokens, tokens, T(1), d_o.plane(ni, 0), tokens, a,
                 tokens, T(0), dv.plane(ni, 0), tokens);
            gemm(true, false, tokens, tokens, channels_, T(1), d_o.plane(ni, 0), tokens,
                 v_.plane(ni, 0), tokens, T(0), da.data(), tokens);
            // Softmax backward per row, in place on da.
            for (int i = 0; i < tokens; ++i) {
                T* dar = da.data() + static_cast<size_t>(i) * tokens;
                const T* ar = a + static_cast<size_t>(i) * tokens;
                T dot = T(0);
                for (int j = 0; j < tokens; ++j) dot += dar[j] * ar[j];
                for (int j = 0; j < tokens; ++j) dar[j] = ar[j] * (dar[j] - dot);
            }
            // dQ = K dS^T * scale ; dK = Q dS * scale.
            gemm(false, true, channels_, tokens, tokens, scale, k_.plane(ni, 0), tokens,
                 da.data(), tokens, T(0), dq.plane(ni, 0), tokens);
            gemm(false, false, channels_, tokens, tokens, scale, q_.plane(ni, 0), tokens,
                 da.data(), tokens, T(0), dk.plane(ni, 0), tokens);
        }

        Tensor<T> dh = to_q_.backward(dq);
        add_inplace(dh, to_k_.backward(dk));
        add_inplace(dh, to_v_.backward(dv));
        Tensor<T> dx = norm_.backward(dh);
        add_inplace(dx, dy);
        return dx;
    }

    void collect_params(std::vector<ParamRef<T>>& out) {
        norm_.collect_params(out);
        to_q_.collect_params(out);
        to_k_.collect_params(out);
        to_v_.collect_params(out);
        proj_.collect_params(out);
    }

    size_t param_count() const {
        return norm_.param_count() + to_q_.param_count() + to_k_.param_count() +
               to_v_.param_count() + proj_.param_count();
    }

private:
    static constexpr double kProjScale = 0.1;

    static void softmax_rows(T* a, int tokens) {
        for (int i = 0; i < tokens; ++i) {
            T* row = a + static_cast<size_t>(i) * tokens;
            T mx = row[0];
            for (int j = 1; j < tokens; ++j) mx = std::max(mx, row[j]);
            T sum = T(0);
            for (int j = 0; j < tokens; ++j) {
                row[j] = std::exp(row[j] - mx);
                sum += row[j];
            }
            const T inv = T(1) / sum;
            for (int j = 0; j < tokens; ++j) row[j] *= inv;
        }
    }

    int channels_ = 0;
    GroupNorm<T> norm_;
    Conv2d<T> to_q_, to_k_, to_v_, proj_;
    Tensor<T> q_, k_, v_, attn_;
};

// ---------------------------------------------------------------------------
// Nearest-neighbour 2x upsampling (parameter-free).
// ---------------------------------------------------------------------------
template <typename T>
Tensor<T> upsample_nearest2x(const Tensor<T>& x) {
    Tensor<T> y(x.n, x.c, x.h * 2, x.w * 2);
    for (int ni = 0; ni < x.n; ++ni) {
        for (int ci = 0; ci < x.c; ++ci) {
            const T* src = x.plane(ni, ci);
            T* dst = y.plane(ni, ci);
            for (int yy = 0; yy < x.h; ++yy) {
                for (int xx = 0; xx < x.w; ++xx) {
                    const T v = src[static_cast<size_t>(yy) * x.w + xx];
                    T* d0 = dst + (static_cast<size_t>(2 * yy) * y.w + 2 * xx);
                    d0[0] = v;
                    d0[1] = v;
                    d0[y.w] = v;
                    d0[y.w + 1] = v;
                }
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> upsample_nearest2x_backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.n, dy.c, dy.h / 2, dy.w / 2);
    for (int ni = 0; ni < dy.n; ++ni) {
        for (int ci = 0; ci < dy.c; ++ci) {
            const T* src = dy.plane(ni, ci);
            T* dst = dx.plane(ni, ci);
            for (int yy = 0; yy < dx.h; ++yy) {
                for (int xx = 0; xx < dx.w; ++xx) {
                    const T* s0 = src + (static_cast<size_t>(2 * yy) * dy.w + 2 * xx);
                    dst[static_cast<size_t>(yy) * dx.w + xx] =
                        s0[0] + s0[1] + s0[dy.w] + s0[dy.w + 1];
                }
            }
        }
    }
    return dx;
}

// Sinusoidal timestep embedding: first half sine, second half cosine.
template <typename T>
Tensor<T> timestep_embedding(const std::vector<int>& ts, int dim) {
    if (dim < 2 || dim % 2 != 0) throw ConfigError("timestep_embedding: dim must be even, >= 2");
    const int half = dim / 2;
    Tensor<T> out(static_cast<int>(ts.size()), dim, 1, 1);
    for (size_t ni = 0; ni < ts.size(); ++ni) {
        for (int i = 0; i < half; ++i) {
            const double freq =
                half > 1 ? std::exp(-std::log(10000.0) * i / (half - 1)) : 1.0;
            const double arg = static_cast<double>(ts[ni]) * freq;
            out.v[ni * dim + i] = static_cast<T>(std::sin(arg));
            out.v[ni * dim + half + i] = static_cast<T>(std::cos(arg));
        }
    }
    return out;
}

} // namespace anoheal::nn
