#pragma once

#include <optional>
#include <string>
#include <vector>

#include "anoheal/nn/layers.hpp"

namespace anoheal::nn {

struct ArchConfig {
    int in_channels = 1;
    std::vector<int> channels = {12, 24, 32, 48};  // per downsampling level
    int attention_from_level = 3;                  // 1-indexed; > levels disables attention
    int time_embed_dim = 32;                       // sinusoid width; the MLP projects to 4x
    int norm_groups = 4;
};

inline void validate_arch(const ArchConfig& cfg) {
    if (cfg.channels.size() < 2) throw ConfigError("UNet: need at least 2 levels");
    if (cfg.attention_from_level < 1) throw ConfigError("UNet: attention_from_level must be >= 1");
    if (cfg.time_embed_dim < 2 || cfg.time_embed_dim % 2 != 0) {
        throw ConfigError("UNet: time_embed_dim must be even and >= 2");
    }
    if (cfg.in_channels < 1) throw ConfigError("UNet: in_channels must be >= 1");
    for (int c : cfg.channels) {
        if (c < cfg.norm_groups || c % cfg.norm_groups != 0) {
            throw ConfigError("UNet: every channel width must be a positive multiple of norm_groups");
        }
    }
}

// Residual block with GroupNorm/SiLU/Conv twice and an additive per-channel
// timestep shift between the halves.
template <typename T>
class ResBlock {
public:
    ResBlock() = default;
    ResBlock(int in_ch, int out_ch, int temb_dim, int groups)
        : in_ch_(in_ch), out_ch_(out_ch),
          gn1_(in_ch, groups),
          conv1_(in_ch, out_ch, 3, 1, 1),
          time_proj_(temb_dim, out_ch),
          gn2_(out_ch, groups),
          conv2_(out_ch, out_ch, 3, 1, 1),
          has_skip_conv_(in_ch != out_ch) {
        if (has_skip_conv_) skip_ = Conv2d<T>(in_ch, out_ch, 1, 1, 0);
    }

    void init(Rng& rng) {
        conv1_.init(rng);
        time_proj_.init(rng);
        conv2_.init(rng, kOutScale);
        if (has_skip_conv_) skip_.init(rng);
    }

    Tensor<T> forward(const Tensor<T>& x, const Tensor<T>& temb_act) {
        Tensor<T> h = conv1_.forward(silu1_.forward(gn1_.forward(x)));
        const Tensor<T> tb = time_proj_.forward(temb_act);
        const size_t plane = static_cast<size_t>(h.h) * h.w;
        for (int ni = 0; ni < h.n; ++ni) {
            for (int ci = 0; ci < h.c; ++ci) {
                const T shift = tb.v[static_cast<size_t>(ni) * h.c + ci];
                T* p = h.plane(ni, ci);
                for (size_t i = 0; i < plane; ++i) p[i] += shift;
            }
        }
        Tensor<T> y = conv2_.forward(silu2_.forward(gn2_.forward(h)));
        if (has_skip_conv_) {
            add_inplace(y, skip_.forward(x));
        } else {
            add_inplace(y, x);
        }
        return y;
    }

    // Accumulates the timestep-path gradient into dtemb_act.
    Tensor<T> backward(const Tensor<T>& dy, Tensor<T>& dtemb_act) {
        Tensor<T> dh = gn2_.backward(silu2_.backward(conv2_.backward(dy)));

        Tensor<T> dtb(dh.n, dh.c, 1, 1);
        const size_t plane = static_cast<size_t>(dh.h) * dh.w;
        for (int ni = 0; ni < dh.n; ++ni) {
            for (int ci = 0; ci < dh.c; ++ci) {
                const T* p = dh.plane(ni, ci);
                T acc = T(0);
                for (size_t i = 0; i < plane; ++i) acc += p[i];
                dtb.v[static_cast<size_t>(ni) * dh.c + ci] = acc;
            }
        }
        add_inplace(dtemb_act, time_proj_.backward(dtb));

        Tensor<T> dx = gn1_.backward(silu1_.backward(conv1_.backward(dh)));
        if (has_skip_conv_) {
            add_inplace(dx, skip_.backward(dy));
        } else {
            add_inplace(dx, dy);
        }
        return dx;
    }

    void collect_params(std::vector<ParamRef<T>>& out) {
        gn1_.collect_params(out);
        conv1_.collect_params(out);
        time_proj_.collect_params(out);
        gn2_.collect_params(out);
        conv2_.collect_params(out);
        if (has_skip_conv_) skip_.collect_params(out);
    }

    size_t param_count() const {
        size_t n = gn1_.param_count() + conv1_.param_count() + time_proj_.param_count() +
                   gn2_.param_count() + conv2_.param_count();
        if (has_skip_conv_) n += skip_.param_count();
        return n;
    }

private:
    static constexpr double kOutScale = 0.1;

    int in_ch_ = 0, out_ch_ = 0;
    GroupNorm<T> gn1_;
    SiLU<T> silu1_;
    Conv2d<T> conv1_;
    Linear<T> time_proj_;
    GroupNorm<T> gn2_;
    SiLU<T> silu2_;
    Conv2d<T> conv2_;
    bool has_skip_conv_ = false;
    Conv2d<T> skip_;
};

// Time-conditioned encoder-decoder. Channel widths change in the stride-2
// down convolutions and the post-upsample convolutions; decoder blocks see
// the concatenation of the upsampled path and the encoder skip.
template <typename T>
class UNet {
public:
    UNet() = default;

    explicit UNet(const ArchConfig& cfg) : cfg_(cfg) {
        validate_arch(cfg);
        const int levels = static_cast<int>(cfg.channels.size());
        const int temb_hidden = 4 * cfg.time_embed_dim;

        temb_lin1_ = Linear<T>(cfg.time_embed_dim, temb_hidden);
        temb_lin2_ = Linear<T>(temb_hidden, temb_hidden);
        stem_ = Conv2d<T>(cfg.in_channels, cfg.channels[0], 3, 1, 1);

        for (int i = 0; i < levels; ++i) {
            const int c = cfg.channels[i];
            enc_res_.emplace_back(c, c, temb_hidden, cfg.norm_groups);
            if (has_attention(i)) {
                enc_attn_.emplace_back(AttentionBlock<T>(c, cfg.norm_groups));
            } else {
                enc_attn_.emplace_back(std::nullopt);
            }
            if (i + 1 < levels) {
                down_.emplace_back(c, cfg.channels[i + 1], 3, 2, 1);
            }
        }

        const int c_last = cfg.channels.back();
        mid_res1_ = ResBlock<T>(c_last, c_last, temb_hidden, cfg.norm_groups);
        if (cfg.attention_from_level <= levels) {
            mid_attn_ = AttentionBlock<T>(c_last, cfg.norm_groups);
        }
        mid_res2_ = ResBlock<T>(c_last, c_last, temb_hidden, cfg.norm_groups);

        for (int i = 0; i < levels; ++i) {
            const int c = cfg.channels[i];
            dec_res_.emplace_back(2 * c, c, temb_hidden, cfg.norm_groups);
            if (has_attention(i)) {
                dec_attn_.emplace_back(AttentionBlock<T>(c, cfg.norm_groups));
            } else {
                dec_attn_.emplace_back(std::nullopt);
            }
            if (i + 1 < levels) {
                up_.emplace_back(cfg.channels[i + 1], c, 3, 1, 1);
            }
        }

        head_gn_ = GroupNorm<T>(cfg.channels[0], cfg.norm_groups);
        head_conv_ = Conv2d<T>(cfg.channels[0], cfg.in_channels, 3, 1, 1);
    }

    void init(Rng& rng) {
        temb_lin1_.init(rng);
        temb_lin2_.init(rng);
        stem_.init(rng);
        for (size_t i = 0; i < enc_res_.size(); ++i) {
            enc_res_[i].init(rng);
            if (enc_attn_[i]) enc_attn_[i]->init(rng);
        }
        for (auto& d : down_) d.init(rng);
        mid_res1_.init(rng);
        if (mid_attn_) mid_attn_->init(rng);
        mid_res2_.init(rng);
        for (size_t i = 0; i < dec_res_.size(); ++i) {
            dec_res_[i].init(rng);
            if (dec_attn_[i]) dec_attn_[i]->init(rng);
        }
        for (auto& u : up_) u.init(rng);
        head_conv_.init(rng, 0.1);
    }

    Tensor<T> forward(const Tensor<T>& x, const std::vector<int>& ts) {
        const int levels = static_cast<int>(cfg_.channels.size());
        if (x.n != static_cast<int>(ts.size())) throw ShapeError("UNet: batch/timestep mismatch");
        if (x.c != cfg_.in_channels) throw ShapeError("UNet: channel mismatch");
        const int factor = 1 << (levels - 1);
        if (x.h % factor != 0 || x.w % factor != 0 || x.h < factor || x.w < factor) {
            throw ShapeError("UNet: spatial dims must be divisible by " + std::to_string(factor));
        }

        Tensor<T> semb = timestep_embedding<T>(ts, cfg_.time_embed_dim);
        Tensor<T> temb = temb_lin2_.forward(temb_silu_.forward(temb_lin1_.forward(semb)));
        Tensor<T> temb_act = shared_silu_.forward(temb);

        Tensor<T> h = stem_.forward(x);
        skips_.assign(static_cast<size_t>(levels), Tensor<T>());
        for (int i = 0; i < levels; ++i) {
            h = enc_res_[i].forward(h, temb_act);
            if (enc_attn_[i]) h = enc_attn_[i]->forward(h);
            skips_[i] = h;
            if (i + 1 < levels) h = down_[i].forward(h);
        }

        h = mid_res1_.forward(h, temb_act);
        if (mid_attn_) h = mid_attn_->forward(h);
        h = mid_res2_.forward(h, temb_act);

        for (int i = levels - 1; i >= 0; --i) {
            Tensor<T> joint = concat_channels(h, skips_[i]);
            h = dec_res_[i].forward(joint, temb_act);
            if (dec_attn_[i]) h = dec_attn_[i]->forward(h);
            if (i > 0) h = up_[i - 1].forward(upsample_nearest2x(h));
        }

        return head_conv_.forward(head_silu_.forward(head_gn_.forward(h)));
    }

    Tensor<T> backward(const Tensor<T>& dout) {
        const int levels = static_cast<int>(cfg_.channels.size());
        Tensor<T> dtemb_act(dout.n, 4 * cfg_.time_embed_dim, 1, 1);

        Tensor<T> dh = head_gn_.backward(head_silu_.backward(head_conv_.backward(dout)));

        std::vector<Tensor<T>> dskips(static_cast<size_t>(levels));
        Tensor<T> dmid;
        for (int i = 0; i < levels; ++i) {
            if (i > 0) dh = upsample_nearest2x_backward(up_[i - 1].backward(dh));
            if (dec_attn_[i]) dh = dec_attn_[i]->backward(dh);
            Tensor<T> djoint = dec_res_[i].backward(dh, dtemb_act);
            Tensor<T> ddeep;
            split_channels(djoint, ddeep, dskips[i], cfg_.channels[i]);
            if (i + 1 < levels) {
                dh = std::move(ddeep);
            } else {
                dmid = std::move(ddeep);
            }
        }

        Tensor<T> d = mid_res2_.backward(dmid, dtemb_act);
        if (mid_attn_) d = mid_attn_->backward(d);
        d = mid_res1_.backward(d, dtemb_act);

        for (int i = levels - 1; i >= 0; --i) {
            if (i + 1 < levels) d = down_[i].backward(d);
            add_inplace(d, dskips[i]);
            if (enc_attn_[i]) d = enc_attn_[i]->backward(d);
            d = enc_res_[i].backward(d, dtemb_act);
        }
        Tensor<T> dx = stem_.backward(d);

        Tensor<T> dtemb = shared_silu_.backward(dtemb_act);
        temb_lin1_.backward(temb_silu_.backward(temb_lin2_.backward(dtemb)));
        return dx;
    }

    std::vector<ParamRef<T>> params() {
        std::vector<ParamRef<T>> out;
        temb_lin1_.collect_params(out);
        temb_lin2_.collect_params(out);
        stem_.collect_params(out);
        for (size_t i = 0; i < enc_res_.size(); ++i) {
            enc_res_[i].collect_params(out);
            if (enc_attn_[i]) enc_attn_[i]->collect_params(out);
        }
        for (auto& dmod : down_) dmod.collect_params(out);
        mid_res1_.collect_params(out);
        if (mid_attn_) mid_attn_->collect_params(out);
        mid_res2_.collect_params(out);
        for (size_t i = 0; i < dec_res_.size(); ++i) {
            dec_res_[i].collect_params(out);
            if (dec_attn_[i]) dec_attn_[i]->collect_params(out);
        }
        for (auto& umod : up_) umod.collect_params(out);
        head_gn_.collect_params(out);
        head_conv_.collect_params(out);
        return out;
    }

    size_t param_count() {
        size_t total = 0;
        for (const auto& p : params()) total += p.value->size();
        return total;
    }

    const ArchConfig& config() const { return cfg_; }

private:
    bool has_attention(int level_index0) const {
        return level_index0 + 1 >= cfg_.attention_from_level;
    }

    ArchConfig cfg_;
    Linear<T> temb_lin1_, temb_lin2_;
    SiLU<T> temb_silu_, shared_silu_;
    Conv2d<T> stem_;
    std::vector<ResBlock<T>> enc_res_;
    std::vector<std::optional<AttentionBlock<T>>> enc_attn_;
    std::vector<Conv2d<T>> down_;
    ResBlock<T> mid_res1_, mid_res2_;
    std::optional<AttentionBlock<T>> mid_attn_;
    std::vector<ResBlock<T>> dec_res_;
    std::vector<std::optional<AttentionBlock<T>>> dec_attn_;
    std::vector<Conv2d<T>> up_;
    GroupNorm<T> head_gn_;
    SiLU<T> head_silu_;
    Conv2d<T> head_conv_;
    std::vector<Tensor<T>> skips_;
};

} // namespace anoheal::nn
