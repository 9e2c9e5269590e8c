#pragma once

#include <cmath>
#include <vector>

#include "anoheal/nn/layers.hpp"

namespace anoheal::nn {

// AdamW with decoupled weight decay. Gradients are zeroed after each step.
template <typename T>
class AdamW {
public:
    AdamW(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8, double weight_decay = 0.01)
        : beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {}

    void step(std::vector<ParamRef<T>>& params, double lr) {
        if (m_.empty()) {
            size_t total = 0;
            for (const auto& p : params) total += p.value->size();
            m_.assign(total, 0.0);
            v_.assign(total, 0.0);
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);

        size_t off = 0;
        for (auto& p : params) {
            T* w = p.value->data();
            T* g = p.grad->data();
            const size_t n = p.value->size();
            for (size_t i = 0; i < n; ++i) {
                const double grad = static_cast<double>(g[i]);
                m_[off + i] = beta1_ * m_[off + i] + (1.0 - beta1_) * grad;
                v_[off + i] = beta2_ * v_[off + i] + (1.0 - beta2_) * grad * grad;
                const double mhat = m_[off + i] / bc1;
                const double vhat = v_[off + i] / bc2;
                const double update =
                    mhat / (std::sqrt(vhat) + eps_) + weight_decay_ * static_cast<double>(w[i]);
                w[i] = static_cast<T>(static_cast<double>(w[i]) - lr * update);
                g[i] = T(0);
            }
            off += n;
        }
    }

private:
    double beta1_, beta2_, eps_, weight_decay_;
    int t_ = 0;
    std::vector<double> m_, v_;
};

// One-cycle learning rate: cosine warmup to max_lr over warmup_frac of the
// run, then cosine annealing down to max_lr / (div_factor * final_div_factor).
struct OneCycle {
    double max_lr = 1e-3;
    double div_factor = 25.0;
    double final_div_factor = 1e4;
    double warmup_frac = 0.3;
    int total_steps = 1;

    double lr_at(int step) const {
        const double initial = max_lr / div_factor;
        const double floor = initial / final_div_factor;
        if (total_steps <= 1) return max_lr;
        const double p = static_cast<double>(step) / (total_steps - 1);
        if (p <= warmup_frac) {
            const double q = warmup_frac > 0.0 ? p / warmup_frac : 1.0;
            return initial + (max_lr - initial) * 0.5 * (1.0 - std::cos(M_PI * q));
        }
        const double q = (p - warmup_frac) / (1.0 - warmup_frac);
        return floor + (max_lr - floor) * 0.5 * (1.0 + std::cos(M_PI * q));
    }
};

} // namespace anoheal::nn
