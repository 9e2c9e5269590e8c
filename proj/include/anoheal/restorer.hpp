#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "anoheal/corruption.hpp"
#include "anoheal/image.hpp"
#include "anoheal/nn/unet.hpp"
#include "anoheal/schedule.hpp"

namespace anoheal {

struct RestorerConfig {
    std::vector<int> channels_per_level = {12, 24, 32, 48};
    int attention_from_level = 3;  // 1-indexed level where attention starts
    int time_embed_dim = 32;
    int norm_groups = 4;
    int input_size = 64;
    // Schedule parameters; betas of 0 resolve to the T-scaled defaults.
    int T = 100;
    double beta_start = 0.0;
    double beta_end = 0.0;
};

struct TrainConfig {
    int steps = 3000;
    int batch_size = 8;
    double max_lr = 1e-3;
    double weight_decay = 0.01;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double warmup_frac = 0.3;
    double div_factor = 25.0;
    double final_div_factor = 1e4;
    int val_interval = 250;
    int val_samples = 32;
    double val_frac = 0.1;  // carved from the train set when no val set is given
    uint64_t seed = 0;
    MaskConfig mask;
    double fg_threshold = 0.01;
    std::string diagnostics_path;  // where a non-finite-loss state dump goes
};

// Time-conditioned restoration model P(x_t, t) -> x_hat_0 plus its schedule.
class Restorer {
public:
    Restorer(const RestorerConfig& cfg, uint64_t init_seed);

    const RestorerConfig& config() const { return cfg_; }
    const Schedule& schedule() const { return schedule_; }
    uint64_t init_seed() const { return init_seed_; }

    nn::UNet<float>& net() { return net_; }
    size_t param_count() { return net_.param_count(); }

    // Batched forward pass; rows of `ts` pair with images.
    nn::Tensor<float> forward_batch(const std::vector<Image>& images,
                                    const std::vector<int>& ts);

    // Single forward pass clamped to [0, 1]. Requires t in [1, T].
    Image restore_single(const Image& x, int t);

private:
    RestorerConfig cfg_;
    Schedule schedule_;
    nn::UNet<float> net_;
    uint64_t init_seed_ = 0;
};

// Mean squared error between predictions P(x_t, t) and x_0 over a batch.
double restoration_loss(Restorer& model, const std::vector<CorruptionSample>& batch);

struct TrainResult {
    std::vector<double> loss_curve;  // one entry per optimization step
    std::vector<std::pair<int, double>> val_curve;
    double val_loss_initial = 0.0;
    double val_loss_final = 0.0;
    double wall_seconds = 0.0;
};

using ProgressFn = std::function<void(int step, double loss, double lr)>;

TrainResult train(Restorer& model, const std::vector<Image>& train_images,
                  const std::vector<Image>& val_images, const TrainConfig& cfg,
                  const ProgressFn& progress = {});

// Versioned checkpoint container: magic "AHCK", little-endian uint32 header
// length, JSON header (configs, schedule, fingerprint, hash), float32 blob.
void save_checkpoint(const std::filesystem::path& path, Restorer& model,
                     const TrainConfig* fingerprint);
Restorer load_checkpoint(const std::filesystem::path& path);

} // namespace anoheal
