#include "anoheal/restorer.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "anoheal/nn/optim.hpp"
#include "anoheal/rng.hpp"

namespace anoheal {

namespace {

using nlohmann::json;

nn::ArchConfig arch_from(const RestorerConfig& cfg) {
    nn::ArchConfig arch;
    arch.in_channels = 1;
    arch.channels = cfg.channels_per_level;
    arch.attention_from_level = cfg.attention_from_level;
    arch.time_embed_dim = cfg.time_embed_dim;
    arch.norm_groups = cfg.norm_groups;
    return arch;
}

Schedule schedule_from(const RestorerConfig& cfg) {
    const double bs = cfg.beta_start > 0.0 ? cfg.beta_start : default_beta_start(cfg.T);
    const double be = cfg.beta_end > 0.0 ? cfg.beta_end : default_beta_end(cfg.T);
    return build_schedule(cfg.T, bs, be);
}

void validate_restorer_config(const RestorerConfig& cfg) {
    const int levels = static_cast<int>(cfg.channels_per_level.size());
    if (levels < 2) throw ConfigError("restorer: need at least 2 levels");
    if (cfg.attention_from_level > levels + 1) {
        throw ConfigError("restorer: attention_from_level exceeds level count + 1");
    }
    const int factor = 1 << (levels - 1);
    if (cfg.input_size % factor != 0) {
        throw ConfigError("restorer: input_size must be divisible by 2^(levels-1) = " +
                          std::to_string(factor));
    }
}

uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

json restorer_config_json(const RestorerConfig& cfg, const Schedule& sched) {
    json j;
    j["restorer"] = {{"channels", cfg.channels_per_level},
                     {"attention_from_level", cfg.attention_from_level},
                     {"time_embed_dim", cfg.time_embed_dim},
                     {"norm_groups", cfg.norm_groups},
                     {"input_size", cfg.input_size}};
    j["schedule"] = {{"T", sched.T}, {"beta_start", sched.beta_start},
                     {"beta_end", sched.beta_end}};
    return j;
}

} // namespace

Restorer::Restorer(const RestorerConfig& cfg, uint64_t init_seed)
    : cfg_(cfg), schedule_(schedule_from(cfg)), net_(arch_from(cfg)), init_seed_(init_seed) {
    validate_restorer_config(cfg);
    Rng rng(init_seed);
    net_.init(rng);
}

nn::Tensor<float> Restorer::forward_batch(const std::vector<Image>& images,
                                          const std::vector<int>& ts) {
    if (images.empty()) throw ConfigError("forward_batch: empty batch");
    if (images.size() != ts.size()) throw ShapeError("forward_batch: images/timesteps mismatch");
    const int h = images[0].h, w = images[0].w;
    nn::Tensor<float> x(static_cast<int>(images.size()), 1, h, w);
    for (size_t i = 0; i < images.size(); ++i) {
        if (images[i].h != h || images[i].w != w) {
            throw ShapeError("forward_batch: images differ in shape");
        }
        std::copy(images[i].v.begin(), images[i].v.end(), x.plane(static_cast<int>(i), 0));
    }
    return net_.forward(x, ts);
}

Image Restorer::restore_single(const Image& x, int t) {
    if (t < 1 || t > cfg_.T) {
        throw IndexError("restore_single: t = " + std::to_string(t) + " outside [1, " +
                         std::to_string(cfg_.T) + "]");
    }
    nn::Tensor<float> y = forward_batch({x}, {t});
    Image out(x.h, x.w);
    std::copy_n(y.data(), out.v.size(), out.v.begin());
    clamp_unit(out);
    return out;
}

double restoration_loss(Restorer& model, const std::vector<CorruptionSample>& batch) {
    if (batch.empty()) throw ConfigError("restoration_loss: empty batch");
    std::vector<Image> xs;
    std::vector<int> ts;
    for (const auto& s : batch) {
        xs.push_back(s.x_t);
        ts.push_back(s.t);
    }
    nn::Tensor<float> pred = model.forward_batch(xs, ts);
    double acc = 0.0;
    const size_t plane = pred.v.size() / batch.size();
    for (size_t i = 0; i < batch.size(); ++i) {
        const float* p = pred.data() + i * plane;
        const float* target = batch[i].x_0.v.data();
        for (size_t j = 0; j < plane; ++j) {
            const double d = static_cast<double>(p[j]) - static_cast<double>(target[j]);
            acc += d * d;
        }
    }
    return acc / static_cast<double>(pred.v.size());
}

namespace {

// Forward + loss + gradient of the loss w.r.t. predictions, shared by the
// train step and validation (validation skips backward).
double batch_loss_and_grad(Restorer& model, const std::vector<CorruptionSample>& batch,
                           nn::Tensor<float>* dpred_out) {
    std::vector<Image> xs;
    std::vector<int> ts;
    for (const auto& s : batch) {
        xs.push_back(s.x_t);
        ts.push_back(s.t);
    }
    nn::Tensor<float> pred = model.forward_batch(xs, ts);

    double acc = 0.0;
    nn::Tensor<float> dpred(pred.n, pred.c, pred.h, pred.w);
    const size_t plane = pred.v.size() / batch.size();
    const double inv_n = 1.0 / static_cast<double>(pred.v.size());
    for (size_t i = 0; i < batch.size(); ++i) {
        const float* p = pred.data() + i * plane;
        const float* target = batch[i].x_0.v.data();
        float* g = dpred.data() + i * plane;
        for (size_t j = 0; j < plane; ++j) {
            const double d = static_cast<double>(p[j]) - static_cast<double>(target[j]);
            acc += d * d;
            g[j] = static_cast<float>(2.0 * d * inv_n);
        }
    }
    if (dpred_out) *dpred_out = std::move(dpred);
    return acc * inv_n;
}

std::vector<CorruptionSample> fixed_validation_set(const std::vector<Image>& val_images,
                                                   const Schedule& schedule,
                                                   const TrainConfig& cfg) {
    Rng val_rng(split_seed(cfg.seed, 0x56414cULL));
    std::vector<CorruptionSample> out;
    const int n = std::max(1, cfg.val_samples);
    for (int i = 0; i < n; ++i) {
        const int idx = static_cast<int>(i % val_images.size());
        out.push_back(make_training_sample(val_images, idx, schedule, val_rng, cfg.mask,
                                           cfg.fg_threshold));
    }
    return out;
}

double validation_loss(Restorer& model, const std::vector<CorruptionSample>& val_set,
                       int batch_size) {
    double acc = 0.0;
    size_t i = 0;
    while (i < val_set.size()) {
        const size_t j = std::min(val_set.size(), i + static_cast<size_t>(batch_size));
        std::vector<CorruptionSample> chunk(val_set.begin() + i, val_set.begin() + j);
        acc += batch_loss_and_grad(model, chunk, nullptr) * static_cast<double>(j - i);
        i = j;
    }
    return acc / static_cast<double>(val_set.size());
}

} // namespace

TrainResult train(Restorer& model, const std::vector<Image>& train_images,
                  const std::vector<Image>& val_images, const TrainConfig& cfg,
                  const ProgressFn& progress) {
    if (train_images.empty()) throw ConfigError("train: empty training set");
    if (cfg.steps < 0) throw ConfigError("train: steps must be >= 0");
    if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (!(cfg.max_lr > 0.0)) throw ConfigError("train: max_lr must be > 0");

    // Materialize the validation split: explicit set when given, otherwise a
    // tail slice of the training set.
    std::vector<Image> train_set = train_images;
    std::vector<Image> val_set_images = val_images;
    if (val_set_images.empty()) {
        const size_t k = std::max<size_t>(
            2, static_cast<size_t>(std::llround(cfg.val_frac * train_set.size())));
        if (train_set.size() <= k + 1) {
            throw ConfigError("train: training set too small to carve a validation split");
        }
        val_set_images.assign(train_set.end() - k, train_set.end());
        train_set.erase(train_set.end() - k, train_set.end());
    }
    if (val_set_images.size() < 2) throw ConfigError("train: validation set needs >= 2 images");
    if (train_set.size() < 2) throw ConfigError("train: training set needs >= 2 images");

    const Schedule& schedule = model.schedule();
    const std::vector<CorruptionSample> val_samples =
        fixed_validation_set(val_set_images, schedule, cfg);

    TrainResult result;
    const auto t_start = std::chrono::steady_clock::now();

    result.val_loss_initial = validation_loss(model, val_samples, cfg.batch_size);
    result.val_curve.emplace_back(0, result.val_loss_initial);
    result.val_loss_final = result.val_loss_initial;

    nn::AdamW<float> opt(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, cfg.weight_decay);
    nn::OneCycle lr_policy{cfg.max_lr, cfg.div_factor, cfg.final_div_factor, cfg.warmup_frac,
                           std::max(1, cfg.steps)};
    auto params = model.net().params();

    Rng step_rng(split_seed(cfg.seed, 0x545249ULL));
    for (int step = 0; step < cfg.steps; ++step) {
        std::vector<CorruptionSample> batch;
        batch.reserve(cfg.batch_size);
        for (int b = 0; b < cfg.batch_size; ++b) {
            const int idx = uniform_int(step_rng, 0, static_cast<int>(train_set.size()) - 1);
            batch.push_back(make_training_sample(train_set, idx, schedule, step_rng, cfg.mask,
                                                 cfg.fg_threshold));
        }

        nn::Tensor<float> dpred;
        const double loss = batch_loss_and_grad(model, batch, &dpred);
        if (!std::isfinite(loss)) {
            if (!cfg.diagnostics_path.empty()) {
                nlohmann::json dump;
                dump["step"] = step;
                dump["lr"] = lr_policy.lr_at(step);
                const size_t tail = std::min<size_t>(result.loss_curve.size(), 50);
                dump["recent_losses"] = std::vector<double>(result.loss_curve.end() - tail,
                                                            result.loss_curve.end());
                std::ofstream out(cfg.diagnostics_path);
                out << dump.dump(2) << "\n";
            }
            throw ComputeError("train: non-finite loss at step " + std::to_string(step));
        }
        model.net().backward(dpred);

        const double lr = lr_policy.lr_at(step);
        opt.step(params, lr);
        result.loss_curve.push_back(loss);
        if (progress) progress(step, loss, lr);

        const bool last = step + 1 == cfg.steps;
        if (cfg.val_interval > 0 && ((step + 1) % cfg.val_interval == 0 || last)) {
            const double vl = validation_loss(model, val_samples, cfg.batch_size);
            result.val_curve.emplace_back(step + 1, vl);
            result.val_loss_final = vl;
        }
    }

    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

void save_checkpoint(const std::filesystem::path& path, Restorer& model,
                     const TrainConfig* fingerprint) {
    json header = restorer_config_json(model.config(), model.schedule());
    header["format"] = "anoheal-checkpoint";
    header["version"] = 1;
    header["seed"] = model.init_seed();
    header["param_count"] = model.param_count();
    header["config_hash"] = fnv1a64(restorer_config_json(model.config(), model.schedule()).dump());
    if (fingerprint) {
        header["train"] = {{"steps", fingerprint->steps},
                           {"batch_size", fingerprint->batch_size},
                           {"max_lr", fingerprint->max_lr},
                           {"weight_decay", fingerprint->weight_decay},
                           {"seed", fingerprint->seed}};
    }
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out.write("AHCK", 4);
    const uint32_t len = static_cast<uint32_t>(header_str.size());
    out.write(reinterpret_cast<const char*>(&len), 4);
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    for (const auto& p : model.net().params()) {
        out.write(reinterpret_cast<const char*>(p.value->data()),
                  static_cast<std::streamsize>(p.value->size() * sizeof(float)));
    }
    if (!out) throw DataError("write failed: " + path.string());
}

Restorer load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "AHCK", 4) != 0) {
        throw MalformedHeaderError("bad checkpoint magic in " + path.string());
    }
    uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 4);
    if (!in || len == 0 || len > (1u << 20)) {
        throw MalformedHeaderError("bad checkpoint header length in " + path.string());
    }
    std::string header_str(len, '\0');
    in.read(header_str.data(), len);
    if (!in) throw MalformedHeaderError("checkpoint header cut short in " + path.string());

    json header = json::parse(header_str, nullptr, false);
    if (header.is_discarded() || header.value("format", "") != "anoheal-checkpoint") {
        throw MalformedHeaderError("not a checkpoint file: " + path.string());
    }
    if (header.value("version", 0) != 1) {
        throw MalformedHeaderError("unsupported checkpoint version in " + path.string());
    }

    RestorerConfig cfg;
    try {
        const json& r = header.at("restorer");
        cfg.channels_per_level = r.at("channels").get<std::vector<int>>();
        cfg.attention_from_level = r.at("attention_from_level").get<int>();
        cfg.time_embed_dim = r.at("time_embed_dim").get<int>();
        cfg.norm_groups = r.at("norm_groups").get<int>();
        cfg.input_size = r.at("input_size").get<int>();
        const json& s = header.at("schedule");
        cfg.T = s.at("T").get<int>();
        cfg.beta_start = s.at("beta_start").get<double>();
        cfg.beta_end = s.at("beta_end").get<double>();
    } catch (const json::exception& e) {
        throw MalformedHeaderError("checkpoint header missing fields in " + path.string() + ": " +
                                   e.what());
    }

    Restorer model(cfg, header.value("seed", uint64_t{0}));
    const uint64_t expect_hash =
        fnv1a64(restorer_config_json(model.config(), model.schedule()).dump());
    if (header.value("config_hash", uint64_t{0}) != expect_hash) {
        throw DataError("checkpoint config hash mismatch in " + path.string());
    }
    if (header.value("param_count", size_t{0}) != model.param_count()) {
        throw DataError("checkpoint parameter count mismatch in " + path.string());
    }

    for (auto& p : model.net().params()) {
        in.read(reinterpret_cast<char*>(p.value->data()),
                static_cast<std::streamsize>(p.value->size() * sizeof(float)));
        if (static_cast<size_t>(in.gcount()) != p.value->size() * sizeof(float)) {
            throw TruncatedPayloadError("checkpoint weight blob cut short in " + path.string());
        }
    }
    char extra;
    in.read(&extra, 1);
    if (in.gcount() != 0) {
        throw TruncatedPayloadError("trailing bytes after checkpoint blob in " + path.string());
    }
    return model;
}

} // namespace anoheal
