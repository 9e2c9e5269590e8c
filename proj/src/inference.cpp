#include "anoheal/inference.hpp"

#include <cmath>
#include <thread>

namespace anoheal {

namespace {

void check_step_size(int step_size, int T) {
    if (step_size < 1 || step_size > T) {
        throw ConfigError("heal: step_size must lie in [1, T], got " + std::to_string(step_size));
    }
}

ScoreMap heal_impl(const RestoreFn& restore, const Schedule& schedule, const Image& x,
                   int step_size, std::vector<std::pair<int, Image>>* trace) {
    check_step_size(step_size, schedule.T);

    ScoreMap result;
    result.anomaly_score = Image(x.h, x.w, 0.0f);

    Image x_t = x;
    Image x_hat;
    int t = schedule.T;
    while (true) {
        result.steps_visited.push_back(t);
        x_hat = restore(x_t, t);
        require_same_shape(x_hat, x_t, "heal: restorer output");
        clamp_unit(x_hat);
        for (size_t i = 0; i < x_t.v.size(); ++i) {
            result.anomaly_score.v[i] += std::abs(x_hat.v[i] - x_t.v[i]);
        }
        if (trace) trace->emplace_back(t, result.anomaly_score);

        const int t_next = t - step_size;
        if (t_next <= 0) break;

        const double a = alpha_at(schedule, t_next);
        for (size_t i = 0; i < x_t.v.size(); ++i) {
            const double mixed = (1.0 - a) * static_cast<double>(x_hat.v[i]) +
                                 a * static_cast<double>(x_t.v[i]);
            x_t.v[i] = static_cast<float>(mixed);
        }
        t = t_next;
    }

    result.restoration = std::move(x_hat);
    return result;
}

} // namespace

ScoreMap heal(const RestoreFn& restore, const Schedule& schedule, const Image& x, int step_size) {
    return heal_impl(restore, schedule, x, step_size, nullptr);
}

HealTrace heal_traced(const RestoreFn& restore, const Schedule& schedule, const Image& x,
                      int step_size) {
    HealTrace trace;
    trace.final = heal_impl(restore, schedule, x, step_size, &trace.cumulative);
    return trace;
}

Image score_single_step(const RestoreFn& restore, const Image& x, int t, int T) {
    if (t < 1 || t > T) {
        throw IndexError("score_single_step: t = " + std::to_string(t) + " outside [1, " +
                         std::to_string(T) + "]");
    }
    Image restored = restore(x, t);
    require_same_shape(restored, x, "score_single_step: restorer output");
    Image out(x.h, x.w);
    for (size_t i = 0; i < out.v.size(); ++i) {
        out.v[i] = std::abs(restored.v[i] - x.v[i]);
    }
    return out;
}

namespace {

ScoreMap score_one(Restorer& model, const Image& image, const ScoreSpec& spec) {
    const RestoreFn fn = [&model](const Image& img, int t) {
        return model.restore_single(img, t);
    };
    if (spec.mode == ScoreSpec::Mode::multi_step) {
        return heal(fn, model.schedule(), image, spec.step_size);
    }
    ScoreMap s;
    s.anomaly_score = score_single_step(fn, image, spec.t, model.schedule().T);
    s.restoration = model.restore_single(image, spec.t);
    s.steps_visited = {spec.t};
    return s;
}

} // namespace

std::vector<ScoreMap> score_batch(const Restorer& model, const std::vector<Image>& images,
                                  const ScoreSpec& spec, int workers) {
    std::vector<ScoreMap> results(images.size());
    if (images.empty()) return results;

    if (workers <= 1 || images.size() == 1) {
        Restorer local = model;  // keep the caller's model caches untouched
        for (size_t i = 0; i < images.size(); ++i) {
            results[i] = score_one(local, images[i], spec);
        }
        return results;
    }

    const int n_threads = std::min<int>(workers, static_cast<int>(images.size()));
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int tid = 0; tid < n_threads; ++tid) {
        pool.emplace_back([&, tid]() {
            Restorer local = model;
            for (size_t i = tid; i < images.size(); i += n_threads) {
                results[i] = score_one(local, images[i], spec);
            }
        });
    }
    for (auto& th : pool) th.join();
    return results;
}

} // namespace anoheal
