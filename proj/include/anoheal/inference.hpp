#pragma once

#include <functional>
#include <vector>

#include "anoheal/image.hpp"
#include "anoheal/restorer.hpp"
#include "anoheal/schedule.hpp"

namespace anoheal {

// Per-pixel anomaly score with the final restoration and the visited
// timestep sequence (starts at T, strictly decreasing by step_size).
struct ScoreMap {
    Image anomaly_score;
    Image restoration;
    std::vector<int> steps_visited;
};

// Abstract restorer so the loop can run against the trained model or a test
// oracle. Must return an image of the same shape, values in [0, 1].
using RestoreFn = std::function<Image(const Image&, int)>;

// Iterative healing: accumulate |x_hat - x_t| while re-corrupting the
// prediction with the unhealed input at alpha_{t_next} (mask = 1). The next
// timestep is computed after accumulation and the loop stops once it would
// reach zero, so t = T is always evaluated and t <= 0 never reaches the model.
ScoreMap heal(const RestoreFn& restore, const Schedule& schedule, const Image& x, int step_size);

// heal() with snapshots of the cumulative score after each visited step.
struct HealTrace {
    ScoreMap final;
    std::vector<std::pair<int, Image>> cumulative;  // (t, AS so far)
};
HealTrace heal_traced(const RestoreFn& restore, const Schedule& schedule, const Image& x,
                      int step_size);

// Single-step residual |P(x, t) - x|.
Image score_single_step(const RestoreFn& restore, const Image& x, int t, int T);

struct ScoreSpec {
    enum class Mode { multi_step, single_step };
    Mode mode = Mode::multi_step;
    int step_size = 25;  // multi_step
    int t = 100;         // single_step
};

// Order-preserving batched scorer; workers > 1 copies the model per thread,
// producing bit-identical results to the serial path.
std::vector<ScoreMap> score_batch(const Restorer& model, const std::vector<Image>& images,
                                  const ScoreSpec& spec, int workers = 1);

} // namespace anoheal
