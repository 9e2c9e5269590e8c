#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace anoheal {

struct EvalResult {
    double ap = 0.0;
    double best_dice = 0.0;
    double best_dice_threshold = 0.0;
    size_t n_pixels = 0;
    size_t n_positive = 0;
};

// Area under the precision-recall curve over the score-sorted sequence.
// Tied scores enter as one block (no interpolation), so equal scores with a
// positive fraction p contribute precision p over their recall span.
double average_precision(const std::vector<float>& scores, const std::vector<uint8_t>& labels);

// Maximum dataset-level Dice = 2TP / (2TP + FP + FN) over n_thresholds
// uniformly spaced cutoffs in [min(scores), max(scores)]; prediction is
// score >= threshold. Returns the best value and the lowest threshold
// reaching it.
std::pair<double, double> best_dice(const std::vector<float>& scores,
                                    const std::vector<uint8_t>& labels, int n_thresholds = 200);

EvalResult evaluate(const std::vector<float>& scores, const std::vector<uint8_t>& labels,
                    int n_thresholds = 200);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
};

MeanStd mean_std(const std::vector<double>& values);

struct AggregateResult {
    MeanStd ap;
    MeanStd best_dice;
};

AggregateResult aggregate_seeds(const std::vector<EvalResult>& results);

} // namespace anoheal
