#include "anoheal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "anoheal/errors.hpp"

namespace anoheal {

namespace {

size_t count_positives(const std::vector<float>& scores, const std::vector<uint8_t>& labels,
                       const char* what) {
    if (scores.size() != labels.size()) {
        throw ShapeError(std::string(what) + ": scores and labels differ in length");
    }
    if (scores.empty()) throw UndefinedMetricError(std::string(what) + ": empty input");
    const size_t n_pos = static_cast<size_t>(
        std::count_if(labels.begin(), labels.end(), [](uint8_t l) { return l != 0; }));
    if (n_pos == 0) {
        throw UndefinedMetricError(std::string(what) + ": no positive labels, metric undefined");
    }
    return n_pos;
}

} // namespace

double average_precision(const std::vector<float>& scores, const std::vector<uint8_t>& labels) {
    const size_t n_pos = count_positives(scores, labels, "average_precision");

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    double ap = 0.0;
    double recall_prev = 0.0;
    size_t tp = 0, fp = 0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        size_t block_pos = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            block_pos += labels[order[j]] != 0;
            ++j;
        }
        tp += block_pos;
        fp += (j - i) - block_pos;
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
        ap += (recall - recall_prev) * precision;
        recall_prev = recall;
        i = j;
    }
    return ap;
}

std::pair<double, double> best_dice(const std::vector<float>& scores,
                                    const std::vector<uint8_t>& labels, int n_thresholds) {
    const size_t n_pos = count_positives(scores, labels, "best_dice");
    if (n_thresholds < 2) throw ConfigError("best_dice: n_thresholds must be >= 2");

    // Sorted-descending scores with a positive-count prefix let each
    // threshold be evaluated with one binary search.
    std::vector<std::pair<float, uint8_t>> items(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) items[i] = {scores[i], labels[i]};
    std::sort(items.begin(), items.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<size_t> pos_prefix(items.size() + 1, 0);
    for (size_t i = 0; i < items.size(); ++i) {
        pos_prefix[i + 1] = pos_prefix[i] + (items[i].second != 0);
    }

    const double lo = static_cast<double>(items.back().first);
    const double hi = static_cast<double>(items.front().first);

    double best = -1.0, best_threshold = lo;
    for (int k = 0; k < n_thresholds; ++k) {
        const double threshold = lo + (hi - lo) * static_cast<double>(k) / (n_thresholds - 1);
        // First index with score < threshold: everything before is predicted positive.
        const size_t n_pred = static_cast<size_t>(
            std::lower_bound(items.begin(), items.end(), threshold,
                             [](const auto& item, double th) {
                                 return static_cast<double>(item.first) >= th;
                             }) -
            items.begin());
        const size_t tp = pos_prefix[n_pred];
        const size_t fp = n_pred - tp;
        const size_t fn = n_pos - tp;
        const double dice = 2.0 * static_cast<double>(tp) /
                            static_cast<double>(2 * tp + fp + fn);
        if (dice > best) {
            best = dice;
            best_threshold = threshold;
        }
    }
    return {best, best_threshold};
}

EvalResult evaluate(const std::vector<float>& scores, const std::vector<uint8_t>& labels,
                    int n_thresholds) {
    EvalResult r;
    r.ap = average_precision(scores, labels);
    const auto [dice, threshold] = best_dice(scores, labels, n_thresholds);
    r.best_dice = dice;
    r.best_dice_threshold = threshold;
    r.n_pixels = scores.size();
    r.n_positive = static_cast<size_t>(
        std::count_if(labels.begin(), labels.end(), [](uint8_t l) { return l != 0; }));
    return r;
}

MeanStd mean_std(const std::vector<double>& values) {
    if (values.empty()) throw ConfigError("mean_std: empty input");
    MeanStd ms;
    ms.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    double acc = 0.0;
    for (double v : values) acc += (v - ms.mean) * (v - ms.mean);
    ms.std = std::sqrt(acc / values.size());
    return ms;
}

AggregateResult aggregate_seeds(const std::vector<EvalResult>& results) {
    if (results.empty()) throw ConfigError("aggregate_seeds: empty input");
    std::vector<double> aps, dices;
    for (const auto& r : results) {
        aps.push_back(r.ap);
        dices.push_back(r.best_dice);
    }
    return {mean_std(aps), mean_std(dices)};
}

} // namespace anoheal
