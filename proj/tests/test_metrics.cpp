#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "anoheal/errors.hpp"
#include "anoheal/metrics.hpp"
#include "anoheal/rng.hpp"

using namespace anoheal;

namespace {

// Independent AP oracle: enumerate every distinct threshold, compute
// precision/recall by brute force, and integrate the step curve.
double ap_brute_force(const std::vector<float>& scores, const std::vector<uint8_t>& labels) {
    std::set<float, std::greater<float>> thresholds(scores.begin(), scores.end());
    size_t n_pos = 0;
    for (uint8_t l : labels) n_pos += l != 0;

    double ap = 0.0, recall_prev = 0.0;
    for (float th : thresholds) {
        size_t tp = 0, fp = 0;
        for (size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] >= th) {
                if (labels[i]) {
                    ++tp;
                } else {
                    ++fp;
                }
            }
        }
        const double precision = double(tp) / double(tp + fp);
        const double recall = double(tp) / double(n_pos);
        ap += (recall - recall_prev) * precision;
        recall_prev = recall;
    }
    return ap;
}

// Independent best-Dice oracle over all distinct cut points.
double dice_brute_force(const std::vector<float>& scores, const std::vector<uint8_t>& labels) {
    std::set<float> thresholds(scores.begin(), scores.end());
    size_t n_pos = 0;
    for (uint8_t l : labels) n_pos += l != 0;
    double best = -1.0;
    for (float th : thresholds) {
        size_t tp = 0, fp = 0;
        for (size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] >= th) {
                if (labels[i]) {
                    ++tp;
                } else {
                    ++fp;
                }
            }
        }
        const size_t fn = n_pos - tp;
        best = std::max(best, 2.0 * double(tp) / double(2 * tp + fp + fn));
    }
    return best;
}

// Lattice-valued scores keep distinct values well separated so a 200-point
// sweep hits every cut, and they exercise tie handling heavily.
void random_instance(Rng& rng, int max_n, std::vector<float>& scores,
                     std::vector<uint8_t>& labels) {
    const int n = uniform_int(rng, 2, max_n);
    scores.resize(n);
    labels.resize(n);
    bool any_pos = false;
    for (int i = 0; i < n; ++i) {
        scores[i] = static_cast<float>(uniform_int(rng, 0, 12)) / 12.0f;
        labels[i] = uniform_double(rng) < 0.4 ? 1 : 0;
        any_pos |= labels[i] != 0;
    }
    if (!any_pos) labels[uniform_int(rng, 0, n - 1)] = 1;
}

} // namespace

TEST_CASE("average precision worked examples") {
    CHECK(average_precision({0.9f, 0.8f, 0.1f}, {1, 1, 0}) == doctest::Approx(1.0));
    CHECK(average_precision({0.1f, 0.9f}, {1, 0}) == doctest::Approx(0.5));
    // All-equal scores collapse to one block with precision = prevalence.
    const std::vector<float> flat(10, 0.5f);
    const std::vector<uint8_t> labels = {1, 0, 0, 1, 0, 0, 0, 1, 0, 0};
    CHECK(average_precision(flat, labels) == doctest::Approx(0.3));
    CHECK(ap_brute_force(flat, labels) == doctest::Approx(0.3));
}

TEST_CASE("average precision matches brute force on random instances") {
    Rng rng(17);
    std::vector<float> scores;
    std::vector<uint8_t> labels;
    for (int trial = 0; trial < 500; ++trial) {
        random_instance(rng, 12, scores, labels);
        CHECK(average_precision(scores, labels) ==
              doctest::Approx(ap_brute_force(scores, labels)).epsilon(1e-9));
    }
}

TEST_CASE("average precision is invariant under monotone transforms") {
    Rng rng(23);
    std::vector<float> scores;
    std::vector<uint8_t> labels;
    for (int trial = 0; trial < 100; ++trial) {
        random_instance(rng, 30, scores, labels);
        const double base = average_precision(scores, labels);

        std::vector<float> cubed(scores.size()), expd(scores.size());
        for (size_t i = 0; i < scores.size(); ++i) {
            cubed[i] = scores[i] * scores[i] * scores[i];
            expd[i] = std::exp(scores[i]);
        }
        CHECK(average_precision(cubed, labels) == doctest::Approx(base).epsilon(1e-12));
        CHECK(average_precision(expd, labels) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("metric errors") {
    CHECK_THROWS_AS(average_precision({0.5f, 0.2f}, {0, 0}), UndefinedMetricError);
    CHECK_THROWS_AS(average_precision({0.5f}, {1, 0}), ShapeError);
    CHECK_THROWS_AS(average_precision({}, {}), UndefinedMetricError);
    CHECK_THROWS_AS(best_dice({0.5f, 0.1f}, {0, 0}), UndefinedMetricError);
    CHECK_THROWS_AS(best_dice({0.5f, 0.1f}, {1, 0}, 1), ConfigError);
}

TEST_CASE("best dice worked examples") {
    SUBCASE("scores equal to labels separate perfectly") {
        const auto [dice, th] = best_dice({1.0f, 0.0f, 1.0f, 0.0f}, {1, 0, 1, 0});
        CHECK(dice == doctest::Approx(1.0));
        CHECK(th > 0.0);
    }
    SUBCASE("all labels positive peaks at the lowest threshold") {
        const auto [dice, th] = best_dice({0.3f, 0.9f, 0.5f}, {1, 1, 1});
        CHECK(dice == doctest::Approx(1.0));
        CHECK(th == doctest::Approx(0.3f));
    }
    SUBCASE("documented four-pixel case") {
        const auto [dice, th] = best_dice({0.9f, 0.8f, 0.7f, 0.1f}, {1, 0, 1, 0});
        CHECK(dice == doctest::Approx(0.8));
        CHECK(th > 0.1);
        CHECK(th <= 0.7);
    }
}

TEST_CASE("best dice matches brute force on random instances") {
    Rng rng(31);
    std::vector<float> scores;
    std::vector<uint8_t> labels;
    for (int trial = 0; trial < 500; ++trial) {
        random_instance(rng, 12, scores, labels);
        const auto [dice, th] = best_dice(scores, labels, 200);
        CHECK(dice == doctest::Approx(dice_brute_force(scores, labels)).epsilon(1e-9));
    }
}

TEST_CASE("doubling the threshold count never loses more than 1/n") {
    Rng rng(37);
    std::vector<float> scores;
    std::vector<uint8_t> labels;
    for (int trial = 0; trial < 200; ++trial) {
        random_instance(rng, 40, scores, labels);
        for (int n : {100, 200, 400}) {
            const double coarse = best_dice(scores, labels, n).first;
            const double fine = best_dice(scores, labels, 2 * n).first;
            CHECK(fine >= coarse - 1.0 / n);
        }
    }
}

TEST_CASE("best dice is invariant under monotone transforms at sufficient resolution") {
    Rng rng(41);
    std::vector<float> scores;
    std::vector<uint8_t> labels;
    for (int trial = 0; trial < 100; ++trial) {
        random_instance(rng, 30, scores, labels);
        const double base = best_dice(scores, labels, 4096).first;
        std::vector<float> shifted(scores.size());
        for (size_t i = 0; i < scores.size(); ++i) shifted[i] = 2.0f * scores[i] + 1.0f;
        CHECK(best_dice(shifted, labels, 4096).first == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("seed aggregation") {
    EvalResult a;
    a.ap = 0.2;
    a.best_dice = 0.5;
    EvalResult b;
    b.ap = 0.4;
    b.best_dice = 0.5;

    SUBCASE("single result has zero std") {
        const auto agg = aggregate_seeds({a});
        CHECK(agg.ap.mean == doctest::Approx(0.2));
        CHECK(agg.ap.std == doctest::Approx(0.0));
    }
    SUBCASE("identical results have zero std") {
        const auto agg = aggregate_seeds({a, a});
        CHECK(agg.ap.mean == doctest::Approx(0.2));
        CHECK(agg.ap.std == doctest::Approx(0.0));
    }
    SUBCASE("population statistics") {
        const auto agg = aggregate_seeds({a, b});
        CHECK(agg.ap.mean == doctest::Approx(0.3).epsilon(1e-12));
        CHECK(agg.ap.std == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(agg.best_dice.std == doctest::Approx(0.0));
    }
    SUBCASE("empty input rejected") {
        CHECK_THROWS_AS(aggregate_seeds({}), ConfigError);
    }
}

TEST_CASE("evaluate fills the bookkeeping fields") {
    const EvalResult r = evaluate({0.9f, 0.1f, 0.8f, 0.2f}, {1, 0, 1, 0});
    CHECK(r.ap == doctest::Approx(1.0));
    CHECK(r.best_dice == doctest::Approx(1.0));
    CHECK(r.n_pixels == 4);
    CHECK(r.n_positive == 2);
}
