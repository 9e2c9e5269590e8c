#include <doctest.h>

#include <cmath>

#include "anoheal/schedule.hpp"

using namespace anoheal;

TEST_CASE("endpoints are exact and interior is strictly increasing") {
    const Schedule s = build_schedule(100, default_beta_start(100), default_beta_end(100));
    CHECK(s.alphas[0] == 0.0);
    CHECK(s.alphas[100] == 1.0);
    for (int t = 0; t < 100; ++t) {
        CHECK(s.alphas[t + 1] > s.alphas[t]);
    }
    for (double a : s.alphas) {
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
    }
}

TEST_CASE("two-step schedule matches the hand-evaluated cumulative product") {
    // beta identical at both steps: abar_1 = 0.5, abar_2 = 0.25,
    // raw = [0, 1-sqrt(0.5), 0.5], alpha_1 = (1-sqrt(0.5)) / 0.5.
    const Schedule s = build_schedule(2, 0.5, 0.5);
    const double expected = (1.0 - std::sqrt(0.5)) / 0.5;
    CHECK(s.alphas[1] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(s.alphas[1] == doctest::Approx(0.5858).epsilon(1e-3));
    CHECK(s.alphas[0] == 0.0);
    CHECK(s.alphas[2] == 1.0);
}

TEST_CASE("schedule matches an independent cumulative-product evaluation") {
    const int T = 10;
    const double bs = 0.1, be = 0.3;
    const Schedule s = build_schedule(T, bs, be);

    std::vector<double> raw(T + 1, 0.0);
    double abar = 1.0;
    for (int step = 1; step <= T; ++step) {
        const double beta = bs + (be - bs) * (step - 1) / double(T - 1);
        abar *= 1.0 - beta;
        raw[step] = 1.0 - std::sqrt(abar);
    }
    for (int t = 0; t <= T; ++t) {
        CHECK(s.alphas[t] == doctest::Approx(raw[t] / raw[T]).epsilon(1e-14));
    }
}

TEST_CASE("rescaling is affine, so ordering of raw values is preserved") {
    const Schedule a = build_schedule(50, 0.01, 0.4);
    // Ratios of consecutive gaps are invariant under affine maps.
    const double gap1 = a.alphas[11] - a.alphas[10];
    const double gap2 = a.alphas[31] - a.alphas[30];
    double abar = 1.0;
    std::vector<double> raw(51, 0.0);
    for (int step = 1; step <= 50; ++step) {
        const double beta = 0.01 + (0.4 - 0.01) * (step - 1) / 49.0;
        abar *= 1.0 - beta;
        raw[step] = 1.0 - std::sqrt(abar);
    }
    CHECK(gap1 / gap2 ==
          doctest::Approx((raw[11] - raw[10]) / (raw[31] - raw[30])).epsilon(1e-10));
}

TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(build_schedule(1, 0.1, 0.2), ConfigError);
    CHECK_THROWS_AS(build_schedule(10, 0.0, 0.2), ConfigError);
    CHECK_THROWS_AS(build_schedule(10, -0.1, 0.2), ConfigError);
    CHECK_THROWS_AS(build_schedule(10, 0.1, 1.0), ConfigError);
    CHECK_THROWS_AS(build_schedule(10, 0.3, 0.2), ConfigError);
}

TEST_CASE("alpha_at bounds") {
    const Schedule s = build_schedule(100, 1e-3, 0.2);
    CHECK(alpha_at(s, 0) == 0.0);
    CHECK(alpha_at(s, 100) == 1.0);
    const double mid = alpha_at(s, 50);
    CHECK(mid > 0.0);
    CHECK(mid < 1.0);
    CHECK_THROWS_AS(alpha_at(s, -1), IndexError);
    CHECK_THROWS_AS(alpha_at(s, 101), IndexError);
}

TEST_CASE("default beta range reproduces the 1000-step endpoint at T=100") {
    CHECK(default_beta_start(100) == doctest::Approx(1e-3));
    CHECK(default_beta_end(100) == doctest::Approx(0.2));
    CHECK(default_beta_start(1000) == doctest::Approx(1e-4));
    CHECK(default_beta_end(1000) == doctest::Approx(0.02));
}
