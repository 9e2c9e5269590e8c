#include <doctest.h>

#include <cmath>
#include <set>

#include "anoheal/corruption.hpp"

using namespace anoheal;

namespace {

Image random_image(int h, int w, uint64_t seed) {
    Rng rng(seed);
    Image img(h, w);
    for (auto& v : img.v) v = static_cast<float>(uniform_double(rng));
    return img;
}

Image random_soft_mask(int h, int w, uint64_t seed) {
    Rng rng(seed);
    Image m(h, w);
    for (auto& v : m.v) {
        const double u = uniform_double(rng);
        v = u < 0.5 ? 0.0f : static_cast<float>(uniform_double(rng));
    }
    return m;
}

} // namespace

TEST_CASE("corrupt endpoints") {
    const Image x0 = random_image(32, 32, 1);
    const Image fp = random_image(32, 32, 2);
    const Image ones(32, 32, 1.0f);

    SUBCASE("alpha 0 is the identity") {
        const Image out = corrupt(x0, fp, ones, 0.0);
        CHECK(out.v == x0.v);
    }
    SUBCASE("alpha 1 with full mask returns the foreign patch") {
        const Image out = corrupt(x0, fp, ones, 1.0);
        CHECK(out.v == fp.v);
    }
}

TEST_CASE("corrupt evaluates the convex combination") {
    Image x0(32, 32, 0.4f), fp(32, 32, 0.8f), m(32, 32, 0.5f);
    const Image out = corrupt(x0, fp, m, 0.5);
    // (1 - 0.25) * 0.4 + 0.25 * 0.8 = 0.5
    CHECK(out.at(7, 9) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("corrupt validates inputs") {
    const Image x0 = random_image(32, 32, 1);
    const Image fp = random_image(32, 33, 2);
    const Image m(32, 32, 0.5f);
    CHECK_THROWS_AS(corrupt(x0, fp, m, 0.5), ShapeError);
    const Image fp_ok = random_image(32, 32, 2);
    CHECK_THROWS_AS(corrupt(x0, fp_ok, m, -0.1), ConfigError);
    CHECK_THROWS_AS(corrupt(x0, fp_ok, m, 1.1), ConfigError);
}

TEST_CASE("corruption algebra on random instances") {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const Image x0 = random_image(32, 32, rng());
        const Image fp = random_image(32, 32, rng());
        const Image m = random_soft_mask(32, 32, rng());
        const double alpha = uniform_double(rng);
        const Image out = corrupt(x0, fp, m, alpha);

        bool in_range = true, identity = true, linear = true;
        for (size_t i = 0; i < out.v.size(); ++i) {
            in_range &= out.v[i] >= 0.0f && out.v[i] <= 1.0f;
            if (m.v[i] == 0.0f) identity &= out.v[i] == x0.v[i];
            const double lhs = double(out.v[i]) - double(x0.v[i]);
            const double rhs = alpha * double(m.v[i]) * (double(fp.v[i]) - double(x0.v[i]));
            linear &= std::abs(lhs - rhs) <= 1e-7;
        }
        CHECK(in_range);
        CHECK(identity);
        CHECK(linear);
    }
}

TEST_CASE("pixel deviation is nondecreasing in alpha") {
    Rng rng(5);
    const Image x0 = random_image(32, 32, 10);
    const Image fp = random_image(32, 32, 11);
    const Image m = random_soft_mask(32, 32, 12);
    Image prev = corrupt(x0, fp, m, 0.0);
    for (double alpha : {0.2, 0.5, 0.8, 1.0}) {
        const Image cur = corrupt(x0, fp, m, alpha);
        for (size_t i = 0; i < cur.v.size(); ++i) {
            const float d_prev = std::abs(prev.v[i] - x0.v[i]);
            const float d_cur = std::abs(cur.v[i] - x0.v[i]);
            CHECK(d_cur >= d_prev - 1e-6f);
        }
        prev = cur;
    }
}

TEST_CASE("generate_mask basics") {
    MaskConfig cfg;
    Rng rng(3);
    const AnomalyMask mask = generate_mask(64, 64, rng, cfg);

    CHECK(mask.support_area > 0);
    for (float v : mask.m.v) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
    // Soft edges: some strictly interior values.
    int soft = 0;
    for (float v : mask.m.v) soft += v > 0.0f && v < 1.0f;
    CHECK(soft > 0);
    // Bounding box matches support.
    CHECK(mask.x0 <= mask.x1);
    CHECK(mask.y0 <= mask.y1);
}

TEST_CASE("soften_px 0 yields a binary mask") {
    MaskConfig cfg;
    cfg.soften_px = 0.0;
    Rng rng(4);
    const AnomalyMask mask = generate_mask(64, 64, rng, cfg);
    for (float v : mask.m.v) CHECK((v == 0.0f || v == 1.0f));
}

TEST_CASE("equal seeds give identical masks") {
    MaskConfig cfg;
    Rng a(99), b(99);
    const AnomalyMask ma = generate_mask(64, 64, a, cfg);
    const AnomalyMask mb = generate_mask(64, 64, b, cfg);
    CHECK(ma.m.v == mb.m.v);
}

TEST_CASE("mask respects the foreground restriction") {
    MaskConfig cfg;
    Image fg(64, 64, 0.0f);
    for (int y = 16; y < 48; ++y)
        for (int x = 16; x < 48; ++x) fg.at(y, x) = 1.0f;
    Rng rng(8);
    const AnomalyMask mask = generate_mask(64, 64, rng, cfg, &fg);
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
            if (fg.at(y, x) == 0.0f) CHECK(mask.m.at(y, x) == 0.0f);
        }
    }
    CHECK(mask.support_area > 0);
}

TEST_CASE("mask parameter validation") {
    MaskConfig cfg;
    Rng rng(1);
    CHECK_THROWS_AS(generate_mask(16, 64, rng, cfg), ConfigError);
    cfg.radius_frac_min = 0.0;
    CHECK_THROWS_AS(generate_mask(64, 64, rng, cfg), ConfigError);
    cfg = MaskConfig{};
    cfg.blob_count_min = 0;
    CHECK_THROWS_AS(generate_mask(64, 64, rng, cfg), ConfigError);
}

TEST_CASE("foreign patch sampling") {
    std::vector<Image> dataset = {random_image(32, 32, 1), random_image(32, 32, 2)};

    SUBCASE("two-image dataset always picks the other image") {
        Rng rng(5);
        const Image patch = sample_foreign_patch(dataset, 0, rng);
        // A circular shift preserves the multiset of values.
        auto sorted_patch = patch.v;
        auto sorted_src = dataset[1].v;
        std::sort(sorted_patch.begin(), sorted_patch.end());
        std::sort(sorted_src.begin(), sorted_src.end());
        CHECK(sorted_patch == sorted_src);
        for (float v : patch.v) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
    SUBCASE("deterministic under equal seeds") {
        Rng a(9), b(9);
        CHECK(sample_foreign_patch(dataset, 0, a).v == sample_foreign_patch(dataset, 0, b).v);
    }
    SUBCASE("needs at least two images") {
        std::vector<Image> single = {dataset[0]};
        Rng rng(1);
        CHECK_THROWS_AS(sample_foreign_patch(single, 0, rng), ConfigError);
    }
}

TEST_CASE("training samples honor the contract") {
    std::vector<Image> dataset;
    for (int i = 0; i < 4; ++i) {
        Image img(64, 64, 0.0f);
        Rng rng(100 + i);
        // Foreground disc so the mask restriction is active.
        for (int y = 8; y < 56; ++y)
            for (int x = 8; x < 56; ++x) img.at(y, x) = 0.2f + 0.6f * (float)uniform_double(rng);
        dataset.push_back(img);
    }
    const Schedule schedule = build_schedule(100, 1e-3, 0.2);
    MaskConfig mask_cfg;

    Rng rng(42);
    std::set<int> seen;
    for (int trial = 0; trial < 50; ++trial) {
        const CorruptionSample s = make_training_sample(dataset, trial % 4, schedule, rng,
                                                        mask_cfg);
        CHECK(s.t >= 1);
        CHECK(s.t <= 100);
        seen.insert(s.t);
        CHECK(s.alpha == alpha_at(schedule, s.t));
        for (size_t i = 0; i < s.x_t.v.size(); ++i) {
            if (s.mask.m.v[i] == 0.0f) CHECK(s.x_t.v[i] == s.x_0.v[i]);
            CHECK(s.x_t.v[i] >= 0.0f);
            CHECK(s.x_t.v[i] <= 1.0f);
        }
    }
    CHECK(seen.size() > 10);  // t actually varies

    Rng a(7), b(7);
    const CorruptionSample sa = make_training_sample(dataset, 1, schedule, a, mask_cfg);
    const CorruptionSample sb = make_training_sample(dataset, 1, schedule, b, mask_cfg);
    CHECK(sa.t == sb.t);
    CHECK(sa.x_t.v == sb.x_t.v);
    CHECK(sa.mask.m.v == sb.mask.m.v);
}
