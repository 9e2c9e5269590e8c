#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "anoheal/restorer.hpp"
#include "anoheal/rng.hpp"

using namespace anoheal;
namespace fs = std::filesystem;

namespace {

RestorerConfig tiny_config() {
    RestorerConfig cfg;
    cfg.channels_per_level = {8, 16};
    cfg.attention_from_level = 2;
    cfg.time_embed_dim = 16;
    cfg.norm_groups = 4;
    cfg.input_size = 32;
    cfg.T = 100;
    return cfg;
}

std::vector<Image> tiny_dataset(int count, int size, uint64_t seed) {
    std::vector<Image> out;
    for (int i = 0; i < count; ++i) {
        Image img(size, size, 0.0f);
        Rng rng(split_seed(seed, i));
        const double cy = size / 2.0 + uniform_in(rng, -2, 2);
        const double cx = size / 2.0 + uniform_in(rng, -2, 2);
        const double r = size * uniform_in(rng, 0.25, 0.35);
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                const double d = std::hypot(y - cy, x - cx);
                if (d < r) img.at(y, x) = static_cast<float>(0.3 + 0.4 * (1.0 - d / r));
            }
        }
        out.push_back(img);
    }
    return out;
}

TrainConfig fast_train(int steps, uint64_t seed) {
    TrainConfig cfg;
    cfg.steps = steps;
    cfg.batch_size = 4;
    cfg.max_lr = 2e-3;
    cfg.val_interval = std::max(1, steps / 2);
    cfg.val_samples = 8;
    cfg.seed = seed;
    return cfg;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("anoheal_rt_" + std::to_string(Rng(std::random_device{}())()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("restoration loss evaluates the mean squared error") {
    Restorer model(tiny_config(), 3);
    const auto data = tiny_dataset(4, 32, 1);

    // Build a batch whose target equals the model's own prediction: loss 0.
    CorruptionSample s;
    s.x_t = data[0];
    s.t = 10;
    const Image pred = [&] {
        auto y = model.forward_batch({s.x_t}, {s.t});
        Image img(32, 32);
        std::copy_n(y.data(), img.v.size(), img.v.begin());
        return img;
    }();
    s.x_0 = pred;
    CHECK(restoration_loss(model, {s}) == doctest::Approx(0.0).epsilon(1e-12));

    // Constant offset of 0.1 gives loss 0.01.
    CorruptionSample shifted = s;
    for (auto& v : shifted.x_0.v) v += 0.1f;
    CHECK(restoration_loss(model, {shifted}) == doctest::Approx(0.01).epsilon(1e-4));

    // Batch order does not matter.
    CorruptionSample other = s;
    other.t = 60;
    const double ab = restoration_loss(model, {s, other});
    const double ba = restoration_loss(model, {other, s});
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
}

TEST_CASE("zero-step training returns initialization weights and no curve") {
    const auto data = tiny_dataset(8, 32, 2);
    Restorer model(tiny_config(), 5);
    Restorer untouched(tiny_config(), 5);

    const TrainResult result = train(model, data, {}, fast_train(0, 5));
    CHECK(result.loss_curve.empty());
    CHECK(result.val_loss_initial == result.val_loss_final);

    auto pa = model.net().params();
    auto pb = untouched.net().params();
    for (size_t i = 0; i < pa.size(); ++i) CHECK(*pa[i].value == *pb[i].value);
}

TEST_CASE("training is bit-deterministic for a fixed seed") {
    const auto data = tiny_dataset(8, 32, 3);
    Restorer a(tiny_config(), 9);
    Restorer b(tiny_config(), 9);
    const TrainResult ra = train(a, data, {}, fast_train(12, 4));
    const TrainResult rb = train(b, data, {}, fast_train(12, 4));
    REQUIRE(ra.loss_curve.size() == rb.loss_curve.size());
    for (size_t i = 0; i < ra.loss_curve.size(); ++i) {
        CHECK(ra.loss_curve[i] == rb.loss_curve[i]);
    }
    CHECK(ra.val_loss_final == rb.val_loss_final);
}

TEST_CASE("short training reduces the validation loss") {
    const auto data = tiny_dataset(12, 32, 6);
    Restorer model(tiny_config(), 2);
    const TrainResult result = train(model, data, {}, fast_train(150, 2));
    CHECK(result.val_loss_final < result.val_loss_initial);
    CHECK(result.loss_curve.size() == 150);
}

TEST_CASE("non-finite loss aborts with a diagnostics dump") {
    TempDir dir;
    const auto data = tiny_dataset(8, 32, 7);
    Restorer model(tiny_config(), 1);
    TrainConfig cfg = fast_train(50, 1);
    cfg.max_lr = 1e12;  // guaranteed blow-up
    cfg.diagnostics_path = (dir.path / "diag.json").string();
    CHECK_THROWS_AS(train(model, data, {}, cfg), ComputeError);
    CHECK(fs::exists(dir.path / "diag.json"));
}

TEST_CASE("restore_single clamps and validates") {
    Restorer model(tiny_config(), 4);
    const auto data = tiny_dataset(1, 32, 8);
    const Image out = model.restore_single(data[0], 50);
    CHECK(out.h == 32);
    for (float v : out.v) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
    const Image again = model.restore_single(data[0], 50);
    CHECK(out.v == again.v);
    CHECK_THROWS_AS(model.restore_single(data[0], 0), IndexError);
    CHECK_THROWS_AS(model.restore_single(data[0], 101), IndexError);
}

TEST_CASE("checkpoint round trip preserves forward passes and the schedule") {
    TempDir dir;
    const auto data = tiny_dataset(6, 32, 9);
    Restorer model(tiny_config(), 11);
    train(model, data, {}, fast_train(5, 11));

    const Image probe = data[0];
    const Image before = model.restore_single(probe, 42);

    const auto path = dir.path / "model.ahck";
    TrainConfig fingerprint = fast_train(5, 11);
    save_checkpoint(path, model, &fingerprint);
    Restorer loaded = load_checkpoint(path);

    const Image after = loaded.restore_single(probe, 42);
    CHECK(before.v == after.v);

    REQUIRE(loaded.schedule().alphas.size() == model.schedule().alphas.size());
    for (size_t i = 0; i < model.schedule().alphas.size(); ++i) {
        CHECK(loaded.schedule().alphas[i] == model.schedule().alphas[i]);
    }
    CHECK(loaded.config().channels_per_level == model.config().channels_per_level);
}

TEST_CASE("corrupted checkpoints are rejected") {
    TempDir dir;
    Restorer model(tiny_config(), 13);
    const auto path = dir.path / "model.ahck";
    save_checkpoint(path, model, nullptr);

    SUBCASE("truncated blob") {
        fs::resize_file(path, fs::file_size(path) - 128);
        CHECK_THROWS_AS(load_checkpoint(path), TruncatedPayloadError);
    }
    SUBCASE("bad magic") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.write("XXXX", 4);
        f.close();
        CHECK_THROWS_AS(load_checkpoint(path), MalformedHeaderError);
    }
}

TEST_CASE("restorer config validation") {
    RestorerConfig cfg = tiny_config();
    cfg.input_size = 31;  // not divisible by 2^(levels-1)
    CHECK_THROWS_AS((void)Restorer(cfg, 1), ConfigError);
    cfg = tiny_config();
    cfg.channels_per_level = {8};
    CHECK_THROWS_AS((void)Restorer(cfg, 1), ConfigError);
}
