#include <doctest.h>

#include <cmath>

#include "anoheal/nn/optim.hpp"
#include "anoheal/nn/unet.hpp"
#include "anoheal/rng.hpp"

using namespace anoheal;
using nn::ArchConfig;
using nn::Tensor;
using nn::UNet;

namespace {

// Tiny configuration exercising every module type, including attention.
ArchConfig tiny_arch() {
    ArchConfig cfg;
    cfg.channels = {8, 16};
    cfg.attention_from_level = 2;
    cfg.time_embed_dim = 16;
    cfg.norm_groups = 4;
    return cfg;
}

template <typename T>
Tensor<T> random_tensor(int n, int c, int h, int w, Rng& rng) {
    Tensor<T> t(n, c, h, w);
    for (auto& v : t.v) v = static_cast<T>(uniform_double(rng));
    return t;
}

// MSE loss and its gradient, double precision.
double mse(const Tensor<double>& pred, const Tensor<double>& target, Tensor<double>* grad) {
    double acc = 0.0;
    if (grad) *grad = Tensor<double>(pred.n, pred.c, pred.h, pred.w);
    const double inv = 1.0 / static_cast<double>(pred.v.size());
    for (size_t i = 0; i < pred.v.size(); ++i) {
        const double d = pred.v[i] - target.v[i];
        acc += d * d;
        if (grad) grad->v[i] = 2.0 * d * inv;
    }
    return acc * inv;
}

} // namespace

TEST_CASE("gradients match central finite differences on the tiny model") {
    UNet<double> net(tiny_arch());
    Rng rng(42);
    net.init(rng);

    Rng data_rng(7);
    Tensor<double> x = random_tensor<double>(2, 1, 16, 16, data_rng);
    Tensor<double> target = random_tensor<double>(2, 1, 16, 16, data_rng);
    const std::vector<int> ts = {3, 77};

    Tensor<double> grad;
    mse(net.forward(x, ts), target, &grad);
    net.backward(grad);

    auto params = net.params();
    // Snapshot analytic gradients before the FD probes disturb anything.
    std::vector<std::vector<double>> analytic;
    for (auto& p : params) analytic.push_back(*p.grad);

    Rng pick(99);
    int checked = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 60; ++trial) {
        const size_t pi = static_cast<size_t>(uniform_int(pick, 0, static_cast<int>(params.size()) - 1));
        if (params[pi].value->empty()) continue;
        const size_t wi = static_cast<size_t>(
            uniform_int(pick, 0, static_cast<int>(params[pi].value->size()) - 1));

        double& w = (*params[pi].value)[wi];
        const double w0 = w;
        const double h = 1e-5 * std::max(1.0, std::abs(w0));

        w = w0 + h;
        const double up = mse(net.forward(x, ts), target, nullptr);
        w = w0 - h;
        const double down = mse(net.forward(x, ts), target, nullptr);
        w = w0;

        const double fd = (up - down) / (2.0 * h);
        const double an = analytic[pi][wi];
        const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
        worst = std::max(worst, rel);
        CAPTURE(pi);
        CAPTURE(wi);
        CAPTURE(fd);
        CAPTURE(an);
        CHECK(rel < 1e-3);
        ++checked;
    }
    CHECK(checked >= 50);
    MESSAGE("worst relative gradient error: ", worst);
}

TEST_CASE("forward pass preserves spatial shape") {
    UNet<float> net(tiny_arch());
    Rng rng(1);
    net.init(rng);
    for (int size : {16, 32}) {
        Rng data_rng(5);
        Tensor<float> x = random_tensor<float>(2, 1, size, size, data_rng);
        Tensor<float> y = net.forward(x, {1, 50});
        CHECK(y.n == 2);
        CHECK(y.c == 1);
        CHECK(y.h == size);
        CHECK(y.w == size);
    }
}

TEST_CASE("indivisible spatial dims are rejected") {
    UNet<float> net(tiny_arch());
    Rng rng(1);
    net.init(rng);
    Tensor<float> x(1, 1, 17, 17);
    CHECK_THROWS_AS(net.forward(x, {1}), ShapeError);
}

TEST_CASE("timestep conditioning is live with random weights") {
    UNet<float> net(tiny_arch());
    Rng rng(11);
    net.init(rng);
    Rng data_rng(3);
    Tensor<float> x = random_tensor<float>(1, 1, 16, 16, data_rng);
    Tensor<float> y1 = net.forward(x, {1});
    Tensor<float> y2 = net.forward(x, {100});
    double diff = 0.0;
    for (size_t i = 0; i < y1.v.size(); ++i) diff += std::abs(y1.v[i] - y2.v[i]);
    CHECK(diff > 1e-6);
}

TEST_CASE("parameter count grows with channel widths") {
    auto count = [](std::vector<int> channels) {
        ArchConfig cfg = tiny_arch();
        cfg.channels = std::move(channels);
        return UNet<float>(cfg).param_count();
    };
    const size_t small = count({8, 16});
    const size_t medium = count({12, 24});
    const size_t large = count({16, 32});
    CHECK(small < medium);
    CHECK(medium < large);
}

TEST_CASE("identical seeds give identical forward passes") {
    UNet<float> a(tiny_arch()), b(tiny_arch());
    Rng ra(123), rb(123);
    a.init(ra);
    b.init(rb);
    Rng data_rng(9);
    Tensor<float> x = random_tensor<float>(2, 1, 16, 16, data_rng);
    Tensor<float> ya = a.forward(x, {5, 95});
    Tensor<float> yb = b.forward(x, {5, 95});
    CHECK(ya.v == yb.v);
}

TEST_CASE("architecture validation rejects bad configs") {
    ArchConfig cfg = tiny_arch();
    cfg.channels = {8};
    CHECK_THROWS_AS((void)UNet<float>{cfg}, ConfigError);

    cfg = tiny_arch();
    cfg.channels = {10, 20};  // not multiples of norm_groups=4
    CHECK_THROWS_AS((void)UNet<float>{cfg}, ConfigError);

    cfg = tiny_arch();
    cfg.time_embed_dim = 15;
    CHECK_THROWS_AS((void)UNet<float>{cfg}, ConfigError);
}

TEST_CASE("one-cycle schedule warms up and anneals") {
    nn::OneCycle lr{1e-3, 25.0, 1e4, 0.3, 1000};
    CHECK(lr.lr_at(0) == doctest::Approx(1e-3 / 25.0));
    // Peak at the end of warmup.
    CHECK(lr.lr_at(300) == doctest::Approx(1e-3).epsilon(1e-3));
    CHECK(lr.lr_at(999) == doctest::Approx(1e-3 / 25.0 / 1e4).epsilon(0.05));
    // Monotone up then down.
    CHECK(lr.lr_at(150) > lr.lr_at(10));
    CHECK(lr.lr_at(700) > lr.lr_at(950));
}

TEST_CASE("adamw moves weights against the gradient and zeroes grads") {
    nn::Param<float> p;
    p.resize(4);
    p.value = {1.0f, -1.0f, 0.5f, 0.0f};
    p.grad = {0.1f, -0.2f, 0.0f, 0.3f};
    std::vector<nn::ParamRef<float>> refs;
    p.collect(refs);

    nn::AdamW<float> opt(0.9, 0.999, 1e-8, 0.0);
    opt.step(refs, 1e-2);
    CHECK(p.value[0] < 1.0f);
    CHECK(p.value[1] > -1.0f);
    CHECK(p.grad == std::vector<float>(4, 0.0f));
}
