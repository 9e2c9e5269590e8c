#include "anoheal/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "anoheal/errors.hpp"

namespace anoheal {

namespace {

double smoothstep01(double x) {
    x = std::clamp(x, 0.0, 1.0);
    return x * x * (3.0 - 2.0 * x);
}

void gaussian_blur(std::vector<double>& field, int h, int w, double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double norm = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        norm += kernel[i + radius];
    }
    for (double& k : kernel) k /= norm;

    std::vector<double> tmp(field.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int xx = std::clamp(x + i, 0, w - 1);
                acc += kernel[i + radius] * field[static_cast<size_t>(y) * w + xx];
            }
            tmp[static_cast<size_t>(y) * w + x] = acc;
        }
    }
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int yy = std::clamp(y + i, 0, h - 1);
                acc += kernel[i + radius] * tmp[static_cast<size_t>(yy) * w + x];
            }
            field[static_cast<size_t>(y) * w + x] = acc;
        }
    }
}

// Unit-variance band-limited noise field.
std::vector<double> textured_noise(int h, int w, double sigma, Rng& rng) {
    std::vector<double> noise(static_cast<size_t>(h) * w);
    for (double& x : noise) x = normal(rng);
    gaussian_blur(noise, h, w, sigma);
    double mean = std::accumulate(noise.begin(), noise.end(), 0.0) / noise.size();
    double var = 0.0;
    for (double x : noise) var += (x - mean) * (x - mean);
    var /= noise.size();
    const double scale = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
    for (double& x : noise) x = (x - mean) * scale;
    return noise;
}

Image healthy_image(int size, uint64_t seed) {
    Rng rng(seed);
    const double cx = uniform_in(rng, -0.06, 0.06);
    const double cy = uniform_in(rng, -0.06, 0.06);
    const double phi = uniform_in(rng, -0.35, 0.35);
    const double a0 = uniform_in(rng, 0.62, 0.74);
    const double b0 = uniform_in(rng, 0.50, 0.62);
    const double wob1 = uniform_in(rng, 0.0, 0.025);
    const double wob2 = uniform_in(rng, 0.0, 0.02);
    const double ph1 = uniform_in(rng, 0.0, 2.0 * M_PI);
    const double ph2 = uniform_in(rng, 0.0, 2.0 * M_PI);

    const int n_rings = uniform_int(rng, 3, 5);
    static constexpr double kPalette[5] = {0.80, 0.42, 0.66, 0.52, 0.72};
    std::vector<double> ring_value(n_rings);
    for (int k = 0; k < n_rings; ++k) {
        ring_value[k] = std::clamp(kPalette[k] + uniform_in(rng, -0.07, 0.07), 0.15, 0.95);
    }
    // Descending interior boundaries; ring 0 is outermost.
    std::vector<double> boundary(n_rings - 1);
    double s = 1.0;
    for (int k = 0; k < n_rings - 1; ++k) {
        s *= uniform_in(rng, 0.55, 0.80);
        boundary[k] = s;
    }

    const double tex_sigma = uniform_in(rng, 1.2, 1.8);
    const double tex_amp = uniform_in(rng, 0.015, 0.03);
    const std::vector<double> tex = textured_noise(size, size, tex_sigma, rng);

    constexpr double kRingSoft = 0.05;
    constexpr double kEdgeSoft = 0.06;
    const double half = size / 2.0;

    Image img(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double u = (x + 0.5 - half) / half - cx;
            const double v = (y + 0.5 - half) / half - cy;
            const double xr = std::cos(phi) * u + std::sin(phi) * v;
            const double yr = -std::sin(phi) * u + std::cos(phi) * v;
            const double rho_e = std::sqrt((xr / a0) * (xr / a0) + (yr / b0) * (yr / b0));
            const double theta = std::atan2(yr, xr);
            const double rho = rho_e * (1.0 + wob1 * std::sin(3.0 * theta + ph1) +
                                        wob2 * std::sin(5.0 * theta + ph2));

            double intensity = ring_value[n_rings - 1];
            for (int j = 0; j < n_rings - 1; ++j) {
                intensity += (ring_value[j] - ring_value[j + 1]) *
                             smoothstep01((rho - boundary[j]) / kRingSoft + 0.5);
            }
            const double fg = 1.0 - smoothstep01((rho - 1.0) / kEdgeSoft + 0.5);
            const double value =
                std::clamp(intensity + tex_amp * tex[static_cast<size_t>(y) * size + x], 0.0, 1.0);
            img.at(y, x) = static_cast<float>(value * fg);
        }
    }
    return img;
}

double bilinear(const Image& img, double y, double x) {
    y = std::clamp(y, 0.0, static_cast<double>(img.h - 1));
    x = std::clamp(x, 0.0, static_cast<double>(img.w - 1));
    const int y0 = static_cast<int>(y), x0 = static_cast<int>(x);
    const int y1 = std::min(y0 + 1, img.h - 1), x1 = std::min(x0 + 1, img.w - 1);
    const double fy = y - y0, fx = x - x0;
    return (1 - fy) * ((1 - fx) * img.at(y0, x0) + fx * img.at(y0, x1)) +
           fy * ((1 - fx) * img.at(y1, x0) + fx * img.at(y1, x1));
}

std::vector<size_t> foreground_pixels(const Image& img, float threshold = 0.01f) {
    std::vector<size_t> out;
    for (size_t i = 0; i < img.v.size(); ++i) {
        if (img.v[i] > threshold) out.push_back(i);
    }
    return out;
}

constexpr double kGtThreshold = 0.02;

struct Candidate {
    Image image;
    Image gt;
    int area = 0;
};

// Keeps only super-threshold changes so pixels outside gt stay bit-identical.
Candidate finalize(const Image& src, const Image& cand) {
    Candidate out;
    out.image = src;
    out.gt = Image(src.h, src.w, 0.0f);
    for (size_t i = 0; i < src.v.size(); ++i) {
        if (std::abs(static_cast<double>(cand.v[i]) - static_cast<double>(src.v[i])) >
            kGtThreshold) {
            out.image.v[i] = cand.v[i];
            out.gt.v[i] = 1.0f;
            ++out.area;
        }
    }
    return out;
}

Candidate make_intensity_blob(const Image& src, double radius, Rng& rng,
                              const std::vector<size_t>& fg) {
    const size_t c = fg[static_cast<size_t>(uniform_int(rng, 0, static_cast<int>(fg.size()) - 1))];
    const double cy = static_cast<double>(c / src.w), cx = static_cast<double>(c % src.w);
    double amp = uniform_in(rng, 0.20, 0.40);
    if (uniform_double(rng) < 0.5) amp = -amp;
    const double sigma = radius / std::sqrt(2.0 * std::log(std::abs(amp) / kGtThreshold));

    Image cand = src;
    for (int y = 0; y < src.h; ++y) {
        for (int x = 0; x < src.w; ++x) {
            const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
            const double delta = amp * std::exp(-0.5 * d2 / (sigma * sigma));
            cand.at(y, x) = static_cast<float>(
                std::clamp(static_cast<double>(src.at(y, x)) + delta, 0.0, 1.0));
        }
    }
    return finalize(src, cand);
}

Candidate make_texture_swap(const Image& src, double radius, Rng& rng,
                            const std::vector<size_t>& fg) {
    const size_t c = fg[static_cast<size_t>(uniform_int(rng, 0, static_cast<int>(fg.size()) - 1))];
    const double cy = static_cast<double>(c / src.w), cx = static_cast<double>(c % src.w);
    const double amp = uniform_in(rng, 0.12, 0.20);
    const std::vector<double> noise = textured_noise(src.h, src.w, 0.7, rng);

    // Region mean so the swap changes texture, not brightness.
    double mean = 0.0;
    int count = 0;
    for (int y = 0; y < src.h; ++y) {
        for (int x = 0; x < src.w; ++x) {
            const double d = std::hypot(y - cy, x - cx);
            if (d <= radius) {
                mean += src.at(y, x);
                ++count;
            }
        }
    }
    if (count == 0) return {src, Image(src.h, src.w, 0.0f), 0};
    mean /= count;

    Image cand = src;
    for (int y = 0; y < src.h; ++y) {
        for (int x = 0; x < src.w; ++x) {
            const double d = std::hypot(y - cy, x - cx);
            const double wgt = 1.0 - smoothstep01((d - radius) / 1.5 + 0.5);
            if (wgt > 0.0) {
                const double repl =
                    mean + amp * noise[static_cast<size_t>(y) * src.w + x];
                cand.at(y, x) = static_cast<float>(std::clamp(
                    (1.0 - wgt) * static_cast<double>(src.at(y, x)) + wgt * repl, 0.0, 1.0));
            }
        }
    }
    return finalize(src, cand);
}

Candidate make_deformation(const Image& src, double radius, Rng& rng,
                           const std::vector<size_t>& fg) {
    // Warps only move visible content near edges, so anchor at a strong
    // gradient inside the foreground.
    std::vector<std::pair<double, size_t>> grads;
    grads.reserve(fg.size());
    for (size_t idx : fg) {
        const int y = static_cast<int>(idx / src.w), x = static_cast<int>(idx % src.w);
        if (y < 1 || y >= src.h - 1 || x < 1 || x >= src.w - 1) continue;
        const double gy = src.at(y + 1, x) - src.at(y - 1, x);
        const double gx = src.at(y, x + 1) - src.at(y, x - 1);
        grads.emplace_back(std::hypot(gy, gx), idx);
    }
    if (grads.empty()) return {src, Image(src.h, src.w, 0.0f), 0};
    std::sort(grads.begin(), grads.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    const size_t top = std::max<size_t>(1, grads.size() / 10);
    const size_t c = grads[static_cast<size_t>(uniform_int(rng, 0, static_cast<int>(top) - 1))]
                         .second;
    const double cy = static_cast<double>(c / src.w), cx = static_cast<double>(c % src.w);

    const double sigma = radius * 0.7;
    const double mag = sigma * uniform_in(rng, 0.9, 1.4);
    const double psi = uniform_in(rng, 0.0, 2.0 * M_PI);
    const double uy = mag * std::sin(psi), ux = mag * std::cos(psi);

    Image cand(src.h, src.w);
    for (int y = 0; y < src.h; ++y) {
        for (int x = 0; x < src.w; ++x) {
            const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
            const double g = std::exp(-0.5 * d2 / (sigma * sigma));
            cand.at(y, x) = static_cast<float>(
                std::clamp(bilinear(src, y - g * uy, x - g * ux), 0.0, 1.0));
        }
    }
    return finalize(src, cand);
}

} // namespace

void validate_spec(const PhantomSpec& spec) {
    if (spec.image_size < 32) throw ConfigError("phantom: image_size must be >= 32");
    if (spec.n_train < 16) throw ConfigError("phantom: n_train must be >= 16");
    if (spec.n_test < 8) throw ConfigError("phantom: n_test must be >= 8");
    if (spec.n_val < 1) throw ConfigError("phantom: n_val must be >= 1");
    if (!(spec.anomaly_prevalence > 0.0 && spec.anomaly_prevalence < 0.2)) {
        throw ConfigError("phantom: anomaly_prevalence must lie in (0, 0.2)");
    }
    if (spec.anomaly_kinds.empty()) throw ConfigError("phantom: no anomaly kinds configured");
}

std::vector<Image> generate_healthy(const PhantomSpec& spec, Rng& rng, int count) {
    validate_spec(spec);
    std::vector<uint64_t> seeds(static_cast<size_t>(count));
    for (auto& s : seeds) s = rng();
    std::vector<Image> out;
    out.reserve(seeds.size());
    for (uint64_t s : seeds) out.push_back(healthy_image(spec.image_size, s));
    return out;
}

std::vector<LabeledTestImage> generate_anomalous(const PhantomSpec& spec,
                                                 const std::vector<Image>& healthy, Rng& rng) {
    validate_spec(spec);
    if (healthy.empty()) throw ConfigError("generate_anomalous: empty healthy collection");

    const auto& kinds = spec.anomaly_kinds;
    std::vector<LabeledTestImage> out;
    out.reserve(healthy.size());

    for (size_t i = 0; i < healthy.size(); ++i) {
        const Image& src = healthy[i];
        const std::vector<size_t> fg = foreground_pixels(src);
        if (fg.empty()) throw ComputeError("generate_anomalous: source image has no foreground");

        const double target_area = spec.anomaly_prevalence * src.h * src.w;
        const AnomalyKind kind = kinds[i % kinds.size()];

        double radius = std::sqrt(target_area / M_PI);
        Candidate best;
        bool ok = false;
        for (int attempt = 0; attempt < 20 && !ok; ++attempt) {
            Candidate cand;
            switch (kind) {
                case AnomalyKind::intensity_blob:
                    cand = make_intensity_blob(src, radius, rng, fg);
                    break;
                case AnomalyKind::texture_swap:
                    cand = make_texture_swap(src, radius, rng, fg);
                    break;
                case AnomalyKind::deformation:
                    cand = make_deformation(src, radius, rng, fg);
                    break;
            }
            if (cand.area >= 0.5 * target_area && cand.area <= 1.5 * target_area) {
                best = std::move(cand);
                ok = true;
            } else if (cand.area > 0) {
                // Secant-style correction of the footprint radius.
                const double ratio = std::sqrt(target_area / cand.area);
                radius *= std::clamp(ratio, 0.6, 1.8);
            }
        }
        if (!ok) {
            throw ComputeError("generate_anomalous: could not reach target prevalence for image " +
                               std::to_string(i));
        }
        out.push_back({std::move(best.image), std::move(best.gt)});
    }
    return out;
}

} // namespace anoheal
