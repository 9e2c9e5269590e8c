#include "anoheal/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace anoheal {

namespace {

struct Point {
    double x, y;
};

// Even-odd scanline fill at pixel centers.
void rasterize_polygon(const std::vector<Point>& poly, std::vector<uint8_t>& grid, int h, int w) {
    double ymin = std::numeric_limits<double>::max(), ymax = std::numeric_limits<double>::lowest();
    for (const auto& p : poly) {
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    const int y_lo = std::max(0, static_cast<int>(std::floor(ymin)));
    const int y_hi = std::min(h - 1, static_cast<int>(std::ceil(ymax)));

    std::vector<double> xs;
    for (int y = y_lo; y <= y_hi; ++y) {
        const double yc = y + 0.5;
        xs.clear();
        for (size_t i = 0; i < poly.size(); ++i) {
            const Point& a = poly[i];
            const Point& b = poly[(i + 1) % poly.size()];
            if ((a.y <= yc && b.y > yc) || (b.y <= yc && a.y > yc)) {
                xs.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        std::sort(xs.begin(), xs.end());
        for (size_t k = 0; k + 1 < xs.size(); k += 2) {
            int x_lo = std::max(0, static_cast<int>(std::ceil(xs[k] - 0.5)));
            int x_hi = std::min(w - 1, static_cast<int>(std::floor(xs[k + 1] - 0.5)));
            for (int x = x_lo; x <= x_hi; ++x) grid[static_cast<size_t>(y) * w + x] = 1;
        }
    }
}

constexpr double kDtInf = 1e18;

// Felzenszwalb/Huttenlocher 1D squared distance transform.
void dt_1d(const std::vector<double>& f, int n, std::vector<double>& d, std::vector<int>& v,
           std::vector<double>& z) {
    int k = 0;
    v[0] = 0;
    z[0] = -kDtInf;
    z[1] = kDtInf;
    for (int q = 1; q < n; ++q) {
        double s = ((f[q] + static_cast<double>(q) * q) -
                    (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
                   (2.0 * q - 2.0 * v[k]);
        while (s <= z[k]) {
            --k;
            s = ((f[q] + static_cast<double>(q) * q) -
                 (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
                (2.0 * q - 2.0 * v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kDtInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const double dq = q - v[k];
        d[q] = dq * dq + f[v[k]];
    }
}

// Exact Euclidean distance (in pixels) from each nonzero pixel to the nearest
// zero pixel inside the image.
std::vector<double> interior_distance(const std::vector<uint8_t>& grid, int h, int w) {
    std::vector<double> field(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) field[i] = grid[i] ? kDtInf : 0.0;

    const int n_max = std::max(h, w);
    std::vector<double> f(n_max), d(n_max), z(n_max + 1);
    std::vector<int> v(n_max);

    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) f[y] = field[static_cast<size_t>(y) * w + x];
        dt_1d(f, h, d, v, z);
        for (int y = 0; y < h; ++y) field[static_cast<size_t>(y) * w + x] = d[y];
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) f[x] = field[static_cast<size_t>(y) * w + x];
        dt_1d(f, w, d, v, z);
        for (int x = 0; x < w; ++x)
            field[static_cast<size_t>(y) * w + x] = std::sqrt(d[x]);
    }
    return field;
}

void validate_mask_config(int height, int width, const MaskConfig& p) {
    if (height < 32 || width < 32) {
        throw ConfigError("generate_mask: image must be at least 32x32, got " +
                          std::to_string(height) + "x" + std::to_string(width));
    }
    if (p.blob_count_min < 1 || p.blob_count_max < p.blob_count_min) {
        throw ConfigError("generate_mask: invalid blob count range");
    }
    if (!(p.radius_frac_min > 0.0) || p.radius_frac_max < p.radius_frac_min ||
        p.radius_frac_max >= 0.5) {
        throw ConfigError("generate_mask: invalid radius fraction range");
    }
    if (p.soften_px < 0.0) throw ConfigError("generate_mask: soften_px must be >= 0");
    if (p.max_retries < 1) throw ConfigError("generate_mask: max_retries must be >= 1");
}

} // namespace

AnomalyMask generate_mask(int height, int width, Rng& rng, const MaskConfig& params,
                          const Image* foreground) {
    validate_mask_config(height, width, params);
    if (foreground && (foreground->h != height || foreground->w != width)) {
        throw ShapeError("generate_mask: foreground shape mismatch");
    }

    std::vector<size_t> fg_pixels;
    if (foreground) {
        for (size_t i = 0; i < foreground->v.size(); ++i) {
            if (foreground->v[i] > 0.0f) fg_pixels.push_back(i);
        }
        if (fg_pixels.empty()) throw ConfigError("generate_mask: foreground mask is empty");
    }

    const double rmin = params.radius_frac_min * std::min(height, width);
    const double rmax = params.radius_frac_max * std::min(height, width);

    for (int attempt = 0; attempt < params.max_retries; ++attempt) {
        std::vector<uint8_t> grid(static_cast<size_t>(height) * width, 0);
        const int n_blobs = uniform_int(rng, params.blob_count_min, params.blob_count_max);

        for (int b = 0; b < n_blobs; ++b) {
            double cx, cy;
            if (!fg_pixels.empty()) {
                const size_t pick = fg_pixels[static_cast<size_t>(
                    uniform_int(rng, 0, static_cast<int>(fg_pixels.size()) - 1))];
                cy = static_cast<double>(pick / width) + 0.5;
                cx = static_cast<double>(pick % width) + 0.5;
            } else {
                cx = uniform_in(rng, 0.0, width);
                cy = uniform_in(rng, 0.0, height);
            }
            const double ra = uniform_in(rng, rmin, rmax);
            const double rb = uniform_in(rng, rmin, rmax);
            const double theta = uniform_in(rng, 0.0, M_PI);
            const int n_vert = uniform_int(rng, 6, 12);

            std::vector<Point> poly(n_vert);
            const double step = 2.0 * M_PI / n_vert;
            for (int i = 0; i < n_vert; ++i) {
                const double phi = step * i + uniform_in(rng, -0.35, 0.35) * step;
                const double rho = 1.0 + uniform_in(rng, -0.25, 0.25);
                const double ex = ra * rho * std::cos(phi);
                const double ey = rb * rho * std::sin(phi);
                poly[i] = {cx + ex * std::cos(theta) - ey * std::sin(theta),
                           cy + ex * std::sin(theta) + ey * std::cos(theta)};
            }
            rasterize_polygon(poly, grid, height, width);
        }

        if (!fg_pixels.empty()) {
            for (size_t i = 0; i < grid.size(); ++i) {
                if (foreground->v[i] <= 0.0f) grid[i] = 0;
            }
        }

        AnomalyMask mask;
        mask.m = Image(height, width);
        if (params.soften_px > 0.0) {
            const std::vector<double> dist = interior_distance(grid, height, width);
            for (size_t i = 0; i < grid.size(); ++i) {
                mask.m.v[i] = grid[i]
                                  ? static_cast<float>(std::min(1.0, dist[i] / params.soften_px))
                                  : 0.0f;
            }
        } else {
            for (size_t i = 0; i < grid.size(); ++i) mask.m.v[i] = grid[i] ? 1.0f : 0.0f;
        }

        mask.x0 = width;
        mask.y0 = height;
        mask.x1 = -1;
        mask.y1 = -1;
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                if (mask.m.at(y, x) > 0.0f) {
                    ++mask.support_area;
                    mask.x0 = std::min(mask.x0, x);
                    mask.y0 = std::min(mask.y0, y);
                    mask.x1 = std::max(mask.x1, x);
                    mask.y1 = std::max(mask.y1, y);
                }
            }
        }
        if (mask.support_area > 0) return mask;
    }
    throw ComputeError("generate_mask: no usable blob geometry after " +
                       std::to_string(params.max_retries) + " attempts");
}

Image sample_foreign_patch(const std::vector<Image>& dataset, int exclude_index, Rng& rng) {
    if (dataset.size() < 2) {
        throw ConfigError("sample_foreign_patch: need at least 2 images, got " +
                          std::to_string(dataset.size()));
    }
    if (exclude_index < 0 || exclude_index >= static_cast<int>(dataset.size())) {
        throw IndexError("sample_foreign_patch: exclude_index out of range");
    }
    int pick = uniform_int(rng, 0, static_cast<int>(dataset.size()) - 2);
    if (pick >= exclude_index) ++pick;

    const Image& src = dataset[pick];
    if (!src.same_shape(dataset[exclude_index])) {
        throw ShapeError("sample_foreign_patch: dataset images must share a shape");
    }

    const int max_dy = src.h / 4;
    const int max_dx = src.w / 4;
    const int dy = uniform_int(rng, -max_dy, max_dy);
    const int dx = uniform_int(rng, -max_dx, max_dx);

    Image out(src.h, src.w);
    for (int y = 0; y < src.h; ++y) {
        const int sy = ((y - dy) % src.h + src.h) % src.h;
        for (int x = 0; x < src.w; ++x) {
            const int sx = ((x - dx) % src.w + src.w) % src.w;
            out.at(y, x) = src.at(sy, sx);
        }
    }
    return out;
}

Image corrupt(const Image& x0, const Image& x_fp, const Image& mask, double alpha) {
    require_same_shape(x0, x_fp, "corrupt(x0, x_fp)");
    require_same_shape(x0, mask, "corrupt(x0, mask)");
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ConfigError("corrupt: alpha must lie in [0, 1], got " + std::to_string(alpha));
    }

    Image out(x0.h, x0.w);
    for (size_t i = 0; i < out.v.size(); ++i) {
        const double a = alpha * static_cast<double>(mask.v[i]);
        const double y = (1.0 - a) * static_cast<double>(x0.v[i]) +
                         a * static_cast<double>(x_fp.v[i]);
        out.v[i] = static_cast<float>(std::clamp(y, 0.0, 1.0));
    }
    return out;
}

CorruptionSample make_training_sample(const std::vector<Image>& dataset, int index,
                                      const Schedule& schedule, Rng& rng,
                                      const MaskConfig& mask_cfg, double fg_threshold) {
    if (schedule.T < 1 || schedule.alphas.empty()) {
        throw ConfigError("make_training_sample: schedule not built");
    }
    if (index < 0 || index >= static_cast<int>(dataset.size())) {
        throw IndexError("make_training_sample: index out of range");
    }
    const Image& x0 = dataset[index];

    CorruptionSample s;
    s.t = uniform_int(rng, 1, schedule.T);
    s.alpha = alpha_at(schedule, s.t);

    Image fg(x0.h, x0.w);
    int fg_count = 0;
    for (size_t i = 0; i < x0.v.size(); ++i) {
        fg.v[i] = x0.v[i] > fg_threshold ? 1.0f : 0.0f;
        fg_count += fg.v[i] > 0.0f;
    }
    // Fall back to unconstrained placement on images without a usable foreground.
    const Image* fg_ptr = fg_count > 0 ? &fg : nullptr;

    s.mask = generate_mask(x0.h, x0.w, rng, mask_cfg, fg_ptr);
    Image x_fp = sample_foreign_patch(dataset, index, rng);
    s.x_t = corrupt(x0, x_fp, s.mask.m, s.alpha);
    s.x_0 = x0;
    return s;
}

} // namespace anoheal
