#pragma once

#include <vector>

#include "anoheal/image.hpp"
#include "anoheal/rng.hpp"
#include "anoheal/schedule.hpp"

namespace anoheal {

// Geometry knobs for random blob masks.
struct MaskConfig {
    int blob_count_min = 1;
    int blob_count_max = 3;
    double radius_frac_min = 0.05;  // of min(H, W)
    double radius_frac_max = 0.25;
    double soften_px = 4.0;  // edge ramp width; 0 keeps the mask binary
    int max_retries = 10;
};

// Soft-valued anomaly shape; support bookkeeping for placement diagnostics.
struct AnomalyMask {
    Image m;
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive bbox of support, empty if x1 < x0
    int support_area = 0;                  // pixels with m > 0
};

// Training tuple produced by the forward corruption process.
struct CorruptionSample {
    Image x_t;
    Image x_0;
    AnomalyMask mask;
    int t = 0;
    double alpha = 0.0;
};

// Union of 1..3 random polygon blobs (vertices jittered around an ellipse),
// rasterized and softened by an interior distance-transform ramp. When
// `foreground` is given (nonzero pixels = usable region), the mask is
// confined to it.
AnomalyMask generate_mask(int height, int width, Rng& rng, const MaskConfig& params,
                          const Image* foreground = nullptr);

// Full-size image drawn uniformly from `dataset` excluding `exclude_index`,
// circularly shifted by up to +-25% per axis.
Image sample_foreign_patch(const std::vector<Image>& dataset, int exclude_index, Rng& rng);

// x_t = (1 - alpha * m) * x_0 + alpha * m * x_fp, elementwise.
Image corrupt(const Image& x0, const Image& x_fp, const Image& mask, double alpha);

// Draws t uniform in [1, T], builds a mask confined to the foreground of
// dataset[index] (pixels > fg_threshold), samples a foreign patch, and
// applies the corruption at alpha_t.
CorruptionSample make_training_sample(const std::vector<Image>& dataset, int index,
                                      const Schedule& schedule, Rng& rng,
                                      const MaskConfig& mask_cfg, double fg_threshold = 0.01);

} // namespace anoheal
