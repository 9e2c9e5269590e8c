#pragma once

#include <cstdint>
#include <vector>

#include "anoheal/image.hpp"
#include "anoheal/rng.hpp"

namespace anoheal {

enum class AnomalyKind { intensity_blob, texture_swap, deformation };

struct PhantomSpec {
    int image_size = 64;
    int n_train = 240;
    int n_val = 24;
    int n_test = 48;
    double anomaly_prevalence = 0.03;  // fraction of image pixels made anomalous
    uint64_t seed = 0;
    std::vector<AnomalyKind> anomaly_kinds = {AnomalyKind::intensity_blob,
                                              AnomalyKind::texture_swap,
                                              AnomalyKind::deformation};
};

void validate_spec(const PhantomSpec& spec);

struct LabeledTestImage {
    Image image;
    Image gt_mask;  // 1.0 on anomalous pixels, 0.0 elsewhere
};

// Randomized nested-ellipse "anatomy": per-ring intensities, per-subject
// affine jitter and boundary wobble, band-limited texture, background exactly
// zero. One engine draw per image seeds an independent per-image stream.
std::vector<Image> generate_healthy(const PhantomSpec& spec, Rng& rng, int count);

// Injects anomalies into held-out healthy images through mechanisms disjoint
// from the training corruption: additive intensity bumps, texture
// replacement, and local smooth warps. gt marks pixels with |change| > 0.02;
// sub-threshold changes are reverted so everything outside gt is untouched.
std::vector<LabeledTestImage> generate_anomalous(const PhantomSpec& spec,
                                                 const std::vector<Image>& healthy, Rng& rng);

} // namespace anoheal
