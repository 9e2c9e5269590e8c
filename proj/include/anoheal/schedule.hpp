#pragma once

#include <vector>

#include "anoheal/errors.hpp"

namespace anoheal {

// Discrete corruption schedule: a strictly increasing map t -> alpha_t over
// t in {0, ..., T} with alpha_0 = 0 and alpha_T = 1 exactly.
struct Schedule {
    int T = 0;
    std::vector<double> alphas;  // size T + 1
    double beta_start = 0.0;     // construction parameters, kept for serialization
    double beta_end = 0.0;
};

// Cumulative-product construction: beta linearly spaced over T steps,
// abar_t = prod_{s<=t} (1 - beta_s), raw_t = 1 - sqrt(abar_t), then an affine
// rescale so the endpoints land exactly on 0 and 1.
Schedule build_schedule(int T, double beta_start, double beta_end);

// Default beta range for a given T: the 1000-step [1e-4, 0.02] ramp scaled by
// 1000/T so the cumulative product at T keeps its usual endpoint.
double default_beta_start(int T);
double default_beta_end(int T);

double alpha_at(const Schedule& schedule, int t);

} // namespace anoheal
