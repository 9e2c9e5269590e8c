#include "anoheal/schedule.hpp"

#include <cmath>
#include <string>

namespace anoheal {

double default_beta_start(int T) { return 0.1 / T; }
double default_beta_end(int T) { return 20.0 / T; }

Schedule build_schedule(int T, double beta_start, double beta_end) {
    if (T < 2) throw ConfigError("build_schedule: T must be >= 2, got " + std::to_string(T));
    if (!(beta_start > 0.0) || !(beta_end < 1.0) || beta_start > beta_end) {
        throw ConfigError("build_schedule: need 0 < beta_start <= beta_end < 1, got [" +
                          std::to_string(beta_start) + ", " + std::to_string(beta_end) + "]");
    }

    // raw_0 = 1 - sqrt(1) = 0 exactly, so the rescale below keeps alpha_0 = 0
    // and forces alpha_T = raw_T / raw_T = 1.
    std::vector<double> raw(static_cast<size_t>(T) + 1);
    raw[0] = 0.0;
    double abar = 1.0;
    for (int s = 1; s <= T; ++s) {
        const double beta =
            beta_start + (beta_end - beta_start) * static_cast<double>(s - 1) / (T - 1);
        abar *= 1.0 - beta;
        raw[s] = 1.0 - std::sqrt(abar);
    }

    Schedule sched;
    sched.T = T;
    sched.beta_start = beta_start;
    sched.beta_end = beta_end;
    sched.alphas.resize(raw.size());
    const double span = raw[T] - raw[0];
    for (int t = 0; t <= T; ++t) {
        sched.alphas[t] = (raw[t] - raw[0]) / span;
    }
    return sched;
}

double alpha_at(const Schedule& schedule, int t) {
    if (t < 0 || t > schedule.T) {
        throw IndexError("alpha_at: t = " + std::to_string(t) + " outside [0, " +
                         std::to_string(schedule.T) + "]");
    }
    return schedule.alphas[t];
}

} // namespace anoheal
