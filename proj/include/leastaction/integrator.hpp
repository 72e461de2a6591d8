#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "leastaction/errors.hpp"
#include "leastaction/path.hpp"
#include "leastaction/systems.hpp"

namespace leastaction {

struct InitialState {
    std::vector<double> x0;
    std::vector<double> v0;
};

inline void validate(const InitialState& state, const System& system) {
    if (state.x0.size() != system.dim() || state.v0.size() != system.dim()) {
        throw ConfigError("initial state dimension does not match system " + system.name());
    }
    for (double c : state.x0)
        if (!std::isfinite(c)) throw ConfigError("initial position is not finite");
    for (double c : state.v0)
        if (!std::isfinite(c)) throw ConfigError("initial velocity is not finite");
}

// Explicit Euler baseline, integrated at dt / refinement and sampled every
// refinement-th state:
//   v <- gamma (v + a(x, v) dt'),  x <- x + v_old dt'
// gamma is the system's dissipation factor (1 everywhere except damped gas
// runs). refinement = 1 is the plain textbook update.
inline Path substep_integrate(const System& system, const InitialState& state, double dt,
                              std::size_t n_points, std::size_t refinement, double t0 = 0.0) {
    validate(state, system);
    if (!(dt > 0.0)) throw ConfigError("integration dt must be positive");
    if (n_points < 3) throw ConfigError("need at least 3 path points");
    if (refinement < 1) throw ConfigError("refinement must be >= 1");

    const std::size_t d = system.dim();
    const double fine_dt = dt / static_cast<double>(refinement);
    const double gamma = system.dissipation_factor();

    Path path{Mat(n_points, d), dt, t0};
    std::vector<double> x = state.x0;
    std::vector<double> v = state.v0;
    std::vector<double> accel(d, 0.0);

    for (std::size_t k = 0; k < d; ++k) path.coords(0, k) = x[k];
    for (std::size_t i = 1; i < n_points; ++i) {
        for (std::size_t sub = 0; sub < refinement; ++sub) {
            system.acceleration(x, v, accel);
            for (std::size_t k = 0; k < d; ++k) {
                const double v_old = v[k];
                v[k] = gamma * (v[k] + accel[k] * fine_dt);
                x[k] += v_old * fine_dt;
            }
            system.post_step(x, v);
        }
        for (std::size_t k = 0; k < d; ++k) {
            if (!std::isfinite(x[k]) || !std::isfinite(v[k])) {
                throw DivergenceError("integration diverged at step " + std::to_string(i));
            }
            path.coords(i, k) = x[k];
        }
    }
    return path;
}

inline Path euler_integrate(const System& system, const InitialState& state, double dt,
                            std::size_t n_points, double t0 = 0.0) {
    return substep_integrate(system, state, dt, n_points, 1, t0);
}

}  // namespace leastaction
