// Shared synthetic fixtures: a five-body inner solar system integrated from
// circular-orbit initial conditions in the zero-total-momentum frame, sampled
// at one day, used by the ephemeris tests and the acceptance suite.
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "leastaction/ephemeris.hpp"
#include "leastaction/systems.hpp"
#include "oracles.hpp"

namespace fixtures {

struct SolarBody {
    const char* name;
    double mass_kg;
    double orbit_radius_m;  // 0 for the sun
    double phase_rad;
};

inline const std::vector<SolarBody>& solar_bodies() {
    static const std::vector<SolarBody> bodies = {
        {"sun", 1.989e30, 0.0, 0.0},
        {"mercury", 3.301e23, 5.79e10, 0.4},
        {"venus", 4.867e24, 1.082e11, 2.3},
        {"earth", 5.972e24, 1.496e11, 4.1},
        {"mars", 6.417e23, 2.279e11, 5.6},
    };
    return bodies;
}

inline leastaction::InitialState solar_initial_state() {
    const auto& bodies = solar_bodies();
    const double sun_mass = bodies[0].mass_kg;
    leastaction::InitialState state;
    state.x0.assign(2 * bodies.size(), 0.0);
    state.v0.assign(2 * bodies.size(), 0.0);
    double px = 0.0, py = 0.0;  // planet momentum, cancelled by the sun
    for (std::size_t b = 1; b < bodies.size(); ++b) {
        const SolarBody& body = bodies[b];
        const double speed =
            std::sqrt(leastaction::kGravitationalConstantSI * sun_mass / body.orbit_radius_m);
        state.x0[2 * b] = body.orbit_radius_m * std::cos(body.phase_rad);
        state.x0[2 * b + 1] = body.orbit_radius_m * std::sin(body.phase_rad);
        state.v0[2 * b] = -speed * std::sin(body.phase_rad);
        state.v0[2 * b + 1] = speed * std::cos(body.phase_rad);
        px += body.mass_kg * state.v0[2 * b];
        py += body.mass_kg * state.v0[2 * b + 1];
    }
    state.v0[0] = -px / sun_mass;
    state.v0[1] = -py / sun_mass;
    return state;
}

// Daily samples over `days` days (days + 1 rows), integrated with the RK4
// oracle at 64 substeps per day so the tabulated trajectory is an accurate
// solution of the five-body dynamics.
inline leastaction::EphemerisTable synthetic_ephemeris_table(std::size_t days) {
    const auto& bodies = solar_bodies();
    std::vector<double> masses;
    for (const SolarBody& b : bodies) masses.push_back(b.mass_kg);
    const leastaction::System system = leastaction::make_ephemeris(masses);

    leastaction::Mat velocities;
    const leastaction::Path orbit = oracles::rk4_integrate(system, solar_initial_state(), 86400.0,
                                                           days + 1, 64, &velocities);

    leastaction::EphemerisTable table;
    table.epoch_jd = 2459580.5;
    for (std::size_t b = 0; b < bodies.size(); ++b) {
        table.bodies.push_back({bodies[b].name, bodies[b].mass_kg});
        table.series.emplace_back();
        for (std::size_t d = 0; d <= days; ++d) {
            leastaction::EphemerisSample sample;
            sample.t_days = static_cast<double>(d);
            sample.position = {orbit.coords(d, 2 * b), orbit.coords(d, 2 * b + 1), 0.0};
            sample.velocity = {velocities(d, 2 * b), velocities(d, 2 * b + 1), 0.0};
            table.series[b].push_back(sample);
        }
    }
    return table;
}

}  // namespace fixtures
