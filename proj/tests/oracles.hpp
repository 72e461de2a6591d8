// Test-only oracles, independent of the library code paths they check:
// central finite differences for gradients, a classic RK4 stepper for
// energy-conservation checks, and seeded random path generators.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "leastaction/integrator.hpp"
#include "leastaction/path.hpp"
#include "leastaction/random.hpp"
#include "leastaction/systems.hpp"

namespace oracles {

using leastaction::GaussianSampler;
using leastaction::InitialState;
using leastaction::Mat;
using leastaction::Path;
using leastaction::System;

// Central finite differences of action().S over every coordinate, with the
// step scaled by the coordinate magnitude.
inline Mat fd_action_gradient(const System& system, const Path& path, double eps_base = 1e-6) {
    Mat grads(path.points(), path.dim());
    Path work = path;
    for (std::size_t i = 0; i < path.points(); ++i) {
        for (std::size_t k = 0; k < path.dim(); ++k) {
            const double original = work.coords(i, k);
            const double eps = eps_base * std::max(1.0, std::abs(original));
            work.coords(i, k) = original + eps;
            const double s_plus = leastaction::action(work, system).S;
            work.coords(i, k) = original - eps;
            const double s_minus = leastaction::action(work, system).S;
            work.coords(i, k) = original;
            grads(i, k) = (s_plus - s_minus) / (2.0 * eps);
        }
    }
    return grads;
}

// Finite differences for the gas restricted to the slices and pair terms a
// single coordinate can influence: kinetic terms of its own particle at the
// neighbouring slices (plus the duplicated-velocity tail) and the pair
// potentials involving that particle at its own slice. Mathematically the
// same central difference of S, without summing unaffected terms.
inline double fd_gas_gradient_component(const leastaction::LennardJonesGas& gas, const Path& path,
                                        std::size_t row, std::size_t particle, std::size_t axis,
                                        double eps_base = 1e-6) {
    const std::size_t n = path.points();
    const double dt = path.dt;

    auto particle_speed_sq = [&](const Mat& coords, std::size_t slice) {
        const std::size_t s = std::min(slice, n - 2);  // tail duplicates velocity N-2
        const double vx = (coords(s + 1, 2 * particle) - coords(s, 2 * particle)) / dt;
        const double vy = (coords(s + 1, 2 * particle + 1) - coords(s, 2 * particle + 1)) / dt;
        return vx * vx + vy * vy;
    };
    auto local_terms = [&](const Mat& coords) {
        std::vector<std::size_t> slices;
        if (row >= 1) slices.push_back(row - 1);
        if (row <= n - 2) slices.push_back(row);
        if (row >= n - 2) slices.push_back(n - 1);
        double total = 0.0;
        for (std::size_t s : slices) {
            total += 0.5 * gas.m * particle_speed_sq(coords, s) * dt;
        }
        for (std::size_t q = 0; q < gas.n_particles; ++q) {
            if (q == particle) continue;
            const double dx = coords(row, 2 * particle) - coords(row, 2 * q);
            const double dy = coords(row, 2 * particle + 1) - coords(row, 2 * q + 1);
            total -= gas.pair_potential<double>(dx * dx + dy * dy) * dt;  // L = T - V
        }
        return total;
    };

    Mat coords = path.coords;
    const std::size_t col = 2 * particle + axis;
    const double original = coords(row, col);
    const double eps = eps_base * std::max(1.0, std::abs(original));
    coords(row, col) = original + eps;
    const double plus = local_terms(coords);
    coords(row, col) = original - eps;
    const double minus = local_terms(coords);
    return (plus - minus) / (2.0 * eps);
}

inline Mat fd_gas_gradient(const leastaction::LennardJonesGas& gas, const Path& path,
                           double eps_base = 1e-6) {
    Mat grads(path.points(), path.dim());
    for (std::size_t i = 0; i < path.points(); ++i) {
        for (std::size_t p = 0; p < gas.n_particles; ++p) {
            for (std::size_t axis = 0; axis < 2; ++axis) {
                grads(i, 2 * p + axis) = fd_gas_gradient_component(gas, path, i, p, axis, eps_base);
            }
        }
    }
    return grads;
}

// Body-local finite differences for point-mass gravity, mirroring the gas
// oracle. Summing only the terms a coordinate can touch keeps the sun's huge
// kinetic term from swamping the planets' gradients in rounding noise.
inline Mat fd_pointmass_gradient(const leastaction::PointMassGravity& grav, const Path& path,
                                 double eps_base = 1e-6) {
    const std::size_t n = path.points();
    const std::size_t bodies = grav.masses.size();
    const double dt = path.dt;

    auto body_speed_sq = [&](const Mat& coords, std::size_t slice, std::size_t body) {
        const std::size_t s = std::min(slice, n - 2);
        const double vx = (coords(s + 1, 2 * body) - coords(s, 2 * body)) / dt;
        const double vy = (coords(s + 1, 2 * body + 1) - coords(s, 2 * body + 1)) / dt;
        return vx * vx + vy * vy;
    };
    auto local_terms = [&](const Mat& coords, std::size_t row, std::size_t body) {
        std::vector<std::size_t> slices;
        if (row >= 1) slices.push_back(row - 1);
        if (row <= n - 2) slices.push_back(row);
        if (row >= n - 2) slices.push_back(n - 1);
        double total = 0.0;
        for (std::size_t s : slices) {
            total += 0.5 * grav.masses[body] * body_speed_sq(coords, s, body) * dt;
        }
        for (std::size_t q = 0; q < bodies; ++q) {
            if (q == body) continue;
            const double dx = coords(row, 2 * body) - coords(row, 2 * q);
            const double dy = coords(row, 2 * body + 1) - coords(row, 2 * q + 1);
            const double r = std::sqrt(dx * dx + dy * dy);
            // L = T - V with V = -G m m / r, so the pair enters with + sign
            total += grav.grav * grav.masses[body] * grav.masses[q] / r * dt;
        }
        return total;
    };

    Mat grads(n, path.dim());
    Mat coords = path.coords;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t b = 0; b < bodies; ++b) {
            for (std::size_t axis = 0; axis < 2; ++axis) {
                const std::size_t col = 2 * b + axis;
                const double original = coords(i, col);
                const double eps = eps_base * std::max(1.0, std::abs(original));
                coords(i, col) = original + eps;
                const double plus = local_terms(coords, i, b);
                coords(i, col) = original - eps;
                const double minus = local_terms(coords, i, b);
                coords(i, col) = original;
                grads(i, col) = (plus - minus) / (2.0 * eps);
            }
        }
    }
    return grads;
}

// Worst componentwise relative error between gradients, with an absolute
// floor at 1e-9 of the gradient scale so exact zeros compare cleanly.
inline double max_rel_error(const Mat& a, const Mat& b) {
    double scale = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        scale = std::max({scale, std::abs(a.data()[i]), std::abs(b.data()[i])});
    }
    const double floor = std::max(scale * 1e-9, 1e-300);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        const double diff = std::abs(a.data()[i] - b.data()[i]);
        const double denom = std::max({std::abs(a.data()[i]), std::abs(b.data()[i]), floor});
        worst = std::max(worst, diff / denom);
    }
    return worst;
}

// Classic fourth-order Runge-Kutta over (x, v). Independent of the library's
// Euler integrator; used as the fine-integration oracle for energy checks.
// Sampled velocities land in velocities_out when given.
inline Path rk4_integrate(const System& system, const InitialState& state, double dt,
                          std::size_t n_points, std::size_t refinement = 1,
                          Mat* velocities_out = nullptr) {
    const std::size_t d = system.dim();
    const double h = dt / static_cast<double>(refinement);
    Path path{Mat(n_points, d), dt, 0.0};
    if (velocities_out) *velocities_out = Mat(n_points, d);
    std::vector<double> x = state.x0, v = state.v0;
    std::vector<double> ax(d), bx(d), cx(d), dx(d);
    std::vector<double> av(d), bv(d), cv(d), dv(d);
    std::vector<double> tx(d), tv(d);

    for (std::size_t k = 0; k < d; ++k) {
        path.coords(0, k) = x[k];
        if (velocities_out) (*velocities_out)(0, k) = v[k];
    }
    for (std::size_t i = 1; i < n_points; ++i) {
        for (std::size_t sub = 0; sub < refinement; ++sub) {
            system.acceleration(x, v, av);
            for (std::size_t k = 0; k < d; ++k) ax[k] = v[k];
            for (std::size_t k = 0; k < d; ++k) {
                tx[k] = x[k] + 0.5 * h * ax[k];
                tv[k] = v[k] + 0.5 * h * av[k];
            }
            system.acceleration(tx, tv, bv);
            for (std::size_t k = 0; k < d; ++k) bx[k] = tv[k];
            for (std::size_t k = 0; k < d; ++k) {
                tx[k] = x[k] + 0.5 * h * bx[k];
                tv[k] = v[k] + 0.5 * h * bv[k];
            }
            system.acceleration(tx, tv, cv);
            for (std::size_t k = 0; k < d; ++k) cx[k] = tv[k];
            for (std::size_t k = 0; k < d; ++k) {
                tx[k] = x[k] + h * cx[k];
                tv[k] = v[k] + h * cv[k];
            }
            system.acceleration(tx, tv, dv);
            for (std::size_t k = 0; k < d; ++k) dx[k] = tv[k];
            for (std::size_t k = 0; k < d; ++k) {
                x[k] += h / 6.0 * (ax[k] + 2.0 * bx[k] + 2.0 * cx[k] + dx[k]);
                v[k] += h / 6.0 * (av[k] + 2.0 * bv[k] + 2.0 * cv[k] + dv[k]);
            }
        }
        for (std::size_t k = 0; k < d; ++k) {
            path.coords(i, k) = x[k];
            if (velocities_out) (*velocities_out)(i, k) = v[k];
        }
    }
    return path;
}

// Euler-Lagrange consistency check: along the motion that acceleration()
// generates, d/dt (dL/dv) must equal dL/dx. The momentum dL/dv comes from
// central differences of L; its time derivative from RK4 micro-steps around
// the state. Returns the worst componentwise relative error.
inline double el_consistency_error(const System& system, const std::vector<double>& x,
                                   const std::vector<double>& v, double time_eps,
                                   double fd_eps_base = 1e-6) {
    const std::size_t d = system.dim();
    // finite-difference steps keyed to the largest state component so wildly
    // different per-body scales (the sun vs the planets) stay well conditioned
    double x_scale = 1.0, v_scale = 1.0;
    for (std::size_t k = 0; k < d; ++k) {
        x_scale = std::max(x_scale, std::abs(x[k]));
        v_scale = std::max(v_scale, std::abs(v[k]));
    }
    auto lagrangian = [&](const std::vector<double>& xx, const std::vector<double>& vv) {
        std::span<const double> xs{xx.data(), d}, vs{vv.data(), d};
        return system.kinetic<double>(xs, vs) - system.potential<double>(xs);
    };
    auto momentum = [&](const std::vector<double>& xx, const std::vector<double>& vv) {
        std::vector<double> p(d);
        std::vector<double> work = vv;
        for (std::size_t k = 0; k < d; ++k) {
            const double eps = fd_eps_base * v_scale;
            work[k] = vv[k] + eps;
            const double plus = lagrangian(xx, work);
            work[k] = vv[k] - eps;
            const double minus = lagrangian(xx, work);
            work[k] = vv[k];
            p[k] = (plus - minus) / (2.0 * eps);
        }
        return p;
    };

    Mat v_plus, v_minus;
    const Path x_plus = rk4_integrate(system, {x, v}, time_eps, 2, 1, &v_plus);
    const Path x_minus = rk4_integrate(system, {x, v}, -time_eps, 2, 1, &v_minus);
    std::vector<double> xp(d), xm(d), vp(d), vm(d);
    for (std::size_t k = 0; k < d; ++k) {
        xp[k] = x_plus.coords(1, k);
        xm[k] = x_minus.coords(1, k);
        vp[k] = v_plus(1, k);
        vm[k] = v_minus(1, k);
    }
    const std::vector<double> p_plus = momentum(xp, vp);
    const std::vector<double> p_minus = momentum(xm, vm);

    std::vector<double> dl_dx(d);
    std::vector<double> work = x;
    for (std::size_t k = 0; k < d; ++k) {
        const double eps = fd_eps_base * x_scale;
        work[k] = x[k] + eps;
        const double plus = lagrangian(work, v);
        work[k] = x[k] - eps;
        const double minus = lagrangian(work, v);
        work[k] = x[k];
        dl_dx[k] = (plus - minus) / (2.0 * eps);
    }

    double scale = 0.0;
    std::vector<double> p_dot(d);
    for (std::size_t k = 0; k < d; ++k) {
        p_dot[k] = (p_plus[k] - p_minus[k]) / (2.0 * time_eps);
        scale = std::max({scale, std::abs(p_dot[k]), std::abs(dl_dx[k])});
    }
    // components well below the dominant force scale are compared absolutely
    const double floor = std::max(scale * 1e-3, 1e-300);
    double worst = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        const double denom = std::max({std::abs(p_dot[k]), std::abs(dl_dx[k]), floor});
        worst = std::max(worst, std::abs(p_dot[k] - dl_dx[k]) / denom);
    }
    return worst;
}

// Seeded random path with system-appropriate coordinate scales; gravitating
// configurations keep bodies separated to stay off the potential singularity.
inline Path random_valid_path(const System& system, std::size_t n, std::uint64_t seed) {
    GaussianSampler rng(seed);
    const std::size_t d = system.dim();
    Path path{Mat(n, d), system.dt_default(), 0.0};
    const std::string& name = system.name();
    if (name == "three_body" || name == "ephemeris") {
        const bool si_units = name == "ephemeris";
        const double base_radius = si_units ? 1.0e11 : 1.5;
        const double jitter = si_units ? 2.0e9 : 0.1;
        const std::size_t bodies = d / 2;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t b = 0; b < bodies; ++b) {
                const double angle = 2.0 * 3.14159265358979 * static_cast<double>(b) /
                                     static_cast<double>(bodies);
                const double radius = base_radius * (0.5 + 0.5 * static_cast<double>(b));
                path.coords(i, 2 * b) = radius * std::cos(angle) + rng.normal(0.0, jitter);
                path.coords(i, 2 * b + 1) = radius * std::sin(angle) + rng.normal(0.0, jitter);
            }
        }
    } else if (name == "gas") {
        const auto* gas = system.get_if<leastaction::LennardJonesGas>();
        const auto start = leastaction::gas_initial_conditions(*gas, seed);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < d; ++k) {
                path.coords(i, k) = start.x[k] + rng.normal(0.0, 0.1);
            }
        }
    } else {
        // random walk with O(1) velocities regardless of dt; white-noise rows
        // at small dt would mean huge kinetic terms and an ill-conditioned
        // finite-difference comparison
        for (std::size_t k = 0; k < d; ++k) path.coords(0, k) = rng.normal(0.0, 0.5);
        for (std::size_t i = 1; i < n; ++i) {
            for (std::size_t k = 0; k < d; ++k) {
                path.coords(i, k) = path.coords(i - 1, k) + rng.normal(0.0, 0.8 * path.dt);
            }
        }
    }
    return path;
}

inline double mean(const std::vector<double>& xs) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

inline double variance(const std::vector<double>& xs) {
    const double mu = mean(xs);
    double sum = 0.0;
    for (double x : xs) sum += (x - mu) * (x - mu);
    return sum / static_cast<double>(xs.size());
}

inline double max_abs(const Mat& m) {
    double worst = 0.0;
    for (double v : m.data()) worst = std::max(worst, std::abs(v));
    return worst;
}

}  // namespace oracles
