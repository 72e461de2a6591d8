#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "leastaction/autodiff.hpp"
#include "leastaction/errors.hpp"
#include "leastaction/random.hpp"

namespace leastaction {

using ad::value;

// ---------------------------------------------------------------------------
// Concrete systems. Kinetic and potential energies are scalar-generic so the
// same expression tree is evaluated for plain doubles and for tape-recorded
// scalars; acceleration() is the analytic equation of motion used by the
// Euler baseline.
// ---------------------------------------------------------------------------

// Body in free fall along a vertical axis, V = m g x with x measuring height,
// so the equation of motion is xdd = -g.
struct FreeBody {
    double m = 1.0;
    double g = 1.0;

    std::size_t dim() const { return 1; }

    template <class S>
    S kinetic(std::span<const S> /*x*/, std::span<const S> v) const {
        return (0.5 * m) * (v[0] * v[0]);
    }

    template <class S>
    S potential(std::span<const S> x) const {
        return (m * g) * x[0];
    }

    void acceleration(std::span<const double> /*x*/, std::span<const double> /*v*/,
                      std::span<double> out) const {
        out[0] = -g;
    }
};

// Plane pendulum, angle measured from the downward vertical.
struct Pendulum {
    double m = 1.0;
    double l = 1.0;
    double g = 1.0;

    std::size_t dim() const { return 1; }

    template <class S>
    S kinetic(std::span<const S> /*x*/, std::span<const S> v) const {
        return (0.5 * m * l * l) * (v[0] * v[0]);
    }

    template <class S>
    S potential(std::span<const S> x) const {
        using std::cos;
        return (m * g * l) * (1.0 - cos(x[0]));
    }

    void acceleration(std::span<const double> x, std::span<const double> /*v*/,
                      std::span<double> out) const {
        out[0] = -(g / l) * std::sin(x[0]);
    }
};

// Double pendulum in the (theta1, theta2) angle coordinates. The equations of
// motion follow from the Lagrangian by eliminating the coupled angular
// accelerations:
//   thetai'' = (f_i - alpha_i f_j) / (1 - alpha_1 alpha_2)
struct DoublePendulum {
    double m1 = 1.0;
    double m2 = 1.0;
    double l1 = 1.0;
    double l2 = 1.0;
    double g = 1.0;

    std::size_t dim() const { return 2; }

    template <class S>
    S kinetic(std::span<const S> x, std::span<const S> v) const {
        using std::cos;
        return (0.5 * (m1 + m2) * l1 * l1) * (v[0] * v[0]) +
               (0.5 * m2 * l2 * l2) * (v[1] * v[1]) +
               (m2 * l1 * l2) * (v[0] * v[1]) * cos(x[0] - x[1]);
    }

    template <class S>
    S potential(std::span<const S> x) const {
        using std::cos;
        return -((m1 + m2) * g * l1) * cos(x[0]) - (m2 * g * l2) * cos(x[1]);
    }

    void acceleration(std::span<const double> x, std::span<const double> v,
                      std::span<double> out) const {
        const double delta = x[0] - x[1];
        const double cd = std::cos(delta);
        const double sd = std::sin(delta);
        const double mass_ratio = m2 / (m1 + m2);
        const double a1 = (l2 / l1) * mass_ratio * cd;
        const double a2 = (l1 / l2) * cd;
        const double denom = 1.0 - a1 * a2;
        if (std::abs(denom) < 1e-12) {
            throw DomainError("double pendulum: singular denominator 1 - a1*a2 at state (" +
                              std::to_string(x[0]) + ", " + std::to_string(x[1]) + ")");
        }
        const double f1 = -(l2 / l1) * mass_ratio * v[1] * v[1] * sd - (g / l1) * std::sin(x[0]);
        const double f2 = (l1 / l2) * v[0] * v[0] * sd - (g / l2) * std::sin(x[1]);
        out[0] = (f1 - a1 * f2) / denom;
        out[1] = (f2 - a2 * f1) / denom;
    }
};

// Point masses interacting through pairwise Newtonian gravity in the plane.
// Coordinates are laid out [x0, y0, x1, y1, ...]. Used both for the
// natural-unit three body problem and the SI-unit planetary configuration.
struct PointMassGravity {
    std::vector<double> masses;
    double grav = 1.0;

    std::size_t dim() const { return 2 * masses.size(); }

    template <class S>
    S kinetic(std::span<const S> /*x*/, std::span<const S> v) const {
        S total = S(0.0);
        for (std::size_t i = 0; i < masses.size(); ++i) {
            total = total + (0.5 * masses[i]) * (v[2 * i] * v[2 * i] + v[2 * i + 1] * v[2 * i + 1]);
        }
        return total;
    }

    // V = -sum_{i<j} G m_i m_j / r_ij
    template <class S>
    S potential(std::span<const S> x) const {
        using std::sqrt;
        S total = S(0.0);
        for (std::size_t i = 0; i < masses.size(); ++i) {
            for (std::size_t j = i + 1; j < masses.size(); ++j) {
                const S dx = x[2 * i] - x[2 * j];
                const S dy = x[2 * i + 1] - x[2 * j + 1];
                const S r2 = dx * dx + dy * dy;
                if (value(r2) <= 0.0) {
                    throw DomainError("gravity: bodies " + std::to_string(i) + " and " +
                                      std::to_string(j) + " coincide");
                }
                total = total - (grav * masses[i] * masses[j]) / sqrt(r2);
            }
        }
        return total;
    }

    void acceleration(std::span<const double> x, std::span<const double> /*v*/,
                      std::span<double> out) const {
        const std::size_t n = masses.size();
        for (std::size_t k = 0; k < 2 * n; ++k) out[k] = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double dx = x[2 * i] - x[2 * j];
                const double dy = x[2 * i + 1] - x[2 * j + 1];
                const double r2 = dx * dx + dy * dy;
                if (r2 <= 0.0) {
                    throw DomainError("gravity: bodies " + std::to_string(i) + " and " +
                                      std::to_string(j) + " coincide");
                }
                const double inv_r3 = 1.0 / (r2 * std::sqrt(r2));
                // attraction of i towards j and vice versa
                out[2 * i] -= grav * masses[j] * dx * inv_r3;
                out[2 * i + 1] -= grav * masses[j] * dy * inv_r3;
                out[2 * j] += grav * masses[i] * dx * inv_r3;
                out[2 * j + 1] += grav * masses[i] * dy * inv_r3;
            }
        }
    }
};

// 2D gas of identical particles with a capped Lennard-Jones pair potential.
// Below r_cap the potential continues linearly with the slope at the seam, so
// value and first derivative are continuous and core forces stay bounded.
// Coordinates are [x0, y0, x1, y1, ...].
struct LennardJonesGas {
    std::size_t n_particles = 50;
    double m = 1.0;
    double epsilon = 1.0;
    double sigma = 1.0;
    double r_cap = 0.9;
    std::array<double, 2> box_min{0.0, 0.0};
    std::array<double, 2> box_max{48.0, 23.0};
    double dissipation = 0.0;  // per-step velocity damping for baselines, 0 = none

    std::size_t dim() const { return 2 * n_particles; }

    template <class S>
    S pair_potential(const S& r2) const {
        const double rc2 = r_cap * r_cap;
        if (value(r2) >= rc2) {
            const S s2 = (sigma * sigma) / r2;
            const S s6 = s2 * s2 * s2;
            return (4.0 * epsilon) * (s6 * s6 - s6);
        }
        // linear continuation: V(rc) + V'(rc) (r - rc)
        using std::sqrt;
        const S r = sqrt(r2);
        return cap_value() + cap_slope() * (r - r_cap);
    }

    // F(r) = -dV/dr, positive = repulsive
    double pair_force(double r) const {
        if (r >= r_cap) {
            const double s6 = std::pow(sigma / r, 6.0);
            return (4.0 * epsilon / r) * (12.0 * s6 * s6 - 6.0 * s6);
        }
        return -cap_slope();
    }

    double cap_value() const {
        const double s6 = std::pow(sigma / r_cap, 6.0);
        return 4.0 * epsilon * (s6 * s6 - s6);
    }
    double cap_slope() const {
        const double s6 = std::pow(sigma / r_cap, 6.0);
        return -(4.0 * epsilon / r_cap) * (12.0 * s6 * s6 - 6.0 * s6);
    }

    template <class S>
    S kinetic(std::span<const S> /*x*/, std::span<const S> v) const {
        S total = S(0.0);
        for (std::size_t i = 0; i < n_particles; ++i) {
            total = total + (0.5 * m) * (v[2 * i] * v[2 * i] + v[2 * i + 1] * v[2 * i + 1]);
        }
        return total;
    }

    template <class S>
    S potential(std::span<const S> x) const {
        S total = S(0.0);
        for (std::size_t i = 0; i < n_particles; ++i) {
            for (std::size_t j = i + 1; j < n_particles; ++j) {
                const S dx = x[2 * i] - x[2 * j];
                const S dy = x[2 * i + 1] - x[2 * j + 1];
                total = total + pair_potential(dx * dx + dy * dy);
            }
        }
        return total;
    }

    void acceleration(std::span<const double> x, std::span<const double> /*v*/,
                      std::span<double> out) const {
        for (std::size_t k = 0; k < 2 * n_particles; ++k) out[k] = 0.0;
        for (std::size_t i = 0; i < n_particles; ++i) {
            for (std::size_t j = i + 1; j < n_particles; ++j) {
                const double dx = x[2 * i] - x[2 * j];
                const double dy = x[2 * i + 1] - x[2 * j + 1];
                const double r = std::sqrt(dx * dx + dy * dy);
                if (r <= 0.0) {
                    throw DomainError("gas: particles " + std::to_string(i) + " and " +
                                      std::to_string(j) + " coincide");
                }
                const double f_over_r = pair_force(r) / r;  // along the separation axis
                out[2 * i] += f_over_r * dx / m;
                out[2 * i + 1] += f_over_r * dy / m;
                out[2 * j] -= f_over_r * dx / m;
                out[2 * j + 1] -= f_over_r * dy / m;
            }
        }
    }

    // Reflective box walls, applied by the baseline integrator after a step.
    // Folds repeatedly so an overshoot past several box widths still lands
    // inside.
    void reflect(std::span<double> x, std::span<double> v) const {
        for (std::size_t i = 0; i < n_particles; ++i) {
            for (std::size_t axis = 0; axis < 2; ++axis) {
                double& q = x[2 * i + axis];
                double& u = v[2 * i + axis];
                if (!std::isfinite(q)) continue;  // divergence check reports it
                while (q < box_min[axis] || q > box_max[axis]) {
                    if (q < box_min[axis]) {
                        q = 2.0 * box_min[axis] - q;
                    } else {
                        q = 2.0 * box_max[axis] - q;
                    }
                    u = -u;
                }
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Type-erased system handle carrying the per-system experiment constants
// (perturbation noise, time step, learning rate).
// ---------------------------------------------------------------------------

class System {
public:
    using Impl = std::variant<FreeBody, Pendulum, DoublePendulum, PointMassGravity, LennardJonesGas>;

    System(Impl impl, std::string name, std::vector<double> masses, double noise_sigma,
           double dt_default, double lr_default)
        : impl_(std::move(impl)),
          name_(std::move(name)),
          masses_(std::move(masses)),
          noise_sigma_(noise_sigma),
          dt_default_(dt_default),
          lr_default_(lr_default) {
        for (double mass : masses_) {
            if (!(mass > 0.0)) throw ConfigError("system " + name_ + ": masses must be positive");
        }
        if (!(dt_default_ > 0.0)) throw ConfigError("system " + name_ + ": dt must be positive");
        if (!(lr_default_ > 0.0))
            throw ConfigError("system " + name_ + ": learning rate must be positive");
        if (noise_sigma_ < 0.0)
            throw ConfigError("system " + name_ + ": noise sigma must be non-negative");
    }

    const std::string& name() const { return name_; }
    const std::vector<double>& masses() const { return masses_; }
    double noise_sigma() const { return noise_sigma_; }
    double dt_default() const { return dt_default_; }
    double lr_default() const { return lr_default_; }

    std::size_t dim() const {
        return std::visit([](const auto& sys) { return sys.dim(); }, impl_);
    }

    template <class S>
    S kinetic(std::span<const S> x, std::span<const S> v) const {
        return std::visit([&](const auto& sys) { return sys.template kinetic<S>(x, v); }, impl_);
    }

    template <class S>
    S potential(std::span<const S> x) const {
        return std::visit([&](const auto& sys) { return sys.template potential<S>(x); }, impl_);
    }

    void acceleration(std::span<const double> x, std::span<const double> v,
                      std::span<double> out) const {
        std::visit([&](const auto& sys) { sys.acceleration(x, v, out); }, impl_);
    }

    // Velocity damping factor applied per baseline step (1 = conservative).
    double dissipation_factor() const {
        if (const auto* gas = std::get_if<LennardJonesGas>(&impl_)) {
            return 1.0 - gas->dissipation;
        }
        return 1.0;
    }

    // Post-step state fixup for the baseline integrator (gas wall bounce).
    void post_step(std::span<double> x, std::span<double> v) const {
        if (const auto* gas = std::get_if<LennardJonesGas>(&impl_)) {
            gas->reflect(x, v);
        }
    }

    template <class T>
    const T* get_if() const {
        return std::get_if<T>(&impl_);
    }

private:
    Impl impl_;
    std::string name_;
    std::vector<double> masses_;
    double noise_sigma_;
    double dt_default_;
    double lr_default_;
};

// ---------------------------------------------------------------------------
// Factories with the per-system experiment constants. The four toy/chaotic
// systems use natural units (all masses, lengths and couplings equal to one).
// ---------------------------------------------------------------------------

inline System make_free_body() {
    return System(FreeBody{}, "free_body", {1.0}, 1.5, 0.25, 1.0);
}

inline System make_pendulum() {
    return System(Pendulum{}, "pendulum", {1.0}, 0.2, 1.0, 5e-2);
}

inline System make_double_pendulum() {
    return System(DoublePendulum{}, "double_pendulum", {1.0, 1.0}, 0.6, 0.06, 1e-2);
}

inline System make_three_body() {
    PointMassGravity grav;
    grav.masses = {1.0, 1.0, 1.0};
    grav.grav = 1.0;
    return System(std::move(grav), "three_body", {1.0, 1.0, 1.0}, 3e-2, 0.5, 2e-4);
}

inline System make_gas(LennardJonesGas gas = {}) {
    if (!(gas.epsilon > 0.0) || !(gas.sigma > 0.0) || !(gas.r_cap > 0.0)) {
        throw ConfigError("gas: epsilon, sigma and r_cap must be positive");
    }
    if (!(gas.r_cap < std::pow(2.0, 1.0 / 6.0) * gas.sigma)) {
        throw ConfigError("gas: r_cap must lie on the repulsive wall, below 2^(1/6) sigma");
    }
    if (gas.dissipation < 0.0 || gas.dissipation > 1.0) {
        throw ConfigError("gas: dissipation must lie in [0, 1]");
    }
    std::vector<double> masses(gas.n_particles, gas.m);
    return System(std::move(gas), "gas", std::move(masses), 1e-2, 0.5, 1e-4);
}

// SI-unit gravitational constant for the planetary configuration.
inline constexpr double kGravitationalConstantSI = 6.674e-11;

inline System make_ephemeris(std::vector<double> masses_kg,
                             double grav = kGravitationalConstantSI) {
    PointMassGravity grav_sys;
    grav_sys.masses = masses_kg;
    grav_sys.grav = grav;
    return System(std::move(grav_sys), "ephemeris", std::move(masses_kg), 2e10, 86400.0, 1e9);
}

inline System system_by_name(const std::string& name) {
    if (name == "free_body") return make_free_body();
    if (name == "pendulum") return make_pendulum();
    if (name == "double_pendulum") return make_double_pendulum();
    if (name == "three_body") return make_three_body();
    if (name == "gas") return make_gas();
    throw ConfigError("unknown system: " + name +
                      " (ephemeris systems are built from an ephemeris file)");
}

// Jittered-lattice gas start state: particles on a rectangular lattice with
// seeded positional jitter and small Gaussian velocities. The default spacing
// keeps the pair forces in the shallow attractive tail, where the explicit
// Euler baseline is stable at the gas time step.
struct GasStart {
    std::vector<double> x;
    std::vector<double> v;
};

inline GasStart gas_initial_conditions(const LennardJonesGas& gas, std::uint64_t seed,
                                       double lattice_spacing = 5.0, double jitter = 0.05,
                                       double velocity_sigma = 0.01) {
    GasStart start;
    start.x.resize(2 * gas.n_particles);
    start.v.resize(2 * gas.n_particles);
    GaussianSampler rng(seed);
    const std::size_t cols = 10;
    for (std::size_t i = 0; i < gas.n_particles; ++i) {
        const double cx = gas.box_min[0] + 1.5 + lattice_spacing * static_cast<double>(i % cols);
        const double cy = gas.box_min[1] + 1.5 + lattice_spacing * static_cast<double>(i / cols);
        start.x[2 * i] = cx + rng.normal(0.0, jitter);
        start.x[2 * i + 1] = cy + rng.normal(0.0, jitter);
        start.v[2 * i] = rng.normal(0.0, velocity_sigma);
        start.v[2 * i + 1] = rng.normal(0.0, velocity_sigma);
    }
    return start;
}

}  // namespace leastaction
