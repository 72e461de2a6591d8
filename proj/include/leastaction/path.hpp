#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "leastaction/autodiff.hpp"
#include "leastaction/errors.hpp"
#include "leastaction/systems.hpp"

namespace leastaction {

// Row-major dense matrix. Rows are time slices, columns generalized
// coordinates.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Mat& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    friend bool operator==(const Mat&, const Mat&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Discretized trajectory: N coordinate rows on a uniform time grid.
struct Path {
    Mat coords;       // N x D generalized coordinates
    double dt = 0.0;  // slice duration, seconds
    double t0 = 0.0;  // start time, seconds

    std::size_t points() const { return coords.rows(); }
    std::size_t dim() const { return coords.cols(); }
    double time_at(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
};

// dS/dx with rows zeroed where pinned.
struct PathGradient {
    Mat grads;                     // N x D
    std::vector<bool> pinned_mask; // N flags, true = row forced to zero
};

// Action split into its kinetic and potential time sums.
struct ActionBreakdown {
    double S = 0.0;      // J s
    double t_sum = 0.0;  // J s
    double v_sum = 0.0;  // J s
};

inline void validate(const Path& path) {
    if (path.points() < 3) {
        throw InvalidPathError("path needs at least 3 points, got " +
                               std::to_string(path.points()));
    }
    if (!(path.dt > 0.0) || !std::isfinite(path.dt)) {
        throw InvalidPathError("path dt must be positive and finite");
    }
    for (double c : path.coords.data()) {
        if (!std::isfinite(c)) throw InvalidPathError("path has a non-finite coordinate");
    }
}

inline void validate(const Path& path, const System& system) {
    validate(path);
    if (path.dim() != system.dim()) {
        throw InvalidPathError("path dimension " + std::to_string(path.dim()) +
                               " does not match system " + system.name() + " dimension " +
                               std::to_string(system.dim()));
    }
}

namespace detail {

// Finite-difference slice velocities; the final slice reuses the previous
// one (xdot_N = xdot_{N-1}). Scalar-generic so tape recording shares the
// arithmetic of the plain evaluation.
template <class S>
std::vector<S> slice_velocities(std::span<const S> coords, std::size_t n, std::size_t d,
                                double dt) {
    std::vector<S> vel;
    vel.reserve(n * d);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) {
            vel.push_back((coords[(i + 1) * d + k] - coords[i * d + k]) / dt);
        }
    }
    for (std::size_t k = 0; k < d; ++k) vel.push_back(vel[(n - 2) * d + k]);
    return vel;
}

template <class S>
struct ActionTerms {
    S t_acc;                      // sum of slice kinetic energies (before * dt)
    S v_acc;                      // sum of slice potential energies (before * dt)
    std::vector<S> slice_energy;  // T_i + V_i per slice, joules
};

// Canonical left-to-right slice sum. Domain errors from the system are
// rethrown with the slice index attached.
template <class S>
ActionTerms<S> action_terms(const System& system, std::span<const S> coords, std::size_t n,
                            std::size_t d, double dt) {
    const std::vector<S> vel = slice_velocities(coords, n, d, dt);
    ActionTerms<S> terms{S(0.0), S(0.0), {}};
    terms.slice_energy.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::span<const S> x{coords.data() + i * d, d};
        std::span<const S> v{vel.data() + i * d, d};
        try {
            const S t_i = system.kinetic(x, v);
            const S v_i = system.potential(x);
            terms.t_acc = terms.t_acc + t_i;
            terms.v_acc = terms.v_acc + v_i;
            terms.slice_energy.push_back(t_i + v_i);
        } catch (const DomainError& e) {
            throw DomainError("slice " + std::to_string(i) + ": " + e.what());
        }
    }
    return terms;
}

// Unmasked gradient of the discrete action.
inline Mat raw_action_gradient(const Path& path, const System& system) {
    const std::size_t n = path.points();
    const std::size_t d = path.dim();
    ad::Tape tape;
    tape.reserve(n * d * 12 + 256);
    ad::TapeScope scope(tape);
    std::vector<ad::Rev> coords;
    coords.reserve(n * d);
    for (double c : path.coords.data()) coords.emplace_back(c);
    const auto terms = action_terms<ad::Rev>(system, coords, n, d, path.dt);
    const ad::Rev action = (terms.t_acc - terms.v_acc) * path.dt;
    std::vector<double> adjoint;
    tape.backward(action.idx, adjoint);
    Mat grads(n, d);
    for (std::size_t i = 0; i < n * d; ++i) grads.data()[i] = adjoint[i];
    return grads;
}

}  // namespace detail

// Finite-difference velocities, one row per slice. Row N-1 duplicates row N-2.
inline Mat velocities(const Path& path) {
    validate(path);
    const std::size_t n = path.points();
    const std::size_t d = path.dim();
    Mat vel(n, d);
    const auto flat = detail::slice_velocities<double>(path.coords.data(), n, d, path.dt);
    vel.data() = flat;
    return vel;
}

// Discrete action S = sum_i [T_i - V_i] dt over all N slices, with the
// kinetic and potential sums reported separately.
inline ActionBreakdown action(const Path& path, const System& system) {
    validate(path, system);
    const auto terms = detail::action_terms<double>(system, path.coords.data(), path.points(),
                                                    path.dim(), path.dt);
    return ActionBreakdown{(terms.t_acc - terms.v_acc) * path.dt, terms.t_acc * path.dt,
                           terms.v_acc * path.dt};
}

// Exact derivative of action().S with respect to every coordinate, with rows
// listed in `pinned` zeroed after the computation. `pinned` must cover both
// endpoints.
inline PathGradient grad_action(const Path& path, const System& system,
                                const std::vector<std::size_t>& pinned) {
    validate(path, system);
    const std::size_t n = path.points();
    std::vector<bool> mask(n, false);
    for (std::size_t row : pinned) {
        if (row >= n) throw ConfigError("pinned row " + std::to_string(row) + " out of range");
        mask[row] = true;
    }
    if (!mask[0] || !mask[n - 1]) {
        throw ConfigError("pinned set must contain both endpoints {0, N-1}");
    }
    Mat grads = detail::raw_action_gradient(path, system);
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        for (std::size_t k = 0; k < path.dim(); ++k) grads(i, k) = 0.0;
    }
    return PathGradient{std::move(grads), std::move(mask)};
}

// Unpinned action gradient at the interior rows, one row per interior point.
// Near-zero rows certify a discretely stationary path.
inline Mat discrete_el_residual(const Path& path, const System& system) {
    validate(path, system);
    const Mat grads = detail::raw_action_gradient(path, system);
    const std::size_t n = path.points();
    const std::size_t d = path.dim();
    Mat residual(n - 2, d);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) residual(i - 1, k) = grads(i, k);
    }
    return residual;
}

// Total energy T + V at each slice, using the same velocity rule as action().
inline std::vector<double> energy_series(const Path& path, const System& system) {
    validate(path, system);
    const auto terms = detail::action_terms<double>(system, path.coords.data(), path.points(),
                                                    path.dim(), path.dt);
    return terms.slice_energy;
}

}  // namespace leastaction
