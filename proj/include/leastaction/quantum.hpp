#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <iostream>
#include <numbers>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "leastaction/errors.hpp"
#include "leastaction/io.hpp"

namespace leastaction {

// Uniform 1-D spatial grid for the discretized propagator. hbar is a free
// parameter: sweeping it downward moves the simulation towards the classical
// limit.
struct SpatialGrid {
    std::size_t n_points = 128;
    double x_min = 0.0;
    double x_max = 1.0;
    double dt = 0.01;
    double mass = 1.0;
    double hbar = 1.0;
    std::function<double(double)> potential;  // empty = free particle

    double dx() const {
        return n_points > 1 ? (x_max - x_min) / static_cast<double>(n_points - 1) : 1.0;
    }
    double x(std::size_t j) const { return x_min + static_cast<double>(j) * dx(); }
    double potential_at(double pos) const { return potential ? potential(pos) : 0.0; }
};

inline void validate(const SpatialGrid& grid) {
    if (grid.n_points < 1) throw ConfigError("grid needs at least one point");
    if (grid.n_points > 1 && !(grid.x_max > grid.x_min)) {
        throw ConfigError("grid needs x_max > x_min");
    }
    if (!(grid.dt > 0.0)) throw ConfigError("grid dt must be positive");
    if (!(grid.hbar > 0.0)) throw ConfigError("grid hbar must be positive");
    if (!(grid.mass > 0.0)) throw ConfigError("grid mass must be positive");
}

// N x N matrix of pure phases exp(i S_ab / hbar), S_ab the action of the
// linear path from grid point b to grid point a over one time slice.
struct PhaseActionKernel {
    std::vector<std::complex<double>> entries;  // row-major, row = endpoint
    SpatialGrid grid;

    std::size_t size() const { return grid.n_points; }
    std::complex<double> operator()(std::size_t a, std::size_t b) const {
        return entries[a * grid.n_points + b];
    }
};

struct WaveFunction {
    std::vector<std::complex<double>> amplitudes;
    SpatialGrid grid;

    double norm_sq() const {
        double sum = 0.0;
        for (const auto& amp : amplitudes) sum += std::norm(amp);
        return sum * grid.dx();
    }
    // min_norm guards against renormalizing pure cancellation residue.
    void normalize(double min_norm = 0.0) {
        const double nrm = std::sqrt(norm_sq());
        if (!(nrm > min_norm) || !std::isfinite(nrm)) {
            throw DivergenceError("wave function norm collapsed");
        }
        for (auto& amp : amplitudes) amp /= nrm;
    }
    double expectation_x() const {
        double weighted = 0.0, total = 0.0;
        for (std::size_t j = 0; j < amplitudes.size(); ++j) {
            const double p = std::norm(amplitudes[j]);
            weighted += p * grid.x(j);
            total += p;
        }
        return weighted / total;
    }
};

// Phase of the one-step linear path between grid points b -> a. The kinetic
// part depends only on the integer offset a - b, which keeps the free-particle
// kernel exactly Toeplitz; the potential is sampled at the path midpoint.
inline double kernel_phase(const SpatialGrid& grid, std::size_t a, std::size_t b) {
    const double offset = static_cast<double>(static_cast<std::ptrdiff_t>(a) -
                                              static_cast<std::ptrdiff_t>(b));
    const double displacement = offset * grid.dx();
    const double speed = displacement / grid.dt;
    const double midpoint = 0.5 * (grid.x(a) + grid.x(b));
    const double v_mid = grid.potential_at(midpoint);
    if (!std::isfinite(v_mid)) {
        throw DomainError("potential is not finite at x = " + std::to_string(midpoint));
    }
    const double action = grid.dt * (0.5 * grid.mass * speed * speed - v_mid);
    return action / grid.hbar;
}

inline PhaseActionKernel build_kernel(const SpatialGrid& grid) {
    validate(grid);
    const std::size_t n = grid.n_points;
    PhaseActionKernel kernel{std::vector<std::complex<double>>(n * n), grid};
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            const double phase = kernel_phase(grid, a, b);
            kernel.entries[a * n + b] = {std::cos(phase), std::sin(phase)};
        }
    }
    return kernel;
}

inline bool packet_under_resolved(const SpatialGrid& grid, double width) {
    return width < 2.0 * grid.dx();
}

// Normalized Gaussian packet exp(-(x-c)^2 / (4 w^2)) exp(i p x / hbar).
inline WaveFunction gaussian_packet(const SpatialGrid& grid, double center, double width,
                                    double momentum) {
    validate(grid);
    if (!(width > 0.0)) throw ConfigError("packet width must be positive");
    if (center < grid.x_min || center > grid.x_max) {
        throw ConfigError("packet center lies outside the grid");
    }
    if (packet_under_resolved(grid, width)) {
        std::cerr << "warning: packet width " << width << " is under-resolved (dx = " << grid.dx()
                  << ")\n";
    }
    WaveFunction psi{std::vector<std::complex<double>>(grid.n_points), grid};
    for (std::size_t j = 0; j < grid.n_points; ++j) {
        const double pos = grid.x(j);
        const double envelope = std::exp(-(pos - center) * (pos - center) / (4.0 * width * width));
        const double phase = momentum * pos / grid.hbar;
        psi.amplitudes[j] = envelope * std::complex<double>{std::cos(phase), std::sin(phase)};
    }
    psi.normalize();
    return psi;
}

struct PropagationResult {
    WaveFunction final_state;
    std::vector<std::pair<std::size_t, WaveFunction>> snapshots;  // (step, state)
};

// psi <- K psi then renormalize, repeated `steps` times. Row a of K sums over
// the start points b. Snapshots include step 0 when requested.
inline PropagationResult propagate(const WaveFunction& psi, const PhaseActionKernel& kernel,
                                   std::size_t steps, std::size_t snapshot_every = 0) {
    if (psi.amplitudes.size() != kernel.size()) {
        throw ConfigError("wave function and kernel grids differ");
    }
    const std::size_t n = kernel.size();
    PropagationResult result{psi, {}};
    if (snapshot_every > 0) result.snapshots.emplace_back(0, psi);
    std::vector<std::complex<double>> next(n);
    for (std::size_t step = 1; step <= steps; ++step) {
        for (std::size_t a = 0; a < n; ++a) {
            std::complex<double> sum{0.0, 0.0};
            const std::complex<double>* row = kernel.entries.data() + a * n;
            for (std::size_t b = 0; b < n; ++b) sum += row[b] * result.final_state.amplitudes[b];
            next[a] = sum;
        }
        result.final_state.amplitudes = next;
        try {
            result.final_state.normalize(1e-12);
        } catch (const DivergenceError&) {
            throw DivergenceError("wave function norm collapsed at step " + std::to_string(step));
        }
        if (snapshot_every > 0 && step % snapshot_every == 0) {
            result.snapshots.emplace_back(step, result.final_state);
        }
    }
    return result;
}

struct PacketSpec {
    double center = 0.0;
    double width = 1.0;
    double momentum = 0.0;
};

struct ScaleRun {
    double scale = 1.0;
    SpatialGrid grid;
    PhaseActionKernel kernel;
    PropagationResult propagation;
};

// Runs the same packet at several spatial scales with hbar = base_hbar/scale.
// Larger scales oscillate faster along the kernel off-diagonals and behave
// more classically.
inline std::vector<ScaleRun> scale_sweep(const SpatialGrid& base_grid,
                                         const std::vector<double>& scales,
                                         const PacketSpec& packet, std::size_t steps,
                                         std::size_t snapshot_every = 0) {
    std::vector<ScaleRun> runs;
    runs.reserve(scales.size());
    for (double scale : scales) {
        if (!(scale > 0.0)) throw ConfigError("scales must be positive");
        SpatialGrid grid = base_grid;
        grid.hbar = base_grid.hbar / scale;
        PhaseActionKernel kernel = build_kernel(grid);
        WaveFunction psi = gaussian_packet(grid, packet.center, packet.width, packet.momentum);
        PropagationResult prop = propagate(psi, kernel, steps, snapshot_every);
        runs.push_back(ScaleRun{scale, grid, std::move(kernel), std::move(prop)});
    }
    return runs;
}

// step,x,re,im,prob rows for every snapshot.
inline void write_snapshots_csv(std::ostream& out,
                                const std::vector<std::pair<std::size_t, WaveFunction>>& snaps) {
    out << "step,x,re,im,prob\n";
    for (const auto& [step, psi] : snaps) {
        for (std::size_t j = 0; j < psi.amplitudes.size(); ++j) {
            const auto amp = psi.amplitudes[j];
            out << step << "," << fmt_double(psi.grid.x(j)) << "," << fmt_double(amp.real()) << ","
                << fmt_double(amp.imag()) << "," << fmt_double(std::norm(amp)) << "\n";
        }
    }
}

// Grayscale heatmap of the kernel phases, mapping (-pi, pi] onto 0..255.
inline void write_kernel_phase_pgm(std::ostream& out, const PhaseActionKernel& kernel) {
    const std::size_t n = kernel.size();
    std::vector<int> gray(n * n);
    for (std::size_t i = 0; i < n * n; ++i) {
        const double phase = std::arg(kernel.entries[i]);
        gray[i] = static_cast<int>(std::lround((phase + std::numbers::pi) /
                                               (2.0 * std::numbers::pi) * 255.0));
    }
    write_pgm(out, gray, n, n);
}

}  // namespace leastaction
