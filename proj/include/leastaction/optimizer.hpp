#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "leastaction/autodiff.hpp"
#include "leastaction/errors.hpp"
#include "leastaction/path.hpp"
#include "leastaction/random.hpp"
#include "leastaction/systems.hpp"

namespace leastaction {

// Counter-measures against the unconstrained energy effect: converging to a
// stationary path whose total energy differs from the baseline because the
// pinned endpoints alone do not fix T + V.
enum class MitigationKind {
    perturb_early_stop,  // perturb the baseline, keep the snapshot closest to it
    freeze_adjacent,     // pin k extra points next to each endpoint
    global_energy_reg,   // penalize deviation from the expected total energy
    local_energy_reg,    // penalize the time derivative of the total energy
};

struct Mitigation {
    MitigationKind kind = MitigationKind::perturb_early_stop;
    std::size_t freeze_k = 1;  // freeze_adjacent only
    double lambda = 0.0;       // regularizers only

    static Mitigation perturb_early_stop() { return {}; }
    static Mitigation freeze_adjacent(std::size_t k) {
        return {MitigationKind::freeze_adjacent, k, 0.0};
    }
    static Mitigation global_energy_reg(double lambda) {
        return {MitigationKind::global_energy_reg, 1, lambda};
    }
    static Mitigation local_energy_reg(double lambda) {
        return {MitigationKind::local_energy_reg, 1, lambda};
    }
};

struct OptimizeConfig {
    std::size_t steps = 500;
    double lr = 1e-2;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    Mitigation mitigation{};
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t snapshot_every = 0;               // 0 = endpoints of the run only
    std::optional<double> expected_energy;        // required for global_energy_reg
    std::vector<std::size_t> pinned_cols;         // coordinates never optimized (e.g. the Sun)
};

inline void validate(const OptimizeConfig& config) {
    if (!(config.lr > 0.0)) throw ConfigError("optimizer lr must be positive");
    if (!(config.adam_beta1 > 0.0 && config.adam_beta1 < 1.0) ||
        !(config.adam_beta2 > 0.0 && config.adam_beta2 < 1.0)) {
        throw ConfigError("adam betas must lie in (0, 1)");
    }
    if (config.noise_sigma < 0.0) throw ConfigError("noise sigma must be non-negative");
    if (config.mitigation.kind == MitigationKind::freeze_adjacent &&
        config.mitigation.freeze_k < 1) {
        throw ConfigError("freeze_adjacent needs k >= 1");
    }
    if (config.mitigation.kind == MitigationKind::global_energy_reg && !config.expected_energy) {
        throw ConfigError("global energy regularizer needs the expected total energy");
    }
}

struct StepRecord {
    std::size_t step = 0;
    double S = 0.0;
    double t_sum = 0.0;
    double v_sum = 0.0;
    std::optional<double> mse;  // only when a reference path was supplied
    double grad_norm = 0.0;
};

struct OptimizeHistory {
    std::vector<StepRecord> records;                    // steps + 1 entries when finished
    std::vector<std::pair<std::size_t, Path>> snapshots;
    std::size_t best_step = 0;
    Path best_path;
    double best_criterion = 0.0;  // mse with a reference, S otherwise
    bool diverged = false;
    std::size_t diverged_at = 0;
};

// Rows {0..k} and {N-1-k..N-1}.
inline std::vector<std::size_t> freeze_mask(std::size_t n, std::size_t k) {
    if (2 * (k + 1) >= n) {
        throw ConfigError("freeze_mask: frozen ranges overlap for N=" + std::to_string(n) +
                          ", k=" + std::to_string(k));
    }
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i <= k; ++i) rows.push_back(i);
    for (std::size_t i = n - 1 - k; i < n; ++i) rows.push_back(i);
    return rows;
}

// Adds i.i.d. Gaussian noise to every non-pinned entry; deterministic in the
// seed. Pinned rows and pinned columns are left untouched.
inline Path perturb(const Path& path, double sigma, std::uint64_t seed,
                    const std::vector<std::size_t>& pinned,
                    const std::vector<std::size_t>& pinned_cols = {}) {
    validate(path);
    if (sigma < 0.0) throw ConfigError("perturbation sigma must be non-negative");
    const std::size_t n = path.points();
    const std::size_t d = path.dim();
    std::vector<bool> row_pinned(n, false);
    for (std::size_t row : pinned) {
        if (row >= n) throw ConfigError("pinned row out of range");
        row_pinned[row] = true;
    }
    std::vector<bool> col_pinned(d, false);
    for (std::size_t col : pinned_cols) {
        if (col >= d) throw ConfigError("pinned column out of range");
        col_pinned[col] = true;
    }
    Path noisy = path;
    GaussianSampler rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        if (row_pinned[i]) continue;
        for (std::size_t k = 0; k < d; ++k) {
            if (col_pinned[k]) continue;
            noisy.coords(i, k) += rng.normal(0.0, sigma);
        }
    }
    return noisy;
}

// Mean over all N*D entries of the squared coordinate difference.
inline double path_mse(const Path& a, const Path& b) {
    if (!a.coords.same_shape(b.coords)) throw ConfigError("paths have different shapes");
    double sum = 0.0;
    const auto& da = a.coords.data();
    const auto& db = b.coords.data();
    for (std::size_t i = 0; i < da.size(); ++i) {
        const double diff = da[i] - db[i];
        sum += diff * diff;
    }
    return sum / static_cast<double>(da.size());
}

namespace detail {

// Optimizer loss: the action plus the selected energy penalty. Scalar-generic
// so gradients come off the same tape as the action itself.
template <class S>
S optimizer_loss(const System& system, std::span<const S> coords, std::size_t n, std::size_t d,
                 double dt, const Mitigation& mitigation, std::optional<double> expected_energy,
                 ActionTerms<S>* terms_out = nullptr) {
    ActionTerms<S> terms = action_terms<S>(system, coords, n, d, dt);
    S loss = (terms.t_acc - terms.v_acc) * dt;
    switch (mitigation.kind) {
        case MitigationKind::perturb_early_stop:
        case MitigationKind::freeze_adjacent:
            break;
        case MitigationKind::global_energy_reg: {
            const double target = *expected_energy;
            S penalty = S(0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const S dev = terms.slice_energy[i] - target;
                penalty = penalty + dev * dev;
            }
            loss = loss + mitigation.lambda * (penalty * dt);
            break;
        }
        case MitigationKind::local_energy_reg: {
            S penalty = S(0.0);
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const S rate = (terms.slice_energy[i + 1] - terms.slice_energy[i]) / dt;
                penalty = penalty + rate * rate;
            }
            loss = loss + mitigation.lambda * (penalty * dt);
            break;
        }
    }
    if (terms_out) *terms_out = std::move(terms);
    return loss;
}

}  // namespace detail

// Loss value for a given mitigation; equal to the plain action for the
// perturb/freeze strategies.
inline double apply_mitigation_loss(const Path& path, const System& system,
                                    const Mitigation& mitigation,
                                    std::optional<double> expected_energy = std::nullopt) {
    validate(path, system);
    if (mitigation.kind == MitigationKind::global_energy_reg && !expected_energy) {
        throw ConfigError("global energy regularizer needs the expected total energy");
    }
    return detail::optimizer_loss<double>(system, path.coords.data(), path.points(), path.dim(),
                                          path.dt, mitigation, expected_energy);
}

// Adam descent on the interior (non-pinned) coordinates against the action
// (plus any mitigation penalty). Records S, T, V, the reference MSE and the
// masked gradient norm at every step; `best` is the snapshot with the lowest
// MSE when a reference is given (the early-stopping selection rule), and the
// lowest action otherwise. On divergence the history collected so far is
// returned with the diverged flag set.
inline OptimizeHistory minimize_action(const Path& path0, const System& system,
                                       const OptimizeConfig& config,
                                       const Path* reference = nullptr) {
    validate(path0, system);
    validate(config);
    const std::size_t n = path0.points();
    const std::size_t d = path0.dim();

    std::vector<std::size_t> pinned_rows =
        config.mitigation.kind == MitigationKind::freeze_adjacent
            ? freeze_mask(n, config.mitigation.freeze_k)
            : std::vector<std::size_t>{0, n - 1};
    std::vector<bool> row_pinned(n, false);
    for (std::size_t row : pinned_rows) row_pinned[row] = true;
    std::vector<bool> col_pinned(d, false);
    for (std::size_t col : config.pinned_cols) {
        if (col >= d) throw ConfigError("pinned column out of range");
        col_pinned[col] = true;
    }

    if (reference) {
        if (!reference->coords.same_shape(path0.coords)) {
            throw ConfigError("reference path shape does not match");
        }
        for (std::size_t k = 0; k < d; ++k) {
            if (path0.coords(0, k) != reference->coords(0, k) ||
                path0.coords(n - 1, k) != reference->coords(n - 1, k)) {
                throw ConfigError("path endpoints must match the reference endpoints");
            }
        }
    }

    OptimizeHistory history;
    history.records.reserve(config.steps + 1);

    Path current = path0;
    std::vector<double> adam_m(n * d, 0.0);
    std::vector<double> adam_v(n * d, 0.0);
    std::vector<double> grad(n * d, 0.0);
    std::vector<double> adjoint;
    ad::Tape tape;
    tape.reserve(n * d * 24 + 1024);

    bool have_best = false;
    for (std::size_t step = 0; step <= config.steps; ++step) {
        double loss_value = 0.0;
        double s_value = 0.0;
        double t_value = 0.0;
        double v_value = 0.0;
        try {
            tape.clear();
            ad::TapeScope scope(tape);
            std::vector<ad::Rev> coords;
            coords.reserve(n * d);
            for (double c : current.coords.data()) coords.emplace_back(c);
            detail::ActionTerms<ad::Rev> terms{ad::Rev(0.0), ad::Rev(0.0), {}};
            const ad::Rev loss =
                detail::optimizer_loss<ad::Rev>(system, coords, n, d, current.dt,
                                                config.mitigation, config.expected_energy, &terms);
            loss_value = loss.v;
            t_value = terms.t_acc.v * current.dt;
            v_value = terms.v_acc.v * current.dt;
            s_value = (terms.t_acc.v - terms.v_acc.v) * current.dt;
            tape.backward(loss.idx, adjoint);
            for (std::size_t i = 0; i < n * d; ++i) grad[i] = adjoint[i];
        } catch (const DomainError& e) {
            throw DomainError("optimizer step " + std::to_string(step) + ": " + e.what());
        }
        if (!std::isfinite(loss_value)) {
            history.diverged = true;
            history.diverged_at = step;
            break;
        }

        // mask pinned rows and columns
        double grad_norm_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < d; ++k) {
                if (row_pinned[i] || col_pinned[k]) grad[i * d + k] = 0.0;
                grad_norm_sq += grad[i * d + k] * grad[i * d + k];
            }
        }

        StepRecord record;
        record.step = step;
        record.S = s_value;
        record.t_sum = t_value;
        record.v_sum = v_value;
        record.grad_norm = std::sqrt(grad_norm_sq);
        if (reference) record.mse = path_mse(current, *reference);
        history.records.push_back(record);

        const double criterion = reference ? *record.mse : record.S;
        if (!have_best || criterion < history.best_criterion) {
            have_best = true;
            history.best_criterion = criterion;
            history.best_step = step;
            history.best_path = current;
        }
        if (config.snapshot_every > 0 && step % config.snapshot_every == 0) {
            history.snapshots.emplace_back(step, current);
        }
        if (step == config.steps) break;

        // Adam update, t starts at 1
        const double t = static_cast<double>(step + 1);
        const double bias1 = 1.0 - std::pow(config.adam_beta1, t);
        const double bias2 = 1.0 - std::pow(config.adam_beta2, t);
        auto& data = current.coords.data();
        for (std::size_t i = 0; i < n * d; ++i) {
            adam_m[i] = config.adam_beta1 * adam_m[i] + (1.0 - config.adam_beta1) * grad[i];
            adam_v[i] = config.adam_beta2 * adam_v[i] + (1.0 - config.adam_beta2) * grad[i] * grad[i];
            const double m_hat = adam_m[i] / bias1;
            const double v_hat = adam_v[i] / bias2;
            data[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.adam_eps);
        }
    }
    return history;
}

}  // namespace leastaction
