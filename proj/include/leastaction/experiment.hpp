#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "leastaction/ephemeris.hpp"
#include "leastaction/errors.hpp"
#include "leastaction/integrator.hpp"
#include "leastaction/io.hpp"
#include "leastaction/optimizer.hpp"
#include "leastaction/path.hpp"
#include "leastaction/quantum.hpp"
#include "leastaction/systems.hpp"

namespace leastaction {

struct EmitFlags {
    bool history = true;
    bool paths = true;
    bool svg = false;
};

struct EphemerisWindowConfig {
    std::string csv_path;
    double window_start_day = 0.0;
    double window_end_day = 60.0;  // 61 daily samples inclusive
};

// Default grid: at scale 1 the fastest off-diagonal phase increment,
// (2N-3) dx^2 m / (2 dt hbar), sits just below pi/4, so the base scale is
// alias-free while larger scales show the rapid oscillation.
struct QuantumConfig {
    SpatialGrid grid;
    double harmonic_k = 0.0;  // spring constant of an optional V(x) well; 0 = free
    double harmonic_center = 0.0;
    PacketSpec packet{0.3, 0.06, 15.0};
    std::vector<double> scales{0.5, 1.0, 2.0};
    std::size_t steps = 60;
    std::size_t snapshot_every = 10;
};

struct ExperimentConfig {
    std::string system_name;
    std::uint64_t seed = 0;
    std::size_t n_points = 64;
    double dt = 0.1;
    InitialState initial;
    std::size_t baseline_refinement = 100;
    OptimizeConfig optimize;
    std::string out_dir = "out";
    EmitFlags emit;
    double gas_dissipation = 0.0;
    std::optional<EphemerisWindowConfig> ephemeris;
    std::optional<QuantumConfig> quantum;
};

// Per-run summary: action sums of both paths plus the recovery error. Wall
// time is informational only and never written to the emitted files, which
// must be byte-stable across reruns.
struct ExperimentReport {
    std::string system;
    ActionBreakdown ode;  // reference path
    ActionBreakdown sim;  // best optimized path
    double initial_mse = 0.0;
    double final_mse = 0.0;
    std::size_t best_step = 0;
    double wall_seconds = 0.0;
    std::vector<std::string> files;
};

// MSE between same-shape, same-step paths.
inline double compare_paths(const Path& a, const Path& b) {
    if (!a.coords.same_shape(b.coords)) throw ConfigError("compare_paths: shape mismatch");
    if (a.dt != b.dt) throw ConfigError("compare_paths: dt mismatch");
    return path_mse(a, b);
}

// ---------------------------------------------------------------------------
// Built-in experiment defaults: per-system noise, step sizes and learning
// rates plus boundary conditions that recover cleanly out of the box.
// ---------------------------------------------------------------------------

inline ExperimentConfig default_config(const std::string& system_name) {
    ExperimentConfig config;
    config.system_name = system_name;
    config.optimize.steps = 500;
    if (system_name == "free_body") {
        // the horizon ends at the apex, where the duplicated-velocity tail
        // rule costs nothing
        config.n_points = 41;
        config.dt = 0.25;
        config.initial = {{0.0}, {10.0}};
        config.optimize.lr = 1.0;
        config.optimize.noise_sigma = 1.5;
    } else if (system_name == "pendulum") {
        config.n_points = 20;
        config.dt = 1.0;
        config.initial = {{2.0}, {0.0}};
        config.optimize.lr = 5e-2;
        config.optimize.noise_sigma = 0.2;
    } else if (system_name == "double_pendulum") {
        config.n_points = 40;
        config.dt = 0.06;
        config.initial = {{1.1, -0.55}, {0.0, 0.0}};
        config.optimize.lr = 1e-2;
        config.optimize.noise_sigma = 0.6;
    } else if (system_name == "three_body") {
        config.n_points = 14;
        config.dt = 0.5;
        // figure-eight choreography
        config.initial = {{0.97000436, -0.24308753, -0.97000436, 0.24308753, 0.0, 0.0},
                          {0.46620369, 0.43236573, 0.46620369, 0.43236573, -0.93240737,
                           -0.86473146}};
        config.optimize.lr = 2e-4;
        config.optimize.noise_sigma = 3e-2;
        config.optimize.steps = 1000;
    } else if (system_name == "gas") {
        config.n_points = 16;
        config.dt = 0.5;
        // initial state filled from the jittered lattice at build time
        config.optimize.lr = 1e-4;
        config.optimize.noise_sigma = 1e-2;
    } else if (system_name == "ephemeris") {
        config.n_points = 61;
        config.dt = 86400.0;
        config.optimize.lr = 1e9;
        config.optimize.noise_sigma = 2e10;
        config.ephemeris = EphemerisWindowConfig{};
    } else {
        throw ConfigError("unknown system: " + system_name);
    }
    return config;
}

// ---------------------------------------------------------------------------
// JSON config document
// ---------------------------------------------------------------------------

namespace detail {

inline Mitigation parse_mitigation(const nlohmann::json& j) {
    if (j.is_string()) {
        const std::string kind = j.get<std::string>();
        if (kind == "perturb_early_stop") return Mitigation::perturb_early_stop();
        throw ConfigError("unknown mitigation: " + kind);
    }
    if (j.is_object()) {
        if (j.contains("freeze_adjacent")) {
            return Mitigation::freeze_adjacent(j.at("freeze_adjacent").get<std::size_t>());
        }
        if (j.contains("global_energy_reg")) {
            return Mitigation::global_energy_reg(j.at("global_energy_reg").get<double>());
        }
        if (j.contains("local_energy_reg")) {
            return Mitigation::local_energy_reg(j.at("local_energy_reg").get<double>());
        }
    }
    throw ConfigError("unrecognized mitigation");
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    std::string system_name;
    if (j.contains("system")) {
        system_name = j.at("system").get<std::string>();
    } else if (j.contains("quantum")) {
        system_name = "free_body";  // quantum-only configs need no classical system
    } else {
        throw ConfigError("config needs a \"system\" name");
    }
    ExperimentConfig config = default_config(system_name);
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("n_points")) config.n_points = j.at("n_points").get<std::size_t>();
    if (j.contains("dt")) config.dt = j.at("dt").get<double>();
    if (j.contains("baseline_refinement")) {
        config.baseline_refinement = j.at("baseline_refinement").get<std::size_t>();
    }
    if (j.contains("out_dir")) config.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("initial_state")) {
        const auto& s = j.at("initial_state");
        config.initial.x0 = s.at("x").get<std::vector<double>>();
        config.initial.v0 = s.at("v").get<std::vector<double>>();
    }
    if (j.contains("optimize")) {
        const auto& o = j.at("optimize");
        if (o.contains("steps")) config.optimize.steps = o.at("steps").get<std::size_t>();
        if (o.contains("lr")) config.optimize.lr = o.at("lr").get<double>();
        if (o.contains("noise_sigma")) {
            config.optimize.noise_sigma = o.at("noise_sigma").get<double>();
        }
        if (o.contains("mitigation")) {
            config.optimize.mitigation = detail::parse_mitigation(o.at("mitigation"));
        }
        if (o.contains("adam_beta1")) config.optimize.adam_beta1 = o.at("adam_beta1").get<double>();
        if (o.contains("adam_beta2")) config.optimize.adam_beta2 = o.at("adam_beta2").get<double>();
        if (o.contains("adam_eps")) config.optimize.adam_eps = o.at("adam_eps").get<double>();
        if (o.contains("snapshot_every")) {
            config.optimize.snapshot_every = o.at("snapshot_every").get<std::size_t>();
        }
    }
    if (j.contains("emit")) {
        const auto& e = j.at("emit");
        if (e.contains("history")) config.emit.history = e.at("history").get<bool>();
        if (e.contains("paths")) config.emit.paths = e.at("paths").get<bool>();
        if (e.contains("svg")) config.emit.svg = e.at("svg").get<bool>();
    }
    if (j.contains("gas")) {
        const auto& g = j.at("gas");
        if (g.contains("dissipation")) config.gas_dissipation = g.at("dissipation").get<double>();
    }
    if (j.contains("ephemeris")) {
        const auto& e = j.at("ephemeris");
        EphemerisWindowConfig window;
        if (config.ephemeris) window = *config.ephemeris;
        if (e.contains("csv")) window.csv_path = e.at("csv").get<std::string>();
        if (e.contains("window_start_day")) {
            window.window_start_day = e.at("window_start_day").get<double>();
        }
        if (e.contains("window_end_day")) {
            window.window_end_day = e.at("window_end_day").get<double>();
        }
        config.ephemeris = window;
    }
    if (j.contains("quantum")) {
        const auto& q = j.at("quantum");
        QuantumConfig quantum;
        if (q.contains("n_points")) quantum.grid.n_points = q.at("n_points").get<std::size_t>();
        if (q.contains("x_min")) quantum.grid.x_min = q.at("x_min").get<double>();
        if (q.contains("x_max")) quantum.grid.x_max = q.at("x_max").get<double>();
        if (q.contains("dt")) quantum.grid.dt = q.at("dt").get<double>();
        if (q.contains("mass")) quantum.grid.mass = q.at("mass").get<double>();
        if (q.contains("hbar")) quantum.grid.hbar = q.at("hbar").get<double>();
        if (q.contains("harmonic_k")) quantum.harmonic_k = q.at("harmonic_k").get<double>();
        if (q.contains("harmonic_center")) {
            quantum.harmonic_center = q.at("harmonic_center").get<double>();
        }
        if (q.contains("packet")) {
            const auto& p = q.at("packet");
            if (p.contains("center")) quantum.packet.center = p.at("center").get<double>();
            if (p.contains("width")) quantum.packet.width = p.at("width").get<double>();
            if (p.contains("momentum")) quantum.packet.momentum = p.at("momentum").get<double>();
        }
        if (q.contains("scales")) quantum.scales = q.at("scales").get<std::vector<double>>();
        if (q.contains("steps")) quantum.steps = q.at("steps").get<std::size_t>();
        if (q.contains("snapshot_every")) {
            quantum.snapshot_every = q.at("snapshot_every").get<std::size_t>();
        }
        config.quantum = quantum;
    }
    return config;
}

inline ExperimentConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config: " + file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + file.string() + ": " + e.what());
    }
    return parse_config(j);
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

namespace detail {

template <class F>
auto with_phase(const char* phase, F&& f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string(phase) + ": " + e.what());
    } catch (const ParseError& e) {
        throw ParseError(std::string(phase) + ": " + e.what());
    } catch (const InvalidPathError& e) {
        throw InvalidPathError(std::string(phase) + ": " + e.what());
    } catch (const DomainError& e) {
        throw DomainError(std::string(phase) + ": " + e.what());
    } catch (const DivergenceError& e) {
        throw DivergenceError(std::string(phase) + ": " + e.what());
    }
}

}  // namespace detail

struct BuiltExperiment {
    System system;
    Path reference;
    InitialState initial;
    std::vector<std::size_t> pinned_cols;
};

// Resolves the system and reference path. The ephemeris experiment takes its
// reference straight from the ingested table; every other system integrates
// the baseline ODE (at dt / baseline_refinement internally).
inline BuiltExperiment build_reference(const ExperimentConfig& config) {
    if (config.system_name == "ephemeris") {
        if (!config.ephemeris || config.ephemeris->csv_path.empty()) {
            throw ConfigError("ephemeris experiments need ephemeris.csv");
        }
        std::ifstream in(config.ephemeris->csv_path);
        if (!in) throw ConfigError("cannot open ephemeris file: " + config.ephemeris->csv_path);
        std::stringstream buffer;
        buffer << in.rdbuf();
        EphemerisTable table = parse_ephemeris(buffer.str());
        EphemerisExperiment exp = to_experiment(table, config.ephemeris->window_start_day,
                                                config.ephemeris->window_end_day);
        return BuiltExperiment{std::move(exp.system), std::move(exp.reference),
                               std::move(exp.initial), std::move(exp.pinned_cols)};
    }
    if (config.system_name == "gas") {
        LennardJonesGas gas;
        gas.dissipation = config.gas_dissipation;
        System system = make_gas(gas);
        InitialState initial = config.initial;
        if (initial.x0.empty()) {
            const GasStart start = gas_initial_conditions(*system.get_if<LennardJonesGas>(),
                                                          config.seed + 1);
            initial = {start.x, start.v};
        }
        Path reference = substep_integrate(system, initial, config.dt, config.n_points,
                                           config.baseline_refinement);
        return BuiltExperiment{std::move(system), std::move(reference), std::move(initial), {}};
    }
    System system = system_by_name(config.system_name);
    Path reference = substep_integrate(system, config.initial, config.dt, config.n_points,
                                       config.baseline_refinement);
    return BuiltExperiment{std::move(system), std::move(reference), config.initial, {}};
}

inline std::string report_text(const ExperimentConfig& config, const ExperimentReport& report) {
    std::string out;
    out += "system=" + report.system + "\n";
    out += "n_points=" + std::to_string(config.n_points) + "\n";
    out += "dt=" + fmt_double(config.dt) + "\n";
    out += "steps=" + std::to_string(config.optimize.steps) + "\n";
    out += "seed=" + std::to_string(config.seed) + "\n";
    out += "S_ode=" + fmt_double(report.ode.S) + "\n";
    out += "T_ode=" + fmt_double(report.ode.t_sum) + "\n";
    out += "V_ode=" + fmt_double(report.ode.v_sum) + "\n";
    out += "S_sim=" + fmt_double(report.sim.S) + "\n";
    out += "T_sim=" + fmt_double(report.sim.t_sum) + "\n";
    out += "V_sim=" + fmt_double(report.sim.v_sum) + "\n";
    out += "mse_initial=" + fmt_double(report.initial_mse) + "\n";
    out += "mse_final=" + fmt_double(report.final_mse) + "\n";
    out += "best_step=" + std::to_string(report.best_step) + "\n";
    std::string files;
    for (const std::string& f : report.files) {
        if (!files.empty()) files += ";";
        files += f;
    }
    out += "files=" + files + "\n";
    return out;
}

// baseline -> perturb -> minimize -> report. Emits the history CSV, the
// reference / perturbed / best path CSVs and the key-value report into
// config.out_dir.
inline ExperimentReport run_experiment(const ExperimentConfig& config) {
    const auto start_time = std::chrono::steady_clock::now();

    BuiltExperiment built = detail::with_phase("baseline", [&] { return build_reference(config); });

    OptimizeConfig opt = config.optimize;
    opt.seed = config.seed;
    opt.pinned_cols = built.pinned_cols;
    if (opt.mitigation.kind == MitigationKind::global_energy_reg && !opt.expected_energy) {
        // expected total energy from the ODE initial conditions
        const std::size_t d = built.system.dim();
        std::span<const double> x0{built.initial.x0.data(), d};
        std::span<const double> v0{built.initial.v0.data(), d};
        opt.expected_energy =
            built.system.kinetic<double>(x0, v0) + built.system.potential<double>(x0);
    }

    const std::vector<std::size_t> pinned_rows =
        opt.mitigation.kind == MitigationKind::freeze_adjacent
            ? freeze_mask(built.reference.points(), opt.mitigation.freeze_k)
            : std::vector<std::size_t>{0, built.reference.points() - 1};

    Path perturbed = detail::with_phase("perturb", [&] {
        return perturb(built.reference, opt.noise_sigma, config.seed, pinned_rows,
                       opt.pinned_cols);
    });

    OptimizeHistory history = detail::with_phase("optimize", [&] {
        return minimize_action(perturbed, built.system, opt, &built.reference);
    });
    if (history.diverged) {
        throw DivergenceError("optimize: diverged at step " + std::to_string(history.diverged_at));
    }

    return detail::with_phase("report", [&] {
        ExperimentReport report;
        report.system = config.system_name;
        report.ode = action(built.reference, built.system);
        report.sim = action(history.best_path, built.system);
        report.initial_mse = history.records.front().mse.value_or(0.0);
        report.final_mse = history.best_criterion;
        report.best_step = history.best_step;

        const std::filesystem::path dir(config.out_dir);
        std::filesystem::create_directories(dir);
        auto emit = [&](const std::string& name, auto&& writer) {
            std::ofstream out(dir / name, std::ios::binary);
            if (!out) throw ConfigError("cannot write " + (dir / name).string());
            writer(out);
            report.files.push_back(name);
        };
        if (config.emit.history) {
            emit("history.csv", [&](std::ostream& out) { write_history_csv(out, history); });
        }
        if (config.emit.paths) {
            emit("path_reference.csv",
                 [&](std::ostream& out) { write_path_csv(out, built.reference); });
            emit("path_initial.csv", [&](std::ostream& out) { write_path_csv(out, perturbed); });
            emit("path_best.csv",
                 [&](std::ostream& out) { write_path_csv(out, history.best_path); });
        }
        if (config.emit.svg) {
            emit("optimization.svg", [&](std::ostream& out) {
                std::vector<double> s, t, v;
                for (const StepRecord& r : history.records) {
                    s.push_back(r.S);
                    t.push_back(r.t_sum);
                    v.push_back(r.v_sum);
                }
                write_series_svg(out, {{"S", s}, {"T", t}, {"V", v}});
            });
            emit("paths.svg", [&](std::ostream& out) {
                write_path_overlay_svg(out, {{"ode", &built.reference},
                                             {"initial", &perturbed},
                                             {"optimized", &history.best_path}});
            });
        }
        emit("report.txt", [&](std::ostream& out) {
            ExperimentReport tmp = report;  // files collected so far, report.txt added below
            tmp.files.push_back("report.txt");
            out << report_text(config, tmp);
        });
        report.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
        return report;
    });
}

// Baseline-only run: integrates and reports the ODE path without optimizing.
inline ExperimentReport run_baseline(const ExperimentConfig& config) {
    const auto start_time = std::chrono::steady_clock::now();
    BuiltExperiment built = detail::with_phase("baseline", [&] { return build_reference(config); });
    ExperimentReport report;
    report.system = config.system_name;
    report.ode = action(built.reference, built.system);
    report.sim = report.ode;

    const std::filesystem::path dir(config.out_dir);
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "path_reference.csv", std::ios::binary);
        if (!out) throw ConfigError("cannot write path_reference.csv");
        write_path_csv(out, built.reference);
        report.files.push_back("path_reference.csv");
    }
    {
        std::ofstream out(dir / "report.txt", std::ios::binary);
        ExperimentReport tmp = report;
        tmp.files.push_back("report.txt");
        out << report_text(config, tmp);
        report.files.push_back("report.txt");
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
    return report;
}

// Scale sweep for the quantum module: per-scale snapshot CSVs and kernel
// phase heatmaps plus a manifest report.
inline std::vector<std::string> run_quantum(const ExperimentConfig& config) {
    if (!config.quantum) throw ConfigError("config has no \"quantum\" section");
    QuantumConfig quantum = *config.quantum;
    if (quantum.harmonic_k != 0.0) {
        const double k = quantum.harmonic_k;
        const double center = quantum.harmonic_center;
        quantum.grid.potential = [k, center](double x) {
            return 0.5 * k * (x - center) * (x - center);
        };
    }
    const std::vector<ScaleRun> runs = scale_sweep(quantum.grid, quantum.scales, quantum.packet,
                                                   quantum.steps, quantum.snapshot_every);
    const std::filesystem::path dir(config.out_dir);
    std::filesystem::create_directories(dir);
    std::vector<std::string> files;
    for (const ScaleRun& run : runs) {
        const std::string tag = "scale_" + fmt_double(run.scale);
        {
            std::ofstream out(dir / ("quantum_" + tag + ".csv"), std::ios::binary);
            write_snapshots_csv(out, run.propagation.snapshots);
            files.push_back("quantum_" + tag + ".csv");
        }
        {
            std::ofstream out(dir / ("kernel_" + tag + ".pgm"), std::ios::binary);
            write_kernel_phase_pgm(out, run.kernel);
            files.push_back("kernel_" + tag + ".pgm");
        }
    }
    {
        std::ofstream out(dir / "quantum_report.txt", std::ios::binary);
        out << "n_points=" << quantum.grid.n_points << "\n";
        out << "dt=" << fmt_double(quantum.grid.dt) << "\n";
        out << "hbar_base=" << fmt_double(quantum.grid.hbar) << "\n";
        out << "steps=" << quantum.steps << "\n";
        std::string scale_list;
        for (double s : quantum.scales) {
            if (!scale_list.empty()) scale_list += ";";
            scale_list += fmt_double(s);
        }
        out << "scales=" << scale_list << "\n";
        std::string file_list;
        for (const std::string& f : files) {
            if (!file_list.empty()) file_list += ";";
            file_list += f;
        }
        out << "files=" << file_list << ";quantum_report.txt\n";
        files.push_back("quantum_report.txt");
    }
    return files;
}

}  // namespace leastaction
