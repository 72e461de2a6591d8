// Command line driver: runs action-minimization experiments from JSON
// configs, emits baseline paths, and drives the quantum scale sweep.

#include <atomic>
#include <cstdio>
#include <exception>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "leastaction/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;

int classify(const std::exception_ptr& error) {
    try {
        std::rethrow_exception(error);
    } catch (const leastaction::ConfigError&) {
        return kExitConfig;
    } catch (const leastaction::ParseError&) {
        return kExitConfig;
    } catch (const std::exception&) {
        return kExitNumerical;
    }
}

struct Overrides {
    std::string out_dir;
    std::int64_t seed = -1;
    std::int64_t steps = -1;

    void apply(leastaction::ExperimentConfig& config) const {
        if (!out_dir.empty()) config.out_dir = out_dir;
        if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
        if (steps >= 0) config.optimize.steps = static_cast<std::size_t>(steps);
    }
};

void print_report(const leastaction::ExperimentConfig& config,
                  const leastaction::ExperimentReport& report) {
    std::printf("%s: S_ode=%.6g S_sim=%.6g mse %.6g -> %.6g (best step %zu) [%.2fs] -> %s\n",
                report.system.c_str(), report.ode.S, report.sim.S, report.initial_mse,
                report.final_mse, report.best_step, report.wall_seconds, config.out_dir.c_str());
}

int run_configs(const std::vector<std::string>& config_files, const Overrides& overrides,
                unsigned parallel) {
    std::vector<leastaction::ExperimentConfig> configs;
    for (const std::string& file : config_files) {
        try {
            configs.push_back(leastaction::load_config(file));
            overrides.apply(configs.back());
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitConfig;
        }
    }

    std::atomic<std::size_t> next{0};
    std::atomic<int> exit_code{kExitOk};
    std::mutex io_mutex;
    auto worker = [&] {
        while (true) {
            const std::size_t index = next.fetch_add(1);
            if (index >= configs.size()) return;
            try {
                const auto report = leastaction::run_experiment(configs[index]);
                std::lock_guard<std::mutex> lock(io_mutex);
                print_report(configs[index], report);
            } catch (...) {
                const int code = classify(std::current_exception());
                int expected = exit_code.load();
                while (expected < code && !exit_code.compare_exchange_weak(expected, code)) {
                }
                std::lock_guard<std::mutex> lock(io_mutex);
                try {
                    throw;
                } catch (const std::exception& e) {
                    std::cerr << "error (" << config_files[index] << "): " << e.what() << "\n";
                }
            }
        }
    };

    if (parallel <= 1 || configs.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        const unsigned n_threads = std::min<unsigned>(parallel, configs.size());
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return exit_code.load();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Classical trajectories by direct minimization of the discrete action, with "
                 "Euler ODE baselines and a phase-matrix quantum propagator"};
    app.require_subcommand(1);

    Overrides overrides;
    unsigned parallel = 1;

    std::vector<std::string> run_files;
    CLI::App* run = app.add_subcommand("run", "run experiments from JSON configs");
    run->add_option("configs", run_files, "config JSON files")->required()->check(CLI::ExistingFile);
    run->add_option("--out", overrides.out_dir, "output directory override");
    run->add_option("--seed", overrides.seed, "seed override");
    run->add_option("--steps", overrides.steps, "optimizer step override");
    run->add_option("--parallel", parallel, "run up to K configs concurrently");

    std::string baseline_system;
    std::int64_t baseline_points = -1;
    double baseline_dt = -1.0;
    CLI::App* baseline = app.add_subcommand("baseline", "integrate and report the ODE baseline");
    baseline->add_option("system", baseline_system, "system name")->required();
    baseline->add_option("--out", overrides.out_dir, "output directory override");
    baseline->add_option("--seed", overrides.seed, "seed override");
    baseline->add_option("--points", baseline_points, "number of path points");
    baseline->add_option("--dt", baseline_dt, "time step");

    std::string quantum_file;
    CLI::App* quantum = app.add_subcommand("quantum", "run the quantum scale sweep");
    quantum->add_option("config", quantum_file, "config JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    quantum->add_option("--out", overrides.out_dir, "output directory override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints the message or help text
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run->parsed()) {
            return run_configs(run_files, overrides, parallel);
        }
        if (baseline->parsed()) {
            auto config = leastaction::default_config(baseline_system);
            overrides.apply(config);
            if (baseline_points > 0) config.n_points = static_cast<std::size_t>(baseline_points);
            if (baseline_dt > 0.0) config.dt = baseline_dt;
            const auto report = leastaction::run_baseline(config);
            std::printf("%s baseline: S=%.6g T=%.6g V=%.6g [%.2fs] -> %s\n",
                        report.system.c_str(), report.ode.S, report.ode.t_sum, report.ode.v_sum,
                        report.wall_seconds, config.out_dir.c_str());
            return kExitOk;
        }
        if (quantum->parsed()) {
            auto config = leastaction::load_config(quantum_file);
            overrides.apply(config);
            const auto files = leastaction::run_quantum(config);
            std::printf("quantum sweep: %zu files -> %s\n", files.size(), config.out_dir.c_str());
            return kExitOk;
        }
    } catch (...) {
        const int code = classify(std::current_exception());
        try {
            throw;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
        }
        return code;
    }
    return kExitOk;
}
