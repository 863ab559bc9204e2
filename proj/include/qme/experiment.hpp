#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <string>

#include "qme/config.hpp"
#include "qme/csv.hpp"
#include "qme/models.hpp"
#include "qme/oracle_ho.hpp"
#include "qme/propagate.hpp"

namespace qme {

/// One fully resolved run: system, baths, initial state, oracle, step sizes.
struct Experiment {
    Config cfg;
    SystemOperators ops;
    CoupledSystem sys;
    Matrix rho0;
    std::optional<ExactOscillator> oracle;
    std::optional<ExactGenerator> exact_gen;
    std::vector<HorizonSchedule> schedules;
    double step = 0.0;
    long n_steps = 0;

    bool has_exact() const { return exact_gen.has_value(); }
};

Experiment build_experiment(const Config& cfg);

/// Integrates every configured method (exact oracle included when listed).
std::map<Method, Trajectory> run_trajectories(const Experiment& ex);

/// Steady state of one method: dense null space up to dim 128, long-time
/// propagation above.
Matrix method_steady_state(const Experiment& ex, Method m);

/// Per-method trajectory table: t, ground_pop, min_eig, trace,
/// dist_to_exact (when the oracle ran), neg_pop_mass.
CsvTable trajectory_table(const Experiment& ex, const Trajectory& traj,
                          const Trajectory* exact);

/// Grid experiment behind `sweep`: time-averaged distance to the exact
/// solution per method plus steady-state positivity diagnostics per cell.
SweepResult run_grid_sweep(const Config& cfg);

CsvTable sweep_table(const SweepResult& result);

/// Executes a full `run` (or `sweep` when the config has a sweep block):
/// writes per-method CSVs, optional sweep CSV, warnings and the manifest.
/// Returns the list of files written.
std::vector<std::string> run_experiment_to_dir(const Config& cfg, const std::string& out_dir);

/// Comparison report: reference interpolated linearly onto the run grid over
/// the overlapping time range.
CsvTable compare_tables(const CsvTable& run, const CsvTable& reference,
                        const std::string& observable, double* max_abs_diff = nullptr,
                        double* mean_abs_diff = nullptr);

/// Expensive cross-check oracles behind the --verify flag: dual-route bath
/// functions, the imaginary-time identity, the Matsubara correlator sum and
/// the memory-kernel ODE route to the Green function. Prints one line per
/// check; returns the number of failures.
int run_verification(const Config& cfg, std::ostream& out);

}  // namespace qme
