#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qme/generators.hpp"
#include "qme/linalg.hpp"
#include "qme/oracle_ho.hpp"

namespace qme {

enum class Method { Redfield, Lindblad, CCQME, ExactHO };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

/// A time-dependent linear map on density matrices, the unit the propagator
/// consumes.
struct GeneratorAction {
    std::function<Matrix(const Matrix&, double)> apply;
};

GeneratorAction make_action(const CoupledSystem& sys, Method m,
                            const std::vector<HorizonSchedule>* schedules = nullptr);
GeneratorAction make_exact_action(const ExactGenerator& gen);

struct IntegrateOptions {
    double step = 0.0;  // RK4 step, required
    int output_stride = 1;
    bool store_matrices = true;
    bool compute_min_eig = true;
    double trace_tol = 1e-8;
    bool self_check = true;
    double self_check_tol = 1e-6;
};

struct Trajectory {
    std::vector<double> t;
    std::vector<Matrix> snapshots;  // empty when store_matrices is off
    std::vector<RealVector> populations;
    std::vector<double> ground_pop;
    std::vector<double> min_eig;  // NaN when not computed
    std::vector<double> trace;
    Matrix final_state;

    std::size_t size() const { return t.size(); }
};

/// Classical fixed-step RK4. Snapshots every `output_stride` steps (and at
/// t = 0 and t_max). Trace drift beyond `trace_tol` is an error, never a
/// silent renormalization; a halving-step self-check guards the first ten
/// steps.
Trajectory integrate(const GeneratorAction& gen, const Matrix& rho0, double t_max,
                     const IntegrateOptions& opts);

std::vector<double> ground_state_population(const Trajectory& traj);

/// Pointwise trace distance between two trajectories on identical grids.
std::vector<double> distance_series(const Trajectory& a, const Trajectory& b);

/// Trapezoid average of `series` over [0, tau_r].
double time_averaged_distance(const std::vector<double>& t, const std::vector<double>& series,
                              double tau_r);

/// Integrates until the generator residual drops below `residual_tol`
/// (relative to the state norm) or throws NoConvergence at `t_cap`.
Matrix steady_state_by_propagation(const GeneratorAction& gen, const Matrix& rho0, double step,
                                   double residual_tol, double t_cap);

/// Row-major-deterministic parallel sweep over a 2-axis grid. Cell failures
/// are recorded, not fatal.
struct SweepCell {
    int i = 0, j = 0;
    double axis1 = 0.0, axis2 = 0.0;
    std::map<std::string, double> metrics;
    std::string error;
};

struct SweepResult {
    std::vector<double> axis1, axis2;
    std::vector<SweepCell> cells;  // row-major (i over axis1, j over axis2)
};

using CellFunction = std::function<std::map<std::string, double>(double, double)>;

SweepResult sweep(const std::vector<double>& axis1, const std::vector<double>& axis2,
                  const CellFunction& cell, bool parallel = true);

}  // namespace qme
