#include "qme/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>

namespace qme {

std::string method_name(Method m) {
    switch (m) {
        case Method::Redfield: return "redfield";
        case Method::Lindblad: return "lindblad";
        case Method::CCQME: return "ccqme";
        case Method::ExactHO: return "exact_ho";
    }
    return "unknown";
}

Method method_from_name(const std::string& name) {
    if (name == "redfield") return Method::Redfield;
    if (name == "lindblad") return Method::Lindblad;
    if (name == "ccqme") return Method::CCQME;
    if (name == "exact_ho") return Method::ExactHO;
    throw ConfigError("unknown method '" + name + "'");
}

GeneratorAction make_action(const CoupledSystem& sys, Method m,
                            const std::vector<HorizonSchedule>* schedules) {
    switch (m) {
        case Method::Redfield:
            return {[&sys, schedules](const Matrix& rho, double t) {
                return redfield_rhs(sys, rho, t, schedules);
            }};
        case Method::Lindblad:
            return {[&sys](const Matrix& rho, double) { return lindblad_rhs(sys, rho); }};
        case Method::CCQME:
            return {[&sys, schedules](const Matrix& rho, double t) {
                return ccqme_apply(sys, rho, t, schedules);
            }};
        case Method::ExactHO:
            throw ConfigError("exact_ho action needs make_exact_action");
    }
    throw ConfigError("unreachable");
}

GeneratorAction make_exact_action(const ExactGenerator& gen) {
    return {[&gen](const Matrix& rho, double) { return gen.apply(rho); }};
}

namespace {

Matrix rk4_step(const GeneratorAction& gen, const Matrix& rho, double t, double h) {
    const Matrix k1 = gen.apply(rho, t);
    const Matrix k2 = gen.apply(rho + (0.5 * h) * k1, t + 0.5 * h);
    const Matrix k3 = gen.apply(rho + (0.5 * h) * k2, t + 0.5 * h);
    const Matrix k4 = gen.apply(rho + h * k3, t + h);
    return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void record(Trajectory& traj, const Matrix& rho, double t, const IntegrateOptions& opts) {
    traj.t.push_back(t);
    const int d = static_cast<int>(rho.rows());
    RealVector pops(d);
    for (int n = 0; n < d; ++n) pops(n) = rho(n, n).real();
    traj.populations.push_back(pops);
    traj.ground_pop.push_back(pops(0));
    traj.min_eig.push_back(opts.compute_min_eig ? min_eigenvalue(rho)
                                                : std::numeric_limits<double>::quiet_NaN());
    traj.trace.push_back(rho.trace().real());
    if (opts.store_matrices) traj.snapshots.push_back(rho);
}

}  // namespace

Trajectory integrate(const GeneratorAction& gen, const Matrix& rho0, double t_max,
                     const IntegrateOptions& opts) {
    if (opts.step <= 0.0) throw ConfigError("integration step must be positive");
    validate_density_matrix(rho0, 1e-8, 1e-8);

    const long steps = std::lround(std::ceil(t_max / opts.step - 1e-12));
    Trajectory traj;
    Matrix rho = rho0;
    record(traj, rho, 0.0, opts);

    for (long k = 0; k < steps; ++k) {
        const double t = k * opts.step;
        const double h = std::min(opts.step, t_max - t);
        const Matrix next = rk4_step(gen, rho, t, h);

        if (opts.self_check && k < 10) {
            const Matrix half = rk4_step(gen, rk4_step(gen, rho, t, 0.5 * h), t + 0.5 * h, 0.5 * h);
            const double err = (next - half).norm() / std::max(1.0, rho.norm());
            if (err > opts.self_check_tol) {
                throw StepTooLarge("halving-step self-check error " + std::to_string(err) +
                                   " at step " + std::to_string(k) + "; reduce h");
            }
        }
        rho = next;

        if (!(rho.norm() < 100.0)) {
            throw NumericalError("integration diverged at t = " + std::to_string(t + h) +
                                 "; reduce the step");
        }
        const double drift = std::abs(rho.trace() - Complex(1.0));
        if (drift > opts.trace_tol) {
            char msg[128];
            std::snprintf(msg, sizeof msg, "trace drifted by %.3e at t = %.6f", drift, t + h);
            throw TraceDrift(msg);
        }
        const bool last = (k + 1 == steps);
        if (last || (k + 1) % opts.output_stride == 0) {
            record(traj, rho, t + h, opts);
        }
    }
    traj.final_state = rho;
    return traj;
}

std::vector<double> ground_state_population(const Trajectory& traj) { return traj.ground_pop; }

std::vector<double> distance_series(const Trajectory& a, const Trajectory& b) {
    if (a.t.size() != b.t.size()) throw GridMismatch("trajectory grids differ in length");
    for (std::size_t i = 0; i < a.t.size(); ++i) {
        if (std::abs(a.t[i] - b.t[i]) > 1e-12 * std::max(1.0, std::abs(a.t[i]))) {
            throw GridMismatch("trajectory grids differ at index " + std::to_string(i));
        }
    }
    if (a.snapshots.empty() || b.snapshots.empty()) {
        throw NumericalError("distance series needs stored snapshots");
    }
    std::vector<double> out(a.t.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(a.t.size()); ++i) {
        out[i] = trace_distance(a.snapshots[i], b.snapshots[i]);
    }
    return out;
}

double time_averaged_distance(const std::vector<double>& t, const std::vector<double>& series,
                              double tau_r) {
    if (t.size() != series.size() || t.size() < 2) throw GridMismatch("bad series");
    if (t.back() < tau_r * (1.0 - 1e-9)) {
        throw OutOfDomain("grid ends before the relaxation time");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < t.size() && t[i] < tau_r; ++i) {
        const double t1 = std::min(t[i + 1], tau_r);
        const double f1 = (t[i + 1] <= tau_r)
                              ? series[i + 1]
                              : series[i] + (series[i + 1] - series[i]) *
                                                (tau_r - t[i]) / (t[i + 1] - t[i]);
        acc += 0.5 * (series[i] + f1) * (t1 - t[i]);
    }
    return acc / tau_r;
}

Matrix steady_state_by_propagation(const GeneratorAction& gen, const Matrix& rho0, double step,
                                   double residual_tol, double t_cap) {
    Matrix rho = rho0;
    double t = 0.0;
    const long check_every = 50;
    long k = 0;
    while (t < t_cap) {
        rho = rk4_step(gen, rho, t, step);
        t += step;
        if (++k % check_every == 0) {
            const double residual = gen.apply(rho, t).norm() / std::max(rho.norm(), 1e-300);
            if (residual < residual_tol) return hermitize_and_renormalize(std::move(rho));
        }
    }
    throw NoConvergence("propagation steady state did not converge by t = " +
                        std::to_string(t_cap));
}

SweepResult sweep(const std::vector<double>& axis1, const std::vector<double>& axis2,
                  const CellFunction& cell, bool parallel) {
    if (axis1.empty() || axis2.empty()) throw ConfigError("sweep axes must be non-empty");
    SweepResult result;
    result.axis1 = axis1;
    result.axis2 = axis2;
    const long n1 = static_cast<long>(axis1.size());
    const long n2 = static_cast<long>(axis2.size());
    result.cells.resize(n1 * n2);

#pragma omp parallel for schedule(dynamic, 1) if (parallel)
    for (long idx = 0; idx < n1 * n2; ++idx) {
        const int i = static_cast<int>(idx / n2);
        const int j = static_cast<int>(idx % n2);
        SweepCell c;
        c.i = i;
        c.j = j;
        c.axis1 = axis1[i];
        c.axis2 = axis2[j];
        try {
            c.metrics = cell(axis1[i], axis2[j]);
        } catch (const std::exception& e) {
            c.error = e.what();
        }
        result.cells[idx] = std::move(c);
    }
    return result;
}

}  // namespace qme
