#include "qme/experiment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>

#include <json.hpp>

namespace qme {

namespace {

SystemOperators build_model(const ModelConfig& m) {
    switch (m.type) {
        case ModelConfig::Type::HarmonicOscillator: return build_harmonic(m.omega, m.levels);
        case ModelConfig::Type::SpinBoson: return build_spin_boson(m.epsilon);
        case ModelConfig::Type::IsingChain: return build_ising_chain(m.length, m.exchange);
    }
    throw ConfigError("unreachable");
}

Matrix initial_state(const InitialConfig& ini, const EigenSystem& eig) {
    const int d = eig.dim();
    switch (ini.type) {
        case InitialConfig::Type::Gibbs:
            return gibbs_state(eig, ini.beta);
        case InitialConfig::Type::Fock: {
            if (ini.level < 0 || ini.level >= d) throw ConfigError("initial level out of range");
            Matrix rho = Matrix::Zero(d, d);
            rho(ini.level, ini.level) = 1.0;
            return rho;
        }
        case InitialConfig::Type::Superposition: {
            if (ini.level_a < 0 || ini.level_a >= d || ini.level_b < 0 || ini.level_b >= d ||
                ini.level_a == ini.level_b) {
                throw ConfigError("superposition levels out of range");
            }
            Vector psi = Vector::Zero(d);
            psi(ini.level_a) = 1.0 / std::sqrt(2.0);
            psi(ini.level_b) = 1.0 / std::sqrt(2.0);
            return psi * psi.adjoint();
        }
        case InitialConfig::Type::File: {
            const CsvTable table = read_csv(ini.path);
            Matrix rho = Matrix::Zero(d, d);
            const auto& ri = table.column("i");
            const auto& rj = table.column("j");
            const auto& re = table.column("re");
            const auto& im = table.column("im");
            for (std::size_t k = 0; k < ri.size(); ++k) {
                const int i = static_cast<int>(ri[k]), j = static_cast<int>(rj[k]);
                if (i < 0 || i >= d || j < 0 || j >= d) throw ConfigError("state file index range");
                rho(i, j) = Complex(re[k], im[k]);
            }
            return hermitize_and_renormalize(rho);
        }
    }
    throw ConfigError("unreachable");
}

double max_bohr(const CoupledSystem& sys) {
    return sys.eig.spectral_span();
}

// Spectral-radius estimate of the composed generator by power iteration on
// its action over Hermitian matrices. For the oscillator the canonical
// correction grows with the level index and its composition with the
// dissipator squares that growth, so the stiffness limit can exceed the
// Bohr-span estimate by a large factor.
double generator_spectral_radius(const CoupledSystem& sys) {
    const int d = sys.dim();
    Matrix v = Matrix::Zero(d, d);
    for (int n = 0; n < d; ++n) {
        for (int m = 0; m <= n; ++m) {
            // Deterministic dense Hermitian seed.
            const Complex val(std::sin(1.0 + 0.7 * n + 1.3 * m),
                              (n == m) ? 0.0 : std::cos(2.0 + 0.3 * n * m));
            v(n, m) = val;
            v(m, n) = std::conj(val);
        }
    }
    v /= v.norm();
    double radius = 0.0;
    for (int it = 0; it < 60; ++it) {
        Matrix w = ccqme_apply(sys, v, 0.0);
        const double growth = w.norm();
        if (!std::isfinite(growth) || growth == 0.0) break;
        if (it >= 40) radius = std::max(radius, growth);
        v = w / growth;
    }
    return radius;
}

}  // namespace

Experiment build_experiment(const Config& cfg) {
    Experiment ex;
    ex.cfg = cfg;
    ex.ops = build_model(cfg.model);

    std::vector<std::pair<Matrix, BathSpec>> couplings;
    couplings.reserve(cfg.baths.size());
    for (const auto& b : cfg.baths) couplings.emplace_back(ex.ops.coupling, b.to_bath_spec());

    CoupledSystemOptions opts;
    opts.eps_deg_factor = cfg.tolerances.eps_deg_factor;
    opts.eps_den_factor = cfg.tolerances.eps_den_factor;
    ex.sys = build_coupled_system(ex.ops.hamiltonian, couplings, opts);

    const double span = max_bohr(ex.sys);
    const double scale = cfg.model.frequency_scale();
    double step = cfg.time.step > 0.0 ? cfg.time.step
                                      : std::min(0.01 / scale, 0.35 / std::max(span, 1e-300));
    const bool wants_ccqme =
        std::find(cfg.methods.begin(), cfg.methods.end(), Method::CCQME) != cfg.methods.end();
    if (wants_ccqme && ex.sys.dim() <= 256) {
        const double radius = 1.25 * generator_spectral_radius(ex.sys);
        if (radius > 0.0 && cfg.time.step <= 0.0) {
            step = std::min(step, 2.2 / radius);
        } else if (step * radius > 2.7) {
            throw StepTooLarge("step " + std::to_string(step) +
                               " exceeds the stability bound of the composed generator "
                               "(spectral-radius estimate " +
                               std::to_string(radius) + ")");
        }
    }
    if (step * span > 2.7) {
        throw StepTooLarge("step " + std::to_string(step) +
                           " exceeds the RK4 stability bound for Bohr span " +
                           std::to_string(span));
    }
    ex.step = step;
    ex.n_steps = std::lround(std::ceil(cfg.time.t_max / ex.step - 1e-12));

    ex.rho0 = initial_state(cfg.initial, ex.sys.eig);

    const bool wants_exact =
        std::find(cfg.methods.begin(), cfg.methods.end(), Method::ExactHO) != cfg.methods.end();
    if (wants_exact) {
        std::vector<BathSpec> baths;
        for (const auto& b : cfg.baths) baths.push_back(b.to_bath_spec());
        ex.oracle.emplace(cfg.model.omega, std::move(baths));
        ex.exact_gen = make_exact_generator(cfg.model.omega, cfg.model.levels,
                                            ex.oracle->asymptotic());
    }

    if (cfg.time.time_dependent_rates) {
        for (int i = 0; i < static_cast<int>(ex.sys.couplings.size()); ++i) {
            ex.schedules.push_back(
                build_horizon_schedule(ex.sys, i, ex.step, static_cast<int>(ex.n_steps)));
        }
    }
    return ex;
}

std::map<Method, Trajectory> run_trajectories(const Experiment& ex) {
    IntegrateOptions opts;
    opts.step = ex.step;
    opts.output_stride = ex.cfg.time.output_stride;
    opts.store_matrices = ex.cfg.output.store_matrices;
    opts.compute_min_eig = ex.cfg.output.compute_min_eig;
    opts.trace_tol = ex.cfg.tolerances.trace_tol;
    opts.self_check_tol = ex.cfg.tolerances.self_check_tol;

    const auto* schedules = ex.schedules.empty() ? nullptr : &ex.schedules;
    std::map<Method, Trajectory> out;
    for (const Method m : ex.cfg.methods) {
        if (m == Method::ExactHO) {
            out.emplace(m, integrate(make_exact_action(*ex.exact_gen), ex.rho0,
                                     ex.cfg.time.t_max, opts));
        } else {
            out.emplace(m, integrate(make_action(ex.sys, m, schedules), ex.rho0,
                                     ex.cfg.time.t_max, opts));
        }
    }
    return out;
}

Matrix method_steady_state(const Experiment& ex, Method m) {
    SteadyStateOptions sopts;
    sopts.residual_tol = ex.cfg.tolerances.steady_residual;
    if (ex.sys.dim() <= 128) {
        VectorizedGenerator gen;
        switch (m) {
            case Method::Redfield: gen = vectorize_redfield(ex.sys); break;
            case Method::Lindblad: gen = vectorize_lindblad(ex.sys); break;
            case Method::CCQME: gen = vectorize_ccqme(ex.sys); break;
            case Method::ExactHO: gen = vectorize_exact(*ex.exact_gen); break;
        }
        return steady_state(gen, sopts);
    }
    // Long-time propagation fallback for large dimensions.
    GeneratorAction action = (m == Method::ExactHO) ? make_exact_action(*ex.exact_gen)
                                                    : make_action(ex.sys, m);
    double min_rate = 0.0;
    for (const auto& b : ex.cfg.baths) min_rate = std::max(min_rate, b.coupling);
    const double t_cap = 200.0 / std::max(min_rate, 1e-6);
    return steady_state_by_propagation(action, ex.rho0, ex.step, 1e-9, t_cap);
}

CsvTable trajectory_table(const Experiment& ex, const Trajectory& traj, const Trajectory* exact) {
    CsvTable table;
    table.header = {"t", "ground_pop", "min_eig", "trace"};
    table.columns = {traj.t, traj.ground_pop, traj.min_eig, traj.trace};
    if (exact && !traj.snapshots.empty() && !exact->snapshots.empty()) {
        table.header.push_back("dist_to_exact");
        table.columns.push_back(distance_series(traj, *exact));
    }
    std::vector<double> neg(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        double mass = 0.0;
        for (int n = 0; n < traj.populations[k].size(); ++n) {
            if (traj.populations[k](n) < 0.0) mass += traj.populations[k](n);
        }
        neg[k] = mass;
    }
    table.header.push_back("neg_pop_mass");
    table.columns.push_back(neg);
    return table;
}

SweepResult run_grid_sweep(const Config& cfg) {
    if (!cfg.sweep) throw ConfigError("config has no sweep block");
    if (cfg.model.type != ModelConfig::Type::HarmonicOscillator) {
        throw ConfigError("the grid sweep is defined for the oscillator benchmark");
    }
    const SweepConfig sw = *cfg.sweep;

    auto cell_config = [&](double temperature, double coupling) {
        Config cell = cfg;
        cell.sweep.reset();
        for (auto& b : cell.baths) {
            b.temperature = temperature;
            b.coupling = coupling;
        }
        cell.methods = {Method::Redfield, Method::Lindblad, Method::CCQME, Method::ExactHO};
        const double tau_r = sw.tau_r_factor / coupling;
        cell.time.t_max = tau_r * 1.02;
        return cell;
    };

    // Trajectory metrics per cell in parallel; each cell is independent and
    // deterministic, so the gathered grid is worker-count independent.
    SweepResult result =
        sweep(sw.temperatures, sw.couplings, [&](double temperature, double coupling) {
            const Config cell = cell_config(temperature, coupling);
            const Experiment ex = build_experiment(cell);
            const auto trajs = run_trajectories(ex);
            const Trajectory& exact = trajs.at(Method::ExactHO);
            const double tau_r = sw.tau_r_factor / coupling;
            std::map<std::string, double> metrics;
            for (const Method m : {Method::Redfield, Method::Lindblad, Method::CCQME}) {
                const auto dist = distance_series(trajs.at(m), exact);
                metrics["dist_" + method_name(m)] =
                    time_averaged_distance(trajs.at(m).t, dist, tau_r);
            }
            metrics["ground_pop_exact_final"] = exact.ground_pop.back();
            return metrics;
        });

    // Steady-state diagnostics serially: the dense vectorized generators are
    // memory-hungry, and this pass is cheap relative to the trajectories.
    for (auto& cell : result.cells) {
        if (!cell.error.empty()) continue;
        try {
            const Config cc = cell_config(cell.axis1, cell.axis2);
            const Experiment ex = build_experiment(cc);
            for (const Method m : {Method::Redfield, Method::CCQME, Method::Lindblad}) {
                const Matrix ss = method_steady_state(ex, m);
                cell.metrics["steady_min_eig_" + method_name(m)] = min_eigenvalue(ss);
            }
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
    }
    return result;
}

CsvTable sweep_table(const SweepResult& result) {
    CsvTable table;
    table.header = {"i", "j", "temperature", "coupling"};
    std::vector<std::string> metric_names;
    for (const auto& cell : result.cells) {
        for (const auto& [name, value] : cell.metrics) {
            if (std::find(metric_names.begin(), metric_names.end(), name) == metric_names.end()) {
                metric_names.push_back(name);
            }
        }
    }
    std::sort(metric_names.begin(), metric_names.end());
    for (const auto& name : metric_names) table.header.push_back(name);
    table.header.push_back("failed");
    table.columns.assign(table.header.size(), {});

    for (const auto& cell : result.cells) {
        std::size_t c = 0;
        table.columns[c++].push_back(cell.i);
        table.columns[c++].push_back(cell.j);
        table.columns[c++].push_back(cell.axis1);
        table.columns[c++].push_back(cell.axis2);
        for (const auto& name : metric_names) {
            const auto it = cell.metrics.find(name);
            table.columns[c++].push_back(it == cell.metrics.end()
                                             ? std::numeric_limits<double>::quiet_NaN()
                                             : it->second);
        }
        table.columns[c++].push_back(cell.error.empty() ? 0.0 : 1.0);
    }
    return table;
}

std::vector<std::string> run_experiment_to_dir(const Config& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<std::string> written;
    std::vector<std::string> warnings;

    nlohmann::json manifest;
    manifest["tool"] = "qme";
    manifest["version"] = "0.1.0";
    manifest["config"] = nlohmann::json::parse(config_to_json(cfg));

    if (cfg.sweep) {
        const SweepResult result = run_grid_sweep(cfg);
        const std::string path = out_dir + "/sweep.csv";
        write_csv(path, sweep_table(result));
        written.push_back(path);
        for (const auto& cell : result.cells) {
            if (!cell.error.empty()) {
                warnings.push_back("cell (" + std::to_string(cell.i) + "," +
                                   std::to_string(cell.j) + ") failed: " + cell.error);
            }
        }
    } else {
        const Experiment ex = build_experiment(cfg);
        const auto trajs = run_trajectories(ex);
        const Trajectory* exact = nullptr;
        const auto it = trajs.find(Method::ExactHO);
        if (it != trajs.end()) exact = &it->second;
        for (const auto& [m, traj] : trajs) {
            const std::string path = out_dir + "/trajectory_" + method_name(m) + ".csv";
            write_csv(path, trajectory_table(ex, traj, m == Method::ExactHO ? nullptr : exact));
            written.push_back(path);
        }
        manifest["derived"] = {{"step", ex.step},
                               {"n_steps", ex.n_steps},
                               {"bohr_span", ex.sys.eig.spectral_span()},
                               {"dim", ex.sys.dim()}};
        if (ex.oracle) {
            const auto c = ex.oracle->asymptotic();
            manifest["derived"]["exact_asymptotic"] = {{"gamma_q", c.gamma_q},
                                                       {"gamma_p", c.gamma_p},
                                                       {"d_q", c.d_q},
                                                       {"d_p", c.d_p}};
        }
        for (const auto& d : ex.sys.diagnostics) warnings.push_back(d);
    }

    if (!warnings.empty()) {
        const std::string path = out_dir + "/warnings.txt";
        std::ofstream out(path);
        for (const auto& w : warnings) out << w << '\n';
        written.push_back(path);
    }
    manifest["outputs"] = written;
    const std::string mpath = out_dir + "/manifest.json";
    std::ofstream mout(mpath);
    mout << manifest.dump(2) << '\n';
    written.push_back(mpath);
    return written;
}

int run_verification(const Config& cfg, std::ostream& out) {
    int failures = 0;
    auto check = [&](const std::string& name, double value, double tol) {
        const bool ok = std::isfinite(value) && value < tol;
        out << (ok ? "PASS " : "FAIL ") << name << "  (" << value << " vs " << tol << ")\n";
        if (!ok) ++failures;
    };

    const double scale = cfg.model.frequency_scale();
    for (std::size_t bi = 0; bi < cfg.baths.size(); ++bi) {
        const BathSpec bath = cfg.baths[bi].to_bath_spec();
        const std::string tag = "bath" + std::to_string(bi);
        double worst_w = 0.0, worst_v = 0.0, worst_id = 0.0;
        for (const double e : {-2.0 * scale, -scale, 0.7 * scale, scale, 2.0 * scale}) {
            const Complex w1 = half_fourier_W(bath, e);
            const Complex w2 = half_fourier_W_quadrature(bath, e);
            worst_w = std::max(worst_w, std::abs(w1 - w2) / std::max(1e-12, std::abs(w2)));
            const Complex v = deriv_V(bath, e);
            const double h = 1e-4 * scale;
            const Complex fd =
                (half_fourier_W(bath, e + h) - half_fourier_W(bath, e - h)) / (2.0 * h);
            worst_v = std::max(worst_v, std::abs(v - fd) / std::max(1e-12, std::abs(fd)));

            // Imaginary-time identity, endpoint-singularity-aware quadrature.
            const double beta = bath.beta();
            const int n = 4000;
            double lhs = 0.0;
            for (int k = 0; k < n; ++k) {
                // Midpoint rule handles the integrable endpoint logs.
                const double u = beta * (k + 0.5) / n;
                lhs -= imag_time_correlator(bath, u) * std::exp(-u * e) * (beta / n);
            }
            BathSpec plain = bath;
            plain.counterterm = false;
            const double rhs = half_fourier_W(plain, e).imag() +
                               std::exp(-beta * e) * half_fourier_W(plain, -e).imag();
            worst_id = std::max(worst_id, std::abs(lhs - rhs) / std::max(1e-12, std::abs(rhs)));
        }
        check(tag + " W closed-form vs quadrature", worst_w, 1e-7);
        check(tag + " V vs finite differences", worst_v, 1e-5);
        check(tag + " imaginary-time identity", worst_id, 2e-4);
        if (bath.spectral.family == SpectralDensity::Family::LorentzDrude) {
            const double u = bath.beta() / 3.0;
            const double a = imag_time_correlator(bath, u);
            const double b = imag_time_correlator_matsubara(bath, u);
            check(tag + " Matsubara correlator", std::abs(a - b) / std::abs(b), 1e-7);
        }
    }

    if (cfg.model.type == ModelConfig::Type::HarmonicOscillator &&
        cfg.baths.front().family == SpectralDensity::Family::LorentzDrude) {
        std::vector<BathSpec> baths;
        for (const auto& b : cfg.baths) baths.push_back(b.to_bath_spec());
        const GreenFunction g = green_function(cfg.model.omega, baths);
        // Memory-kernel route: the exponential kernel turns the
        // integro-differential equation into a 3-state ODE.
        const double kappa_zero = [&] {
            double k0 = 0.0;
            for (const auto& b : baths) k0 += kappa0(b.spectral);
            return k0;
        }();
        const double wd = baths.front().spectral.cutoff;
        double gg = 0.0, gdot = 1.0, mem = 0.0;
        const double h = 1e-3 / cfg.model.omega;
        double worst = 0.0;
        auto deriv = [&](double y0, double y1, double y2) {
            return std::array<double, 3>{
                y1, -cfg.model.omega * cfg.model.omega * y0 - y2, kappa_zero * y1 - wd * y2};
        };
        for (double t = 0.0; t < 10.0 / cfg.model.omega; t += h) {
            const auto k1 = deriv(gg, gdot, mem);
            const auto k2 = deriv(gg + 0.5 * h * k1[0], gdot + 0.5 * h * k1[1], mem + 0.5 * h * k1[2]);
            const auto k3 = deriv(gg + 0.5 * h * k2[0], gdot + 0.5 * h * k2[1], mem + 0.5 * h * k2[2]);
            const auto k4 = deriv(gg + h * k3[0], gdot + h * k3[1], mem + h * k3[2]);
            gg += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
            gdot += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
            mem += h / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]);
            worst = std::max(worst, std::abs(gg - g.g(t + h)));
        }
        check("green function: root form vs memory-kernel ODE", worst, 1e-6);

        const ExactOscillator osc(cfg.model.omega, baths);
        // Grid route to the kernel limits vs the closed forms.
        const double step = std::min(0.02 / cfg.model.omega, 0.2 / wd);
        const double t_end = 60.0 / cfg.model.omega;
        double kq_grid = 0.0, kp_grid = 0.0;
        for (double t = 0.0; t + step <= t_end; t += step) {
            kq_grid += 0.5 * step * (osc.kq_dot(t) + osc.kq_dot(t + step));
            kp_grid += 0.5 * step * (osc.kp_dot(t) + osc.kp_dot(t + step));
        }
        check("oscillator kernels: grid vs closed form (K_q)",
              std::abs(kq_grid - osc.kq(t_end)) / std::abs(osc.kq(t_end)), 1e-4);
        check("oscillator kernels: grid vs closed form (K_p)",
              std::abs(kp_grid - osc.kp(t_end)) / std::abs(osc.kp(t_end)), 1e-4);
    }
    return failures;
}

CsvTable compare_tables(const CsvTable& run, const CsvTable& reference,
                        const std::string& observable, double* max_abs_diff,
                        double* mean_abs_diff) {
    const auto& t_run = run.column("t");
    const auto& y_run = run.column(observable);
    const auto& t_ref = reference.column("t");
    const auto& y_ref = reference.column(observable);
    if (t_ref.size() < 2) throw NumericalError("reference needs at least two samples");
    for (std::size_t i = 0; i + 1 < t_ref.size(); ++i) {
        if (t_ref[i + 1] <= t_ref[i]) throw NumericalError("reference time must increase");
    }

    CsvTable out;
    out.header = {"t", "run", "reference", "abs_diff"};
    out.columns.assign(4, {});
    double maxd = 0.0, sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < t_run.size(); ++i) {
        const double t = t_run[i];
        if (t < t_ref.front() - 1e-12 || t > t_ref.back() + 1e-12) continue;
        const auto hi = std::upper_bound(t_ref.begin(), t_ref.end(), t);
        std::size_t j = std::min<std::size_t>(
            t_ref.size() - 2, hi == t_ref.begin() ? 0 : (hi - t_ref.begin()) - 1);
        const double w = (t - t_ref[j]) / (t_ref[j + 1] - t_ref[j]);
        const double ref = (1.0 - w) * y_ref[j] + w * y_ref[j + 1];
        const double diff = std::abs(y_run[i] - ref);
        out.columns[0].push_back(t);
        out.columns[1].push_back(y_run[i]);
        out.columns[2].push_back(ref);
        out.columns[3].push_back(diff);
        maxd = std::max(maxd, diff);
        sum += diff;
        ++count;
    }
    if (count == 0) throw NoOverlap("run and reference time ranges do not overlap");
    if (max_abs_diff) *max_abs_diff = maxd;
    if (mean_abs_diff) *mean_abs_diff = sum / count;
    return out;
}

}  // namespace qme
