#include <CLI11.hpp>
#include <Eigen/Core>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qme/experiment.hpp"

namespace {

void apply_threads(int threads) {
    if (threads <= 0) return;
#ifdef _OPENMP
    omp_set_num_threads(threads);
#endif
    Eigen::setNbThreads(threads);
}

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const qme::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const qme::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

std::vector<double> linear_grid(double lo, double hi, int n) {
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / std::max(1, n - 1);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Master-equation toolkit for open quantum systems"};
    app.require_subcommand(1);

    int threads = 0;
    bool verify = false;
    bool seed_flag = false;
    app.add_option("--threads", threads, "Worker threads (0 = library default)");
    app.add_flag("--verify", verify, "Run the expensive cross-check oracles first");
    app.add_flag("--seed-irrelevant", seed_flag,
                 "Reserved; the core is deterministic and uses no RNG");

    std::string config_path, out_dir;

    auto* run = app.add_subcommand("run", "Run the configured trajectories or sweep");
    run->add_option("--config", config_path, "JSON configuration or manifest")->required();
    run->add_option("--out-dir", out_dir, "Output directory (overrides config)");

    auto* sweep_cmd = app.add_subcommand("sweep", "Run the configured parameter sweep");
    sweep_cmd->add_option("--config", config_path)->required();
    sweep_cmd->add_option("--out-dir", out_dir);

    std::string run_csv, ref_csv, observable = "ground_pop", report_path = "compare.csv";
    auto* compare = app.add_subcommand("compare", "Compare a run against a reference CSV");
    compare->add_option("--run", run_csv)->required();
    compare->add_option("--reference", ref_csv)->required();
    compare->add_option("--observable", observable, "Column to compare");
    compare->add_option("--out", report_path, "Report CSV path");

    int bath_index = 0, t_points = 400, e_points = 400;
    double t_max_opt = 0.0, e_min = 0.0, e_max = 0.0;
    auto* kernels = app.add_subcommand("kernels", "Dump C(t) and W', W'', V', V'' tables");
    kernels->add_option("--config", config_path)->required();
    kernels->add_option("--out-dir", out_dir);
    kernels->add_option("--bath", bath_index, "Bath index");
    kernels->add_option("--t-max", t_max_opt, "Correlator grid end (default 10/cutoff-scale)");
    kernels->add_option("--t-points", t_points);
    kernels->add_option("--e-min", e_min, "Rate grid start (default -4 scale)");
    kernels->add_option("--e-max", e_max, "Rate grid end (default +4 scale)");
    kernels->add_option("--e-points", e_points);

    int coeff_points = 1000;
    double coeff_t_max = 0.0;
    auto* coeffs = app.add_subcommand("coeffs", "Dump exact-oscillator coefficients vs time");
    coeffs->add_option("--config", config_path)->required();
    coeffs->add_option("--out-dir", out_dir);
    coeffs->add_option("--t-max", coeff_t_max, "Grid end (default 60/Omega)");
    coeffs->add_option("--points", coeff_points);

    auto* steady = app.add_subcommand("steady", "Steady states of the configured methods");
    steady->add_option("--config", config_path)->required();
    steady->add_option("--out-dir", out_dir);

    CLI11_PARSE(app, argc, argv);
    apply_threads(threads);

    return guarded([&]() -> int {
        using namespace qme;
        if (compare->parsed()) {
            const CsvTable run_table = read_csv(run_csv);
            const CsvTable ref_table = read_csv(ref_csv);
            double maxd = 0.0, meand = 0.0;
            const CsvTable report =
                compare_tables(run_table, ref_table, observable, &maxd, &meand);
            write_csv(report_path, report);
            std::printf("compared %zu points: max |diff| = %.6g, mean |diff| = %.6g\n",
                        report.rows(), maxd, meand);
            std::printf("report written to %s\n", report_path.c_str());
            return 0;
        }

        Config cfg = parse_config_file(config_path);
        if (!out_dir.empty()) cfg.output.dir = out_dir;

        if (verify) {
            const int failures = run_verification(cfg, std::cout);
            if (failures > 0) {
                std::cerr << failures << " verification check(s) failed\n";
                return 3;
            }
        }

        if (run->parsed() || sweep_cmd->parsed()) {
            if (sweep_cmd->parsed() && !cfg.sweep) {
                throw ConfigError("sweep subcommand needs a sweep block in the config");
            }
            const auto files = run_experiment_to_dir(cfg, cfg.output.dir);
            for (const auto& f : files) std::printf("wrote %s\n", f.c_str());
            return 0;
        }

        if (kernels->parsed()) {
            if (bath_index < 0 || bath_index >= static_cast<int>(cfg.baths.size())) {
                throw ConfigError("bath index out of range");
            }
            const BathSpec bath = cfg.baths[bath_index].to_bath_spec();
            const double scale = cfg.model.frequency_scale();
            const double tmax = t_max_opt > 0 ? t_max_opt : 10.0 / scale;
            if (e_min == 0.0 && e_max == 0.0) {
                e_min = -4.0 * scale;
                e_max = 4.0 * scale;
            }
            std::filesystem::create_directories(cfg.output.dir);

            CsvTable ct;
            ct.header = {"t", "re_c", "im_c"};
            ct.columns.assign(3, {});
            for (int i = 1; i <= t_points; ++i) {
                const double t = tmax * i / t_points;  // C(0) can be singular (Drude)
                const Complex c = correlator(bath, t);
                ct.columns[0].push_back(t);
                ct.columns[1].push_back(c.real());
                ct.columns[2].push_back(c.imag());
            }
            write_csv(cfg.output.dir + "/correlator.csv", ct);

            CsvTable rt;
            rt.header = {"e", "w_prime", "w_double_prime", "v_prime", "v_double_prime"};
            rt.columns.assign(5, {});
            const auto grid = linear_grid(e_min, e_max, e_points);
            const RateTable table = build_rate_table(bath, grid);
            for (std::size_t i = 0; i < table.size(); ++i) {
                rt.columns[0].push_back(table.energies[i]);
                rt.columns[1].push_back(table.entries[i].wp);
                rt.columns[2].push_back(table.entries[i].wpp);
                rt.columns[3].push_back(table.entries[i].vp);
                rt.columns[4].push_back(table.entries[i].vpp);
            }
            write_csv(cfg.output.dir + "/rates.csv", rt);
            std::printf("wrote %s/correlator.csv and %s/rates.csv\n", cfg.output.dir.c_str(),
                        cfg.output.dir.c_str());
            return 0;
        }

        if (coeffs->parsed()) {
            if (cfg.model.type != ModelConfig::Type::HarmonicOscillator) {
                throw ConfigError("coeffs needs the harmonic-oscillator model");
            }
            std::vector<BathSpec> baths;
            for (const auto& b : cfg.baths) baths.push_back(b.to_bath_spec());
            const ExactOscillator osc(cfg.model.omega, baths);
            const double tmax = coeff_t_max > 0 ? coeff_t_max : 60.0 / cfg.model.omega;
            std::filesystem::create_directories(cfg.output.dir);
            CsvTable table;
            table.header = {"t", "gamma_q", "gamma_p", "d_q", "d_p"};
            table.columns.assign(5, {});
            for (int i = 1; i <= coeff_points; ++i) {
                const double t = tmax * i / coeff_points;
                try {
                    const auto c = osc.coefficients(t);
                    table.columns[0].push_back(t);
                    table.columns[1].push_back(c.gamma_q);
                    table.columns[2].push_back(c.gamma_p);
                    table.columns[3].push_back(c.d_q);
                    table.columns[4].push_back(c.d_p);
                } catch (const CoefficientSingularity&) {
                    // Known transient zeros of the denominator: skip the point.
                }
            }
            write_csv(cfg.output.dir + "/coefficients.csv", table);
            const auto a = osc.asymptotic();
            std::printf("asymptotic: gamma_q=%.12g gamma_p=%.12g d_q=%.12g d_p=%.12g\n",
                        a.gamma_q, a.gamma_p, a.d_q, a.d_p);
            std::printf("wrote %s/coefficients.csv\n", cfg.output.dir.c_str());
            return 0;
        }

        if (steady->parsed()) {
            const Experiment ex = build_experiment(cfg);
            std::filesystem::create_directories(cfg.output.dir);
            CsvTable table;
            table.header = {"method_index", "ground_pop", "min_eig", "dist_to_exact",
                            "dist_to_mean_force"};
            table.columns.assign(5, {});
            Matrix exact_ss;
            const bool have_exact = ex.has_exact();
            if (have_exact) exact_ss = method_steady_state(ex, Method::ExactHO);
            Matrix mf;
            const bool single_bath = ex.sys.couplings.size() == 1;
            if (single_bath) mf = mean_force_state(ex.sys, 0);
            for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
                const Method m = cfg.methods[k];
                const Matrix ss =
                    (m == Method::ExactHO) ? exact_ss : method_steady_state(ex, m);
                table.columns[0].push_back(static_cast<double>(k));
                table.columns[1].push_back(ss(0, 0).real());
                table.columns[2].push_back(min_eigenvalue(ss));
                table.columns[3].push_back(
                    have_exact ? trace_distance(ss, exact_ss)
                               : std::numeric_limits<double>::quiet_NaN());
                table.columns[4].push_back(
                    single_bath ? trace_distance(ss, mf)
                                : std::numeric_limits<double>::quiet_NaN());
                std::printf("%-10s ground_pop=%.10f min_eig=%+.3e%s\n",
                            method_name(m).c_str(), ss(0, 0).real(), min_eigenvalue(ss),
                            have_exact && m != Method::ExactHO
                                ? ("  dist_to_exact=" + std::to_string(trace_distance(ss, exact_ss)))
                                      .c_str()
                                : "");
            }
            write_csv(cfg.output.dir + "/steady.csv", table);
            std::printf("wrote %s/steady.csv\n", cfg.output.dir.c_str());
            return 0;
        }
        return 0;
    });
}
