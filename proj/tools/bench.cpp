// Benchmark comparing the OpenMP kernels against their serial references:
// rate-table construction, trajectory distance batches and sweep dispatch.
#include <Eigen/Core>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qme/bath.hpp"
#include "qme/generators.hpp"
#include "qme/linalg.hpp"
#include "qme/models.hpp"
#include "qme/propagate.hpp"

using namespace qme;

namespace {

double seconds(const std::function<void()>& body) {
    const auto start = std::chrono::steady_clock::now();
    body();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(stop - start).count();
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
    omp_set_num_threads(n);
#endif
    Eigen::setNbThreads(n);
}

}  // namespace

int main() {
    const int nthreads = max_threads();
    std::printf("benchmarking serial reference vs OpenMP (%d threads)\n\n", nthreads);

    // Rate table at Ising scale: every Bohr frequency of an L=9 chain.
    {
        const auto ops = build_ising_chain(8, 1.0);
        const auto eig = diagonalize(ops.hamiltonian);
        std::vector<double> bohr;
        bohr.reserve(eig.dim() * eig.dim());
        for (int n = 0; n < eig.dim(); ++n)
            for (int m = 0; m < eig.dim(); ++m) bohr.push_back(eig.energies(n) - eig.energies(m));

        const BathSpec bath{SpectralDensity::lorentz_drude(0.04, 5.0), 0.9, false};
        RateTable serial, parallel;
        const double ts = seconds([&] { serial = build_rate_table_serial(bath, bohr); });
        set_threads(nthreads);
        const double tp = seconds([&] { parallel = build_rate_table(bath, bohr); });

        bool identical = serial.size() == parallel.size();
        for (std::size_t i = 0; identical && i < serial.size(); ++i) {
            identical = serial.entries[i].wp == parallel.entries[i].wp &&
                        serial.entries[i].wpp == parallel.entries[i].wpp &&
                        serial.entries[i].vp == parallel.entries[i].vp &&
                        serial.entries[i].vpp == parallel.entries[i].vpp;
        }
        std::printf("rate table (%zu entries):   serial %.3fs   openmp %.3fs   speedup %.2fx   %s\n",
                    bohr.size(), ts, tp, ts / tp, identical ? "bitwise equal" : "MISMATCH");
    }

    // Distance batch over oscillator snapshots.
    {
        const int dim = 60, count = 64;
        std::mt19937 rng(7);
        std::normal_distribution<double> dist;
        std::vector<Matrix> a(count), b(count);
        for (int k = 0; k < count; ++k) {
            Matrix x = Matrix::Zero(dim, dim), y = Matrix::Zero(dim, dim);
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j) {
                    x(i, j) = Complex(dist(rng), dist(rng));
                    y(i, j) = Complex(dist(rng), dist(rng));
                }
            a[k] = hermitize_and_renormalize(x * x.adjoint());
            b[k] = hermitize_and_renormalize(y * y.adjoint());
        }
        std::vector<double> out_serial(count), out_parallel(count);
        set_threads(1);
        const double ts = seconds([&] {
            for (int k = 0; k < count; ++k) out_serial[k] = trace_distance(a[k], b[k]);
        });
        set_threads(nthreads);
        const double tp = seconds([&] {
#pragma omp parallel for schedule(static)
            for (int k = 0; k < count; ++k) out_parallel[k] = trace_distance(a[k], b[k]);
        });
        bool identical = true;
        for (int k = 0; k < count; ++k) identical = identical && out_serial[k] == out_parallel[k];
        std::printf("trace distances (%d x %dx%d): serial %.3fs   openmp %.3fs   speedup %.2fx   %s\n",
                    count, dim, dim, ts, tp, ts / tp, identical ? "bitwise equal" : "MISMATCH");
    }

    // Sweep dispatch: independent oscillator trajectories per cell.
    {
        const std::vector<double> temps{0.3, 0.6, 0.9, 1.2};
        const std::vector<double> gammas{0.1, 0.2};
        auto cell = [](double temperature, double coupling) {
            const auto ops = build_harmonic(1.0, 24);
            const BathSpec bath{
                SpectralDensity::lorentz_drude(coupling, 5.0, 1.0 / 3.14159265358979324),
                temperature, true};
            const auto sys = build_coupled_system(ops.hamiltonian, {{ops.coupling, bath}});
            IntegrateOptions opts;
            opts.step = 0.01;
            opts.output_stride = 100;
            opts.self_check = false;
            const auto traj =
                integrate(make_action(sys, Method::CCQME), gibbs_state(sys.eig, 1.0), 5.0, opts);
            return std::map<std::string, double>{{"ground_pop", traj.ground_pop.back()}};
        };
        set_threads(1);
        SweepResult serial, parallel;
        const double ts = seconds([&] { serial = sweep(temps, gammas, cell, false); });
        set_threads(nthreads);
        const double tp = seconds([&] { parallel = sweep(temps, gammas, cell, true); });
        bool identical = true;
        for (std::size_t k = 0; k < serial.cells.size(); ++k) {
            identical = identical && serial.cells[k].metrics.at("ground_pop") ==
                                         parallel.cells[k].metrics.at("ground_pop");
        }
        std::printf("sweep (%zu cells):          serial %.3fs   openmp %.3fs   speedup %.2fx   %s\n",
                    serial.cells.size(), ts, tp, ts / tp, identical ? "bitwise equal" : "MISMATCH");
    }
    return 0;
}
