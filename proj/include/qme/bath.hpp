#pragma once

#include <complex>
#include <limits>
#include <vector>

#include "qme/errors.hpp"

namespace qme {

inline constexpr double kInfiniteHorizon = std::numeric_limits<double>::infinity();

/// Spectral density families. `coupling`/`cutoff` are the printed formula
/// parameters (gamma, omega_D) or (lambda, omega_c). `correlator_scale`
/// multiplies J inside every correlation-function integral: 1/pi for baths
/// specified through a classical damping kernel (Caldeira-Leggett oscillator
/// baths), 1 for densities defined directly as sum_k g_k^2 delta(w - w_k).
struct SpectralDensity {
    enum class Family { LorentzDrude, OhmicExp };

    Family family = Family::LorentzDrude;
    double coupling = 0.0;
    double cutoff = 0.0;
    double correlator_scale = 1.0;

    static SpectralDensity lorentz_drude(double gamma, double omega_d, double scale = 1.0);
    static SpectralDensity ohmic_exp(double lambda, double omega_c, double scale = 1.0);
};

/// J(w) exactly as printed: gamma*w/(1+w^2/w_D^2) or lambda*(w/w_c)*exp(-w^2/w_c^2).
/// Throws NegativeFrequency for w < 0. The correlator scale is NOT applied here.
double eval_J(const SpectralDensity& spec, double omega);

/// scale * J(w)/w, smooth through w = 0.
double eval_J_over_omega(const SpectralDensity& spec, double omega);

struct BathSpec {
    SpectralDensity spectral;
    double temperature = 1.0;  // k_B = 1, energy units
    bool counterterm = false;

    double beta() const { return 1.0 / temperature; }
};

/// Zero-time damping kernel kappa(0) = 2 * integral of scale*J(w)/w dw
/// (closed form per family). The counter-term Hamiltonian is kappa(0) S^2 / 2.
double kappa0(const SpectralDensity& spec);

/// Constant added to W''(E) when the counter-term flag is active. Equals
/// +kappa(0)/2: with S_nm W(Delta_nm) entering the dissipator, a uniform
/// W'' shift c contributes exactly -i[c S^2, rho], so c = kappa(0)/2
/// reproduces the renormalization Hamiltonian at both the generator and the
/// canonical-correction level.
double counterterm_shift(const BathSpec& bath);

/// Bath correlation function C(t) = integral of scale*J(w) *
/// [coth(bw/2)cos(wt) - i sin(wt)] dw. Lorentz-Drude uses the exact Matsubara
/// pole sum (t != 0; C(0) is log-divergent for this family), OhmicExp adaptive
/// quadrature. C(-t) = conj(C(t)).
std::complex<double> correlator(const BathSpec& bath, double t);

/// Imaginary-time correlator C(-iu) for u in [0, beta]. Finite on the open
/// interval; the Lorentz-Drude endpoints diverge logarithmically.
double imag_time_correlator(const BathSpec& bath, double u);

/// Matsubara-sum evaluation of C(-iu), Lorentz-Drude only (verification route).
double imag_time_correlator_matsubara(const BathSpec& bath, double u);

/// Half Fourier transform W(E) = integral_0^inf C(t) exp(-iEt) dt at infinite
/// horizon. Lorentz-Drude: digamma closed form; OhmicExp: explicit W' plus
/// principal-value quadrature for W''. Counter-term shift applied if flagged.
std::complex<double> half_fourier_W(const BathSpec& bath, double E);

/// Finite-horizon W(E, t) = integral_0^t C(tau) exp(-iE tau) dtau. No
/// counter-term shift (the renormalization is a static Hamiltonian).
std::complex<double> half_fourier_W_finite(const BathSpec& bath, double E, double horizon);

/// Dispatches on the horizon.
std::complex<double> half_fourier_W(const BathSpec& bath, double E, double horizon);

/// W'(E) from the explicit J * occupation formula (independent of the
/// closed-form route; used by it for OhmicExp and as an oracle for Drude).
double W_prime_explicit(const BathSpec& bath, double E);

/// Analytic derivative of W_prime_explicit.
double V_prime_explicit(const BathSpec& bath, double E);

/// V(E) = dW/dE at infinite horizon. Counter-term independent.
std::complex<double> deriv_V(const BathSpec& bath, double E);

/// Generic quadrature routes, used as verification oracles.
std::complex<double> half_fourier_W_quadrature(const BathSpec& bath, double E);
std::complex<double> deriv_V_quadrature(const BathSpec& bath, double E);

struct RateEntry {
    double wp = 0.0;   // W'
    double wpp = 0.0;  // W''
    double vp = 0.0;   // V'
    double vpp = 0.0;  // V''
};

/// Rates, Lamb shifts and their energy derivatives on a list of Bohr
/// frequencies. V entries are always asymptotic (V(E, t) is never consumed).
struct RateTable {
    std::vector<double> energies;
    std::vector<RateEntry> entries;
    double horizon = kInfiniteHorizon;

    std::size_t size() const { return energies.size(); }
};

RateTable build_rate_table(const BathSpec& bath, const std::vector<double>& bohr_frequencies,
                           double horizon = kInfiniteHorizon);

/// Serial reference for the parallel table builder; kept for tests and the
/// benchmark. Results are bitwise identical.
RateTable build_rate_table_serial(const BathSpec& bath,
                                  const std::vector<double>& bohr_frequencies,
                                  double horizon = kInfiniteHorizon);

/// Bose occupation E * n_B(E) = T * g(beta E) with g(x) = x/(e^x - 1),
/// continuous through E = 0.
double bose_weight(double beta, double E);

}  // namespace qme
