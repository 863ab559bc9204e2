#include "qme/bath.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <algorithm>
#include <cmath>
#include <complex>
#include <exception>
#include <numbers>

#include "qme/special.hpp"

namespace qme {

namespace {

using std::numbers::pi;
using Complex = std::complex<double>;
constexpr Complex kJ{0.0, 1.0};

struct QuadControl {
    double abs_tol = 1e-9;
    double rel_tol = 1e-7;
};

QuadControl& quad_control() {
    static QuadControl ctl;
    return ctl;
}

template <typename F>
double integrate(F&& f, double a, double b) {
    if (a == b) return 0.0;
    double err = 0.0;
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double value = GK::integrate(std::forward<F>(f), a, b, 15, 1e-10, &err);
    const auto& ctl = quad_control();
    if (err > 100.0 * std::max(ctl.abs_tol, ctl.rel_tol * std::abs(value))) {
        throw QuadratureFailure("quadrature on [" + std::to_string(a) + ", " +
                                std::to_string(b) + "] achieved error estimate " +
                                std::to_string(err));
    }
    return value;
}

/// Tail integral over [b, inf) via the map nu = b/u, u in (0, 1].
template <typename F>
double integrate_tail(F&& f, double b) {
    return integrate([&](double u) { return f(b / u) * b / (u * u); }, 0.0, 1.0);
}

// g(x) = x/(e^x - 1), analytic through 0; g'(x) its derivative.
double bose_g(double x) {
    if (std::abs(x) < 1e-5) return 1.0 - x / 2.0 + x * x / 12.0;
    if (x > 700.0) return 0.0;
    if (x < -700.0) return -x;
    return x / std::expm1(x);
}

double bose_g_prime(double x) {
    if (std::abs(x) < 1e-4) return -0.5 + x / 6.0 - x * x * x / 180.0;
    if (x > 45.0) return (1.0 - x) * std::exp(-x);
    if (x < -45.0) return -1.0;
    const double em = std::expm1(x);
    const double ex = std::exp(x);
    return (em - x * ex) / (em * em);
}

// x/(1 - e^{-x}) = x + g(x).
double bose_gq(double x) { return x + bose_g(x); }

// d/domega of scale*J(omega)/omega (even in omega, so zero at 0).
double J_over_omega_deriv(const SpectralDensity& s, double w) {
    switch (s.family) {
        case SpectralDensity::Family::LorentzDrude: {
            const double r = 1.0 + (w / s.cutoff) * (w / s.cutoff);
            return s.correlator_scale * s.coupling * (-2.0 * w / (s.cutoff * s.cutoff)) / (r * r);
        }
        case SpectralDensity::Family::OhmicExp: {
            const double e = std::exp(-(w / s.cutoff) * (w / s.cutoff));
            return s.correlator_scale * (s.coupling / s.cutoff) * e *
                   (-2.0 * w / (s.cutoff * s.cutoff));
        }
    }
    return 0.0;
}

// f(nu) = scaled J(nu) n(nu) and h(nu) = scaled J(nu) (1 + n(nu)), both smooth
// through nu = 0, plus their nu-derivatives.
struct Occupied {
    const BathSpec& bath;
    double f(double nu) const {
        return eval_J_over_omega(bath.spectral, nu) * bath.temperature *
               bose_g(bath.beta() * nu);
    }
    double fp(double nu) const {
        return J_over_omega_deriv(bath.spectral, nu) * bath.temperature *
                   bose_g(bath.beta() * nu) +
               eval_J_over_omega(bath.spectral, nu) * bose_g_prime(bath.beta() * nu);
    }
    double h(double nu) const {
        return eval_J_over_omega(bath.spectral, nu) * bath.temperature *
               bose_gq(bath.beta() * nu);
    }
    double hp(double nu) const {
        return J_over_omega_deriv(bath.spectral, nu) * bath.temperature *
                   bose_gq(bath.beta() * nu) +
               eval_J_over_omega(bath.spectral, nu) * (1.0 + bose_g_prime(bath.beta() * nu));
    }
};

double frequency_cut(const BathSpec& bath) {
    // Beyond this point e^{-beta nu} and the Gaussian cutoff are below 1e-19.
    switch (bath.spectral.family) {
        case SpectralDensity::Family::LorentzDrude:
            return std::max(45.0 * bath.temperature, 10.0 * bath.spectral.cutoff);
        case SpectralDensity::Family::OhmicExp:
            return 6.6 * bath.spectral.cutoff;
    }
    return 0.0;
}

// Matsubara machinery for the Lorentz-Drude family.
struct DrudeMats {
    double beta;
    double nu1;   // 2 pi / beta
    double wD;
    double a;     // scale * gamma * wD^2
    Complex A;    // residue of the wD pole: (pi/2) a (cot(beta wD / 2) - i)

    double c(int k) const {
        const double nuk = nu1 * k;
        return nu1 * a * nuk / (nuk * nuk - wD * wD);
    }
};

DrudeMats drude_mats(const BathSpec& bath) {
    const auto& s = bath.spectral;
    if (s.family != SpectralDensity::Family::LorentzDrude) {
        throw NumericalError("Matsubara pole form requires a Lorentz-Drude density");
    }
    DrudeMats m;
    m.beta = bath.beta();
    m.nu1 = 2.0 * pi / m.beta;
    m.wD = s.cutoff;
    m.a = s.correlator_scale * s.coupling * s.cutoff * s.cutoff;
    const double half = 0.5 * m.beta * m.wD;
    if (std::abs(std::sin(half)) < 1e-9 * std::max(1.0, half)) {
        throw QuadratureFailure(
            "Drude cutoff resonant with a Matsubara frequency (beta*omega_D/2 near a "
            "multiple of pi); perturb omega_D or T");
    }
    m.A = 0.5 * pi * m.a * Complex(std::cos(half) / std::sin(half), -1.0);
    return m;
}

Complex drude_correlator(const BathSpec& bath, double t) {
    // t > 0. Exact pole sum: the full 1/k Matsubara series is resummed into
    // the log term; the remainder d_k decays like 1/k^3.
    const DrudeMats m = drude_mats(bath);
    const double x = std::exp(-m.nu1 * t);
    Complex out = m.A * std::exp(-m.wD * t);
    if (x > 0.0) out += -m.a * std::log1p(-x);
    double ek = x;
    for (int k = 1; k <= 1000000; ++k) {
        const double dk = m.c(k) - m.a / k;
        const double term = dk * ek;
        out += term;
        ek *= x;
        if (std::abs(dk) * ek < 1e-15 * (std::abs(out) + m.a) && m.nu1 * k > 2.0 * m.wD) break;
    }
    return out;
}

Complex ohmic_correlator(const BathSpec& bath, double t) {
    const double beta = bath.beta();
    const double cut = frequency_cut(bath);
    const double re = integrate(
        [&](double w) {
            // J coth(bw/2) cos(wt) written with the smooth even factor
            // w coth(bw/2) = w + 2 T g(bw).
            const double wcoth = w + 2.0 * bath.temperature * bose_g(beta * w);
            return eval_J_over_omega(bath.spectral, w) * wcoth * std::cos(w * t);
        },
        0.0, cut);
    const double im = -integrate(
        [&](double w) {
            return eval_J_over_omega(bath.spectral, w) * w * std::sin(w * t);
        },
        0.0, cut);
    return Complex(re, im);
}

}  // namespace

SpectralDensity SpectralDensity::lorentz_drude(double gamma, double omega_d, double scale) {
    if (gamma <= 0.0 || omega_d <= 0.0) throw ConfigError("Lorentz-Drude parameters must be positive");
    return SpectralDensity{Family::LorentzDrude, gamma, omega_d, scale};
}

SpectralDensity SpectralDensity::ohmic_exp(double lambda, double omega_c, double scale) {
    if (lambda <= 0.0 || omega_c <= 0.0) throw ConfigError("Ohmic parameters must be positive");
    return SpectralDensity{Family::OhmicExp, lambda, omega_c, scale};
}

double eval_J(const SpectralDensity& spec, double omega) {
    if (omega < 0.0) throw NegativeFrequency("spectral density evaluated at negative frequency");
    switch (spec.family) {
        case SpectralDensity::Family::LorentzDrude:
            return spec.coupling * omega / (1.0 + (omega / spec.cutoff) * (omega / spec.cutoff));
        case SpectralDensity::Family::OhmicExp:
            return spec.coupling * (omega / spec.cutoff) *
                   std::exp(-(omega / spec.cutoff) * (omega / spec.cutoff));
    }
    return 0.0;
}

double eval_J_over_omega(const SpectralDensity& spec, double omega) {
    switch (spec.family) {
        case SpectralDensity::Family::LorentzDrude:
            return spec.correlator_scale * spec.coupling /
                   (1.0 + (omega / spec.cutoff) * (omega / spec.cutoff));
        case SpectralDensity::Family::OhmicExp:
            return spec.correlator_scale * (spec.coupling / spec.cutoff) *
                   std::exp(-(omega / spec.cutoff) * (omega / spec.cutoff));
    }
    return 0.0;
}

double kappa0(const SpectralDensity& spec) {
    switch (spec.family) {
        case SpectralDensity::Family::LorentzDrude:
            return pi * spec.correlator_scale * spec.coupling * spec.cutoff;
        case SpectralDensity::Family::OhmicExp:
            return std::sqrt(pi) * spec.correlator_scale * spec.coupling;
    }
    return 0.0;
}

double counterterm_shift(const BathSpec& bath) {
    return bath.counterterm ? 0.5 * kappa0(bath.spectral) : 0.0;
}

double bose_weight(double beta, double E) {
    return bose_g(beta * E) / beta;
}

std::complex<double> correlator(const BathSpec& bath, double t) {
    if (t < 0.0) return std::conj(correlator(bath, -t));
    switch (bath.spectral.family) {
        case SpectralDensity::Family::LorentzDrude:
            if (t == 0.0) {
                throw QuadratureFailure(
                    "C(0) diverges logarithmically for the Lorentz-Drude density");
            }
            return drude_correlator(bath, t);
        case SpectralDensity::Family::OhmicExp:
            return ohmic_correlator(bath, t);
    }
    return {};
}

double imag_time_correlator(const BathSpec& bath, double u) {
    const double beta = bath.beta();
    if (u < 0.0 || u > beta) throw OutOfDomain("imaginary-time argument outside [0, beta]");
    const double cut = frequency_cut(bath);
    const double core = integrate(
        [&](double w) {
            // (n+1)e^{-wu} + n e^{wu}, written overflow-safe and u <-> beta-u symmetric.
            const double env = std::exp(-w * u) + std::exp(-w * (beta - u));
            return eval_J_over_omega(bath.spectral, w) * bath.temperature *
                   bose_gq(beta * w) * env;
        },
        0.0, cut);
    double tail = 0.0;
    if (bath.spectral.family == SpectralDensity::Family::LorentzDrude) {
        // Beyond the cut J ~ a/w and the occupation is 1; exponential-integral tails.
        const double a = bath.spectral.correlator_scale * bath.spectral.coupling *
                         bath.spectral.cutoff * bath.spectral.cutoff;
        const double umin = std::min(u, beta - u);
        if (umin * cut < 40.0) {
            if (umin <= 0.0) {
                throw QuadratureFailure(
                    "imaginary-time correlator diverges at the interval endpoints for "
                    "Lorentz-Drude");
            }
            tail = a * (boost::math::expint(1, cut * u) + boost::math::expint(1, cut * (beta - u)));
        }
    }
    return core + tail;
}

double imag_time_correlator_matsubara(const BathSpec& bath, double u) {
    const DrudeMats m = drude_mats(bath);
    if (u <= 0.0 || u >= m.beta) throw OutOfDomain("Matsubara form needs u inside (0, beta)");
    const double theta = m.nu1 * u;
    // sum_k cos(k theta)/nu_k resums to -ln(2 sin(theta/2))/nu1.
    double s = -std::log(2.0 * std::sin(0.5 * theta)) / m.nu1;
    for (int k = 1; k <= 2000000; ++k) {
        const double nuk = m.nu1 * k;
        const double resid = -m.wD / (nuk * (m.wD + nuk));
        s += std::cos(k * theta) * resid;
        if (std::abs(resid) < 1e-14 / m.wD && k > 50) break;
    }
    return (pi * m.a / m.beta) * (1.0 / m.wD + 2.0 * s);
}

double W_prime_explicit(const BathSpec& bath, double E) {
    return pi * eval_J_over_omega(bath.spectral, std::abs(E)) * bose_weight(bath.beta(), E);
}

double V_prime_explicit(const BathSpec& bath, double E) {
    const double sgn = (E > 0.0) - (E < 0.0);
    return pi * (J_over_omega_deriv(bath.spectral, std::abs(E)) * sgn * bath.temperature *
                     bose_g(bath.beta() * E) +
                 eval_J_over_omega(bath.spectral, std::abs(E)) * bose_g_prime(bath.beta() * E));
}

namespace {

// Closed-form Drude W(E) from the pole sum: partial fractions in the Matsubara
// index give digamma functions.
Complex drude_W(const BathSpec& bath, double E) {
    const DrudeMats m = drude_mats(bath);
    const Complex alpha = 1.0 / (2.0 * Complex(m.wD, E));
    const Complex beta_c = 1.0 / (2.0 * Complex(-m.wD, E));
    const Complex delta = kJ * E / (E * E + m.wD * m.wD);
    const Complex S = -(alpha * digamma(Complex(1.0 - m.wD / m.nu1, 0.0)) +
                        beta_c * digamma(Complex(1.0 + m.wD / m.nu1, 0.0)) +
                        delta * digamma(Complex(1.0, E / m.nu1))) /
                      m.nu1;
    const Complex w = m.A / Complex(m.wD, E) + m.nu1 * m.a * S;
    // The closed form is exact but loses relative accuracy in the real part
    // where W' is exponentially small; the explicit formula is the same
    // function evaluated stably.
    return Complex(W_prime_explicit(bath, E), w.imag());
}

Complex drude_V(const BathSpec& bath, double E) {
    const DrudeMats m = drude_mats(bath);
    const Complex dwE{m.wD, E};
    const Complex alpha_p = -kJ / (2.0 * dwE * dwE);
    const Complex mwE{-m.wD, E};
    const Complex beta_p = -kJ / (2.0 * mwE * mwE);
    const double r2 = E * E + m.wD * m.wD;
    const Complex delta = kJ * E / r2;
    const Complex delta_p = kJ * (m.wD * m.wD - E * E) / (r2 * r2);
    const Complex Sp = -(alpha_p * digamma(Complex(1.0 - m.wD / m.nu1, 0.0)) +
                         beta_p * digamma(Complex(1.0 + m.wD / m.nu1, 0.0)) +
                         delta_p * digamma(Complex(1.0, E / m.nu1)) +
                         delta * (kJ / m.nu1) * trigamma(Complex(1.0, E / m.nu1))) /
                       m.nu1;
    return -kJ * m.A / (dwE * dwE) + m.nu1 * m.a * Sp;
}

// d/dE of the principal-value integral P int_0^inf f(nu)/(nu - E) dnu, E > 0,
// with the singular subtraction done analytically.
template <typename Fn, typename FnP>
double pv_derivative(Fn&& f, FnP&& fp, double E, double cut) {
    const double fE = f(E);
    const double fpE = fp(E);
    auto reg = [&](double nu) {
        const double d = nu - E;
        if (std::abs(d) < 1e-5 * std::max(E, 1.0)) {
            // l'Hopital form of the twice-subtracted residue; limit f''(E)/2.
            // Quadrature nodes are interior, so d never vanishes exactly.
            return (fp(nu) - fpE) / (2.0 * d);
        }
        return (f(nu) - fE - fpE * d) / (d * d);
    };
    double out = -2.0 * fE / E;
    out += integrate(reg, 0.0, E) + integrate(reg, E, 2.0 * E);
    const double b = std::max(2.0 * E, cut);
    out += integrate([&](double nu) { return f(nu) / ((nu - E) * (nu - E)); }, 2.0 * E, b);
    out += integrate_tail([&](double nu) { return f(nu) / ((nu - E) * (nu - E)); }, b);
    return out;
}

// P int_0^inf f(nu)/(nu - E) dnu for E > 0 by symmetric-interval subtraction.
template <typename Fn>
double pv_integral(Fn&& f, double E, double cut) {
    const double fE = f(E);
    auto reg = [&](double nu) {
        const double d = nu - E;
        if (std::abs(d) < 1e-10 * std::max(E, 1.0)) return 0.0;
        return (f(nu) - fE) / d;
    };
    double out = integrate(reg, 0.0, E) + integrate(reg, E, 2.0 * E);
    const double b = std::max(2.0 * E, cut);
    out += integrate([&](double nu) { return f(nu) / (nu - E); }, 2.0 * E, b);
    out += integrate_tail([&](double nu) { return f(nu) / (nu - E); }, b);
    return out;
}

double Wpp_quadrature(const BathSpec& bath, double E) {
    const Occupied occ{bath};
    const double cut = frequency_cut(bath);
    if (E == 0.0) return -0.5 * kappa0(bath.spectral);
    if (E > 0.0) {
        const double part_f = pv_integral([&](double nu) { return occ.f(nu); }, E, cut);
        double part_h = integrate([&](double nu) { return occ.h(nu) / (nu + E); }, 0.0, cut);
        part_h += integrate_tail([&](double nu) { return occ.h(nu) / (nu + E); }, cut);
        return part_f - part_h;
    }
    const double x = -E;
    double part_f = integrate([&](double nu) { return occ.f(nu) / (nu + x); }, 0.0, cut);
    part_f += integrate_tail([&](double nu) { return occ.f(nu) / (nu + x); }, cut);
    const double part_h = pv_integral([&](double nu) { return occ.h(nu); }, x, cut);
    return part_f - part_h;
}

double Vpp_quadrature(const BathSpec& bath, double E) {
    const Occupied occ{bath};
    const double cut = frequency_cut(bath);
    if (E == 0.0) throw OutOfDomain("V''(0) is singular");
    if (E > 0.0) {
        double out = pv_derivative([&](double nu) { return occ.f(nu); },
                                   [&](double nu) { return occ.fp(nu); }, E, cut);
        out += integrate([&](double nu) { return occ.h(nu) / ((nu + E) * (nu + E)); }, 0.0, cut);
        out += integrate_tail([&](double nu) { return occ.h(nu) / ((nu + E) * (nu + E)); }, cut);
        return out;
    }
    const double x = -E;
    double out = integrate([&](double nu) { return occ.f(nu) / ((nu + x) * (nu + x)); }, 0.0, cut);
    out += integrate_tail([&](double nu) { return occ.f(nu) / ((nu + x) * (nu + x)); }, cut);
    out += pv_derivative([&](double nu) { return occ.h(nu); },
                         [&](double nu) { return occ.hp(nu); }, x, cut);
    return out;
}

Complex drude_W_finite(const BathSpec& bath, double E, double t) {
    // W(E, t) = W(E, inf) - remainder; the remainder series gains e^{-nu_k t}.
    const DrudeMats m = drude_mats(bath);
    Complex corr = m.A * std::exp(-Complex(m.wD, E) * t) / Complex(m.wD, E);
    for (int k = 1; k <= 2000000; ++k) {
        const double nuk = m.nu1 * k;
        const Complex term = m.c(k) * std::exp(-Complex(nuk, E) * t) / Complex(nuk, E);
        corr += term;
        if (std::abs(term) < 1e-17 * (std::abs(corr) + m.a / m.wD) && nuk * t > 3.0) break;
    }
    return drude_W(bath, E) - corr;
}

Complex ohmic_W_finite(const BathSpec& bath, double E, double t) {
    const double re = integrate(
        [&](double tau) {
            const Complex c = correlator(bath, tau) * std::exp(-kJ * E * tau);
            return c.real();
        },
        0.0, t);
    const double im = integrate(
        [&](double tau) {
            const Complex c = correlator(bath, tau) * std::exp(-kJ * E * tau);
            return c.imag();
        },
        0.0, t);
    return Complex(re, im);
}

}  // namespace

std::complex<double> half_fourier_W(const BathSpec& bath, double E) {
    Complex w;
    switch (bath.spectral.family) {
        case SpectralDensity::Family::LorentzDrude:
            w = drude_W(bath, E);
            break;
        case SpectralDensity::Family::OhmicExp:
            w = Complex(W_prime_explicit(bath, E), Wpp_quadrature(bath, E));
            break;
    }
    return w + kJ * counterterm_shift(bath);
}

std::complex<double> half_fourier_W_finite(const BathSpec& bath, double E, double horizon) {
    if (horizon < 0.0) throw OutOfDomain("horizon must be nonnegative");
    if (horizon == 0.0) return 0.0;
    if (std::isinf(horizon)) return half_fourier_W(bath, E);
    switch (bath.spectral.family) {
        case SpectralDensity::Family::LorentzDrude:
            return drude_W_finite(bath, E, horizon);
        case SpectralDensity::Family::OhmicExp:
            return ohmic_W_finite(bath, E, horizon);
    }
    return {};
}

std::complex<double> half_fourier_W(const BathSpec& bath, double E, double horizon) {
    return std::isinf(horizon) ? half_fourier_W(bath, E)
                               : half_fourier_W_finite(bath, E, horizon);
}

std::complex<double> deriv_V(const BathSpec& bath, double E) {
    switch (bath.spectral.family) {
        case SpectralDensity::Family::LorentzDrude:
            return drude_V(bath, E);
        case SpectralDensity::Family::OhmicExp:
            return Complex(V_prime_explicit(bath, E), Vpp_quadrature(bath, E));
    }
    return {};
}

std::complex<double> half_fourier_W_quadrature(const BathSpec& bath, double E) {
    return Complex(W_prime_explicit(bath, E), Wpp_quadrature(bath, E)) +
           kJ * counterterm_shift(bath);
}

std::complex<double> deriv_V_quadrature(const BathSpec& bath, double E) {
    return Complex(V_prime_explicit(bath, E), Vpp_quadrature(bath, E));
}

RateTable build_rate_table(const BathSpec& bath, const std::vector<double>& bohr_frequencies,
                           double horizon) {
    if (!std::isinf(horizon) && bath.counterterm) {
        throw UnsupportedBathCombination(
            "finite-horizon rates with an active counter-term are not supported");
    }
    RateTable table;
    table.horizon = horizon;
    table.energies = bohr_frequencies;
    table.entries.resize(bohr_frequencies.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(bohr_frequencies.size()); ++i) {
        try {
            const double E = bohr_frequencies[i];
            const Complex w = half_fourier_W(bath, E, horizon);
            const Complex v = deriv_V(bath, E);
            table.entries[i] = RateEntry{w.real(), w.imag(), v.real(), v.imag()};
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return table;
}

RateTable build_rate_table_serial(const BathSpec& bath,
                                  const std::vector<double>& bohr_frequencies, double horizon) {
    if (!std::isinf(horizon) && bath.counterterm) {
        throw UnsupportedBathCombination(
            "finite-horizon rates with an active counter-term are not supported");
    }
    RateTable table;
    table.horizon = horizon;
    table.energies = bohr_frequencies;
    table.entries.resize(bohr_frequencies.size());
    for (std::size_t i = 0; i < bohr_frequencies.size(); ++i) {
        const double E = bohr_frequencies[i];
        const Complex w = half_fourier_W(bath, E, horizon);
        const Complex v = deriv_V(bath, E);
        table.entries[i] = RateEntry{w.real(), w.imag(), v.real(), v.imag()};
    }
    return table;
}

}  // namespace qme
