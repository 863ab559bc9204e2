#pragma once

#include <array>
#include <vector>

#include "qme/bath.hpp"
#include "qme/linalg.hpp"

namespace qme {

/// System autocorrelation G(t) of the damped oscillator in root-residue form:
/// G(t) = sum_i r_i exp(z_i t), the inverse Laplace transform of
/// (omega_D + z) / (z^3 + z^2 w_D + z (Omega^2 + gamma_cl w_D) + w_D Omega^2),
/// where gamma_cl = pi * sum_i scale_i * gamma_i is the total classical
/// damping strength of the attached Drude baths (all sharing one cutoff).
struct GreenFunction {
    double omega = 0.0;
    double omega_d = 0.0;
    double gamma_cl = 0.0;
    std::array<Complex, 3> roots{};
    std::array<Complex, 3> residues{};

    double g(double t) const;
    double g_dot(double t) const;
    double g_ddot(double t) const;
    double g_dddot(double t) const;
};

/// Solves the cubic and checks G(0) = 0, Gdot(0) = 1 and root stability.
/// Throws UnsupportedBathCombination for differing cutoffs or non-Drude
/// baths, RepeatedRoots near a confluent cubic.
GreenFunction green_function(double omega, const std::vector<BathSpec>& baths);

struct ExactCoefficients {
    double gamma_q = 0.0;
    double gamma_p = 0.0;
    double d_q = 0.0;
    double d_p = 0.0;
};

struct InfluenceKernels {
    std::vector<double> t;
    std::vector<double> kq, kp;
    std::vector<double> kq_dot, kq_ddot, kp_dot;
};

/// The exact oscillator bundle: Green function plus the bath noise kernel
/// Re C(t) as an exponential pole sum, from which the influence kernels and
/// all master-equation coefficients follow in closed form at any time.
class ExactOscillator {
  public:
    ExactOscillator(double omega, std::vector<BathSpec> baths);

    const GreenFunction& green() const { return green_; }
    const std::vector<BathSpec>& baths() const { return baths_; }

    /// Convolution moments m_G(t) = int_0^t Re C(t-u) G(u) du and the same
    /// with Gdot; exact up to the resummed Matsubara tail.
    double m_g(double t) const;
    double m_gdot(double t) const;

    double kq(double t) const;
    double kp(double t) const;
    double kq_dot(double t) const;
    double kq_ddot(double t) const;
    double kp_dot(double t) const;

    double kq_infinity() const;
    double kp_infinity() const;

    /// Time-dependent coefficients of the exact master equation. Throws
    /// CoefficientSingularity at transient zeros of Gdot^2 - G Gddot.
    ExactCoefficients coefficients(double t) const;

    /// Asymptotic coefficients: damping from the two slowest roots, diffusion
    /// from the kernel limits.
    ExactCoefficients asymptotic() const;

    InfluenceKernels kernels_on_grid(const std::vector<double>& t_grid) const;

  private:
    struct Term {
        Complex exponent;
        Complex coefficient;
    };

    double eval(const std::vector<Term>& sum, double t) const;

    GreenFunction green_;
    std::vector<BathSpec> baths_;
    std::vector<Term> mg_terms_;     // exponential-sum form of m_G
    std::vector<Term> mgdot_terms_;  // exponential-sum form of m_Gdot
};

/// Dense application of the exact master equation in the truncated Fock
/// basis with fixed (asymptotic) coefficients.
struct ExactGenerator {
    Matrix q, p, h_eff;  // h_eff = (p^2 + gamma_q q^2)/2
    ExactCoefficients coeffs;

    Matrix apply(const Matrix& rho) const;
};

ExactGenerator make_exact_generator(double omega, int levels, const ExactCoefficients& coeffs);

/// Vectorized form for null-space steady states.
VectorizedGenerator vectorize_exact(const ExactGenerator& gen);

}  // namespace qme
