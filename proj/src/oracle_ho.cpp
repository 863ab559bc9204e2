#include "qme/oracle_ho.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "qme/special.hpp"

namespace qme {

namespace {

using std::numbers::pi;

// (exp(x t) - 1)/x, stable for small |x t|.
Complex expm1_over(Complex x, double t) {
    const Complex xt = x * t;
    if (std::abs(xt) < 1e-6) return t * (1.0 + xt / 2.0 + xt * xt / 6.0);
    return (std::exp(xt) - 1.0) / x;
}

// Drude + Matsubara pole decomposition of Re C(t) for one bath:
//   Re C(t) = sum_j c_j exp(-mu_j t) + a * sum_{k>K} exp(-k nu1 t)/k,
// the second piece entering only through its first moments.
struct NoisePoles {
    std::vector<double> mu;
    std::vector<double> c;
    double a = 0.0;
    double nu1 = 0.0;
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;  // moments of the resummed tail
};

// sum_{k>K} k^{-s} via Euler-Maclaurin, accurate to ~1e-12 for K >= 100.
double zeta_tail(int K, int s) {
    const double k = K;
    switch (s) {
        case 2:
            return 1.0 / k - 1.0 / (2.0 * k * k) + 1.0 / (6.0 * k * k * k);
        case 3:
            return 1.0 / (2.0 * k * k) - 1.0 / (2.0 * k * k * k) + 1.0 / (4.0 * k * k * k * k);
        case 4: {
            const double k3 = k * k * k;
            return 1.0 / (3.0 * k3) - 1.0 / (2.0 * k3 * k) + 1.0 / (3.0 * k3 * k * k);
        }
        default:
            throw NumericalError("unsupported zeta tail order");
    }
}

NoisePoles noise_poles(const BathSpec& bath) {
    const auto& s = bath.spectral;
    if (s.family != SpectralDensity::Family::LorentzDrude) {
        throw UnsupportedBathCombination("exact oscillator oracle requires Lorentz-Drude baths");
    }
    NoisePoles np;
    const double beta = bath.beta();
    np.nu1 = 2.0 * pi / beta;
    np.a = s.correlator_scale * s.coupling * s.cutoff * s.cutoff;
    const double wD = s.cutoff;
    const double half = 0.5 * beta * wD;
    if (std::abs(std::sin(half)) < 1e-9 * std::max(1.0, half)) {
        throw QuadratureFailure("Drude cutoff resonant with a Matsubara frequency");
    }

    // Pole count: the neglected 1/k^3 residuals contribute below ~1e-10.
    const int K = std::max(400, static_cast<int>(std::cbrt(np.a * wD * wD /
                                                           (np.nu1 * np.nu1 * np.nu1) * 1e10)));
    np.mu.reserve(K + 1);
    np.c.reserve(K + 1);
    np.mu.push_back(wD);
    np.c.push_back(0.5 * pi * np.a * std::cos(half) / std::sin(half));
    for (int k = 1; k <= K; ++k) {
        const double nuk = np.nu1 * k;
        np.mu.push_back(nuk);
        np.c.push_back(np.nu1 * np.a * nuk / (nuk * nuk - wD * wD));
    }
    // Poles beyond K are approximated by the a/k series and enter only
    // through the first three moments of that resummed tail.
    np.m0 = (1.0 / np.nu1) * zeta_tail(K, 2);
    np.m1 = (1.0 / (np.nu1 * np.nu1)) * zeta_tail(K, 3);
    np.m2 = (2.0 / (np.nu1 * np.nu1 * np.nu1)) * zeta_tail(K, 4);
    return np;
}

}  // namespace

double GreenFunction::g(double t) const {
    Complex out = 0.0;
    for (int i = 0; i < 3; ++i) out += residues[i] * std::exp(roots[i] * t);
    return out.real();
}

double GreenFunction::g_dot(double t) const {
    Complex out = 0.0;
    for (int i = 0; i < 3; ++i) out += residues[i] * roots[i] * std::exp(roots[i] * t);
    return out.real();
}

double GreenFunction::g_ddot(double t) const {
    Complex out = 0.0;
    for (int i = 0; i < 3; ++i)
        out += residues[i] * roots[i] * roots[i] * std::exp(roots[i] * t);
    return out.real();
}

double GreenFunction::g_dddot(double t) const {
    Complex out = 0.0;
    for (int i = 0; i < 3; ++i)
        out += residues[i] * roots[i] * roots[i] * roots[i] * std::exp(roots[i] * t);
    return out.real();
}

GreenFunction green_function(double omega, const std::vector<BathSpec>& baths) {
    if (baths.empty()) throw ConfigError("oscillator oracle needs at least one bath");
    double gamma_cl = 0.0;
    double wD = 0.0;
    for (std::size_t i = 0; i < baths.size(); ++i) {
        const auto& s = baths[i].spectral;
        if (s.family != SpectralDensity::Family::LorentzDrude) {
            throw UnsupportedBathCombination("oscillator oracle requires Lorentz-Drude baths");
        }
        if (i == 0) {
            wD = s.cutoff;
        } else if (std::abs(s.cutoff - wD) > 1e-12 * wD) {
            throw UnsupportedBathCombination(
                "oscillator oracle requires a common Drude cutoff across baths");
        }
        gamma_cl += pi * s.correlator_scale * s.coupling;
    }

    GreenFunction g;
    g.omega = omega;
    g.omega_d = wD;
    g.gamma_cl = gamma_cl;

    // Companion-matrix roots of z^3 + a2 z^2 + a1 z + a0.
    const double a2 = wD;
    const double a1 = omega * omega + gamma_cl * wD;
    const double a0 = wD * omega * omega;
    Eigen::Matrix3d comp = Eigen::Matrix3d::Zero();
    comp(0, 2) = -a0;
    comp(1, 2) = -a1;
    comp(2, 2) = -a2;
    comp(1, 0) = 1.0;
    comp(2, 1) = 1.0;
    Eigen::EigenSolver<Eigen::Matrix3d> solver(comp);
    for (int i = 0; i < 3; ++i) g.roots[i] = solver.eigenvalues()(i);

    double max_abs = 0.0;
    for (const auto& z : g.roots) max_abs = std::max(max_abs, std::abs(z));
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            if (std::abs(g.roots[i] - g.roots[j]) < 1e-8 * max_abs) {
                throw RepeatedRoots("confluent cubic roots; perturb gamma or omega_D");
            }
        }
        if (g.roots[i].real() >= 0.0) {
            throw NumericalError("unstable Green-function root with nonnegative real part");
        }
    }

    for (int i = 0; i < 3; ++i) {
        Complex denom = 1.0;
        for (int j = 0; j < 3; ++j) {
            if (j != i) denom *= g.roots[i] - g.roots[j];
        }
        g.residues[i] = (wD + g.roots[i]) / denom;
    }

    Complex sum0 = g.residues[0] + g.residues[1] + g.residues[2];
    Complex sum1 = 0.0;
    for (int i = 0; i < 3; ++i) sum1 += g.residues[i] * g.roots[i];
    if (std::abs(sum0) > 1e-10 || std::abs(sum1 - 1.0) > 1e-10) {
        throw NumericalError("Green-function initial conditions violated");
    }
    return g;
}

ExactOscillator::ExactOscillator(double omega, std::vector<BathSpec> baths)
    : green_(green_function(omega, baths)), baths_(std::move(baths)) {
    // m_G(t) as an exponential sum: per pole mu_j and root z_i,
    //   c_j r_i (e^{z_i t} - e^{-mu_j t})/(z_i + mu_j),
    // collapsed into one coefficient per distinct exponent. The resummed
    // Matsubara tail enters through moment corrections attached to the
    // root exponents.
    std::array<Complex, 3> alpha{}, alpha_dot{};
    for (const auto& bath : baths_) {
        const NoisePoles np = noise_poles(bath);
        for (std::size_t j = 0; j < np.mu.size(); ++j) {
            Complex beta_j = 0.0, beta_dot_j = 0.0;
            for (int i = 0; i < 3; ++i) {
                const Complex w = 1.0 / (green_.roots[i] + np.mu[j]);
                alpha[i] += green_.residues[i] * np.c[j] * w;
                alpha_dot[i] += green_.residues[i] * green_.roots[i] * np.c[j] * w;
                beta_j -= green_.residues[i] * np.c[j] * w;
                beta_dot_j -= green_.residues[i] * green_.roots[i] * np.c[j] * w;
            }
            mg_terms_.push_back({Complex(-np.mu[j], 0.0), beta_j});
            mgdot_terms_.push_back({Complex(-np.mu[j], 0.0), beta_dot_j});
        }
        for (int i = 0; i < 3; ++i) {
            const Complex z = green_.roots[i];
            const Complex mom = np.a * (np.m0 - np.m1 * z + 0.5 * np.m2 * z * z);
            alpha[i] += green_.residues[i] * mom;
            alpha_dot[i] += green_.residues[i] * z * mom;
        }
    }
    for (int i = 0; i < 3; ++i) {
        mg_terms_.push_back({green_.roots[i], alpha[i]});
        mgdot_terms_.push_back({green_.roots[i], alpha_dot[i]});
    }
}

double ExactOscillator::eval(const std::vector<Term>& sum, double t) const {
    Complex out = 0.0;
    for (const auto& term : sum) out += term.coefficient * std::exp(term.exponent * t);
    return out.real();
}

double ExactOscillator::m_g(double t) const { return eval(mg_terms_, t); }
double ExactOscillator::m_gdot(double t) const { return eval(mgdot_terms_, t); }

double ExactOscillator::kq_dot(double t) const { return 2.0 * green_.g(t) * m_g(t); }
double ExactOscillator::kp_dot(double t) const { return 2.0 * green_.g_dot(t) * m_gdot(t); }
double ExactOscillator::kq_ddot(double t) const {
    return 2.0 * (green_.g(t) * m_gdot(t) + green_.g_dot(t) * m_g(t));
}

namespace {

// int_0^t (sum_i c_i e^{z_i s}) (sum_tau a_tau e^{x_tau s}) ds, closed form.
template <typename Terms>
double product_integral(const std::array<Complex, 3>& z, const std::array<Complex, 3>& c,
                        const Terms& terms, double t) {
    Complex out = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (const auto& term : terms) {
            out += c[i] * term.coefficient * expm1_over(z[i] + term.exponent, t);
        }
    }
    return out.real();
}

template <typename Terms>
double product_integral_inf(const std::array<Complex, 3>& z, const std::array<Complex, 3>& c,
                            const Terms& terms) {
    Complex out = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (const auto& term : terms) {
            out += c[i] * term.coefficient * (-1.0 / (z[i] + term.exponent));
        }
    }
    return out.real();
}

}  // namespace

double ExactOscillator::kq(double t) const {
    return 2.0 * product_integral(green_.roots, green_.residues, mg_terms_, t);
}

double ExactOscillator::kp(double t) const {
    std::array<Complex, 3> c{};
    for (int i = 0; i < 3; ++i) c[i] = green_.residues[i] * green_.roots[i];
    return 2.0 * product_integral(green_.roots, c, mgdot_terms_, t);
}

double ExactOscillator::kq_infinity() const {
    return 2.0 * product_integral_inf(green_.roots, green_.residues, mg_terms_);
}

double ExactOscillator::kp_infinity() const {
    std::array<Complex, 3> c{};
    for (int i = 0; i < 3; ++i) c[i] = green_.residues[i] * green_.roots[i];
    return 2.0 * product_integral_inf(green_.roots, c, mgdot_terms_);
}

ExactCoefficients ExactOscillator::coefficients(double t) const {
    const double g = green_.g(t);
    const double g1 = green_.g_dot(t);
    const double g2 = green_.g_ddot(t);
    const double g3 = green_.g_dddot(t);
    const double den = g1 * g1 - g * g2;
    const double scale = g1 * g1 + std::abs(g * g2) + 1e-300;
    if (std::abs(den) < 1e-10 * scale) throw CoefficientSingularity(t);

    ExactCoefficients out;
    out.gamma_q = (g2 * g2 - g1 * g3) / den;
    out.gamma_p = (g * g3 - g1 * g2) / den;
    const double kq_t = kq(t), kp_t = kp(t);
    const double kqd = kq_dot(t), kqdd = kq_ddot(t), kpd = kp_dot(t);
    out.d_q = 0.5 * kqdd - kp_t + out.gamma_q * kq_t + 0.5 * out.gamma_p * kqd;
    out.d_p = 0.5 * kpd + 0.5 * out.gamma_q * kqd + out.gamma_p * kp_t;
    return out;
}

ExactCoefficients ExactOscillator::asymptotic() const {
    // Two slowest roots dominate; the cross term of their exponentials gives
    // gamma_q -> z_a z_b and gamma_p -> -(z_a + z_b).
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return green_.roots[a].real() > green_.roots[b].real();
    });
    const Complex za = green_.roots[order[0]];
    const Complex zb = green_.roots[order[1]];
    ExactCoefficients out;
    out.gamma_q = (za * zb).real();
    out.gamma_p = -(za + zb).real();
    const double kq_inf = kq_infinity();
    const double kp_inf = kp_infinity();
    out.d_q = out.gamma_q * kq_inf - kp_inf;
    out.d_p = out.gamma_p * kp_inf;
    return out;
}

InfluenceKernels ExactOscillator::kernels_on_grid(const std::vector<double>& t_grid) const {
    InfluenceKernels k;
    k.t = t_grid;
    const auto n = t_grid.size();
    k.kq.resize(n);
    k.kp.resize(n);
    k.kq_dot.resize(n);
    k.kq_ddot.resize(n);
    k.kp_dot.resize(n);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(n); ++i) {
        const double t = t_grid[i];
        k.kq[i] = kq(t);
        k.kp[i] = kp(t);
        k.kq_dot[i] = kq_dot(t);
        k.kq_ddot[i] = kq_ddot(t);
        k.kp_dot[i] = kp_dot(t);
    }
    return k;
}

Matrix ExactGenerator::apply(const Matrix& rho) const {
    const Matrix comm_h = h_eff * rho - rho * h_eff;
    const Matrix qr = q * rho, rq = rho * q;
    const Matrix qcomm = qr - rq;
    const Matrix dd_q = q * qcomm - qcomm * q;  // [q,[q,rho]]
    const Matrix anti_p = p * rho + rho * p;
    const Matrix q_anti = q * anti_p - anti_p * q;  // [q,{p,rho}]
    const Matrix pcomm = p * rho - rho * p;
    const Matrix q_pcomm = q * pcomm - pcomm * q;  // [q,[p,rho]]
    return -kI * comm_h - coeffs.d_p * dd_q - 0.5 * kI * coeffs.gamma_p * q_anti +
           coeffs.d_q * q_pcomm;
}

ExactGenerator make_exact_generator(double omega, int levels, const ExactCoefficients& coeffs) {
    ExactGenerator gen;
    Matrix q = Matrix::Zero(levels, levels);
    Matrix p = Matrix::Zero(levels, levels);
    const double qs = 1.0 / std::sqrt(2.0 * omega);
    const Complex ps = kI * std::sqrt(omega / 2.0);
    for (int n = 0; n + 1 < levels; ++n) {
        const double root = std::sqrt(n + 1.0);
        q(n, n + 1) = qs * root;
        q(n + 1, n) = qs * root;
        p(n + 1, n) = ps * root;
        p(n, n + 1) = -ps * root;
    }
    gen.q = q;
    gen.p = p;
    gen.h_eff = 0.5 * (p * p + coeffs.gamma_q * q * q);
    gen.coeffs = coeffs;
    return gen;
}

VectorizedGenerator vectorize_exact(const ExactGenerator& gen) {
    const int d = static_cast<int>(gen.q.rows());
    const Matrix id = Matrix::Identity(d, d);
    const Matrix& q = gen.q;
    const Matrix& p = gen.p;

    Matrix l = Matrix::Zero(d * d, d * d);
    auto left = [&](const Matrix& a) { return kron(id, a); };
    auto right = [&](const Matrix& b) { return kron(b.transpose(), id); };
    auto both = [&](const Matrix& a, const Matrix& b) { return kron(b.transpose(), a); };

    l += -kI * (left(gen.h_eff) - right(gen.h_eff));
    l += -gen.coeffs.d_p * (left(q * q) - 2.0 * both(q, q) + right(q * q));
    l += -0.5 * kI * gen.coeffs.gamma_p *
         (left(q * p) + both(q, p) - both(p, q) - right(p * q));
    l += gen.coeffs.d_q * (left(q * p) - both(q, p) - both(p, q) + right(p * q));
    return make_vectorized(std::move(l), d);
}

}  // namespace qme
