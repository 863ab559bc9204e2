#include "qme/models.hpp"

#include <cmath>

namespace qme {

namespace {

// CODATA (exact since the 2019 SI): k_B = 1.380649e-23 J/K,
// hbar = h / 2 pi with h = 6.62607015e-34 J s.
constexpr double kBoltzmann = 1.380649e-23;
constexpr double kPlanckH = 6.62607015e-34;
const double kKelvinToInversePs = kBoltzmann / (kPlanckH / (2.0 * M_PI)) * 1e-12;

Matrix single_site(const Matrix& op, int site, int length) {
    Matrix out = Matrix::Identity(1, 1);
    for (int i = 0; i < length; ++i) {
        out = kron(out, i == site ? op : Matrix::Identity(2, 2)).eval();
    }
    return out;
}

}  // namespace

Matrix position_operator(double omega, int levels) {
    Matrix q = Matrix::Zero(levels, levels);
    const double scale = 1.0 / std::sqrt(2.0 * omega);
    for (int n = 0; n + 1 < levels; ++n) {
        q(n, n + 1) = scale * std::sqrt(n + 1.0);
        q(n + 1, n) = scale * std::sqrt(n + 1.0);
    }
    return q;
}

Matrix momentum_operator(double omega, int levels) {
    Matrix p = Matrix::Zero(levels, levels);
    const Complex scale = kI * std::sqrt(omega / 2.0);
    for (int n = 0; n + 1 < levels; ++n) {
        p(n + 1, n) = scale * std::sqrt(n + 1.0);
        p(n, n + 1) = -scale * std::sqrt(n + 1.0);
    }
    return p;
}

SystemOperators build_harmonic(double omega, int levels) {
    if (levels < 2) throw ConfigError("oscillator needs at least two levels");
    Matrix h = Matrix::Zero(levels, levels);
    for (int n = 0; n < levels; ++n) h(n, n) = (n + 0.5) * omega;
    return SystemOperators{std::move(h), position_operator(omega, levels)};
}

SystemOperators build_spin_boson(double eps) {
    if (eps <= 0.0) throw ConfigError("spin-boson splitting must be positive");
    Matrix h(2, 2);
    h << 0.0, 0.5 * eps, 0.5 * eps, 0.0;
    Matrix s(2, 2);
    s << 1.0, 0.0, 0.0, -1.0;
    return SystemOperators{std::move(h), std::move(s)};
}

SystemOperators build_ising_chain(int length, double J) {
    if (length < 2) throw ConfigError("chain needs at least two sites");
    if (length > 12) throw ChainTooLong("dense diagonalization budget ends at L = 12");

    Matrix sx(2, 2), sz(2, 2);
    sx << 0.0, 1.0, 1.0, 0.0;
    sz << 1.0, 0.0, 0.0, -1.0;

    const int dim = 1 << length;
    Matrix h = Matrix::Zero(dim, dim);
    for (int i = 0; i + 1 < length; ++i) {
        h -= J * (single_site(sz, i, length) * single_site(sz, i + 1, length));
    }
    for (int i = 0; i < length; ++i) {
        const double frac = (length > 1) ? static_cast<double>(i) / (length - 1) : 0.0;
        const double hx = 0.8 * J + 0.2 * J * frac;
        const double hz = 0.7 * J - 0.2 * J * frac;
        h += hx * single_site(sx, i, length) + hz * single_site(sz, i, length);
    }
    // sigma_z on site L/2, 1-based site numbering.
    Matrix s = single_site(sz, length / 2 - 1, length);
    return SystemOperators{std::move(h), std::move(s)};
}

double kelvin_to_energy(double t_kelvin) {
    if (t_kelvin < 0.0) throw NegativeTemperature("temperature below absolute zero");
    return t_kelvin * kKelvinToInversePs;
}

double energy_to_kelvin(double e_inverse_ps) {
    return e_inverse_ps / kKelvinToInversePs;
}

}  // namespace qme
