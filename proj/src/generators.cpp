#include "qme/generators.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

namespace qme {

namespace {

RealMatrix abs_squared(const Matrix& s) {
    return s.cwiseAbs2();
}

// Per-bath derived arrays for the correction superoperator populations.
struct QbarArrays {
    RealMatrix vpp_gain;   // |S_nl|^2 V''(Delta_nl)
    RealVector vpp_loss;   // sum_l |S_nl|^2 V''(Delta_ln)
    RealVector wsum;       // sum_l |S_nl|^2 W''(Delta_ln)
    RealMatrix vp_gain;    // |S_nl|^2 V'(Delta_nl), l-contracted against p_l
    RealVector vp_self;    // sum_{l!=n} |S_nl|^2 V'(Delta_ln)
    RealVector den;        // sum_{l!=n} |S_ln|^2 W'(Delta_ln)
    std::vector<bool> decoupled;
};

QbarArrays qbar_arrays(const BathCoupling& c) {
    const int d = static_cast<int>(c.wp.rows());
    const RealMatrix s2 = abs_squared(c.s_eig);
    QbarArrays a;
    a.vpp_gain = s2.cwiseProduct(c.vpp);
    a.vpp_loss = (s2.cwiseProduct(c.vpp.transpose())).rowwise().sum();
    a.wsum = (s2.cwiseProduct(c.wpp.transpose())).rowwise().sum();
    a.vp_gain = s2.cwiseProduct(c.vp);
    a.vp_self = RealVector::Zero(d);
    a.den = RealVector::Zero(d);
    for (int n = 0; n < d; ++n) {
        double self = 0.0, den = 0.0;
        for (int l = 0; l < d; ++l) {
            if (l == n) continue;
            self += s2(n, l) * c.vp(l, n);
            den += s2(l, n) * c.wp(l, n);
        }
        a.vp_self(n) = self;
        a.den(n) = den;
    }
    a.decoupled.assign(d, false);
    return a;
}

}  // namespace

CoupledSystem build_coupled_system(const Matrix& h,
                                   const std::vector<std::pair<Matrix, BathSpec>>& couplings,
                                   const CoupledSystemOptions& opts) {
    CoupledSystem sys;
    sys.opts = opts;
    sys.eig = diagonalize(h, opts.eps_deg_factor);
    if (sys.eig.degenerate_warning) {
        sys.diagnostics.push_back(
            "DegenerateSpectrum: smallest level spacing " +
            std::to_string(sys.eig.degeneracy_gap) +
            "; correction-superoperator coherences for the affected pairs are skipped");
    }
    const int d = sys.dim();
    sys.eps_deg = opts.eps_deg_factor * std::max(sys.eig.spectral_span(), 1e-300);

    sys.bohr = RealMatrix::Zero(d, d);
    for (int n = 0; n < d; ++n)
        for (int m = 0; m < d; ++m) sys.bohr(n, m) = sys.eig.energies(n) - sys.eig.energies(m);

    for (const auto& [s, bath] : couplings) {
        if (s.rows() != d || s.cols() != d) throw DimensionMismatch("coupling operator dimension");
        BathCoupling c;
        c.bath = bath;
        c.s_eig = sys.eig.basis.adjoint() * s * sys.eig.basis;
        require_hermitian(c.s_eig, opts.herm_tol, "coupling operator in eigenbasis");
        c.s_eig = 0.5 * (c.s_eig + c.s_eig.adjoint()).eval();

        c.wp.resize(d, d);
        c.wpp.resize(d, d);
        c.vp.resize(d, d);
        c.vpp.resize(d, d);
        c.sconv.resize(d, d);

        std::exception_ptr failure;
#pragma omp parallel for schedule(static)
        for (long idx = 0; idx < static_cast<long>(d) * d; ++idx) {
            try {
                const int n = static_cast<int>(idx / d);
                const int m = static_cast<int>(idx % d);
                const double e = sys.bohr(n, m);
                const Complex w = half_fourier_W(c.bath, e);
                const Complex v = deriv_V(c.bath, e);
                c.wp(n, m) = w.real();
                c.wpp(n, m) = w.imag();
                c.vp(n, m) = v.real();
                c.vpp(n, m) = v.imag();
                c.sconv(n, m) = c.s_eig(n, m) * w;
            } catch (...) {
#pragma omp critical
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);

        c.neg_s_sconv = -c.s_eig * c.sconv;
        const RealMatrix s2 = abs_squared(c.s_eig);
        c.gamma_rate = 2.0 * s2.cwiseProduct(c.wp);
        c.lamb_diag = RealVector::Zero(d);
        c.lindblad_out = RealVector::Zero(d);
        for (int m = 0; m < d; ++m) {
            for (int n = 0; n < d; ++n) {
                c.lamb_diag(m) += s2(n, m) * c.wpp(n, m);
                c.lindblad_out(m) += c.gamma_rate(n, m);
            }
        }
        sys.couplings.push_back(std::move(c));
    }
    return sys;
}

Matrix hamiltonian_apply(const CoupledSystem& sys, const Matrix& rho) {
    return (-kI) * sys.bohr.cast<Complex>().cwiseProduct(rho);
}

Matrix redfield_apply_with(const Matrix& s_eig, const Matrix& sconv, const Matrix& rho) {
    Matrix z = -(s_eig * (sconv * rho)) + (s_eig * rho) * sconv.adjoint();
    return z + z.adjoint().eval();
}

Matrix redfield_apply(const CoupledSystem& sys, int bath_index, const Matrix& rho) {
    const auto& c = sys.couplings.at(bath_index);
    Matrix z = c.neg_s_sconv * rho + (c.s_eig * rho) * c.sconv.adjoint();
    return z + z.adjoint().eval();
}

Matrix lindblad_secular_apply(const CoupledSystem& sys, int bath_index, const Matrix& rho) {
    const auto& c = sys.couplings.at(bath_index);
    const int d = sys.dim();
    Matrix out(d, d);
    for (int m = 0; m < d; ++m) {
        for (int n = 0; n < d; ++n) {
            if (n == m) {
                Complex gain = 0.0;
                for (int l = 0; l < d; ++l) gain += c.gamma_rate(n, l) * rho(l, l);
                out(n, n) = gain - c.lindblad_out(n) * rho(n, n);
            } else {
                const double decay = 0.5 * (c.lindblad_out(n) + c.lindblad_out(m));
                const double lamb = c.lamb_diag(n) - c.lamb_diag(m);
                out(n, m) = (Complex(-decay, 0.0) - kI * lamb) * rho(n, m);
            }
        }
    }
    return out;
}

RealVector formal_energy_derivative(const CoupledSystem& sys, int bath_index,
                                    const RealVector& populations) {
    const auto& c = sys.couplings.at(bath_index);
    const int d = sys.dim();
    const QbarArrays a = qbar_arrays(c);
    const double den_scale = a.den.maxCoeff();
    const double eps_den = sys.opts.eps_den_factor * std::max(den_scale, 1e-300);

    RealVector out = RealVector::Zero(d);
    for (int n = 0; n < d; ++n) {
        if (a.den(n) <= eps_den) {
            sys.diagnostics.push_back("DecoupledLevel(" + std::to_string(n) +
                                      "): formal derivative set to zero");
            continue;
        }
        double num = a.vp_self(n) * populations(n);
        for (int l = 0; l < d; ++l) {
            if (l != n) num += a.vp_gain(n, l) * populations(l);
        }
        out(n) = num / a.den(n);
    }
    return out;
}

Matrix qbar_apply(const CoupledSystem& sys, int bath_index, const Matrix& rho) {
    const auto& c = sys.couplings.at(bath_index);
    const int d = sys.dim();
    const Matrix r = redfield_apply(sys, bath_index, rho);

    Matrix out(d, d);
    for (int m = 0; m < d; ++m) {
        for (int n = 0; n < d; ++n) {
            const double delta = sys.bohr(n, m);
            out(n, m) = (n != m && std::abs(delta) > sys.eps_deg)
                            ? r(n, m) / (kI * delta)
                            : Complex(0.0, 0.0);
        }
    }

    RealVector pops(d);
    for (int n = 0; n < d; ++n) pops(n) = rho(n, n).real();
    const QbarArrays a = qbar_arrays(c);
    const RealVector dn = formal_energy_derivative(sys, bath_index, pops);
    for (int n = 0; n < d; ++n) {
        double val = -a.vpp_loss(n) * pops(n) + a.wsum(n) * dn(n);
        for (int l = 0; l < d; ++l) val += a.vpp_gain(n, l) * pops(l);
        out(n, n) = val;
    }
    return out;
}

Matrix qbar_total(const CoupledSystem& sys, const Matrix& rho) {
    Matrix out = Matrix::Zero(sys.dim(), sys.dim());
    for (int i = 0; i < static_cast<int>(sys.couplings.size()); ++i) {
        out += qbar_apply(sys, i, rho);
    }
    return out;
}

Matrix HorizonSchedule::at(double t) const {
    if (sconv.empty()) throw NumericalError("empty horizon schedule");
    if (t <= 0.0) return sconv.front();
    const double pos = t / step;
    const int k = static_cast<int>(pos);
    if (k + 1 >= static_cast<int>(sconv.size())) return sconv.back();
    const double w = pos - k;
    return (1.0 - w) * sconv[k] + w * sconv[k + 1];
}

HorizonSchedule build_horizon_schedule(const CoupledSystem& sys, int bath_index, double step,
                                       int steps) {
    const auto& c = sys.couplings.at(bath_index);
    const int d = sys.dim();
    HorizonSchedule sched;
    sched.step = step;
    sched.sconv.resize(steps + 1);

    // Distinct Bohr frequencies on the coupling support.
    std::vector<double> distinct;
    std::vector<int> slot(d * d, -1);
    for (int m = 0; m < d; ++m) {
        for (int n = 0; n < d; ++n) {
            if (std::abs(c.s_eig(n, m)) == 0.0) continue;
            const double e = sys.bohr(n, m);
            int found = -1;
            for (int j = 0; j < static_cast<int>(distinct.size()); ++j) {
                if (distinct[j] == e) {
                    found = j;
                    break;
                }
            }
            if (found < 0) {
                distinct.push_back(e);
                found = static_cast<int>(distinct.size()) - 1;
            }
            slot[m * d + n] = found;
        }
    }

    const int ne = static_cast<int>(distinct.size());
    std::vector<std::vector<Complex>> w_of_t(steps + 1, std::vector<Complex>(ne));

    if (c.bath.spectral.family == SpectralDensity::Family::LorentzDrude) {
        std::exception_ptr failure;
#pragma omp parallel for schedule(static)
        for (long k = 0; k <= steps; ++k) {
            try {
                for (int j = 0; j < ne; ++j) {
                    w_of_t[k][j] = half_fourier_W_finite(c.bath, distinct[j], k * step);
                }
            } catch (...) {
#pragma omp critical
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
    } else {
        // Cumulative Simpson over cached correlator samples (nodes and midpoints).
        std::vector<Complex> c_nodes(steps + 1), c_mids(steps);
        for (int k = 0; k <= steps; ++k) c_nodes[k] = (k == 0) ? correlator(c.bath, 0.0)
                                                               : correlator(c.bath, k * step);
        for (int k = 0; k < steps; ++k) c_mids[k] = correlator(c.bath, (k + 0.5) * step);
        for (int j = 0; j < ne; ++j) {
            const double e = distinct[j];
            Complex acc = 0.0;
            w_of_t[0][j] = 0.0;
            for (int k = 0; k < steps; ++k) {
                const double t0 = k * step, tm = (k + 0.5) * step, t1 = (k + 1) * step;
                const Complex f0 = c_nodes[k] * std::exp(-kI * e * t0);
                const Complex fm = c_mids[k] * std::exp(-kI * e * tm);
                const Complex f1 = c_nodes[k + 1] * std::exp(-kI * e * t1);
                acc += (step / 6.0) * (f0 + 4.0 * fm + f1);
                w_of_t[k + 1][j] = acc;
            }
        }
    }

    for (int k = 0; k <= steps; ++k) {
        Matrix s = Matrix::Zero(d, d);
        for (int m = 0; m < d; ++m) {
            for (int n = 0; n < d; ++n) {
                const int j = slot[m * d + n];
                if (j >= 0) s(n, m) = c.s_eig(n, m) * w_of_t[k][j];
            }
        }
        sched.sconv[k] = std::move(s);
    }
    return sched;
}

Matrix redfield_rhs(const CoupledSystem& sys, const Matrix& rho, double t,
                    const std::vector<HorizonSchedule>* schedules) {
    Matrix out = hamiltonian_apply(sys, rho);
    for (int i = 0; i < static_cast<int>(sys.couplings.size()); ++i) {
        if (schedules) {
            out += redfield_apply_with(sys.couplings[i].s_eig, (*schedules)[i].at(t), rho);
        } else {
            out += redfield_apply(sys, i, rho);
        }
    }
    return out;
}

Matrix lindblad_rhs(const CoupledSystem& sys, const Matrix& rho) {
    Matrix out = hamiltonian_apply(sys, rho);
    for (int i = 0; i < static_cast<int>(sys.couplings.size()); ++i) {
        out += lindblad_secular_apply(sys, i, rho);
    }
    return out;
}

Matrix ccqme_apply(const CoupledSystem& sys, const Matrix& rho, double t,
                   const std::vector<HorizonSchedule>* schedules, bool zero_qbar) {
    Matrix sigma = rho;
    if (!zero_qbar) sigma -= qbar_total(sys, rho);
    Matrix out = hamiltonian_apply(sys, rho);
    for (int i = 0; i < static_cast<int>(sys.couplings.size()); ++i) {
        if (schedules) {
            out += redfield_apply_with(sys.couplings[i].s_eig, (*schedules)[i].at(t), sigma);
        } else {
            out += redfield_apply(sys, i, sigma);
        }
    }
    return out;
}

Matrix mean_force_state(const CoupledSystem& sys, int bath_index) {
    const auto& c = sys.couplings.at(bath_index);
    const Matrix rho_g = gibbs_state(sys.eig, c.bath.beta());
    return hermitize_and_renormalize(rho_g + qbar_apply(sys, bath_index, rho_g));
}

namespace {

void check_vectorizable(int d) {
    const double bytes = 16.0 * d * d * d * d;
    if (bytes > 3.5e9) {
        throw NumericalError("dense vectorization would need " + std::to_string(bytes / 1e9) +
                             " GB; use the propagation fallback");
    }
}

Matrix hamiltonian_diagonal_vec(const CoupledSystem& sys) {
    const int d = sys.dim();
    Matrix l = Matrix::Zero(d * d, d * d);
    for (int m = 0; m < d; ++m)
        for (int n = 0; n < d; ++n) l(m * d + n, m * d + n) = -kI * sys.bohr(n, m);
    return l;
}

Matrix redfield_dissipator_vec(const CoupledSystem& sys) {
    const int d = sys.dim();
    Matrix l = Matrix::Zero(d * d, d * d);
    const Matrix id = Matrix::Identity(d, d);
    for (const auto& c : sys.couplings) {
        const Matrix s_sconv = c.s_eig * c.sconv;
        const Matrix sconv_dag_s = c.sconv.adjoint() * c.s_eig;
        l -= kron(id, s_sconv);
        l -= kron(sconv_dag_s.transpose(), id);
        l += kron(c.sconv.conjugate(), c.s_eig);
        l += kron(c.s_eig.transpose(), c.sconv);
    }
    return l;
}

// Population-sector block of the correction superoperator (rows and columns
// on diagonal positions only).
Matrix qbar_population_vec(const CoupledSystem& sys) {
    const int d = sys.dim();
    Matrix p = Matrix::Zero(d * d, d * d);
    for (int i = 0; i < static_cast<int>(sys.couplings.size()); ++i) {
        const auto& c = sys.couplings[i];
        const QbarArrays a = qbar_arrays(c);
        const double den_scale = a.den.maxCoeff();
        const double eps_den = sys.opts.eps_den_factor * std::max(den_scale, 1e-300);
        for (int n = 0; n < d; ++n) {
            const int row = n * d + n;
            const bool live = a.den(n) > eps_den;
            for (int l = 0; l < d; ++l) {
                const int col = l * d + l;
                if (l != n) {
                    double val = a.vpp_gain(n, l);
                    if (live) val += a.wsum(n) * a.vp_gain(n, l) / a.den(n);
                    p(row, col) += val;
                } else {
                    double val = -a.vpp_loss(n);
                    if (live) val += a.wsum(n) * a.vp_self(n) / a.den(n);
                    p(row, col) += val;
                }
            }
        }
    }
    return p;
}

}  // namespace

VectorizedGenerator vectorize_redfield(const CoupledSystem& sys) {
    check_vectorizable(sys.dim());
    return make_vectorized(hamiltonian_diagonal_vec(sys) + redfield_dissipator_vec(sys),
                           sys.dim());
}

VectorizedGenerator vectorize_lindblad(const CoupledSystem& sys) {
    check_vectorizable(sys.dim());
    const int d = sys.dim();
    Matrix l = hamiltonian_diagonal_vec(sys);
    for (const auto& c : sys.couplings) {
        for (int m = 0; m < d; ++m) {
            for (int n = 0; n < d; ++n) {
                const int idx = m * d + n;
                if (n == m) {
                    for (int lvl = 0; lvl < d; ++lvl) l(idx, lvl * d + lvl) += c.gamma_rate(n, lvl);
                    l(idx, idx) -= c.lindblad_out(n);
                } else {
                    l(idx, idx) += Complex(-0.5 * (c.lindblad_out(n) + c.lindblad_out(m)), 0.0) -
                                   kI * (c.lamb_diag(n) - c.lamb_diag(m));
                }
            }
        }
    }
    return make_vectorized(std::move(l), d);
}

VectorizedGenerator vectorize_ccqme(const CoupledSystem& sys) {
    check_vectorizable(sys.dim());
    const int d = sys.dim();
    const Matrix l_r = redfield_dissipator_vec(sys);

    // Correction operator: coherence rows are (i Delta)^{-1}-scaled Redfield
    // rows, population rows come from the explicit rate block.
    Matrix l_q = l_r;
    for (int m = 0; m < d; ++m) {
        for (int n = 0; n < d; ++n) {
            const int row = m * d + n;
            const double delta = sys.bohr(n, m);
            if (n != m && std::abs(delta) > sys.eps_deg) {
                l_q.row(row) /= kI * delta;
            } else {
                l_q.row(row).setZero();
            }
        }
    }
    l_q += qbar_population_vec(sys);

    Matrix total = hamiltonian_diagonal_vec(sys);
    total += l_r;
    total -= l_r * l_q;
    return make_vectorized(std::move(total), d);
}

}  // namespace qme
