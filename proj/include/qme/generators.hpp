#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qme/bath.hpp"
#include "qme/linalg.hpp"

namespace qme {

/// One bath attached to the system: coupling operator rotated into the system
/// eigenbasis plus dense rate tables over all Bohr-frequency pairs,
/// entry (n, m) evaluated at Delta_nm = E_n - E_m. Tables are asymptotic
/// (infinite horizon) and carry the counter-term shift of W'' when flagged.
struct BathCoupling {
    BathSpec bath;
    Matrix s_eig;
    RealMatrix wp, wpp, vp, vpp;
    Matrix sconv;           // convolution operator, S_nm W(Delta_nm)
    Matrix neg_s_sconv;     // -S * sconv, cached for the dissipator
    RealMatrix gamma_rate;  // secular jump rates 2 |S_nm|^2 W'(Delta_nm) (m -> n)
    RealVector lamb_diag;   // H^LS diagonal, sum_n |S_nm|^2 W''(Delta_nm) at slot m
    RealVector lindblad_out;  // total secular out-rate per level
};

struct CoupledSystemOptions {
    double horizon = kInfiniteHorizon;  // kept on the system for bookkeeping
    double eps_deg_factor = 1e-9;       // degeneracy threshold, times spectral span
    double eps_den_factor = 1e-12;      // decoupled-level threshold, times max rate
    double herm_tol = 1e-10;
};

struct CoupledSystem {
    EigenSystem eig;
    RealMatrix bohr;  // Delta_nm = E_n - E_m
    std::vector<BathCoupling> couplings;
    CoupledSystemOptions opts;
    double eps_deg = 0.0;
    mutable std::vector<std::string> diagnostics;

    int dim() const { return eig.dim(); }
};

/// Diagonalizes H, rotates every coupling operator into the eigenbasis and
/// precomputes the per-bath rate tables (parallel over table entries).
CoupledSystem build_coupled_system(const Matrix& h,
                                   const std::vector<std::pair<Matrix, BathSpec>>& couplings,
                                   const CoupledSystemOptions& opts = {});

/// -i[H, rho] in the eigenbasis (elementwise Bohr-frequency phase).
Matrix hamiltonian_apply(const CoupledSystem& sys, const Matrix& rho);

/// Static Redfield dissipator of one bath,
///   R[rho] = -S sconv rho + S rho sconv^dag - rho sconv^dag S + sconv rho S,
/// evaluated in the Hermitian pair form (requires Hermitian rho).
Matrix redfield_apply(const CoupledSystem& sys, int bath_index, const Matrix& rho);

/// Same four-term dissipator with an explicit convolution operator (used for
/// time-dependent rates).
Matrix redfield_apply_with(const Matrix& s_eig, const Matrix& sconv, const Matrix& rho);

/// Secular (quantum-optical) Lindblad action of one bath: Lamb-shift
/// commutator plus jump dissipator, all elementwise in the eigenbasis.
Matrix lindblad_secular_apply(const CoupledSystem& sys, int bath_index, const Matrix& rho);

/// Formal energy derivative of the populations (one scalar per level).
/// Levels whose rate denominator underflows eps_den get zero plus a
/// diagnostic.
RealVector formal_energy_derivative(const CoupledSystem& sys, int bath_index,
                                    const RealVector& populations);

/// Canonical correction superoperator of one bath: coherences are
/// (R_inf[rho])_nm / (i Delta_nm), populations a V''-rate difference plus the
/// W''-weighted formal derivative. Population rates are explicit differences,
/// never square-root jump operators (V'' may be negative).
Matrix qbar_apply(const CoupledSystem& sys, int bath_index, const Matrix& rho);

/// Sum of qbar_apply over all baths.
Matrix qbar_total(const CoupledSystem& sys, const Matrix& rho);

/// Time-dependent convolution operators on an integration grid; entries are
/// interpolated linearly between nodes.
struct HorizonSchedule {
    double step = 0.0;
    std::vector<Matrix> sconv;  // node k at time k*step

    Matrix at(double t) const;
};

/// Builds sconv(t_k) for one bath on a uniform grid of `steps` intervals.
HorizonSchedule build_horizon_schedule(const CoupledSystem& sys, int bath_index, double step,
                                       int steps);

/// Full canonically consistent generator:
///   -i[H, rho] + sum_i R^i[(I - sum_j Qbar^j)[rho]].
/// `schedules` (when present, one per bath) supply finite-horizon rates for
/// the Redfield part; the correction superoperator is always static.
Matrix ccqme_apply(const CoupledSystem& sys, const Matrix& rho, double t = 0.0,
                   const std::vector<HorizonSchedule>* schedules = nullptr,
                   bool zero_qbar = false);

/// Redfield equation right-hand side including the Hamiltonian part.
Matrix redfield_rhs(const CoupledSystem& sys, const Matrix& rho, double t = 0.0,
                    const std::vector<HorizonSchedule>* schedules = nullptr);

/// Lindblad equation right-hand side including the Hamiltonian part.
Matrix lindblad_rhs(const CoupledSystem& sys, const Matrix& rho);

/// Mean-force Gibbs state of the designated equilibrium bath:
/// (I + Qbar)[rho_G], hermitized and renormalized.
Matrix mean_force_state(const CoupledSystem& sys, int bath_index);

/// Vectorized (dim^2 x dim^2) forms for null-space steady states.
VectorizedGenerator vectorize_redfield(const CoupledSystem& sys);
VectorizedGenerator vectorize_lindblad(const CoupledSystem& sys);
VectorizedGenerator vectorize_ccqme(const CoupledSystem& sys);

}  // namespace qme
