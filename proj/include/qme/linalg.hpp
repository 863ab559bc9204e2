#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "qme/errors.hpp"

namespace qme {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

/// Eigendecomposition of a system Hamiltonian. Energies ascend; `basis`
/// columns are the eigenvectors, so H = basis * diag(energies) * basis^dagger.
struct EigenSystem {
    RealVector energies;
    Matrix basis;
    double degeneracy_gap = 0.0;  // smallest |E_n - E_m|, n != m
    bool degenerate_warning = false;

    int dim() const { return static_cast<int>(energies.size()); }
    double spectral_span() const {
        return dim() > 1 ? energies(dim() - 1) - energies(0) : 0.0;
    }
};

/// Relative deviation from hermiticity, |A - A^dagger|_max / |A|_max.
double hermiticity_defect(const Matrix& a);

bool is_hermitian(const Matrix& a, double tol = 1e-12);

/// Throws NonHermitianInput if the defect exceeds `tol`.
void require_hermitian(const Matrix& a, double tol, const std::string& what);

/// rho <- (rho + rho^dagger)/2, then rho <- rho / tr(rho).
Matrix hermitize_and_renormalize(Matrix rho);

/// Checks trace-1 and hermiticity of a density matrix.
void validate_density_matrix(const Matrix& rho, double herm_tol = 1e-10,
                             double trace_tol = 1e-10);

/// Diagonalizes a Hermitian operator. `eps_deg` flags (does not reject)
/// spectra with level spacings below it; callers decide how to react.
EigenSystem diagonalize(const Matrix& h, double eps_deg_factor = 1e-9,
                        double herm_tol = 1e-12);

/// (1/2) sum |eigenvalues of rho1 - rho2|. Symmetric, zero iff equal,
/// bounded by one for unit-trace positive arguments.
double trace_distance(const Matrix& rho1, const Matrix& rho2);

/// Smallest eigenvalue of a Hermitian matrix (positivity diagnostic).
double min_eigenvalue(const Matrix& rho);

/// Sum of the strictly negative diagonal entries of rho (rho is expected in
/// the eigenbasis, so the diagonal holds populations).
double negative_population_mass(const Matrix& rho);

/// Gibbs state exp(-beta H)/Z given the eigensystem (diagonal in eigenbasis).
Matrix gibbs_state(const EigenSystem& eig, double beta);

/// A generator packaged as a dense matrix acting on column-major vectorized
/// density matrices (dim^2 x dim^2).
struct VectorizedGenerator {
    Matrix op;
    int dim = 0;  // underlying Hilbert-space dimension

    Vector apply_vec(const Vector& v) const { return op * v; }
};

/// vec(A X B) = (B^T kron A) vec(X), column-major convention.
Matrix kron(const Matrix& a, const Matrix& b);

/// Builds the dim^2 x dim^2 matrix of X -> A X B.
Matrix sandwich_matrix(const Matrix& a, const Matrix& b);

/// Builds a vectorized generator from a matrix-function action by assembling
/// the standard sandwich terms is the caller's job; this wraps an already
/// assembled matrix and records dim.
VectorizedGenerator make_vectorized(Matrix op, int dim);

/// Max |column sums over diagonal positions|: zero for trace-preserving maps.
double trace_preservation_defect(const VectorizedGenerator& gen);

struct SteadyStateOptions {
    double residual_tol = 1e-10;    // relative to |L|_F |rho|_F
    double null_space_tol = 1e-9;   // eigenvalue magnitude threshold, relative
    int max_power_iterations = 64;
};

/// Steady state of a trace-preserving generator via dense null-space
/// extraction: inverse iteration on the vectorized generator, full
/// eigendecomposition for small dims. Hermitized and trace-normalized.
/// Throws NonUniqueSteadyState / NoConvergence.
Matrix steady_state(const VectorizedGenerator& gen,
                    const SteadyStateOptions& opts = {});

Matrix vec_to_matrix(const Vector& v, int dim);
Vector matrix_to_vec(const Matrix& m);

}  // namespace qme
