#include "qme/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>

namespace qme {

double hermiticity_defect(const Matrix& a) {
    if (a.rows() != a.cols()) throw DimensionMismatch("matrix is not square");
    const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
    return (a - a.adjoint()).cwiseAbs().maxCoeff() / scale;
}

bool is_hermitian(const Matrix& a, double tol) {
    return hermiticity_defect(a) <= tol;
}

void require_hermitian(const Matrix& a, double tol, const std::string& what) {
    const double defect = hermiticity_defect(a);
    if (defect > tol) {
        throw NonHermitianInput(what + ": hermiticity defect " +
                                std::to_string(defect) + " exceeds tolerance");
    }
}

Matrix hermitize_and_renormalize(Matrix rho) {
    rho = 0.5 * (rho + rho.adjoint()).eval();
    const Complex tr = rho.trace();
    if (std::abs(tr) < 1e-300) throw NumericalError("cannot renormalize traceless matrix");
    rho /= tr;
    return rho;
}

void validate_density_matrix(const Matrix& rho, double herm_tol, double trace_tol) {
    require_hermitian(rho, herm_tol, "density matrix");
    if (std::abs(rho.trace() - Complex(1.0)) > trace_tol) {
        throw NumericalError("density matrix trace deviates from one by " +
                             std::to_string(std::abs(rho.trace() - Complex(1.0))));
    }
}

EigenSystem diagonalize(const Matrix& h, double eps_deg_factor, double herm_tol) {
    require_hermitian(h, herm_tol, "diagonalize");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (h + h.adjoint()));
    if (solver.info() != Eigen::Success) throw NumericalError("eigensolver failed");

    EigenSystem eig;
    eig.energies = solver.eigenvalues();
    eig.basis = solver.eigenvectors();

    const int n = eig.dim();
    double gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < n; ++i) gap = std::min(gap, eig.energies(i + 1) - eig.energies(i));
    eig.degeneracy_gap = (n > 1) ? gap : 0.0;

    const double eps_deg = eps_deg_factor * std::max(eig.spectral_span(), 1.0e-300);
    eig.degenerate_warning = (n > 1 && eig.degeneracy_gap < eps_deg);

    // Reconstruction guard; SelfAdjointEigenSolver should never trip this.
    const double scale = std::max(h.cwiseAbs().maxCoeff(), 1e-300);
    const double err =
        (eig.basis * eig.energies.asDiagonal() * eig.basis.adjoint() - h).cwiseAbs().maxCoeff() /
        scale;
    if (err > 1e-9) throw NumericalError("eigendecomposition reconstruction error " + std::to_string(err));
    return eig;
}

double trace_distance(const Matrix& rho1, const Matrix& rho2) {
    if (rho1.rows() != rho2.rows() || rho1.cols() != rho2.cols()) {
        throw DimensionMismatch("trace_distance: dimension mismatch");
    }
    Matrix diff = rho1 - rho2;
    diff = 0.5 * (diff + diff.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> solver(diff, Eigen::EigenvaluesOnly);
    return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

double min_eigenvalue(const Matrix& rho) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (rho + rho.adjoint()),
                                                 Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

double negative_population_mass(const Matrix& rho) {
    double mass = 0.0;
    for (int n = 0; n < rho.rows(); ++n) {
        const double p = rho(n, n).real();
        if (p < 0.0) mass += p;
    }
    return mass;
}

Matrix gibbs_state(const EigenSystem& eig, double beta) {
    const int n = eig.dim();
    RealVector w(n);
    const double e0 = eig.energies(0);
    for (int i = 0; i < n; ++i) w(i) = std::exp(-beta * (eig.energies(i) - e0));
    w /= w.sum();
    Matrix rho = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) rho(i, i) = w(i);
    return rho;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Matrix sandwich_matrix(const Matrix& a, const Matrix& b) {
    return kron(b.transpose(), a);
}

VectorizedGenerator make_vectorized(Matrix op, int dim) {
    if (op.rows() != dim * dim || op.cols() != dim * dim) {
        throw DimensionMismatch("vectorized generator has wrong shape");
    }
    return VectorizedGenerator{std::move(op), dim};
}

double trace_preservation_defect(const VectorizedGenerator& gen) {
    const int d = gen.dim;
    double worst = 0.0;
    for (int col = 0; col < d * d; ++col) {
        Complex sum = 0.0;
        for (int n = 0; n < d; ++n) sum += gen.op(n * d + n, col);
        worst = std::max(worst, std::abs(sum));
    }
    const double scale = std::max(gen.op.cwiseAbs().maxCoeff(), 1e-300);
    return worst / scale;
}

Matrix vec_to_matrix(const Vector& v, int dim) {
    return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

Vector matrix_to_vec(const Matrix& m) {
    return Eigen::Map<const Vector>(m.data(), m.size());
}

namespace {

Matrix finalize_null_vector(const Vector& v, int dim, const VectorizedGenerator& gen,
                            double residual_tol) {
    Matrix rho = vec_to_matrix(v, dim);
    // A null vector carries arbitrary phase and scale; rotate so the trace is
    // real and positive before hermitizing.
    Complex tr = rho.trace();
    if (std::abs(tr) < 1e-12 * rho.norm()) {
        throw NoConvergence("null vector is traceless; not a physical steady state");
    }
    rho *= std::conj(tr) / std::abs(tr);
    rho = hermitize_and_renormalize(rho);
    const double residual = (gen.op * matrix_to_vec(rho)).norm() /
                            std::max(1e-300, gen.op.norm() * rho.norm());
    if (residual > residual_tol) {
        throw NoConvergence("steady-state residual " + std::to_string(residual) +
                            " exceeds tolerance");
    }
    return rho;
}

}  // namespace

Matrix steady_state(const VectorizedGenerator& gen, const SteadyStateOptions& opts) {
    const int d = gen.dim;
    const int n2 = d * d;
    const double scale = std::max(gen.op.cwiseAbs().maxCoeff(), 1e-300);

    if (n2 <= 64) {
        // Small systems: full spectrum, exact null-space dimension count.
        Eigen::ComplexEigenSolver<Matrix> solver(gen.op);
        if (solver.info() != Eigen::Success) throw NumericalError("eigensolver failed");
        int null_dim = 0;
        int best = 0;
        double best_mag = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n2; ++i) {
            const double mag = std::abs(solver.eigenvalues()(i));
            if (mag < opts.null_space_tol * scale) ++null_dim;
            if (mag < best_mag) {
                best_mag = mag;
                best = i;
            }
        }
        if (null_dim > 1) throw NonUniqueSteadyState(null_dim);
        if (null_dim == 0) throw NoConvergence("no eigenvalue near zero");
        return finalize_null_vector(solver.eigenvectors().col(best), d, gen, opts.residual_tol);
    }

    // Large systems: inverse iteration with a tiny shift. Two independent
    // starts detect (heuristically) a multi-dimensional null space.
    const double shift = 1e-13 * scale;
    Matrix shifted = gen.op;
    shifted.diagonal().array() -= Complex(shift, 0.0);
    Eigen::PartialPivLU<Matrix> lu(shifted);

    auto run = [&](Vector v) {
        v.normalize();
        double residual = std::numeric_limits<double>::infinity();
        for (int it = 0; it < opts.max_power_iterations; ++it) {
            Vector w = lu.solve(v);
            const double norm = w.norm();
            if (!std::isfinite(norm) || norm == 0.0) throw NoConvergence("inverse iteration broke down");
            v = w / norm;
            residual = (gen.op * v).norm() / std::max(gen.op.norm(), 1e-300);
            if (residual < 0.5 * opts.residual_tol) break;
        }
        if (!(residual < 10 * opts.residual_tol)) {
            throw NoConvergence("inverse iteration residual " + std::to_string(residual));
        }
        return v;
    };

    Vector start1 = Vector::Zero(n2);
    for (int i = 0; i < d; ++i) start1(i * d + i) = 1.0;  // maximally mixed
    Vector v1 = run(start1);

    Vector start2 = Vector::Zero(n2);
    for (int i = 0; i < d; ++i) start2(i * d + i) = Complex(1.0 + i, 0.3 * i);
    start2 += 0.1 * Vector::Ones(n2);
    Vector v2 = run(start2);

    const Complex overlap = v1.dot(v2);
    if (1.0 - std::abs(overlap) > 1e-6) throw NonUniqueSteadyState(2);

    return finalize_null_vector(v1, d, gen, opts.residual_tol);
}

}  // namespace qme
