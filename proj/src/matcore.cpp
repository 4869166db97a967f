#include "lqmpc/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "lqmpc/errors.hpp"

namespace lqmpc {

SymMatrix::SymMatrix(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw InvalidArgument("SymMatrix: expected a non-empty square matrix, got " +
                              std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    m_ = 0.5 * (m + m.transpose());
    // (a+b)/2 and (b+a)/2 round identically, but keep it explicit.
    for (Eigen::Index i = 0; i < m_.rows(); ++i)
        for (Eigen::Index j = 0; j < i; ++j) m_(j, i) = m_(i, j);
}

SymMatrix SymMatrix::identity(Eigen::Index n) { return SymMatrix(Matrix::Identity(n, n)); }
SymMatrix SymMatrix::zero(Eigen::Index n) { return SymMatrix(Matrix::Zero(n, n)); }

Vector SymMatrix::eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

double SymMatrix::min_eigenvalue() const { return eigenvalues()(0); }
double SymMatrix::max_eigenvalue() const { return eigenvalues()(dim() - 1); }

void require_square_finite(const Matrix& m, const char* what) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw InvalidArgument(std::string(what) + ": expected a non-empty square matrix, got " +
                              std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    if (!m.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite entry");
}

double induced_two_norm(const Matrix& m) {
    require_square_finite(m, "induced_two_norm");
    if (m.isZero(0.0)) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

double operator_norm(const Matrix& m) {
    if (m.size() == 0) throw InvalidArgument("operator_norm: empty matrix");
    if (!m.allFinite()) throw InvalidArgument("operator_norm: non-finite entry");
    if (m.isZero(0.0)) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

double spectral_radius(const Matrix& m) {
    require_square_finite(m, "spectral_radius");
    Eigen::EigenSolver<Matrix> es(m, false);
    if (es.info() != Eigen::Success) {
        throw NumericError("spectral_radius: eigenvalue iteration did not converge",
                           static_cast<long>(es.getMaxIterations() * m.rows()), 0.0);
    }
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_stable(const Matrix& m) { return spectral_radius(m) < 1.0 - tol::stability; }

SymMatrix solve_dlyap(const Matrix& d, const SymMatrix& q) {
    require_square_finite(d, "solve_dlyap");
    if (d.rows() != q.dim()) throw InvalidArgument("solve_dlyap: D and Q dimensions differ");
    const double sr = spectral_radius(d);
    if (sr >= 1.0 - tol::stability) {
        throw DomainError("solve_dlyap: D is not a stability matrix (spectral radius " +
                          std::to_string(sr) + ")");
    }

    constexpr int max_doublings = 200;
    Matrix p = q.mat();
    Matrix dk = d;
    double residual = 0.0;
    for (int it = 0; it < max_doublings; ++it) {
        const Matrix inc = dk.transpose() * p * dk;
        p += inc;
        dk = dk * dk;
        const double scale = std::max(1.0, p.cwiseAbs().maxCoeff());
        if (inc.cwiseAbs().maxCoeff() <= 1e-17 * scale || dk.cwiseAbs().maxCoeff() == 0.0) {
            SymMatrix out(p);
            residual = induced_two_norm(Matrix(out.mat() - d.transpose() * out.mat() * d - q.mat()));
            if (residual <= tol::dlyap * std::max(1.0, induced_two_norm(out))) return out;
            break;
        }
    }
    // Doubling stalled short of the tolerance; a few plain fixed-point sweeps
    // remove the leftover rounding before giving up.
    SymMatrix out(p);
    for (int it = 0; it < 50; ++it) {
        out = SymMatrix(d.transpose() * out.mat() * d + q.mat());
        residual = induced_two_norm(Matrix(out.mat() - d.transpose() * out.mat() * d - q.mat()));
        if (residual <= tol::dlyap * std::max(1.0, induced_two_norm(out))) return out;
    }
    throw NumericError("solve_dlyap: residual above tolerance", max_doublings, residual);
}

bool psd_order_holds(const SymMatrix& k1, const SymMatrix& k2, double slack) {
    if (k1.dim() != k2.dim()) throw InvalidArgument("psd_order_holds: dimension mismatch");
    return (k1 - k2).min_eigenvalue() >= -slack;
}

bool psd_order_holds(const SymMatrix& k1, const SymMatrix& k2) {
    if (k1.dim() != k2.dim()) throw InvalidArgument("psd_order_holds: dimension mismatch");
    const SymMatrix diff = k1 - k2;
    return diff.min_eigenvalue() >= -tol::psd * std::max(1.0, induced_two_norm(diff));
}

Matrix psd_sqrt(const SymMatrix& p) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(p.mat());
    const Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Matrix& v = es.eigenvectors();
    return SymMatrix(v * ev.asDiagonal() * v.transpose()).mat();
}

double WeightedNorm::operator()(const Matrix& m) const { return induced_two_norm(Matrix(W * m * W_inv)); }

WeightedNorm build_weighted_norm(const Matrix& d) {
    require_square_finite(d, "build_weighted_norm");
    const double sr = spectral_radius(d);
    if (sr >= 1.0 - tol::stability) {
        throw DomainError("build_weighted_norm: D is not a stability matrix (spectral radius " +
                          std::to_string(sr) + ")");
    }
    WeightedNorm out;
    out.rho = (sr * sr + 1.0) / 2.0;
    const Eigen::Index n = d.rows();
    const SymMatrix p = solve_dlyap(d / std::sqrt(out.rho), SymMatrix::identity(n));
    out.W = psd_sqrt(p);
    out.W_inv = out.W.inverse();
    const Vector ev = p.eigenvalues();
    out.lambda_min = ev(0);
    out.lambda_max = ev(n - 1);
    out.c1 = std::sqrt(out.lambda_min / out.lambda_max);
    out.c2 = std::sqrt(out.lambda_max / out.lambda_min);
    return out;
}

}  // namespace lqmpc
