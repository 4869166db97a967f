#pragma once

#include <utility>

#include <Eigen/Dense>

namespace lqmpc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace tol {
inline constexpr double psd = 1e-9;
inline constexpr double stability = 1e-9;
inline constexpr double dlyap = 1e-11;
}  // namespace tol

/// Dense symmetric matrix. The stored entries are symmetric bit-for-bit:
/// construction replaces M by (M + M')/2.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(const Matrix& m);

    static SymMatrix identity(Eigen::Index n);
    static SymMatrix zero(Eigen::Index n);
    static SymMatrix scalar(double v) { return SymMatrix(Matrix::Constant(1, 1, v)); }

    Eigen::Index dim() const noexcept { return m_.rows(); }
    const Matrix& mat() const noexcept { return m_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

    double min_eigenvalue() const;
    double max_eigenvalue() const;
    Vector eigenvalues() const;  // ascending

    friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) { return SymMatrix(a.m_ + b.m_); }
    friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) { return SymMatrix(a.m_ - b.m_); }
    friend SymMatrix operator*(double s, const SymMatrix& a) { return SymMatrix(s * a.m_); }

private:
    Matrix m_;
};

/// Largest singular value. Throws InvalidArgument for non-square or non-finite input.
double induced_two_norm(const Matrix& m);
inline double induced_two_norm(const SymMatrix& m) { return induced_two_norm(m.mat()); }

/// Largest singular value of a matrix of any shape.
double operator_norm(const Matrix& m);

/// max |λ| over the (complex) spectrum.
double spectral_radius(const Matrix& m);
bool is_stable(const Matrix& m);

/// Solves P = D'PD + Q for stable D by the doubling iteration
/// P <- P + Dk' P Dk, Dk <- Dk^2.
SymMatrix solve_dlyap(const Matrix& d, const SymMatrix& q);

/// K1 >= K2 in the positive-semidefinite order, with tolerance
/// psd_tol * max(1, ||K1 - K2||) on the smallest eigenvalue of the difference.
bool psd_order_holds(const SymMatrix& k1, const SymMatrix& k2);

/// Same test with an explicit absolute slack on the smallest eigenvalue.
bool psd_order_holds(const SymMatrix& k1, const SymMatrix& k2, double slack);

/// Symmetric positive-semidefinite square root.
Matrix psd_sqrt(const SymMatrix& p);

/// Weighted Euclidean norm ||x||_s = ||Wx|| tuned to a stable matrix D so that
/// the induced norm of D is at most sqrt(rho) < 1.
///
/// c1 and c2 bound the induced weighted norm against the 2-norm:
///     c1 ||M|| <= ||M||_s = ||W M W^-1|| <= c2 ||M||
/// with c1 = sqrt(lmin/lmax) and c2 = sqrt(lmax/lmin), l = eigenvalues of W'W.
struct WeightedNorm {
    Matrix W;
    Matrix W_inv;
    double rho = 0.0;
    double c1 = 1.0;
    double c2 = 1.0;
    double lambda_min = 1.0;  // of W'W
    double lambda_max = 1.0;

    /// Induced weighted norm of a square matrix.
    double operator()(const Matrix& m) const;

    /// The looser pair (lmin/lmax, lmax/lmin). It also satisfies the sandwich
    /// but is not tight; kept for comparison only.
    std::pair<double, double> eigen_ratio_constants() const {
        return {lambda_min / lambda_max, lambda_max / lambda_min};
    }
};

/// rho = (spectral_radius(D)^2 + 1) / 2, W = P^{1/2} with P = (D/sqrt(rho))' P (D/sqrt(rho)) + I.
WeightedNorm build_weighted_norm(const Matrix& d);

/// Throws InvalidArgument unless m is square with finite entries.
void require_square_finite(const Matrix& m, const char* what);

}  // namespace lqmpc
