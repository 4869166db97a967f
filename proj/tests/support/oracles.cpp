#include "oracles.hpp"

#include <cmath>
#include <limits>

namespace lqmpc::testing {

Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
    std::normal_distribution<double> nd(0.0, scale);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
    return m;
}

SymMatrix random_psd(Rng& rng, Eigen::Index n, double scale) {
    std::uniform_int_distribution<int> rank(1, static_cast<int>(n));
    const Matrix f = random_matrix(rng, n, rank(rng), scale);
    return SymMatrix(f * f.transpose());
}

Matrix random_with_radius(Rng& rng, Eigen::Index n, double radius) {
    Matrix m = random_matrix(rng, n, n);
    const double r = Eigen::EigenSolver<Matrix>(m, false).eigenvalues().cwiseAbs().maxCoeff();
    return r > 0.0 ? Matrix(m * (radius / r)) : m;
}

LqSystem random_system(Rng& rng, Eigen::Index n, Eigen::Index m) {
    std::uniform_real_distribution<double> rad(0.3, 1.4);
    const Matrix a = random_with_radius(rng, n, rad(rng));
    const Matrix b = random_matrix(rng, n, m);
    const SymMatrix q(random_psd(rng, n).mat() + 0.1 * Matrix::Identity(n, n));
    const SymMatrix r(random_psd(rng, m).mat() + 0.5 * Matrix::Identity(m, m));
    return LqSystem(a, b, q, r);
}

double spectral_radius_by_squaring(const Matrix& d, int squarings) {
    // log of the scale is carried separately so D^(2^k) never overflows.
    Matrix p = d;
    double log_scale = 0.0;
    double weight = 1.0;
    double estimate = 0.0;
    for (int k = 0; k < squarings; ++k) {
        const double nrm = p.norm();
        if (nrm == 0.0) return 0.0;
        p /= nrm;
        log_scale += weight * std::log(nrm);
        estimate = std::exp(log_scale);
        p = p * p;
        weight *= 0.5;
    }
    return estimate;
}

Matrix lyapunov_series(const Matrix& d, const Matrix& q, int terms) {
    Matrix sum = Matrix::Zero(q.rows(), q.cols());
    Matrix dk = Matrix::Identity(d.rows(), d.cols());
    for (int k = 0; k < terms; ++k) {
        sum += dk.transpose() * q * dk;
        dk = d * dk;
    }
    return sum;
}

double qp_by_enumeration(const QpProblem& p, Vector* argmin) {
    const Eigen::Index nv = p.variables();
    const Eigen::Index ni = p.G.rows();
    const Eigen::Index ne = p.E.rows();
    double best = std::numeric_limits<double>::infinity();
    std::vector<Eigen::Index> set;
    auto evaluate = [&] {
        const Eigen::Index k = static_cast<Eigen::Index>(set.size()) + ne;
        Matrix kkt = Matrix::Zero(nv + k, nv + k);
        Vector rhs = Vector::Zero(nv + k);
        kkt.topLeftCorner(nv, nv) = p.P.mat();
        rhs.head(nv) = -p.q;
        Eigen::Index r = nv;
        for (Eigen::Index i : set) {
            kkt.block(r, 0, 1, nv) = p.G.row(i);
            kkt.block(0, r, nv, 1) = p.G.row(i).transpose();
            rhs(r) = p.g(i);
            ++r;
        }
        for (Eigen::Index i = 0; i < ne; ++i) {
            kkt.block(r, 0, 1, nv) = p.E.row(i);
            kkt.block(0, r, nv, 1) = p.E.row(i).transpose();
            rhs(r) = p.e(i);
            ++r;
        }
        const Eigen::FullPivLU<Matrix> lu(kkt);
        if (!lu.isInvertible()) return;
        const Vector z = lu.solve(rhs).head(nv);
        if (ni > 0 && ((p.G * z - p.g).array() > 1e-9 * (1.0 + p.g.cwiseAbs().array())).any()) return;
        if (ne > 0 && (p.E * z - p.e).cwiseAbs().maxCoeff() > 1e-9) return;
        const double obj = 0.5 * z.dot(p.P.mat() * z) + p.q.dot(z) + p.offset;
        if (obj < best) {
            best = obj;
            if (argmin) *argmin = z;
        }
    };
    // Depth-first over increasing index subsets of size <= nv - ne.
    const Eigen::Index cap = std::max<Eigen::Index>(0, nv - ne);
    auto recurse = [&](auto&& self, Eigen::Index start) -> void {
        evaluate();
        if (static_cast<Eigen::Index>(set.size()) == cap) return;
        for (Eigen::Index i = start; i < ni; ++i) {
            set.push_back(i);
            self(self, i + 1);
            set.pop_back();
        }
    };
    recurse(recurse, 0);
    return best;
}

LqSystem scalar_example() {
    return LqSystem(Matrix::Constant(1, 1, 2.0), Matrix::Constant(1, 1, 0.5), SymMatrix::scalar(1.0),
                    SymMatrix::scalar(10.0));
}

LqSystem double_integrator() {
    Matrix a(2, 2), b(2, 1);
    a << 1, 1, 0, 1;
    b << 0, 1;
    return LqSystem(a, b, SymMatrix::identity(2), SymMatrix::identity(1));
}

LqSystem four_state_example() {
    Matrix a(4, 4), b(4, 2);
    a << 0.9993, -3.0083, -0.1131, -1.6081, 0, 0.9862, 0.0478, 0, 0, 2.0833, 1.0089, 0, 0, 0.0526, 0.0498, 1;
    b << -0.0804, -0.6347, -0.0291, -0.0143, -0.8679, -0.0917, -0.0216, -0.0022;
    return LqSystem(a, b, SymMatrix::identity(4), SymMatrix::identity(2));
}

}  // namespace lqmpc::testing
