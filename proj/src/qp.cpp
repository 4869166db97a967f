#include "lqmpc/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lqmpc/errors.hpp"
#include "lqmpc/lp.hpp"

namespace lqmpc {

const char* to_string(QpStatus s) {
    switch (s) {
        case QpStatus::optimal: return "optimal";
        case QpStatus::infeasible: return "infeasible";
        case QpStatus::max_iter: return "max_iter";
    }
    return "unknown";
}

void QpProblem::validate() const {
    const Eigen::Index nv = q.size();
    if (P.dim() != nv) throw InvalidArgument("QpProblem: P must be " + std::to_string(nv) + "x" + std::to_string(nv));
    if (G.rows() != g.size() || (G.rows() > 0 && G.cols() != nv))
        throw InvalidArgument("QpProblem: G/g shape mismatch");
    if (E.rows() != e.size() || (E.rows() > 0 && E.cols() != nv))
        throw InvalidArgument("QpProblem: E/e shape mismatch");
    if (!P.mat().allFinite() || !q.allFinite() || !G.allFinite() || !g.allFinite() || !E.allFinite() ||
        !e.allFinite())
        throw InvalidArgument("QpProblem: non-finite data");
    if (nv > 0 && P.min_eigenvalue() < -tol::psd * std::max(1.0, induced_two_norm(P)))
        throw InvalidArgument("QpProblem: P is not positive semidefinite");
}

KktResiduals kkt_residuals(const QpProblem& p, const Vector& z, const Vector& y, const Vector& w) {
    KktResiduals r;
    Vector grad = p.P.mat() * z + p.q;
    if (p.G.rows() > 0) {
        const Vector slack = p.g - p.G * z;
        r.primal = std::max(r.primal, (-slack).cwiseMax(0.0).maxCoeff());
        r.complementarity = y.cwiseProduct(slack).cwiseAbs().maxCoeff();
        grad += p.G.transpose() * y;
    }
    if (p.E.rows() > 0) {
        r.primal = std::max(r.primal, (p.E * z - p.e).cwiseAbs().maxCoeff());
        grad += p.E.transpose() * w;
    }
    r.dual = grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
    return r;
}

DenseQpSolver::DenseQpSolver(const SymMatrix& P, Matrix G, Matrix E, QpSettings settings)
    : P_(P.mat()), G_(std::move(G)), E_(std::move(E)), settings_(settings) {
    const Eigen::Index nv = P_.rows();
    if (G_.rows() > 0 && G_.cols() != nv) throw InvalidArgument("DenseQpSolver: G has wrong column count");
    if (E_.rows() > 0 && E_.cols() != nv) throw InvalidArgument("DenseQpSolver: E has wrong column count");
    if (G_.rows() == 0) G_.resize(0, nv);
    if (E_.rows() == 0) E_.resize(0, nv);
    Eigen::LLT<Matrix> llt(P_);
    const double scale = std::max(1.0, P_.cwiseAbs().maxCoeff());
    bool pd = llt.info() == Eigen::Success;
    if (pd) {
        const auto d = llt.matrixLLT().diagonal();
        pd = d.minCoeff() > 1e-7 * std::sqrt(scale);
    }
    if (!pd) {
        regularized_ = true;
        P_ += settings_.tikhonov * Matrix::Identity(nv, nv);
        llt.compute(P_);
        if (llt.info() != Eigen::Success) throw InvalidArgument("DenseQpSolver: P is not positive semidefinite");
    }
    P_inv_ = llt.solve(Matrix::Identity(nv, nv));
    P_inv_ = 0.5 * (P_inv_ + P_inv_.transpose()).eval();
    PinvGt_ = P_inv_ * G_.transpose();
    PinvEt_ = P_inv_ * E_.transpose();
}

namespace {

// Active constraint: a row of G or E, oriented by `sign` so that the
// constraint being enforced reads sign * n'z <= sign * b.
struct Active {
    Eigen::Index index;
    bool equality;
    double sign;
};

}  // namespace

QpSolution DenseQpSolver::solve(const Vector& q, const Vector& g, const Vector& e, double offset) const {
    const Eigen::Index nv = P_.rows();
    const Eigen::Index ni = G_.rows();
    const Eigen::Index ne = E_.rows();
    if (q.size() != nv || g.size() != ni || e.size() != ne)
        throw InvalidArgument("DenseQpSolver::solve: vector sizes do not match the factored problem");

    const int max_iter = settings_.max_iter > 0 ? settings_.max_iter : static_cast<int>(10 * (ni + ne) + 100);

    QpSolution sol;
    sol.regularized = regularized_;
    Vector z = -P_inv_ * q;

    std::vector<Active> act;
    Vector u(0);  // multipliers of the active set, oriented
    Matrix Y(nv, 0);  // P^-1 N
    Matrix M(0, 0);   // N' P^-1 N

    auto normal = [&](const Active& a) -> Vector {
        return a.sign * (a.equality ? Vector(E_.row(a.index).transpose()) : Vector(G_.row(a.index).transpose()));
    };
    auto pinv_normal = [&](const Active& a) -> Vector {
        return a.sign * (a.equality ? Vector(PinvEt_.col(a.index)) : Vector(PinvGt_.col(a.index)));
    };
    auto rhs = [&](const Active& a) { return a.sign * (a.equality ? e(a.index) : g(a.index)); };

    auto add_active = [&](const Active& a, double mult) {
        const Eigen::Index k = static_cast<Eigen::Index>(act.size());
        const Vector n = normal(a);
        const Vector y = pinv_normal(a);
        Matrix m2(k + 1, k + 1);
        m2.topLeftCorner(k, k) = M;
        const Vector cross = Y.transpose() * n;
        m2.block(0, k, k, 1) = cross;
        m2.block(k, 0, 1, k) = cross.transpose();
        m2(k, k) = n.dot(y);
        M = std::move(m2);
        Y.conservativeResize(Eigen::NoChange, k + 1);
        Y.col(k) = y;
        u.conservativeResize(k + 1);
        u(k) = mult;
        act.push_back(a);
    };
    auto drop_active = [&](Eigen::Index j) {
        const Eigen::Index k = static_cast<Eigen::Index>(act.size());
        std::vector<Eigen::Index> keep;
        for (Eigen::Index i = 0; i < k; ++i)
            if (i != j) keep.push_back(i);
        Matrix m2(k - 1, k - 1), y2(nv, k - 1);
        Vector u2(k - 1);
        for (Eigen::Index a = 0; a < k - 1; ++a) {
            y2.col(a) = Y.col(keep[a]);
            u2(a) = u(keep[a]);
            for (Eigen::Index b = 0; b < k - 1; ++b) m2(a, b) = M(keep[a], keep[b]);
        }
        M = std::move(m2);
        Y = std::move(y2);
        u = std::move(u2);
        act.erase(act.begin() + j);
    };

    // Step toward satisfying constraint `cand` (oriented so that it is
    // violated: n'z > b). Returns 1 once it is active, 0 when the problem is
    // infeasible (certificate stored in sol), -1 at the iteration cap.
    auto enforce = [&](Active cand) -> int {
        double up = 0.0;  // multiplier of the candidate
        for (;;) {
            if (++sol.iterations > max_iter) return -1;
            const Vector n = normal(cand);
            const Vector pn = pinv_normal(cand);
            const Eigen::Index k = static_cast<Eigen::Index>(act.size());
            Vector r = Vector::Zero(k);
            if (k > 0) r = M.ldlt().solve(Y.transpose() * n);
            const Vector s = -(pn - Y * r);  // primal direction
            const double curv = -n.dot(s);   // n' H n >= 0
            const double viol = n.dot(z) - rhs(cand);
            if (viol <= 0.0) {
                add_active(cand, up);
                return 1;
            }
            const double full = curv > 1e-14 * std::max(n.dot(pn), 1e-300) ? viol / curv
                                                                               : std::numeric_limits<double>::infinity();
            double partial = std::numeric_limits<double>::infinity();
            Eigen::Index block = -1;
            for (Eigen::Index j = 0; j < k; ++j) {
                if (act[j].equality) continue;
                if (r(j) > 1e-14) {
                    const double t = u(j) / r(j);
                    if (t < partial) {
                        partial = t;
                        block = j;
                    }
                }
            }
            if (cand.equality) {
                partial = std::numeric_limits<double>::infinity();
                block = -1;
            }
            const double t = std::min(full, partial);
            if (!std::isfinite(t)) {
                // n lies in the span of the active normals with nonpositive
                // inequality coefficients: Farkas certificate.
                sol.farkas_ineq = Vector::Zero(ni);
                sol.farkas_eq = Vector::Zero(ne);
                auto put = [&](const Active& a, double c) {
                    if (a.equality) sol.farkas_eq(a.index) += a.sign * c;
                    else sol.farkas_ineq(a.index) += c;
                };
                put(cand, 1.0);
                for (Eigen::Index j = 0; j < k; ++j) put(act[j], -r(j));
                return 0;
            }
            if (std::isfinite(full)) z += t * s;  // otherwise a pure dual step
            if (k > 0) u -= t * r;
            up += t;
            if (full <= partial) {
                add_active(cand, up);
                return 1;
            }
            drop_active(block);
        }
    };

    bool infeasible = false;
    bool capped = false;
    for (Eigen::Index j = 0; j < ne && !infeasible && !capped; ++j) {
        const double v = E_.row(j).dot(z) - e(j);
        Active a{j, true, v >= 0.0 ? 1.0 : -1.0};
        if (v == 0.0) {
            // Already satisfied; pin it unless it depends on earlier rows.
            const Vector n = normal(a);
            const Eigen::Index k = static_cast<Eigen::Index>(act.size());
            Vector r = Vector::Zero(k);
            if (k > 0) r = M.ldlt().solve(Y.transpose() * n);
            const Vector s = pinv_normal(a) - Y * r;
            if (n.dot(s) > 1e-14 * std::max(n.dot(pinv_normal(a)), 1e-300)) add_active(a, 0.0);
            continue;
        }
        const int rc = enforce(a);
        if (rc == 0) infeasible = true;
        if (rc < 0) capped = true;
    }

    const double viol_tol = 1e-10;
    while (!infeasible && !capped) {
        Eigen::Index worst = -1;
        double worst_v = 0.0;
        for (Eigen::Index i = 0; i < ni; ++i) {
            bool is_active = false;
            for (const auto& a : act)
                if (!a.equality && a.index == i) {
                    is_active = true;
                    break;
                }
            if (is_active) continue;
            const double nrm = G_.row(i).norm();
            const double v = G_.row(i).dot(z) - g(i);
            const double scaled = nrm > 0.0 ? v / nrm : v;
            if (v > viol_tol * std::max(1.0, std::abs(g(i))) && scaled > worst_v) {
                worst_v = scaled;
                worst = i;
            }
        }
        if (worst < 0) break;
        const int rc = enforce(Active{worst, false, 1.0});
        if (rc == 0) infeasible = true;
        if (rc < 0) capped = true;
    }

    if (infeasible) {
        sol.status = QpStatus::infeasible;
        sol.farkas_margin = -(g.dot(sol.farkas_ineq) + e.dot(sol.farkas_eq));
        const double dep = ((ni > 0 ? Vector(G_.transpose() * sol.farkas_ineq) : Vector::Zero(nv)) +
                            (ne > 0 ? Vector(E_.transpose() * sol.farkas_eq) : Vector::Zero(nv)))
                               .cwiseAbs()
                               .maxCoeff();
        const double wscale = std::max(1.0, sol.farkas_ineq.cwiseAbs().sum() + sol.farkas_eq.cwiseAbs().sum());
        if (!(sol.farkas_margin > 0.0) || dep > 1e-8 * wscale || (ni > 0 && sol.farkas_ineq.minCoeff() < 0.0)) {
            Vector y, w;
            double margin = 0.0;
            if (farkas_certificate(G_, g, E_, e, y, w, margin)) {
                sol.farkas_ineq = y;
                sol.farkas_eq = w;
                sol.farkas_margin = margin;
            }
        }
        sol.z = z;
        sol.objective = std::numeric_limits<double>::infinity();
        return sol;
    }

    // Polish: recompute the active-set stationary point directly.
    const Eigen::Index k = static_cast<Eigen::Index>(act.size());
    if (k > 0) {
        Vector b(k);
        Matrix N(nv, k);
        for (Eigen::Index j = 0; j < k; ++j) {
            b(j) = rhs(act[j]);
            N.col(j) = normal(act[j]);
        }
        const Vector up = -M.ldlt().solve(b + Y.transpose() * q);
        const Vector zp = -P_inv_ * q - Y * up;
        bool ok = up.allFinite() && zp.allFinite();
        for (Eigen::Index j = 0; j < k && ok; ++j)
            if (!act[j].equality && up(j) < -1e-9) ok = false;
        if (ok) {
            z = zp;
            u = up;
            for (Eigen::Index j = 0; j < k; ++j)
                if (!act[j].equality) u(j) = std::max(u(j), 0.0);
        }
    }

    sol.z = z;
    sol.duals_ineq = Vector::Zero(ni);
    sol.duals_eq = Vector::Zero(ne);
    for (Eigen::Index j = 0; j < k; ++j) {
        if (act[j].equality) {
            sol.duals_eq(act[j].index) = act[j].sign * u(j);
        } else {
            sol.duals_ineq(act[j].index) = u(j);
            sol.active_set.push_back(act[j].index);
        }
    }
    std::sort(sol.active_set.begin(), sol.active_set.end());
    sol.status = capped ? QpStatus::max_iter : QpStatus::optimal;
    sol.objective = 0.5 * z.dot(P_ * z) + q.dot(z) + offset;

    QpProblem view{SymMatrix(P_), q, G_, g, E_, e, offset};
    sol.residuals = kkt_residuals(view, z, sol.duals_ineq, sol.duals_eq);
    const double t = settings_.kkt_tol;
    sol.certified = sol.status == QpStatus::optimal && sol.residuals.primal <= t && sol.residuals.dual <= t &&
                    sol.residuals.complementarity <= t;
    return sol;
}

QpSolution solve_qp(const QpProblem& p, const QpSettings& settings) {
    p.validate();
    DenseQpSolver solver(p.P, p.G, p.E, settings);
    return solver.solve(p.q, p.g, p.e, p.offset);
}

bool farkas_certificate(const Matrix& G, const Vector& g, const Matrix& E, const Vector& e, Vector& y, Vector& w,
                        double& margin) {
    // Variables (y >= 0, w free). Constraints G'y + E'w = 0, g'y + e'w = -1.
    // Feasible iff {Gz <= g, Ez = e} is empty.
    const Eigen::Index ni = G.rows(), ne = E.rows();
    const Eigen::Index nv = std::max(G.cols(), E.cols());
    LinearProgram lp;
    lp.c = Vector::Zero(ni + ne);
    lp.A_ub.resize(0, ni + ne);
    lp.b_ub.resize(0);
    lp.A_eq = Matrix::Zero(nv + 1, ni + ne);
    if (ni > 0) lp.A_eq.topLeftCorner(nv, ni) = G.transpose();
    if (ne > 0) lp.A_eq.block(0, ni, nv, ne) = E.transpose();
    lp.A_eq.block(nv, 0, 1, ni) = g.transpose();
    lp.A_eq.block(nv, ni, 1, ne) = e.transpose();
    lp.b_eq = Vector::Zero(nv + 1);
    lp.b_eq(nv) = -1.0;
    lp.nonneg.assign(static_cast<std::size_t>(ni + ne), false);
    for (Eigen::Index i = 0; i < ni; ++i) lp.nonneg[static_cast<std::size_t>(i)] = true;
    const LpResult r = solve_lp(lp);
    if (r.status != LpStatus::optimal) return false;
    y = r.x.head(ni).cwiseMax(0.0);
    w = r.x.tail(ne);
    margin = -(g.dot(y) + e.dot(w));
    return margin > 0.0;
}

QpProblem CondensedMpc::at(const Vector& x0) const {
    if (x0.size() != n) throw InvalidArgument("CondensedMpc: x0 has dimension " + std::to_string(x0.size()) +
                                              ", expected " + std::to_string(n));
    QpProblem p;
    p.P = P;
    p.q = q_of_x0 * x0;
    p.G = G;
    p.g = g_const + g_of_x0 * x0;
    p.E = Matrix(0, P.dim());
    p.e = Vector(0);
    p.offset = x0.dot(offset_of_x0.mat() * x0);
    return p;
}

CondensedMpc condense(const LqSystem& sys, const HPolytope& xhat, const HPolytope& u, const HPolytope& s,
                      const SymMatrix& k, int ell, const Matrix& prestabilizing_gain) {
    const Eigen::Index n = sys.n(), m = sys.m();
    if (ell < 1) throw InvalidArgument("condense: horizon must be >= 1, got " + std::to_string(ell));
    if (xhat.dim() != n || s.dim() != n) throw InvalidArgument("condense: state sets must have dimension n");
    if (u.dim() != m) throw InvalidArgument("condense: input set must have dimension m");
    if (k.dim() != n) throw InvalidArgument("condense: terminal weight must be n x n");
    const Matrix L = prestabilizing_gain.size() == 0 ? Matrix::Zero(m, n) : prestabilizing_gain;
    if (L.rows() != m || L.cols() != n) throw InvalidArgument("condense: prestabilizing gain must be m x n");
    const Matrix Acl = sys.A() + sys.B() * L;

    CondensedMpc c;
    c.ell = ell;
    c.n = n;
    c.m = m;
    const Eigen::Index nz = m * ell;
    c.Phi.resize(static_cast<std::size_t>(ell + 1));
    c.Gamma.resize(static_cast<std::size_t>(ell + 1));
    c.Psi.resize(static_cast<std::size_t>(ell));
    c.Lambda.resize(static_cast<std::size_t>(ell));
    c.Phi[0] = Matrix::Identity(n, n);
    c.Gamma[0] = Matrix::Zero(n, nz);
    for (int t = 0; t < ell; ++t) {
        c.Psi[t] = L * c.Phi[t];
        c.Lambda[t] = L * c.Gamma[t];
        c.Lambda[t].block(0, m * t, m, m) += Matrix::Identity(m, m);
        c.Phi[t + 1] = Acl * c.Phi[t];
        c.Gamma[t + 1] = Acl * c.Gamma[t];
        c.Gamma[t + 1].block(0, m * t, n, m) += sys.B();
    }

    Matrix H = Matrix::Zero(nz, nz);
    Matrix F = Matrix::Zero(nz, n);
    Matrix C = Matrix::Zero(n, n);
    const Matrix& Q = sys.Q().mat();
    const Matrix& R = sys.R().mat();
    for (int t = 0; t < ell; ++t) {
        H += c.Gamma[t].transpose() * Q * c.Gamma[t] + c.Lambda[t].transpose() * R * c.Lambda[t];
        F += c.Gamma[t].transpose() * Q * c.Phi[t] + c.Lambda[t].transpose() * R * c.Psi[t];
        C += c.Phi[t].transpose() * Q * c.Phi[t] + c.Psi[t].transpose() * R * c.Psi[t];
    }
    H += c.Gamma[ell].transpose() * k.mat() * c.Gamma[ell];
    F += c.Gamma[ell].transpose() * k.mat() * c.Phi[ell];
    C += c.Phi[ell].transpose() * k.mat() * c.Phi[ell];
    c.P = SymMatrix(2.0 * H);
    c.q_of_x0 = 2.0 * F;
    c.offset_of_x0 = SymMatrix(C);

    const Eigen::Index rx = xhat.rows(), ru = u.rows(), rs = s.rows();
    const Eigen::Index rows = rx * ell + ru * ell + rs;
    c.G = Matrix::Zero(rows, nz);
    c.g_const = Vector::Zero(rows);
    c.g_of_x0 = Matrix::Zero(rows, n);
    Eigen::Index r0 = 0;
    for (int t = 0; t < ell; ++t) {
        c.G.middleRows(r0, rx) = xhat.H() * c.Gamma[t];
        c.g_const.segment(r0, rx) = xhat.h();
        c.g_of_x0.middleRows(r0, rx) = -xhat.H() * c.Phi[t];
        r0 += rx;
    }
    for (int t = 0; t < ell; ++t) {
        c.G.middleRows(r0, ru) = u.H() * c.Lambda[t];
        c.g_const.segment(r0, ru) = u.h();
        c.g_of_x0.middleRows(r0, ru) = -u.H() * c.Psi[t];
        r0 += ru;
    }
    c.G.middleRows(r0, rs) = s.H() * c.Gamma[ell];
    c.g_const.segment(r0, rs) = s.h();
    c.g_of_x0.middleRows(r0, rs) = -s.H() * c.Phi[ell];
    return c;
}

QpProblem condense_mpc(const LqSystem& sys, const HPolytope& xhat, const HPolytope& u, const HPolytope& s,
                       const SymMatrix& k, int ell, const Vector& x0) {
    return condense(sys, xhat, u, s, k, ell).at(x0);
}

}  // namespace lqmpc
