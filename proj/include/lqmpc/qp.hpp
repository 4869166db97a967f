#pragma once

#include <vector>

#include "lqmpc/matcore.hpp"
#include "lqmpc/polytope.hpp"
#include "lqmpc/riccati.hpp"

namespace lqmpc {

/// minimize 1/2 z'Pz + q'z + offset  s.t.  Gz <= g,  Ez = e.
struct QpProblem {
    SymMatrix P;
    Vector q;
    Matrix G;
    Vector g;
    Matrix E;
    Vector e;
    double offset = 0.0;

    Eigen::Index variables() const { return q.size(); }
    /// Throws InvalidArgument on inconsistent shapes or an indefinite P.
    void validate() const;
};

enum class QpStatus { optimal, infeasible, max_iter };
const char* to_string(QpStatus s);

struct KktResiduals {
    double primal = 0.0;           // max(Gz-g)_+ and |Ez-e|
    double dual = 0.0;             // |Pz + q + G'y + E'w|_inf
    double complementarity = 0.0;  // max |y_i (g_i - G_i z)|
};

struct QpSolution {
    QpStatus status = QpStatus::max_iter;
    Vector z;
    Vector duals_ineq;
    Vector duals_eq;
    double objective = 0.0;  // includes offset
    KktResiduals residuals;
    bool certified = false;  // residuals all within QpSettings::kkt_tol
    bool regularized = false;  // P was not numerically PD; 1e-10 I added
    int iterations = 0;
    std::vector<Eigen::Index> active_set;  // indices into G rows

    // Farkas certificate when infeasible: y >= 0, w with G'y + E'w = 0 and
    // g'y + e'w = -margin < 0.
    Vector farkas_ineq;
    Vector farkas_eq;
    double farkas_margin = 0.0;
};

struct QpSettings {
    double kkt_tol = 1e-8;
    double tikhonov = 1e-10;
    int max_iter = 0;  // 0: 10 * (constraints) + 100
};

KktResiduals kkt_residuals(const QpProblem& p, const Vector& z, const Vector& y, const Vector& w);

/// Dual active-set (Goldfarb-Idnani) solver for strictly convex QPs.
/// The Hessian is factored once; solve() may be called concurrently with
/// different linear terms and right-hand sides.
class DenseQpSolver {
public:
    DenseQpSolver(const SymMatrix& P, Matrix G, Matrix E, QpSettings settings = {});

    QpSolution solve(const Vector& q, const Vector& g, const Vector& e, double offset = 0.0) const;

    bool regularized() const noexcept { return regularized_; }

private:
    Matrix P_;
    Matrix P_inv_;
    Matrix G_;
    Matrix E_;
    Matrix PinvGt_;  // P^-1 G'
    Matrix PinvEt_;
    QpSettings settings_;
    bool regularized_ = false;
};

QpSolution solve_qp(const QpProblem& p, const QpSettings& settings = {});

/// Farkas certificate for {Gz <= g, Ez = e} by a phase-1 linear program.
/// Returns false when the set is feasible.
bool farkas_certificate(const Matrix& G, const Vector& g, const Matrix& E, const Vector& e, Vector& y, Vector& w,
                        double& margin);

/// Condensed finite-horizon MPC problem with the states eliminated:
/// x_k = Phi_k x0 + Gamma_k z and u_k = Psi_k x0 + Lambda_k z.
/// Without prestabilization z = (u_0, ..., u_{ell-1}). With a gain L the
/// inputs are u_k = L x_k + z_k, which keeps long horizons of unstable
/// systems well conditioned; the optimal input sequence is the same.
/// Everything except the linear term, the constraint right-hand side and the
/// constant depends only on the design, so one instance serves every x0.
struct CondensedMpc {
    int ell = 1;
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    SymMatrix P;
    Matrix q_of_x0;       // q = q_of_x0 * x0
    SymMatrix offset_of_x0;  // offset = x0' offset_of_x0 x0
    Matrix G;
    Vector g_const;
    Matrix g_of_x0;  // g = g_const + g_of_x0 * x0
    std::vector<Matrix> Phi;    // k = 0..ell
    std::vector<Matrix> Gamma;  // k = 0..ell
    std::vector<Matrix> Psi;     // k = 0..ell-1
    std::vector<Matrix> Lambda;  // k = 0..ell-1

    QpProblem at(const Vector& x0) const;
    Vector state(int k, const Vector& x0, const Vector& z) const { return Phi[k] * x0 + Gamma[k] * z; }
    Vector input(int k, const Vector& x0, const Vector& z) const { return Psi[k] * x0 + Lambda[k] * z; }
};

/// Constraints: x_k in Xhat for k = 0..ell-1, u_k in U, x_ell in S.
/// Cost: x_ell' K x_ell + sum_k (x_k' Q x_k + u_k' R u_k).
/// `prestabilizing_gain` (m x n, empty for none) selects u_k = L x_k + z_k.
CondensedMpc condense(const LqSystem& sys, const HPolytope& xhat, const HPolytope& u, const HPolytope& s,
                      const SymMatrix& k, int ell, const Matrix& prestabilizing_gain = Matrix());

QpProblem condense_mpc(const LqSystem& sys, const HPolytope& xhat, const HPolytope& u, const HPolytope& s,
                       const SymMatrix& k, int ell, const Vector& x0);

}  // namespace lqmpc
