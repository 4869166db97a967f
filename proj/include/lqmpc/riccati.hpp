#pragma once

#include "lqmpc/matcore.hpp"

namespace lqmpc {

/// x+ = Ax + Bu with stage cost x'Qx + u'Ru.
///
/// Stabilizability of (A,B) and detectability of (A, sqrt Q) are not checked
/// here; solve_dare certifies them operationally.
class LqSystem {
public:
    LqSystem(Matrix a, Matrix b, SymMatrix q, SymMatrix r);

    const Matrix& A() const noexcept { return a_; }
    const Matrix& B() const noexcept { return b_; }
    const SymMatrix& Q() const noexcept { return q_; }
    const SymMatrix& R() const noexcept { return r_; }
    Eigen::Index n() const noexcept { return a_.rows(); }
    Eigen::Index m() const noexcept { return b_.cols(); }

    /// Same system with R replaced by zeta * R.
    LqSystem with_input_weight_scaled(double zeta) const;

private:
    Matrix a_;
    Matrix b_;
    SymMatrix q_;
    SymMatrix r_;
};

/// Linear feedback u = Lx together with its closed-loop matrix A + BL.
class GainPolicy {
public:
    GainPolicy(const LqSystem& sys, Matrix l);

    const Matrix& L() const noexcept { return l_; }
    const Matrix& closed_loop() const noexcept { return closed_loop_; }

private:
    Matrix l_;
    Matrix closed_loop_;
};

/// F(K) = A'(K - KB(B'KB+R)^-1 B'K)A + Q
SymMatrix bellman_op(const LqSystem& sys, const SymMatrix& k);

/// F_L(K) = (A+BL)'K(A+BL) + Q + L'RL
SymMatrix policy_bellman_op(const LqSystem& sys, const GainPolicy& l, const SymMatrix& k);

/// L = -(B'KB+R)^-1 B'KA, the minimizer inside F(K); F_L(K) = F(K).
GainPolicy greedy_gain(const LqSystem& sys, const SymMatrix& kbar);

/// L = -(B'KB + zeta R)^-1 B'KA: the LQR gain of the amplified problem when
/// K = zeta_dare(sys, zeta). Used to build terminal sets.
GainPolicy amplified_gain(const LqSystem& sys, const SymMatrix& k, double zeta);

struct DareSolution {
    SymMatrix K;
    GainPolicy L;
    long value_iterations = 0;
    long newton_steps = 0;
    double residual = 0.0;  // ||F(K) - K||
};

inline constexpr double dare_tol = 1e-12;

/// Stabilizing solution K* of K = F(K) and the optimal gain L*.
/// Value iteration from Q until the greedy gain stabilizes, then Kleinman
/// (policy-iteration) steps to full precision.
DareSolution solve_dare(const LqSystem& sys);

/// Solution of the DARE with R inflated to zeta R. zeta = 1 gives K*.
SymMatrix zeta_dare(const LqSystem& sys, double zeta);

/// F^steps(K).
SymMatrix iterate_bellman(const LqSystem& sys, const SymMatrix& k, int steps);

/// F(K) <= K in PSD order. The slack is psd_tol * max(1, ||K||) so the fixed
/// point K* (which sits on the boundary) tests true.
bool in_region_of_decreasing(const LqSystem& sys, const SymMatrix& k);

/// Smallest eigenvalue of K - F(K). Negative values mean K is outside D.
double decrease_margin(const LqSystem& sys, const SymMatrix& k);

/// K_L solving K = F_L(K). Throws DomainError if A + BL is not stable.
SymMatrix closed_loop_cost(const LqSystem& sys, const GainPolicy& l);

}  // namespace lqmpc
