#pragma once

#include <optional>

#include "lqmpc/riccati.hpp"

namespace lqmpc {

/// Constants and performance bounds for one terminal cost K and horizon ell.
///
/// actual_gap is ||K_Lt - K*||, where Lt = greedy_gain(F^{ell-1}(K)) is the
/// policy produced by ell-horizon MPC with terminal cost K. The three bounds
/// are the contraction, monotonicity, and Newton-step bounds on that gap.
struct BoundsReport {
    int ell = 1;
    double alpha = 0.0;
    double beta_ell = 0.0;
    double rho = 0.0;
    double c1 = 1.0;
    double c2 = 1.0;
    double gamma = 0.0;
    double bound_contraction = 0.0;
    double bound_monotone = 0.0;
    double bound_newton = 0.0;
    double actual_gap = 0.0;
    double design_distance = 0.0;  // ||K - K*||
};

/// Holds K*, L* for a system so that repeated bound evaluations share one
/// Riccati solve. All methods are const and thread-safe.
class BoundsAnalyzer {
public:
    explicit BoundsAnalyzer(LqSystem sys);
    BoundsAnalyzer(LqSystem sys, DareSolution optimum);

    const LqSystem& system() const noexcept { return sys_; }
    const SymMatrix& k_star() const noexcept { return opt_.K; }
    const GainPolicy& l_star() const noexcept { return opt_.L; }

    double alpha() const;
    double beta(int ell) const;

    /// Throws DomainError naming the eigenvalue margin when K is outside D.
    void require_decreasing(const SymMatrix& k) const;

    /// ||A + B Lt||-tuned weighted norm for the MPC closed loop.
    WeightedNorm weighted_norm_for(const SymMatrix& k, int ell) const;

    double contraction_bound(const SymMatrix& k, int ell) const;
    double monotone_bound(const SymMatrix& k, int ell) const;
    double newton_gamma(const SymMatrix& kbar) const;
    double newton_bound(const SymMatrix& k, int ell) const;
    double actual_gap(const SymMatrix& k, int ell) const;
    BoundsReport full_report(const SymMatrix& k, int ell) const;

private:
    LqSystem sys_;
    DareSolution opt_;
};

double alpha_const(const LqSystem& sys, const GainPolicy& l_star);
double beta_const(const LqSystem& sys, const GainPolicy& l_star, int ell);
double contraction_bound(const LqSystem& sys, const SymMatrix& k, int ell);
double monotone_bound(const LqSystem& sys, const SymMatrix& k, int ell);
double newton_gamma(const LqSystem& sys, const SymMatrix& kbar);
double newton_bound(const LqSystem& sys, const SymMatrix& k, int ell);
double actual_gap(const LqSystem& sys, const SymMatrix& k, int ell);
BoundsReport full_report(const LqSystem& sys, const SymMatrix& k, int ell);

/// sum_{i>=0} ||D^i||^2 for stable D, truncated once a term falls below
/// 1e-10 of the partial sum and closed with a certified geometric tail.
double squared_power_norm_series(const Matrix& d);

}  // namespace lqmpc
