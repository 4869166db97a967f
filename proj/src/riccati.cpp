#include "lqmpc/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lqmpc/errors.hpp"

namespace lqmpc {

namespace {

std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

void check_k(const LqSystem& sys, const SymMatrix& k, const char* where) {
    if (k.dim() != sys.n()) {
        throw InvalidArgument(std::string(where) + ": K is " + std::to_string(k.dim()) +
                              "-dimensional, system state is " + std::to_string(sys.n()));
    }
}

double residual_norm(const LqSystem& sys, const SymMatrix& k) {
    const Matrix diff = bellman_op(sys, k).mat() - k.mat();
    if (!diff.allFinite()) {
        throw NumericError("solve_dare: iterates diverged; the pair looks unstabilizable", 0,
                           std::numeric_limits<double>::infinity());
    }
    return induced_two_norm(diff);
}

}  // namespace

LqSystem::LqSystem(Matrix a, Matrix b, SymMatrix q, SymMatrix r)
    : a_(std::move(a)), b_(std::move(b)), q_(std::move(q)), r_(std::move(r)) {
    require_square_finite(a_, "LqSystem A");
    if (b_.rows() != a_.rows() || b_.cols() == 0 || !b_.allFinite()) {
        throw InvalidArgument("LqSystem: B is " + shape(b_) + ", expected " + std::to_string(a_.rows()) + "xm");
    }
    if (q_.dim() != a_.rows()) throw InvalidArgument("LqSystem: Q dimension does not match A");
    if (r_.dim() != b_.cols()) throw InvalidArgument("LqSystem: R dimension does not match B columns");
    if (!q_.mat().allFinite() || !r_.mat().allFinite()) throw InvalidArgument("LqSystem: non-finite weight");
    if (r_.min_eigenvalue() <= tol::psd) throw InvalidArgument("LqSystem: R must be positive definite");
    if (q_.min_eigenvalue() < -tol::psd * std::max(1.0, induced_two_norm(q_))) {
        throw InvalidArgument("LqSystem: Q must be positive semidefinite");
    }
}

LqSystem LqSystem::with_input_weight_scaled(double zeta) const {
    return LqSystem(a_, b_, q_, zeta * r_);
}

GainPolicy::GainPolicy(const LqSystem& sys, Matrix l) : l_(std::move(l)) {
    if (l_.rows() != sys.m() || l_.cols() != sys.n()) {
        throw InvalidArgument("GainPolicy: L is " + shape(l_) + ", expected " + std::to_string(sys.m()) + "x" +
                              std::to_string(sys.n()));
    }
    closed_loop_ = sys.A() + sys.B() * l_;
}

SymMatrix bellman_op(const LqSystem& sys, const SymMatrix& k) {
    check_k(sys, k, "bellman_op");
    const Matrix& a = sys.A();
    const Matrix& b = sys.B();
    const Matrix kb = k.mat() * b;
    const Matrix s = b.transpose() * kb + sys.R().mat();
    Eigen::LDLT<Matrix> ldlt(s);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw NumericError("bellman_op: B'KB+R is not positive definite", 0, 0.0);
    }
    const Matrix inner = k.mat() - kb * ldlt.solve(kb.transpose());
    return SymMatrix(a.transpose() * inner * a + sys.Q().mat());
}

SymMatrix policy_bellman_op(const LqSystem& sys, const GainPolicy& l, const SymMatrix& k) {
    check_k(sys, k, "policy_bellman_op");
    const Matrix& d = l.closed_loop();
    return SymMatrix(d.transpose() * k.mat() * d + sys.Q().mat() + l.L().transpose() * sys.R().mat() * l.L());
}

namespace {

Matrix gain_with_weight(const LqSystem& sys, const SymMatrix& k, const Matrix& r) {
    const Matrix btk = sys.B().transpose() * k.mat();
    const Matrix s = btk * sys.B() + r;
    return -Eigen::LDLT<Matrix>(s).solve(btk * sys.A());
}

}  // namespace

GainPolicy greedy_gain(const LqSystem& sys, const SymMatrix& kbar) {
    check_k(sys, kbar, "greedy_gain");
    return GainPolicy(sys, gain_with_weight(sys, kbar, sys.R().mat()));
}

GainPolicy amplified_gain(const LqSystem& sys, const SymMatrix& k, double zeta) {
    check_k(sys, k, "amplified_gain");
    if (!(zeta >= 1.0)) throw InvalidArgument("amplified_gain: zeta must be >= 1");
    return GainPolicy(sys, gain_with_weight(sys, k, zeta * sys.R().mat()));
}

SymMatrix closed_loop_cost(const LqSystem& sys, const GainPolicy& l) {
    const Matrix& d = l.closed_loop();
    const double sr = spectral_radius(d);
    if (sr >= 1.0 - tol::stability) {
        throw DomainError("closed_loop_cost: A+BL is not stable (spectral radius " + std::to_string(sr) + ")");
    }
    return solve_dlyap(d, SymMatrix(sys.Q().mat() + l.L().transpose() * sys.R().mat() * l.L()));
}

DareSolution solve_dare(const LqSystem& sys) {
    constexpr long max_value_iterations = 100000;
    constexpr long max_newton = 50;

    SymMatrix k = sys.Q();
    long vi = 0;
    // Value iteration until the greedy gain is stabilizing; Kleinman steps
    // then converge quadratically and monotonically from above.
    for (; vi < max_value_iterations; ++vi) {
        const GainPolicy l = greedy_gain(sys, k);
        if (spectral_radius(l.closed_loop()) < 1.0 - 1e-6) break;
        k = bellman_op(sys, k);
        const double scale = std::max(1.0, induced_two_norm(k));
        if (residual_norm(sys, k) <= dare_tol * scale) break;
    }
    if (vi == max_value_iterations) {
        throw NumericError("solve_dare: value iteration never produced a stabilizing gain", vi,
                           residual_norm(sys, k));
    }

    double res = residual_norm(sys, k);
    long newton = 0;
    double best = res;
    SymMatrix best_k = k;
    while (newton < max_newton && res > dare_tol * std::max(1.0, induced_two_norm(k))) {
        const GainPolicy l = greedy_gain(sys, k);
        k = closed_loop_cost(sys, l);
        ++newton;
        res = residual_norm(sys, k);
        if (res < best) {
            best = res;
            best_k = k;
        } else if (res > 0.5 * best && newton > 3) {
            break;  // rounding floor
        }
    }
    k = best_k;
    res = best;
    // Near the rounding floor one Bellman sweep contracts the error by the
    // closed-loop factor; use it to polish.
    for (int it = 0; it < 20 && res > dare_tol * std::max(1.0, induced_two_norm(k)); ++it) {
        const SymMatrix next = bellman_op(sys, k);
        const double r = residual_norm(sys, next);
        if (r >= res) break;
        k = next;
        res = r;
    }
    if (res > dare_tol * std::max(1.0, induced_two_norm(k))) {
        throw NumericError("solve_dare: residual above tolerance", vi + newton, res);
    }
    GainPolicy l = greedy_gain(sys, k);
    if (!is_stable(l.closed_loop())) {
        throw NumericError("solve_dare: optimal closed loop is not stable", vi + newton, res);
    }
    return DareSolution{k, std::move(l), vi, newton, res};
}

SymMatrix zeta_dare(const LqSystem& sys, double zeta) {
    if (!(zeta >= 1.0)) throw InvalidArgument("zeta_dare: zeta must be >= 1, got " + std::to_string(zeta));
    return solve_dare(sys.with_input_weight_scaled(zeta)).K;
}

SymMatrix iterate_bellman(const LqSystem& sys, const SymMatrix& k, int steps) {
    if (steps < 0) throw InvalidArgument("iterate_bellman: negative step count");
    SymMatrix out = k;
    for (int i = 0; i < steps; ++i) out = bellman_op(sys, out);
    return out;
}

double decrease_margin(const LqSystem& sys, const SymMatrix& k) {
    return (k - bellman_op(sys, k)).min_eigenvalue();
}

bool in_region_of_decreasing(const LqSystem& sys, const SymMatrix& k) {
    return decrease_margin(sys, k) >= -tol::psd * std::max(1.0, induced_two_norm(k));
}

}  // namespace lqmpc
