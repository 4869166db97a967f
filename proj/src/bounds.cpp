#include "lqmpc/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lqmpc/errors.hpp"

namespace lqmpc {

namespace {

void require_horizon(int ell) {
    if (ell < 1) throw InvalidArgument("horizon must be >= 1, got " + std::to_string(ell));
}

Matrix matrix_power(const Matrix& m, int p) {
    Matrix out = Matrix::Identity(m.rows(), m.cols());
    for (int i = 0; i < p; ++i) out = out * m;
    return out;
}

}  // namespace

double squared_power_norm_series(const Matrix& d) {
    const double sr = spectral_radius(d);
    if (sr >= 1.0 - tol::stability) {
        throw DomainError("squared_power_norm_series: matrix is not stable (spectral radius " +
                          std::to_string(sr) + ")");
    }
    constexpr long cap = 1000000;
    double partial = 0.0;
    Matrix power = Matrix::Identity(d.rows(), d.cols());
    long i = 0;
    for (; i < cap; ++i) {
        const double term = std::pow(induced_two_norm(power), 2);
        partial += term;
        if (i > 0 && term < 1e-10 * partial) break;
        power = power * d;
    }
    if (i == cap) throw NumericError("squared_power_norm_series: no convergence", i, partial);

    // Tail bound: find a block length p with q = ||D^p|| < 1. Then every later
    // block of p terms is at most q^2 times the previous one, so
    // tail <= block0 / (1 - q^2), where block0 holds the next p terms.
    Matrix dp = d;
    int p = 1;
    double q = induced_two_norm(dp);
    while (q >= 1.0) {
        dp = dp * d;
        ++p;
        q = induced_two_norm(dp);
    }
    double block0 = 0.0;
    for (int j = 0; j < p; ++j) {
        power = power * d;
        block0 += std::pow(induced_two_norm(power), 2);
    }
    return partial + block0 / (1.0 - q * q);
}

BoundsAnalyzer::BoundsAnalyzer(LqSystem sys) : sys_(std::move(sys)), opt_(solve_dare(sys_)) {}

BoundsAnalyzer::BoundsAnalyzer(LqSystem sys, DareSolution optimum) : sys_(std::move(sys)), opt_(std::move(optimum)) {}

double BoundsAnalyzer::alpha() const { return std::min(std::pow(induced_two_norm(opt_.L.closed_loop()), 2), 1.0); }

double BoundsAnalyzer::beta(int ell) const {
    require_horizon(ell);
    return std::min(std::pow(induced_two_norm(matrix_power(opt_.L.closed_loop(), ell - 1)), 2), 1.0);
}

void BoundsAnalyzer::require_decreasing(const SymMatrix& k) const {
    if (!in_region_of_decreasing(sys_, k)) {
        throw DomainError("K is not in the region of decreasing: min eigenvalue of K - F(K) is " +
                          std::to_string(decrease_margin(sys_, k)));
    }
}

WeightedNorm BoundsAnalyzer::weighted_norm_for(const SymMatrix& k, int ell) const {
    const GainPolicy lt = greedy_gain(sys_, iterate_bellman(sys_, k, ell - 1));
    return build_weighted_norm(lt.closed_loop());
}

double BoundsAnalyzer::contraction_bound(const SymMatrix& k, int ell) const {
    require_horizon(ell);
    require_decreasing(k);
    const WeightedNorm wn = weighted_norm_for(k, ell);
    const double ratio = wn.c2 / wn.c1;
    return ratio / (1.0 - wn.rho) * (wn.rho + ratio * alpha()) * beta(ell) * induced_two_norm(k - opt_.K);
}

double BoundsAnalyzer::monotone_bound(const SymMatrix& k, int ell) const {
    require_horizon(ell);
    require_decreasing(k);
    return alpha() * beta(ell) * induced_two_norm(k - opt_.K);
}

double BoundsAnalyzer::newton_gamma(const SymMatrix& kbar) const {
    require_decreasing(kbar);
    const Matrix& a = sys_.A();
    const Matrix& b = sys_.B();
    const Matrix& r = sys_.R().mat();
    const Matrix s_star = b.transpose() * opt_.K.mat() * b + r;
    const Matrix s_bar = b.transpose() * kbar.mat() * b + r;
    const double nb = operator_norm(b);
    const double eta = induced_two_norm(Matrix(s_star.inverse())) *
                       (nb * induced_two_norm(a) +
                        nb * nb * induced_two_norm(Matrix(s_bar.inverse())) *
                            operator_norm(Matrix(b.transpose() * kbar.mat() * a)));
    const GainPolicy lt = greedy_gain(sys_, kbar);
    return eta * eta * induced_two_norm(s_star) * squared_power_norm_series(lt.closed_loop());
}

double BoundsAnalyzer::newton_bound(const SymMatrix& k, int ell) const {
    require_horizon(ell);
    require_decreasing(k);
    const double beta_l = beta(ell);
    const double dist = induced_two_norm(k - opt_.K);
    return newton_gamma(iterate_bellman(sys_, k, ell - 1)) * beta_l * beta_l * dist * dist;
}

double BoundsAnalyzer::actual_gap(const SymMatrix& k, int ell) const {
    require_horizon(ell);
    const GainPolicy lt = greedy_gain(sys_, iterate_bellman(sys_, k, ell - 1));
    return induced_two_norm(closed_loop_cost(sys_, lt) - opt_.K);
}

BoundsReport BoundsAnalyzer::full_report(const SymMatrix& k, int ell) const {
    require_horizon(ell);
    require_decreasing(k);
    BoundsReport rep;
    rep.ell = ell;
    rep.alpha = alpha();
    rep.beta_ell = beta(ell);
    const SymMatrix kbar = iterate_bellman(sys_, k, ell - 1);
    const GainPolicy lt = greedy_gain(sys_, kbar);
    const WeightedNorm wn = build_weighted_norm(lt.closed_loop());
    rep.rho = wn.rho;
    rep.c1 = wn.c1;
    rep.c2 = wn.c2;
    rep.design_distance = induced_two_norm(k - opt_.K);
    rep.gamma = newton_gamma(kbar);
    const double ratio = wn.c2 / wn.c1;
    rep.bound_contraction =
        ratio / (1.0 - wn.rho) * (wn.rho + ratio * rep.alpha) * rep.beta_ell * rep.design_distance;
    rep.bound_monotone = rep.alpha * rep.beta_ell * rep.design_distance;
    rep.bound_newton = rep.gamma * rep.beta_ell * rep.beta_ell * rep.design_distance * rep.design_distance;
    rep.actual_gap = induced_two_norm(closed_loop_cost(sys_, lt) - opt_.K);
    return rep;
}

double alpha_const(const LqSystem& sys, const GainPolicy& l_star) {
    (void)sys;
    return std::min(std::pow(induced_two_norm(l_star.closed_loop()), 2), 1.0);
}

double beta_const(const LqSystem& sys, const GainPolicy& l_star, int ell) {
    (void)sys;
    require_horizon(ell);
    return std::min(std::pow(induced_two_norm(matrix_power(l_star.closed_loop(), ell - 1)), 2), 1.0);
}

double contraction_bound(const LqSystem& sys, const SymMatrix& k, int ell) {
    return BoundsAnalyzer(sys).contraction_bound(k, ell);
}
double monotone_bound(const LqSystem& sys, const SymMatrix& k, int ell) {
    return BoundsAnalyzer(sys).monotone_bound(k, ell);
}
double newton_gamma(const LqSystem& sys, const SymMatrix& kbar) { return BoundsAnalyzer(sys).newton_gamma(kbar); }
double newton_bound(const LqSystem& sys, const SymMatrix& k, int ell) {
    return BoundsAnalyzer(sys).newton_bound(k, ell);
}
double actual_gap(const LqSystem& sys, const SymMatrix& k, int ell) { return BoundsAnalyzer(sys).actual_gap(k, ell); }
BoundsReport full_report(const LqSystem& sys, const SymMatrix& k, int ell) {
    return BoundsAnalyzer(sys).full_report(k, ell);
}

}  // namespace lqmpc
