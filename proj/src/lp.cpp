#include "lqmpc/lp.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "lqmpc/errors.hpp"

namespace lqmpc {

const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        case LpStatus::unbounded: return "unbounded";
        case LpStatus::iteration_limit: return "iteration_limit";
    }
    return "unknown";
}

namespace {

constexpr long max_pivots = 200000;

// Standard-form tableau: rows 0..m-1 are constraints, row m is the objective
// (reduced costs, with -objective value in the last column).
class Tableau {
public:
    Tableau(Matrix t, std::vector<int> basis) : t_(std::move(t)), basis_(std::move(basis)) {}

    Eigen::Index rows() const { return t_.rows() - 1; }
    Eigen::Index cols() const { return t_.cols() - 1; }
    Matrix& data() { return t_; }
    std::vector<int>& basis() { return basis_; }

    void pivot(Eigen::Index r, Eigen::Index c) {
        t_.row(r) /= t_(r, c);
        for (Eigen::Index i = 0; i < t_.rows(); ++i) {
            if (i == r) continue;
            const double f = t_(i, c);
            if (f != 0.0) t_.row(i) -= f * t_.row(r);
        }
        basis_[static_cast<std::size_t>(r)] = static_cast<int>(c);
    }

    // Runs Bland's rule over columns [0, active_cols). Returns optimal,
    // unbounded or iteration_limit.
    LpStatus optimize(Eigen::Index active_cols, long& pivots) {
        const Eigen::Index m = rows();
        while (true) {
            Eigen::Index enter = -1;
            for (Eigen::Index j = 0; j < active_cols; ++j) {
                if (t_(m, j) < -lp_tol) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) return LpStatus::optimal;
            Eigen::Index leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < m; ++i) {
                const double a = t_(i, enter);
                if (a > lp_tol) {
                    const double ratio = t_(i, cols()) / a;
                    if (ratio < best - 1e-12 ||
                        (std::abs(ratio - best) <= 1e-12 && leave >= 0 &&
                         basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
                        best = ratio;
                        leave = i;
                    }
                }
            }
            if (leave < 0) return LpStatus::unbounded;
            pivot(leave, enter);
            if (++pivots > max_pivots) return LpStatus::iteration_limit;
        }
    }

private:
    Matrix t_;
    std::vector<int> basis_;
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp) {
    const Eigen::Index nv = lp.c.size();
    const Eigen::Index n_ub = lp.A_ub.rows();
    const Eigen::Index n_eq = lp.A_eq.rows();
    if ((n_ub > 0 && lp.A_ub.cols() != nv) || (n_eq > 0 && lp.A_eq.cols() != nv) || lp.b_ub.size() != n_ub ||
        lp.b_eq.size() != n_eq) {
        throw InvalidArgument("solve_lp: inconsistent dimensions");
    }
    if (!lp.nonneg.empty() && static_cast<Eigen::Index>(lp.nonneg.size()) != nv) {
        throw InvalidArgument("solve_lp: nonneg mask has wrong length");
    }

    // Column layout: one column per nonneg variable, two (x+, x-) per free
    // variable, then one slack per inequality row, then artificials.
    std::vector<Eigen::Index> pos_col(static_cast<std::size_t>(nv)), neg_col(static_cast<std::size_t>(nv), -1);
    Eigen::Index ncol = 0;
    for (Eigen::Index j = 0; j < nv; ++j) {
        pos_col[static_cast<std::size_t>(j)] = ncol++;
        const bool free = lp.nonneg.empty() || !lp.nonneg[static_cast<std::size_t>(j)];
        if (free) neg_col[static_cast<std::size_t>(j)] = ncol++;
    }
    const Eigen::Index slack0 = ncol;
    ncol += n_ub;
    const Eigen::Index m = n_ub + n_eq;

    // Rows needing an artificial: equalities and inequalities with negative rhs.
    std::vector<bool> needs_art(static_cast<std::size_t>(m), false);
    Eigen::Index n_art = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const bool need = i >= n_ub || lp.b_ub(i) < 0.0;
        needs_art[static_cast<std::size_t>(i)] = need;
        if (need) ++n_art;
    }
    const Eigen::Index art0 = ncol;
    const Eigen::Index total = ncol + n_art;

    Matrix t = Matrix::Zero(m + 1, total + 1);
    std::vector<int> basis(static_cast<std::size_t>(m));
    Eigen::Index art = art0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const bool is_ub = i < n_ub;
        const auto row = is_ub ? lp.A_ub.row(i) : lp.A_eq.row(i - n_ub);
        double rhs = is_ub ? lp.b_ub(i) : lp.b_eq(i - n_ub);
        for (Eigen::Index j = 0; j < nv; ++j) {
            t(i, pos_col[static_cast<std::size_t>(j)]) = row(j);
            if (neg_col[static_cast<std::size_t>(j)] >= 0) t(i, neg_col[static_cast<std::size_t>(j)]) = -row(j);
        }
        if (is_ub) t(i, slack0 + i) = 1.0;
        t(i, total) = rhs;
        if (rhs < 0.0) {
            t.row(i) *= -1.0;
            rhs = -rhs;
        }
        if (needs_art[static_cast<std::size_t>(i)]) {
            t(i, art) = 1.0;
            basis[static_cast<std::size_t>(i)] = static_cast<int>(art);
            ++art;
        } else {
            basis[static_cast<std::size_t>(i)] = static_cast<int>(slack0 + i);
        }
    }

    LpResult result;
    Tableau tab(std::move(t), std::move(basis));
    Matrix& tt = tab.data();

    if (n_art > 0) {
        // Phase 1: minimize the sum of artificials.
        for (Eigen::Index i = 0; i < m; ++i)
            if (needs_art[static_cast<std::size_t>(i)]) tt.row(m) -= tt.row(i);
        for (Eigen::Index c = art0; c < total; ++c) tt(m, c) = 0.0;
        const LpStatus s1 = tab.optimize(total, result.pivots);
        if (s1 == LpStatus::iteration_limit) {
            result.status = s1;
            return result;
        }
        double rhs_scale = 1.0;
        for (Eigen::Index i = 0; i < m; ++i) rhs_scale = std::max(rhs_scale, std::abs(tt(i, total)));
        if (-tt(m, total) > lp_tol * rhs_scale) {
            result.status = LpStatus::infeasible;
            return result;
        }
        // Drive remaining (zero-level) artificials out of the basis.
        for (Eigen::Index i = 0; i < m; ++i) {
            if (tab.basis()[static_cast<std::size_t>(i)] < art0) continue;
            for (Eigen::Index c = 0; c < art0; ++c) {
                if (std::abs(tt(i, c)) > 1e-7) {
                    tab.pivot(i, c);
                    break;
                }
            }
            // A row with no usable column is redundant; it stays with its
            // artificial basic at zero and the artificial columns are frozen.
        }
    }

    // Phase 2 objective row.
    tt.row(m).setZero();
    for (Eigen::Index j = 0; j < nv; ++j) {
        tt(m, pos_col[static_cast<std::size_t>(j)]) = lp.c(j);
        if (neg_col[static_cast<std::size_t>(j)] >= 0) tt(m, neg_col[static_cast<std::size_t>(j)]) = -lp.c(j);
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index b = tab.basis()[static_cast<std::size_t>(i)];
        const double f = tt(m, b);
        if (f != 0.0) tt.row(m) -= f * tt.row(i);
    }
    const LpStatus s2 = tab.optimize(art0, result.pivots);
    result.status = s2;
    if (s2 != LpStatus::optimal) return result;

    Vector z = Vector::Zero(total);
    for (Eigen::Index i = 0; i < m; ++i) z(tab.basis()[static_cast<std::size_t>(i)]) = tt(i, total);
    result.x.resize(nv);
    for (Eigen::Index j = 0; j < nv; ++j) {
        double v = z(pos_col[static_cast<std::size_t>(j)]);
        if (neg_col[static_cast<std::size_t>(j)] >= 0) v -= z(neg_col[static_cast<std::size_t>(j)]);
        result.x(j) = v;
    }
    result.value = lp.c.dot(result.x);
    return result;
}

}  // namespace lqmpc
