#pragma once

#include <vector>

#include "lqmpc/matcore.hpp"

namespace lqmpc {

inline constexpr double lp_tol = 1e-9;

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

const char* to_string(LpStatus s);

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    Vector x;
    double value = 0.0;
    long pivots = 0;
};

/// minimize c'x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x_j >= 0 where nonneg[j].
/// Empty `nonneg` means every variable is free. Either constraint block may
/// have zero rows (but must have c.size() columns).
struct LinearProgram {
    Vector c;
    Matrix A_ub;
    Vector b_ub;
    Matrix A_eq;
    Vector b_eq;
    std::vector<bool> nonneg;
};

/// Dense two-phase tableau simplex with Bland's anti-cycling rule.
LpResult solve_lp(const LinearProgram& lp);

}  // namespace lqmpc
