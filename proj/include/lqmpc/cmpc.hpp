#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "lqmpc/polytope.hpp"
#include "lqmpc/qp.hpp"
#include "lqmpc/riccati.hpp"

namespace lqmpc {

/// LQ system with stage cost x'Qx + u'Ru + indicator(x in Xhat), u in U.
class ConstrainedProblem {
public:
    /// Both sets must contain the origin in their interior. Boundedness is
    /// not required; an unbounded Xhat still yields a well-posed MPC problem
    /// as long as the terminal set is bounded.
    ConstrainedProblem(LqSystem sys, HPolytope xhat, HPolytope u);

    const LqSystem& sys() const noexcept { return sys_; }
    const HPolytope& xhat() const noexcept { return xhat_; }
    const HPolytope& u() const noexcept { return u_; }

    double stage_cost(const Vector& x, const Vector& u) const;

    /// Largest face distance of Xhat from the origin, max_i h_i / |H_i|.
    double box_radius() const;

private:
    LqSystem sys_;
    HPolytope xhat_;
    HPolytope u_;
};

/// Which linear law defines the terminal set.
enum class TerminalGainRule {
    amplified,  // -(B'KB + zeta R)^-1 B'KA, the LQR gain of the inflated problem
    greedy,     // -(B'KB + R)^-1 B'KA
};

/// Terminal cost x'Kx and terminal set S (maximal admissible invariant set
/// of the local law `gain`).
struct TerminalDesign {
    SymMatrix K;
    HPolytope S;
    GainPolicy gain;
    double zeta = 1.0;
    int determinedness_index = 0;
};

/// K = zeta_dare(zeta), S from the chosen gain rule.
TerminalDesign design_terminal(const ConstrainedProblem& prob, double zeta,
                               TerminalGainRule rule = TerminalGainRule::amplified);

/// Explicit terminal weight (must lie in the region of decreasing); S is built
/// from the greedy gain of K.
TerminalDesign design_terminal_explicit(const ConstrainedProblem& prob, const SymMatrix& k);

struct MpcStep {
    bool feasible = false;
    Vector u0;
    double value = std::numeric_limits<double>::infinity();  // (T^ell J)(x)
    Vector z;
    bool constraints_active = false;  // false when the unconstrained minimizer was admissible
    double farkas_margin = 0.0;
};

/// ell-horizon MPC law for a fixed terminal design. The condensed QP and its
/// Hessian factorization are built once; evaluate() is const and reentrant.
class MpcController {
public:
    MpcController(const ConstrainedProblem& prob, const TerminalDesign& design, int ell);

    MpcStep evaluate(const Vector& x) const;
    /// Full QP solve without the unconstrained shortcut.
    QpSolution solve(const Vector& x) const;

    int horizon() const noexcept { return ell_; }
    const ConstrainedProblem& problem() const noexcept { return prob_; }
    const TerminalDesign& design() const noexcept { return design_; }
    const CondensedMpc& condensed() const noexcept { return cond_; }

    /// x' F^ell(K) x is the value wherever no constraint binds.
    const SymMatrix& unconstrained_value() const noexcept { return value_of_x_; }
    /// K_L for L = greedy_gain(F^{ell-1}(K)): infinite-horizon cost of the
    /// law the controller follows near the origin.
    const SymMatrix& tail_cost() const noexcept { return tail_; }
    const GainPolicy& local_gain() const noexcept { return local_gain_; }
    double ball_tol() const noexcept { return ball_tol_; }

private:
    ConstrainedProblem prob_;
    TerminalDesign design_;
    int ell_;
    CondensedMpc cond_;
    DenseQpSolver solver_;
    Matrix z_of_x_;      // unconstrained minimizer z = z_of_x_ * x
    Matrix slack_of_x_;  // G z - g_of_x0 x for that minimizer
    SymMatrix value_of_x_;
    GainPolicy local_gain_;
    SymMatrix tail_;
    double ball_tol_;
};

MpcStep mpc_policy(const ConstrainedProblem& prob, const TerminalDesign& design, int ell, const Vector& x);

/// (TJ)(x) for J = x'Kx + indicator(S): the one-step MPC value.
double bellman_apply(const ConstrainedProblem& prob, const TerminalDesign& design, const Vector& x);

struct Trajectory {
    std::vector<Vector> x;
    std::vector<Vector> u;
    std::vector<double> stage_cost;
    std::vector<double> mpc_value;
    double tail = 0.0;
    double cost = std::numeric_limits<double>::infinity();
    bool feasible = false;
    std::size_t steps = 0;
};

inline constexpr std::size_t closed_loop_step_cap = 10000;
inline constexpr int optimal_horizon = 100;

/// Closed loop under the controller until x in S and |x| <= ball_tol, then
/// the quadratic tail x' K_L x. Infinite cost if any step is infeasible.
/// Throws NumericError when the step cap is reached.
Trajectory simulate(const MpcController& ctrl, const Vector& x0, bool record = true,
                    std::size_t max_steps = closed_loop_step_cap);

double closed_loop_cost_fn(const MpcController& ctrl, const Vector& x0);
double closed_loop_cost_fn(const ConstrainedProblem& prob, const TerminalDesign& design, int ell, const Vector& x0);

/// Closed-loop cost with horizon 100: an upper approximation of J*.
double approx_optimal_cost(const ConstrainedProblem& prob, const TerminalDesign& design, const Vector& x0);

/// Axis-aligned 2-D grid, `resolution` points per axis including the ends.
struct GridSpec {
    double x1_min = -5.0;
    double x1_max = 5.0;
    double x2_min = -5.0;
    double x2_max = 5.0;
    int resolution = 101;

    /// Bounding box of a bounded 2-D polytope.
    static GridSpec covering(const HPolytope& p, int resolution);
    double x1(int i) const;
    double x2(int j) const;
};

struct GridPoint {
    double x1 = 0.0;
    double x2 = 0.0;
    bool feasible = false;
    double cost = std::numeric_limits<double>::infinity();
    double optimal_cost = std::numeric_limits<double>::infinity();
    double rel_gap = std::numeric_limits<double>::quiet_NaN();  // NaN where undefined
};

/// Row-major: point (i, j) at index i * resolution + j, x1 varying slowest.
struct CostMapGrid {
    GridSpec spec;
    std::vector<GridPoint> points;
    std::string description;

    const GridPoint& at(int i, int j) const {
        return points[static_cast<std::size_t>(i) * static_cast<std::size_t>(spec.resolution) +
                      static_cast<std::size_t>(j)];
    }
    std::size_t feasible_count() const;
    /// Largest rel_gap over points where it is defined; NaN if none.
    double max_rel_gap() const;
    double min_rel_gap() const;
};

/// Deterministic parallel map over [0, count). threads = 0 picks the
/// hardware concurrency.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, unsigned threads = 0);

/// Feasibility of the ell-horizon problem at each grid point; cost holds the
/// MPC value (infinite where infeasible).
CostMapGrid feasible_region_grid(const ConstrainedProblem& prob, const TerminalDesign& design, int ell,
                                 const GridSpec& spec, unsigned threads = 0);

/// J_mu (horizon ell), J* (horizon 100) and the relative gap
/// (J_mu - J*) / J* at every feasible point except the origin.
CostMapGrid suboptimality_map(const ConstrainedProblem& prob, const TerminalDesign& design, int ell,
                              const GridSpec& spec, unsigned threads = 0);

/// Boundary points of the feasible region: bisection (`steps` halvings)
/// along every grid edge whose end points disagree on feasibility.
std::vector<Eigen::Vector2d> refine_boundary(const MpcController& ctrl, const CostMapGrid& grid, int steps = 5);

/// Comment lines with the metadata, then x1,x2,feasible,cost,rel_gap.
void write_csv(std::ostream& os, const CostMapGrid& grid);

}  // namespace lqmpc
