#include "lqmpc/cmpc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "lqmpc/errors.hpp"

namespace lqmpc {

ConstrainedProblem::ConstrainedProblem(LqSystem sys, HPolytope xhat, HPolytope u)
    : sys_(std::move(sys)), xhat_(std::move(xhat)), u_(std::move(u)) {
    if (xhat_.dim() != sys_.n())
        throw InvalidArgument("ConstrainedProblem: state set has dimension " + std::to_string(xhat_.dim()) +
                              ", system has n = " + std::to_string(sys_.n()));
    if (u_.dim() != sys_.m())
        throw InvalidArgument("ConstrainedProblem: input set has dimension " + std::to_string(u_.dim()) +
                              ", system has m = " + std::to_string(sys_.m()));
    if (!xhat_.origin_interior()) throw DomainError("ConstrainedProblem: origin is not interior to the state set");
    if (!u_.origin_interior()) throw DomainError("ConstrainedProblem: origin is not interior to the input set");
}

double ConstrainedProblem::stage_cost(const Vector& x, const Vector& u) const {
    if (!xhat_.contains(x)) return std::numeric_limits<double>::infinity();
    return x.dot(sys_.Q().mat() * x) + u.dot(sys_.R().mat() * u);
}

double ConstrainedProblem::box_radius() const {
    double r = 0.0;
    for (Eigen::Index i = 0; i < xhat_.rows(); ++i) r = std::max(r, xhat_.h()(i) / xhat_.H().row(i).norm());
    return r > 0.0 ? r : 1.0;
}

TerminalDesign design_terminal(const ConstrainedProblem& prob, double zeta, TerminalGainRule rule) {
    const SymMatrix k = zeta_dare(prob.sys(), zeta);
    GainPolicy gain =
        rule == TerminalGainRule::amplified ? amplified_gain(prob.sys(), k, zeta) : greedy_gain(prob.sys(), k);
    auto mis = maximal_invariant_set_detailed(gain.closed_loop(), prob.xhat(), prob.u(), gain.L());
    return TerminalDesign{k, std::move(mis.set), std::move(gain), zeta, mis.determinedness_index};
}

TerminalDesign design_terminal_explicit(const ConstrainedProblem& prob, const SymMatrix& k) {
    if (!in_region_of_decreasing(prob.sys(), k))
        throw DomainError("design_terminal_explicit: F(K) <= K fails, margin " +
                          std::to_string(decrease_margin(prob.sys(), k)));
    GainPolicy gain = greedy_gain(prob.sys(), k);
    auto mis = maximal_invariant_set_detailed(gain.closed_loop(), prob.xhat(), prob.u(), gain.L());
    return TerminalDesign{k, std::move(mis.set), std::move(gain), 1.0, mis.determinedness_index};
}

namespace {

GainPolicy horizon_gain(const LqSystem& sys, const SymMatrix& k, int ell) {
    return greedy_gain(sys, iterate_bellman(sys, k, ell - 1));
}

}  // namespace

MpcController::MpcController(const ConstrainedProblem& prob, const TerminalDesign& design, int ell)
    : prob_(prob),
      design_(design),
      ell_(ell),
      cond_(condense(prob.sys(), prob.xhat(), prob.u(), design.S, design.K, ell, design.gain.L())),
      solver_(cond_.P, cond_.G, Matrix(0, cond_.P.dim())),
      local_gain_(horizon_gain(prob.sys(), design.K, ell)),
      tail_(closed_loop_cost(prob.sys(), local_gain_)),
      ball_tol_(1e-6 * prob.box_radius()) {
    const Eigen::LDLT<Matrix> ldlt(cond_.P.mat());
    z_of_x_ = -ldlt.solve(cond_.q_of_x0);
    slack_of_x_ = cond_.G * z_of_x_ - cond_.g_of_x0;
    value_of_x_ = SymMatrix(cond_.offset_of_x0.mat() + 0.5 * cond_.q_of_x0.transpose() * z_of_x_);
}

QpSolution MpcController::solve(const Vector& x) const {
    return solver_.solve(cond_.q_of_x0 * x, cond_.g_const + cond_.g_of_x0 * x, Vector(0),
                         x.dot(cond_.offset_of_x0.mat() * x));
}

MpcStep MpcController::evaluate(const Vector& x) const {
    if (x.size() != prob_.sys().n())
        throw InvalidArgument("MpcController: state has dimension " + std::to_string(x.size()) + ", expected " +
                              std::to_string(prob_.sys().n()));
    MpcStep step;
    // Unconstrained minimizer first: when it is admissible it is the answer.
    const Vector lhs = slack_of_x_ * x;
    if ((lhs - cond_.g_const).maxCoeff() <= 0.0) {
        step.feasible = true;
        step.z = z_of_x_ * x;
        step.u0 = cond_.input(0, x, step.z);
        step.value = x.dot(value_of_x_.mat() * x);
        return step;
    }
    const QpSolution sol = solve(x);
    step.constraints_active = true;
    if (sol.status == QpStatus::infeasible) {
        step.farkas_margin = sol.farkas_margin;
        return step;
    }
    if (sol.status != QpStatus::optimal)
        throw NumericError("MpcController: QP iteration cap", sol.iterations, sol.residuals.dual);
    step.feasible = true;
    step.z = sol.z;
    step.u0 = cond_.input(0, x, sol.z);
    step.value = sol.objective;
    return step;
}

MpcStep mpc_policy(const ConstrainedProblem& prob, const TerminalDesign& design, int ell, const Vector& x) {
    return MpcController(prob, design, ell).evaluate(x);
}

double bellman_apply(const ConstrainedProblem& prob, const TerminalDesign& design, const Vector& x) {
    return mpc_policy(prob, design, 1, x).value;
}

Trajectory simulate(const MpcController& ctrl, const Vector& x0, bool record, std::size_t max_steps) {
    const LqSystem& sys = ctrl.problem().sys();
    const HPolytope& s = ctrl.design().S;
    Trajectory tr;
    Vector x = x0;
    double cost = 0.0;
    for (std::size_t k = 0; k < max_steps; ++k) {
        if (record) tr.x.push_back(x);
        if (x.norm() <= ctrl.ball_tol() && s.contains(x)) {
            tr.tail = x.dot(ctrl.tail_cost().mat() * x);
            tr.cost = cost + tr.tail;
            tr.feasible = true;
            tr.steps = k;
            return tr;
        }
        const MpcStep step = ctrl.evaluate(x);
        if (!step.feasible) {
            tr.steps = k;
            tr.cost = std::numeric_limits<double>::infinity();
            return tr;
        }
        const double stage = x.dot(sys.Q().mat() * x) + step.u0.dot(sys.R().mat() * step.u0);
        if (record) {
            tr.u.push_back(step.u0);
            tr.stage_cost.push_back(stage);
            tr.mpc_value.push_back(step.value);
        }
        cost += stage;
        x = sys.A() * x + sys.B() * step.u0;
    }
    throw NumericError("closed loop did not reach the terminal ball", static_cast<long>(max_steps), x.norm());
}

double closed_loop_cost_fn(const MpcController& ctrl, const Vector& x0) { return simulate(ctrl, x0, false).cost; }

double closed_loop_cost_fn(const ConstrainedProblem& prob, const TerminalDesign& design, int ell, const Vector& x0) {
    return closed_loop_cost_fn(MpcController(prob, design, ell), x0);
}

double approx_optimal_cost(const ConstrainedProblem& prob, const TerminalDesign& design, const Vector& x0) {
    return closed_loop_cost_fn(prob, design, optimal_horizon, x0);
}

GridSpec GridSpec::covering(const HPolytope& p, int resolution) {
    if (p.dim() != 2) throw InvalidArgument("GridSpec::covering: polytope must be 2-D");
    GridSpec g;
    g.resolution = resolution;
    double lo[2], hi[2];
    for (int d = 0; d < 2; ++d) {
        Vector c = Vector::Zero(2);
        c(d) = 1.0;
        const LpResult up = lp_solve(c, p);
        const LpResult dn = lp_solve(-c, p);
        if (up.status != LpStatus::optimal || dn.status != LpStatus::optimal)
            throw DomainError("GridSpec::covering: polytope is empty or unbounded");
        hi[d] = up.value;
        lo[d] = -dn.value;
    }
    g.x1_min = lo[0];
    g.x1_max = hi[0];
    g.x2_min = lo[1];
    g.x2_max = hi[1];
    return g;
}

double GridSpec::x1(int i) const {
    if (resolution == 1) return 0.5 * (x1_min + x1_max);
    return x1_min + (x1_max - x1_min) * i / (resolution - 1);
}

double GridSpec::x2(int j) const {
    if (resolution == 1) return 0.5 * (x2_min + x2_max);
    return x2_min + (x2_max - x2_min) * j / (resolution - 1);
}

std::size_t CostMapGrid::feasible_count() const {
    return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const GridPoint& p) {
        return p.feasible;
    }));
}

double CostMapGrid::max_rel_gap() const {
    double best = std::numeric_limits<double>::quiet_NaN();
    for (const auto& p : points)
        if (!std::isnan(p.rel_gap) && !(p.rel_gap <= best)) best = p.rel_gap;
    return best;
}

double CostMapGrid::min_rel_gap() const {
    double best = std::numeric_limits<double>::quiet_NaN();
    for (const auto& p : points)
        if (!std::isnan(p.rel_gap) && !(p.rel_gap >= best)) best = p.rel_gap;
    return best;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, unsigned threads) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            (void)t;
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count || failed.load()) return;
                try {
                    body(i);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

namespace {

void require_planar(const ConstrainedProblem& prob, const GridSpec& spec) {
    if (prob.sys().n() != 2) throw InvalidArgument("grid maps need a 2-D state");
    if (spec.resolution < 1) throw InvalidArgument("grid resolution must be positive");
}

CostMapGrid empty_grid(const GridSpec& spec) {
    CostMapGrid grid;
    grid.spec = spec;
    const auto r = static_cast<std::size_t>(spec.resolution);
    grid.points.resize(r * r);
    for (int i = 0; i < spec.resolution; ++i)
        for (int j = 0; j < spec.resolution; ++j) {
            auto& p = grid.points[static_cast<std::size_t>(i) * r + static_cast<std::size_t>(j)];
            p.x1 = spec.x1(i);
            p.x2 = spec.x2(j);
        }
    return grid;
}

std::string describe(const TerminalDesign& design, int ell) {
    std::ostringstream os;
    os << "ell=" << ell << " zeta=" << design.zeta << " terminal_rows=" << design.S.rows();
    return os.str();
}

}  // namespace

CostMapGrid feasible_region_grid(const ConstrainedProblem& prob, const TerminalDesign& design, int ell,
                                 const GridSpec& spec, unsigned threads) {
    require_planar(prob, spec);
    const MpcController ctrl(prob, design, ell);
    CostMapGrid grid = empty_grid(spec);
    grid.description = "feasible region; " + describe(design, ell);
    parallel_for(
        grid.points.size(),
        [&](std::size_t k) {
            auto& p = grid.points[k];
            const MpcStep s = ctrl.evaluate(Eigen::Vector2d(p.x1, p.x2));
            p.feasible = s.feasible;
            p.cost = s.value;
        },
        threads);
    return grid;
}

CostMapGrid suboptimality_map(const ConstrainedProblem& prob, const TerminalDesign& design, int ell,
                              const GridSpec& spec, unsigned threads) {
    require_planar(prob, spec);
    const MpcController ctrl(prob, design, ell);
    const MpcController reference(prob, design, optimal_horizon);
    CostMapGrid grid = empty_grid(spec);
    grid.description = "relative suboptimality (J_mu - J*)/J*, J* approximated by horizon " +
                       std::to_string(optimal_horizon) + " closed loop (an upper bound); " + describe(design, ell);
    parallel_for(
        grid.points.size(),
        [&](std::size_t k) {
            auto& p = grid.points[k];
            const Vector x = Eigen::Vector2d(p.x1, p.x2);
            if (!ctrl.evaluate(x).feasible) return;
            p.feasible = true;
            p.cost = closed_loop_cost_fn(ctrl, x);
            p.optimal_cost = closed_loop_cost_fn(reference, x);
            if (x.norm() > 0.0 && std::isfinite(p.cost) && std::isfinite(p.optimal_cost) && p.optimal_cost > 0.0)
                p.rel_gap = (p.cost - p.optimal_cost) / p.optimal_cost;
        },
        threads);
    return grid;
}

std::vector<Eigen::Vector2d> refine_boundary(const MpcController& ctrl, const CostMapGrid& grid, int steps) {
    std::vector<Eigen::Vector2d> out;
    const int r = grid.spec.resolution;
    auto bisect = [&](const GridPoint& a, const GridPoint& b) {
        Eigen::Vector2d in(a.x1, a.x2), outp(b.x1, b.x2);
        if (!a.feasible) std::swap(in, outp);
        for (int s = 0; s < steps; ++s) {
            const Eigen::Vector2d mid = 0.5 * (in + outp);
            if (ctrl.evaluate(Vector(mid)).feasible) in = mid;
            else outp = mid;
        }
        out.push_back(0.5 * (in + outp));
    };
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
            const auto& p = grid.at(i, j);
            if (i + 1 < r && grid.at(i + 1, j).feasible != p.feasible) bisect(p, grid.at(i + 1, j));
            if (j + 1 < r && grid.at(i, j + 1).feasible != p.feasible) bisect(p, grid.at(i, j + 1));
        }
    return out;
}

void write_csv(std::ostream& os, const CostMapGrid& grid) {
    const auto& g = grid.spec;
    os << "# " << grid.description << "\n";
    os << "# x1_min=" << g.x1_min << " x1_max=" << g.x1_max << " x2_min=" << g.x2_min << " x2_max=" << g.x2_max
       << " resolution=" << g.resolution << " order=row-major(x1 slow)\n";
    os << "x1,x2,feasible,cost,rel_gap\n";
    os << std::setprecision(12);
    for (const auto& p : grid.points) {
        os << p.x1 << ',' << p.x2 << ',' << (p.feasible ? 1 : 0) << ',';
        if (std::isfinite(p.cost)) os << p.cost;
        else os << "inf";
        os << ',';
        if (std::isnan(p.rel_gap)) os << "nan";
        else os << p.rel_gap;
        os << '\n';
    }
}

}  // namespace lqmpc
