#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "lqmpc/cmpc.hpp"
#include "lqmpc/errors.hpp"
#include "lqmpc/scenario.hpp"
#include "support/oracles.hpp"
#include "support/properties.hpp"

using namespace lqmpc;
using namespace lqmpc::testing;

namespace {

struct Setup {
    Scenario s = *builtin_scenario("di-2d");
    ConstrainedProblem prob = s.problem();
    TerminalDesign design = design_terminal(prob, 50.0);
    MpcController ctrl{prob, design, 3};
};

const Setup& setup() {
    static const Setup s;
    return s;
}

std::vector<Vector> feasible_samples(const MpcController& ctrl, int count, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> coord(-5.0, 5.0);
    std::vector<Vector> xs;
    while (static_cast<int>(xs.size()) < count) {
        const Vector x = Eigen::Vector2d(coord(rng), coord(rng));
        if (ctrl.evaluate(x).feasible) xs.push_back(x);
    }
    return xs;
}

}  // namespace

TEST_CASE("constrained problems need the origin inside both sets") {
    const LqSystem di = double_integrator();
    CHECK_THROWS_AS(ConstrainedProblem(di, HPolytope::box(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)),
                                       HPolytope::symmetric_box(Vector::Ones(1))),
                    DomainError);
    const ConstrainedProblem& p = setup().prob;
    CHECK(p.stage_cost(Eigen::Vector2d(1, 2), Vector::Constant(1, 3.0)) == doctest::Approx(14.0));
    CHECK(p.box_radius() == doctest::Approx(5.0));
}

TEST_CASE("terminal design structure") {
    const Setup& s = setup();
    CHECK(in_region_of_decreasing(s.prob.sys(), s.design.K));
    for (const auto& v : vertices_2d(s.design.S)) CHECK(s.prob.xhat().contains(v));
    const TerminalDesign reference = design_terminal(s.prob, 1.0);
    CHECK((reference.K.mat() - solve_dare(s.prob.sys()).K.mat()).norm() < 1e-9);
    CHECK(polygon_area(vertices_2d(s.design.S)) >= polygon_area(vertices_2d(reference.S)) - 1e-9);
    CHECK_THROWS_AS(design_terminal_explicit(s.prob, SymMatrix::zero(2)), DomainError);
}

TEST_CASE("MPC at the origin and outside the state set") {
    const Setup& s = setup();
    const MpcStep zero = s.ctrl.evaluate(Eigen::Vector2d::Zero());
    CHECK(zero.feasible);
    CHECK(zero.value == 0.0);
    CHECK(zero.u0.norm() == 0.0);
    CHECK_FALSE(s.ctrl.evaluate(Eigen::Vector2d(6, 0)).feasible);
    CHECK(std::isinf(s.ctrl.evaluate(Eigen::Vector2d(6, 0)).value));
    CHECK(std::isinf(bellman_apply(s.prob, s.design, Eigen::Vector2d(6, 0))));
    CHECK(bellman_apply(s.prob, s.design, Eigen::Vector2d::Zero()) == 0.0);
    CHECK(closed_loop_cost_fn(s.ctrl, Eigen::Vector2d::Zero()) == 0.0);
    CHECK(approx_optimal_cost(s.prob, s.design, Eigen::Vector2d::Zero()) == 0.0);
}

TEST_CASE("interior states follow the unconstrained law") {
    const Setup& s = setup();
    const Eigen::Vector2d x(0.2, -0.1);
    const MpcStep st = s.ctrl.evaluate(x);
    REQUIRE(st.feasible);
    CHECK_FALSE(st.constraints_active);
    const GainPolicy l = greedy_gain(s.prob.sys(), iterate_bellman(s.prob.sys(), s.design.K, 2));
    CHECK((st.u0 - l.L() * x).norm() < 1e-6);
    CHECK(st.value == doctest::Approx(x.dot(s.ctrl.unconstrained_value().mat() * x)));
}

TEST_CASE("the fast path agrees with the full QP") {
    const Setup& s = setup();
    Rng rng(601);
    std::uniform_real_distribution<double> coord(-5.5, 5.5);
    for (int i = 0; i < 300; ++i) {
        const Eigen::Vector2d x(coord(rng), coord(rng));
        const MpcStep fast = s.ctrl.evaluate(x);
        const QpSolution full = s.ctrl.solve(x);
        REQUIRE(fast.feasible == (full.status == QpStatus::optimal));
        if (!fast.feasible) continue;
        CHECK(fast.value == doctest::Approx(full.objective).epsilon(1e-9));
        CHECK((fast.u0 - s.ctrl.condensed().input(0, x, full.z)).norm() < 1e-6);
    }
}

TEST_CASE("terminal cost satisfies the one-step decrease on the terminal set") {
    const Setup& s = setup();
    for (const double zeta : {1.0, 50.0}) {
        const TerminalDesign d = design_terminal(s.prob, zeta);
        for (const auto& x : hit_and_run(d.S, 500, 7)) {
            const double tj = bellman_apply(s.prob, d, x);
            CHECK(tj <= x.dot(d.K.mat() * x) + 1e-7);
        }
    }
}

TEST_CASE("closed-loop cost is below the MPC value") {
    const auto outcome = closed_loop_below_mpc_value();
    INFO(outcome.detail);
    CHECK(outcome.cases == 500);
    CHECK(outcome.passed);
}

TEST_CASE("MPC value decreases by at least the stage cost") {
    const Setup& s = setup();
    for (const auto& x0 : feasible_samples(s.ctrl, 60, 602)) {
        const Trajectory t = simulate(s.ctrl, x0);
        REQUIRE(t.feasible);
        for (std::size_t k = 0; k + 1 < t.mpc_value.size(); ++k)
            CHECK(t.mpc_value[k + 1] <= t.mpc_value[k] - t.stage_cost[k] + 1e-6);
    }
}

TEST_CASE("trajectory bookkeeping and the quadratic tail") {
    const Setup& s = setup();
    const Eigen::Vector2d x0(-4.0, 2.5);
    const Trajectory t = simulate(s.ctrl, x0);
    REQUIRE(t.feasible);
    double sum = t.tail;
    for (double c : t.stage_cost) sum += c;
    CHECK(t.cost == doctest::Approx(sum));
    CHECK(t.steps == t.u.size());
    // Once inside S near the origin the law is linear; the tail is its exact cost.
    const Vector& last = t.x.back();
    CHECK(last.norm() <= s.ctrl.ball_tol());
    CHECK(t.tail == doctest::Approx(last.dot(s.ctrl.tail_cost().mat() * last)));
    // Truncating earlier, at a state inside S, gives the same total within 1%.
    std::size_t enter = 0;
    while (enter < t.x.size() && !(s.design.S.contains(t.x[enter]) && !s.ctrl.evaluate(t.x[enter]).constraints_active))
        ++enter;
    REQUIRE(enter < t.x.size());
    double partial = 0.0;
    for (std::size_t k = 0; k < enter; ++k) partial += t.stage_cost[k];
    const double early = partial + t.x[enter].dot(s.ctrl.tail_cost().mat() * t.x[enter]);
    CHECK(early == doctest::Approx(t.cost).epsilon(1e-2));
}

TEST_CASE("recursive feasibility from sampled feasible states") {
    const Setup& s = setup();
    for (const auto& x0 : feasible_samples(s.ctrl, 200, 603)) CHECK(simulate(s.ctrl, x0, false).feasible);
}

TEST_CASE("the long-horizon cost is no larger than the short-horizon closed loop") {
    const Setup& s = setup();
    for (const auto& x0 : feasible_samples(s.ctrl, 25, 604)) {
        const double j = closed_loop_cost_fn(s.ctrl, x0);
        const double j_star = approx_optimal_cost(s.prob, s.design, x0);
        CHECK(j_star <= j + 1e-7);
    }
}

TEST_CASE("feasible region grid") {
    const Setup& s = setup();
    const GridSpec spec{-5, 5, -5, 5, 21};
    const CostMapGrid amplified = feasible_region_grid(s.prob, s.design, 3, spec, 2);
    const CostMapGrid reference = feasible_region_grid(s.prob, design_terminal(s.prob, 1.0), 3, spec, 2);
    REQUIRE(amplified.points.size() == 441);
    CHECK(amplified.at(0, 0).x1 == -5.0);
    CHECK(amplified.at(0, 1).x2 == doctest::Approx(-4.5));
    CHECK(amplified.at(1, 0).x1 == doctest::Approx(-4.5));
    for (std::size_t i = 0; i < amplified.points.size(); ++i) {
        const GridPoint& p = amplified.points[i];
        if (reference.points[i].feasible) CHECK(p.feasible);
        if (p.feasible) CHECK(s.prob.xhat().contains(Eigen::Vector2d(p.x1, p.x2)));
        CHECK(p.feasible == std::isfinite(p.cost));
    }
    CHECK(amplified.feasible_count() > reference.feasible_count());

    const auto boundary = refine_boundary(s.ctrl, amplified, 5);
    CHECK_FALSE(boundary.empty());
    for (const auto& b : boundary) {
        // Bisection leaves each point within 0.5 / 32 of the boundary, so a
        // circle of radius 0.05 around it reaches both sides.
        bool inside = false, outside = false;
        for (int k = 0; k < 16; ++k) {
            const double a = k * 3.14159265358979 / 8.0;
            const bool f = s.ctrl.evaluate(b + 0.05 * Eigen::Vector2d(std::cos(a), std::sin(a))).feasible;
            inside = inside || f;
            outside = outside || !f;
        }
        CHECK(inside);
        CHECK(outside);
    }
}

TEST_CASE("grid results do not depend on the thread count") {
    const Setup& s = setup();
    const GridSpec spec{-5, 5, -5, 5, 11};
    const CostMapGrid one = suboptimality_map(s.prob, s.design, 3, spec, 1);
    const CostMapGrid four = suboptimality_map(s.prob, s.design, 3, spec, 4);
    std::ostringstream a, b;
    write_csv(a, one);
    write_csv(b, four);
    CHECK(a.str() == b.str());
    CHECK(std::isnan(one.at(5, 5).rel_gap));
    CHECK(one.min_rel_gap() >= -1e-9);
}

TEST_CASE("grid CSV layout") {
    const Setup& s = setup();
    const CostMapGrid g = feasible_region_grid(s.prob, s.design, 3, GridSpec{-5, 5, -5, 5, 3}, 1);
    std::ostringstream os;
    write_csv(os, g);
    std::istringstream is(os.str());
    std::string line;
    int comments = 0, rows = 0;
    std::string header;
    while (std::getline(is, line)) {
        if (line.rfind('#', 0) == 0) ++comments;
        else if (header.empty()) header = line;
        else ++rows;
    }
    CHECK(comments >= 1);
    CHECK(header == "x1,x2,feasible,cost,rel_gap");
    CHECK(rows == 9);
}

TEST_CASE("parallel_for visits every index once") {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 3);
    for (int h : hits) CHECK(h == 1);
}

TEST_CASE("four-state closed loop stays feasible") {
    const Scenario ac = *builtin_scenario("ac-4d");
    const ConstrainedProblem prob = ac.problem();
    const MpcController ctrl(prob, ac.terminal_design(), ac.horizon);
    const Trajectory t = simulate(ctrl, *ac.x0);
    CHECK(t.feasible);
    for (const auto& x : t.x) CHECK(prob.xhat().contains(x));
    for (const auto& u : t.u) CHECK(prob.u().contains(u));
}
