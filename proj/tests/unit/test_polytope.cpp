#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "lqmpc/errors.hpp"
#include "lqmpc/lp.hpp"
#include "lqmpc/polytope.hpp"
#include "lqmpc/riccati.hpp"
#include "support/oracles.hpp"
#include "support/properties.hpp"

using namespace lqmpc;
using namespace lqmpc::testing;

namespace {

const double inf = std::numeric_limits<double>::infinity();

HPolytope unit_square() { return HPolytope::box(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)); }

HPolytope triangle() {
    Matrix h(3, 2);
    h << -1, 0, 0, -1, 1, 1;
    return HPolytope(h, Eigen::Vector3d(0, 0, 1));
}

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

}  // namespace

TEST_CASE("linear programs with known optima") {
    LinearProgram lp;
    lp.c = vec({-1, -1});
    lp.A_ub = Matrix(2, 2);
    lp.A_ub << 1, 2, 3, 1;
    lp.b_ub = vec({4, 6});
    lp.A_eq = Matrix(0, 2);
    lp.b_eq = Vector(0);
    lp.nonneg = {true, true};
    const LpResult r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.value == doctest::Approx(-2.8));
    CHECK(r.x(0) == doctest::Approx(1.6));
    CHECK(r.x(1) == doctest::Approx(1.2));

    lp.c = vec({-1, 0});
    lp.A_ub = Matrix(1, 2);
    lp.A_ub << 0, 1;
    lp.b_ub = vec({1});
    CHECK(solve_lp(lp).status == LpStatus::unbounded);

    lp.A_ub = Matrix(2, 2);
    lp.A_ub << 1, 0, -1, 0;
    lp.b_ub = vec({1, -2});
    CHECK(solve_lp(lp).status == LpStatus::infeasible);
}

TEST_CASE("linear programs with equalities and free variables") {
    LinearProgram lp;
    lp.c = vec({1, 1});
    lp.A_ub = Matrix(0, 2);
    lp.b_ub = Vector(0);
    lp.A_eq = Matrix(1, 2);
    lp.A_eq << 1, -1;
    lp.b_eq = vec({-3});
    lp.nonneg = {false, true};
    // x0 = x1 - 3, minimize 2 x1 - 3 over x1 >= 0.
    const LpResult r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.value == doctest::Approx(-3.0));
    CHECK(r.x(0) == doctest::Approx(-3.0));
}

TEST_CASE("linear programs against vertex enumeration") {
    Rng rng(401);
    for (int i = 0; i < 100; ++i) {
        const Matrix h = random_matrix(rng, 8, 2);
        const Vector b = Vector::Ones(8) + random_matrix(rng, 8, 1).cwiseAbs();
        const HPolytope p(h, b);
        if (!is_bounded(p)) continue;
        const Vector c = random_matrix(rng, 2, 1);
        double best = -inf;
        for (const auto& v : vertices_2d(p)) best = std::max(best, c.dot(v));
        const LpResult r = lp_solve(c, p);
        REQUIRE(r.status == LpStatus::optimal);
        CHECK(r.value == doctest::Approx(best).epsilon(1e-9));
    }
}

TEST_CASE("membership") {
    const HPolytope box = HPolytope::symmetric_box(Eigen::Vector2d(5, 5));
    CHECK(box.contains(Eigen::Vector2d(0, 0)));
    CHECK_FALSE(box.contains(Eigen::Vector2d(5.1, 0)));
    CHECK(box.contains(Eigen::Vector2d(5, 5)));
    CHECK(box.origin_interior());
    CHECK_FALSE(unit_square().origin_interior());
    const HPolytope half = HPolytope::symmetric_box(Eigen::Vector2d(inf, 0.5));
    CHECK(half.rows() == 2);
    CHECK(half.contains(Eigen::Vector2d(1e6, 0.5)));
    CHECK_THROWS_AS(HPolytope(Matrix::Zero(1, 2), vec({1})), InvalidArgument);
}

TEST_CASE("LP over polytopes and redundancy") {
    CHECK(lp_solve(Eigen::Vector2d(1, 0), unit_square()).value == doctest::Approx(1.0));
    CHECK(lp_solve(Eigen::Vector2d(1, 1), triangle()).value == doctest::Approx(1.0));
    Matrix h(5, 2);
    h << -1, 0, 0, -1, 1, 1, 1, 1, 2, 2;
    const HPolytope dup(h, vec({0, 0, 1, 1, 5}));
    const HPolytope lean = remove_redundant(dup);
    CHECK(lean.rows() == 3);
    CHECK(polygon_area(vertices_2d(lean)) == doctest::Approx(0.5));
}

TEST_CASE("boundedness, Chebyshev ball and preimage") {
    CHECK(is_bounded(triangle()));
    CHECK_FALSE(is_bounded(HPolytope::symmetric_box(Eigen::Vector2d(inf, 1))));
    const auto ball = chebyshev_ball(unit_square());
    REQUIRE(ball);
    CHECK(ball->radius == doctest::Approx(0.5));
    CHECK((ball->center - Eigen::Vector2d(0.5, 0.5)).norm() < 1e-9);
    const HPolytope scaled = unit_square().preimage(2.0 * Matrix::Identity(2, 2));
    CHECK(polygon_area(vertices_2d(scaled)) == doctest::Approx(0.25));
}

TEST_CASE("vertices and areas") {
    CHECK(vertices_2d(unit_square()).size() == 4);
    CHECK(polygon_area(vertices_2d(unit_square())) == doctest::Approx(1.0));
    const auto tri = vertices_2d(triangle());
    REQUIRE(tri.size() == 3);
    for (const Eigen::Vector2d& expect : {Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)}) {
        bool found = false;
        for (const auto& v : tri) found = found || (v - expect).norm() < 1e-9;
        CHECK(found);
    }
    CHECK(volume(HPolytope::symmetric_box(Eigen::Vector2d(5, 5))).value == doctest::Approx(100.0));
    CHECK(volume(unit_square()).exact);
}

TEST_CASE("Monte Carlo volume") {
    const HPolytope cube = HPolytope::symmetric_box(Vector::Ones(3));
    const VolumeEstimate v = volume(cube, 5, 200000);
    CHECK_FALSE(v.exact);
    CHECK(std::abs(v.value - 8.0) <= 3.0 * v.standard_error + 1e-12);
    const HPolytope octa = HPolytope(Matrix((Matrix(8, 3) << 1, 1, 1, 1, 1, -1, 1, -1, 1, 1, -1, -1, -1, 1, 1,
                                             -1, 1, -1, -1, -1, 1, -1, -1, -1)
                                                .finished()),
                                     Vector::Ones(8));
    const VolumeEstimate o = monte_carlo_volume(octa, 9, 400000);
    CHECK(std::abs(o.value - 4.0 / 3.0) <= 3.0 * o.standard_error);
}

TEST_CASE("maximal invariant set of a dead-beat loop is one step") {
    const HPolytope xhat = HPolytope::symmetric_box(Eigen::Vector2d(2, 3));
    const HPolytope u = HPolytope::symmetric_box(vec({1}));
    Matrix l(1, 2);
    l << 1, 1;
    const InvariantSetResult r = maximal_invariant_set_detailed(Matrix::Zero(2, 2), xhat, u, l);
    // X ∩ {|x1 + x2| <= 1}: a hexagon cut from the box.
    const double area = polygon_area(vertices_2d(r.set));
    const HPolytope ref = xhat.intersect(u.preimage(l));
    CHECK(area == doctest::Approx(polygon_area(vertices_2d(ref))));
    CHECK(r.determinedness_index <= 1);
}

TEST_CASE("maximal invariant set: invariance, maximality and area") {
    const LqSystem di = double_integrator();
    const HPolytope xhat = HPolytope::symmetric_box(Eigen::Vector2d(5, 5));
    const HPolytope u = HPolytope::symmetric_box(vec({1}));
    const GainPolicy l = greedy_gain(di, zeta_dare(di, 50.0));
    const HPolytope s = maximal_invariant_set(l.closed_loop(), xhat, u, l);
    REQUIRE(is_bounded(s));

    const auto pts = hit_and_run(s, 1000, 3);
    REQUIRE(pts.size() == 1000);
    for (const auto& x : pts) {
        CHECK(s.contains(l.closed_loop() * x));
        CHECK(xhat.contains(x));
        CHECK(u.contains(l.L() * x));
    }

    // Points just outside eventually violate a constraint under the same law.
    for (const auto& v : vertices_2d(s)) {
        Vector x = 1.001 * Vector(v);
        bool violated = false;
        for (int k = 0; k < 200 && !violated; ++k) {
            violated = !xhat.contains(x, 0.0) || !u.contains(l.L() * x, 0.0);
            x = l.closed_loop() * x;
        }
        CHECK(violated);
    }

    const double exact = polygon_area(vertices_2d(s));
    const VolumeEstimate mc = monte_carlo_volume(s, 11, 400000);
    CHECK(std::abs(mc.value - exact) <= 3.0 * mc.standard_error);
}

TEST_CASE("terminal set invariance over every design") {
    const auto outcome = terminal_set_invariance();
    INFO(outcome.detail);
    CHECK(outcome.cases == 8000);
    CHECK(outcome.passed);
}

TEST_CASE("polytope CSV round trip") {
    std::stringstream ss;
    write_csv(ss, triangle());
    const HPolytope back = read_csv(ss);
    CHECK(back.H() == triangle().H());
    CHECK(back.h() == triangle().h());
    std::stringstream bad("1,2\n1,2,3\n");
    CHECK_THROWS_AS(read_csv(bad), InvalidArgument);
}
