#include <doctest.h>

#include <fstream>
#include <sstream>

#include "lqmpc/scenario.hpp"
#include "support/oracles.hpp"

using namespace lqmpc;

namespace {

Scenario parse(const std::string& text) {
    std::istringstream is(text);
    return parse_scenario(is, "test");
}

/// Runs the parser and returns the error it raised.
ScenarioError parse_error(const std::string& text) {
    try {
        parse(text);
    } catch (const ScenarioError& e) {
        return e;
    }
    FAIL("expected a scenario error");
    return ScenarioError("", 0, "", "");
}

const std::string minimal = "A = [[1, 1], [0, 1]]\nB = [[0], [1]]\nQ = [[1, 0], [0, 1]]\nR = [[1]]\n";

}  // namespace

TEST_CASE("built-in scenarios") {
    CHECK(builtin_scenario_names() == std::vector<std::string>{"lqr-scalar", "di-2d", "ac-4d"});
    const Scenario di = *builtin_scenario("di-2d");
    CHECK(di.A == testing::double_integrator().A());
    CHECK(di.B == testing::double_integrator().B());
    CHECK(di.Q == Matrix::Identity(2, 2));
    CHECK(di.R == Matrix::Identity(1, 1));
    CHECK(di.constrained());
    CHECK(di.horizon == 3);
    CHECK(di.grid_or_default().resolution == 101);

    const Scenario ac = *builtin_scenario("ac-4d");
    CHECK(ac.A == testing::four_state_example().A());
    CHECK(ac.B == testing::four_state_example().B());
    CHECK(ac.xhat->rows() == 2);  // only the second state is bounded
    CHECK(ac.u->rows() == 4);
    REQUIRE(ac.x0);
    CHECK(ac.x0->size() == 4);

    const Scenario sc = *builtin_scenario("lqr-scalar");
    CHECK(sc.terminal == TerminalKind::explicit_k);
    CHECK(sc.terminal_weight()(0, 0) == 180.0);
    CHECK_FALSE(sc.notes.empty());
    CHECK_THROWS_AS(sc.problem(), ScenarioError);

    CHECK_FALSE(builtin_scenario("nope"));
    CHECK(load_scenario("di-2d").name == "di-2d");
    CHECK_THROWS_AS(load_scenario("/nonexistent/file.txt"), ScenarioError);
}

TEST_CASE("a minimal scenario and its defaults") {
    const Scenario s = parse(minimal);
    CHECK(s.terminal == TerminalKind::dare);
    CHECK(s.horizon == 1);
    CHECK_FALSE(s.constrained());
    CHECK((s.terminal_weight().mat() - solve_dare(s.system()).K.mat()).norm() < 1e-9);
    CHECK(s.terminal_weight(50.0)(0, 0) > s.terminal_weight()(0, 0));
}

TEST_CASE("constraint sets, comments and terminal settings") {
    const Scenario s = parse("# comment line\n" + minimal +
                             "state_H = [[1, 0], [-1, 0], [0, 1], [0, -1]]\nstate_h = [2, 2, 3, 3]  # trailing\n"
                             "input_box = [0.5]\nterminal = zeta_dare\nzeta = 10\nhorizon = 4\nx0 = [1, -1]\n"
                             "grid_resolution = 11\ngrid_bounds = [-1, 1, -2, 2]\nseed = 9\n");
    REQUIRE(s.constrained());
    CHECK(s.xhat->contains(Eigen::Vector2d(2, 3)));
    CHECK_FALSE(s.xhat->contains(Eigen::Vector2d(2.1, 0)));
    CHECK(s.u->contains(Vector::Constant(1, 0.5)));
    CHECK(s.zeta == 10.0);
    CHECK(s.horizon == 4);
    CHECK(s.seed == 9);
    const GridSpec g = s.grid_or_default();
    CHECK(g.resolution == 11);
    CHECK(g.x2_max == 2.0);
    CHECK((s.terminal_weight().mat() - zeta_dare(s.system(), 10.0).mat()).norm() < 1e-9);
}

TEST_CASE("parse errors name the line and field") {
    {
        const ScenarioError e = parse_error(minimal + "horizon 3\n");
        CHECK(e.line() == 5);
    }
    {
        const ScenarioError e = parse_error(minimal + "colour = red\n");
        CHECK(e.line() == 5);
        CHECK(e.field() == "colour");
    }
    {
        const ScenarioError e = parse_error(minimal + "R = [[2]]\n");
        CHECK(e.field() == "R");
        CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
    }
    {
        const ScenarioError e = parse_error("A = [[1, 1], [0]]\nB = [[0], [1]]\nQ = [[1, 0], [0, 1]]\nR = [[1]]\n");
        CHECK(e.line() == 1);
        CHECK(e.field() == "A");
        CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }
    {
        const ScenarioError e = parse_error("A = [[1, 1], [0, 1]]\nQ = [[1, 0], [0, 1]]\nR = [[1]]\n");
        CHECK(e.field() == "B");
    }
    {
        const ScenarioError e = parse_error(minimal + "state_box = [5, -1]\n");
        CHECK(e.field() == "state_box");
    }
    {
        const ScenarioError e = parse_error(minimal + "terminal = zeta_dare\nzeta = 0.5\n");
        CHECK(e.field() == "zeta");
    }
    {
        const ScenarioError e = parse_error("A = [[1, 1], [0, 1]]\nB = oops\nQ = [[1, 0], [0, 1]]\nR = [[1]]\n");
        CHECK(e.field() == "B");
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse("A = [[1, 1], [0, 1]]\nB = [[0], [1], [2]]\nQ = [[1, 0], [0, 1]]\nR = [[1]]\n"),
                    ScenarioError);
}

TEST_CASE("scenario files load from disk") {
    const std::string path = "scenario_roundtrip.txt";
    {
        std::ofstream out(path);
        out << "name = from-file\n" << minimal << "state_box = [5, 5]\ninput_box = [1]\n";
    }
    const Scenario s = load_scenario(path);
    CHECK(s.name == "from-file");
    CHECK(s.constrained());
    std::remove(path.c_str());
}
