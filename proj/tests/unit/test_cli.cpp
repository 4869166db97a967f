#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lqmpc/commands.hpp"

#ifndef LQMPC_CLI
#error "LQMPC_CLI must point at the command-line binary"
#endif

using namespace lqmpc;

namespace {

struct Run {
    int status = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(LQMPC_CLI) + " " + args + " 2>/dev/null";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("acceptance checks") {
    CHECK(check_relative("a", 1.04, 1.0, 0.05).pass);
    CHECK_FALSE(check_relative("a", 1.06, 1.0, 0.05).pass);
    CHECK(check_relative("a", 1.06, 1.0, 0.05, 2.0).pass);
    CHECK(check_absolute("a", 2.55, 2.5, 0.1).pass);
    CHECK(check_order("a", 2e-3, -3).pass);
    CHECK_FALSE(check_order("a", 5e-2, -3).pass);
    CHECK(check_below("a", 1e-14, 1e-13).pass);
    CHECK_FALSE(check_above("a", 1e52, 1e53).pass);
    ReproduceReport rep;
    rep.id = "x";
    rep.checks = {check_property("p", true), check_property("q", false, 3.0, "why")};
    CHECK_FALSE(rep.passed());
    const auto j = nlohmann::json::parse(rep.to_json());
    CHECK(j["checks"].size() == 2);
    CHECK(j["checks"][1]["pass"] == false);
    CHECK(j["pass"] == false);
}

TEST_CASE("bounds command output is deterministic") {
    const Run a = run("bounds --scenario di-2d --ell 1,3,10 --zeta 50");
    const Run b = run("bounds --scenario di-2d --ell 1,3,10 --zeta 50");
    CHECK(a.status == 0);
    CHECK(a.out == b.out);
    std::istringstream is(a.out);
    std::string header;
    std::getline(is, header);
    CHECK(header.rfind("ell,", 0) == 0);
    int rows = 0;
    for (std::string line; std::getline(is, line);) ++rows;
    CHECK(rows == 3);
}

TEST_CASE("weights outside the region of decreasing mark the row") {
    std::istringstream text("A = [[2]]\nB = [[0.5]]\nQ = [[1]]\nR = [[10]]\nterminal = explicit\nterminal_K = [[50]]\n");
    const Scenario low = parse_scenario(text);
    const std::string csv = cmd_bounds(low, {1, 2}, std::nullopt, RunOptions{});
    CHECK(csv.find("region of decreasing") != std::string::npos);
    CHECK(csv.find(",ok") == std::string::npos);
    const std::string good = cmd_bounds(*builtin_scenario("lqr-scalar"), {1}, std::nullopt, RunOptions{});
    CHECK(good.find(",ok") != std::string::npos);
}

TEST_CASE("terminal-set, region and simulate commands") {
    const Run t = run("terminal-set --scenario di-2d --zeta 1,5");
    CHECK(t.status == 0);
    CHECK(t.out.find("zeta") != std::string::npos);

    const Run r1 = run("region --scenario di-2d --ell 3 --grid 11");
    const Run r2 = run("--threads 3 region --scenario di-2d --ell 3 --grid 11");
    CHECK(r1.status == 0);
    CHECK(r1.out == r2.out);

    const Run zero = run("simulate --scenario di-2d --x0 0,0");
    CHECK(zero.status == 0);
    std::istringstream is(zero.out);
    std::string header, first, line;
    while (std::getline(is, line))
        if (line.rfind('#', 0) != 0) (header.empty() ? header : first) = line;
    CHECK(header.rfind("k,", 0) == 0);
    CHECK(first.rfind("0,0,0,0,0,0,0", 0) == 0);

    CHECK(run("simulate --scenario di-2d --x0 6,0").status == 1);
}

TEST_CASE("usage and input errors exit with status 2") {
    CHECK(run("").status == 2);
    CHECK(run("bounds --scenario no-such-scenario").status == 2);
    CHECK(run("bounds --ell x").status == 2);
    CHECK(run("reproduce --example 9").status == 2);
    CHECK(run("simulate --scenario di-2d --x0 1,2,3").status == 2);
    CHECK(run("--help").status == 0);
}

TEST_CASE("reproduce writes files and its exit status mirrors the verdict") {
    const auto dir = std::filesystem::temp_directory_path() / "lqmpc_cli_test";
    std::filesystem::remove_all(dir);
    const Run r = run("--out " + dir.string() + " reproduce --example table1");
    REQUIRE(std::filesystem::exists(dir / "summary_table1.json"));
    REQUIRE(std::filesystem::exists(dir / "table1.csv"));
    const auto j = nlohmann::json::parse(read_file(dir / "summary_table1.json"));
    CHECK(r.status == (j["pass"].get<bool>() ? 0 : 1));
    for (const auto& c : j["checks"]) {
        CHECK(c.contains("tolerance"));
        CHECK(c.contains("pass"));
    }
    const std::string first = read_file(dir / "table1.csv");
    run("--out " + dir.string() + " reproduce --example table1");
    CHECK(read_file(dir / "table1.csv") == first);
    std::filesystem::remove_all(dir);
}
