// Command-line driver: bounds, terminal sets, feasibility and suboptimality
// maps, closed-loop simulation, and the reproduction harness.
//
// Exit codes: 0 success (all checks pass), 1 an acceptance check failed,
// 2 usage, parse or input error.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lqmpc/commands.hpp"

namespace {

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::istringstream is(item);
        T v{};
        if (!(is >> v) || !(is >> std::ws).eof()) throw CLI::ValidationError(what, "cannot parse `" + item + "`");
        out.push_back(v);
    }
    if (out.empty()) throw CLI::ValidationError(what, "empty list");
    return out;
}

lqmpc::Vector parse_vector(const std::string& text) {
    std::string cleaned = text;
    for (char& c : cleaned)
        if (c == '[' || c == ']' || c == '(' || c == ')') c = ' ';
    const auto v = parse_list<double>(cleaned, "--x0");
    return Eigen::Map<const lqmpc::Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void print_report(const lqmpc::ReproduceReport& rep) {
    for (const auto& c : rep.checks) {
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " value=" << c.value;
        if (c.rule != "property") std::cout << " target=" << c.target << " rule=" << c.rule << " tol=" << c.tolerance;
        if (!c.note.empty()) std::cout << " (" << c.note << ")";
        std::cout << "\n";
    }
    for (const auto& n : rep.notes) std::cout << "note: " << n << "\n";
    for (const auto& f : rep.files) std::cout << "wrote " << f << "\n";
    std::cout << (rep.passed() ? "ALL PASS" : "SOME CHECKS FAILED") << " (" << rep.id << ", " << rep.seconds
              << " s)\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Performance-bound analysis and constrained MPC for linear-quadratic problems"};
    app.require_subcommand(1);

    lqmpc::RunOptions opt;
    app.add_option("--seed", opt.seed, "Seed for sampled quantities")->capture_default_str();
    app.add_option("--tol-scale", opt.tol_scale, "Multiplier on acceptance tolerances")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--threads", opt.threads, "Worker threads for grid sweeps (0 = all cores)")->capture_default_str();
    app.add_option("--out", opt.out_dir, "Output directory (default: print CSV to stdout)");

    std::string scenario = "di-2d";
    std::string ell_list = "3";
    std::string zeta_list;
    std::string x0_text;
    int ell = 0;
    int grid = 0;
    std::string example;

    auto* bounds = app.add_subcommand("bounds", "Gap and the three bounds per horizon");
    bounds->add_option("--scenario", scenario, "Built-in name or scenario file")->capture_default_str();
    bounds->add_option("--ell", ell_list, "Comma-separated horizons")->capture_default_str();
    bounds->add_option("--zeta", zeta_list, "Amplification factor for the terminal weight");

    auto* terminal = app.add_subcommand("terminal-set", "Terminal-set volume ratios against the zeta = 1 design");
    terminal->add_option("--scenario", scenario)->capture_default_str();
    terminal->add_option("--zeta", zeta_list, "Comma-separated amplification factors")->required();

    auto* region = app.add_subcommand("region", "Feasible region of the horizon-ell problem on a grid");
    region->add_option("--scenario", scenario)->capture_default_str();
    region->add_option("--ell", ell, "Horizon (default: scenario horizon)");
    region->add_option("--grid", grid, "Points per axis (default: scenario grid)");
    region->add_option("--zeta", zeta_list, "Amplification factor (default: scenario terminal)");

    auto* submap = app.add_subcommand("submap", "Relative suboptimality map");
    submap->add_option("--scenario", scenario)->capture_default_str();
    submap->add_option("--ell", ell, "Horizon (default: scenario horizon)");
    submap->add_option("--grid", grid, "Points per axis (default: scenario grid)");
    submap->add_option("--zeta", zeta_list, "Amplification factor (default: scenario terminal)");

    auto* sim = app.add_subcommand("simulate", "Closed-loop trajectory with cost-to-go columns");
    sim->add_option("--scenario", scenario)->capture_default_str();
    sim->add_option("--x0", x0_text, "Initial state, e.g. \"1,0,0,0\" (default: scenario x0)");
    sim->add_option("--ell", ell, "Horizon (default: scenario horizon)");
    sim->add_option("--zeta", zeta_list, "Amplification factor (default: scenario terminal)");

    auto* repro = app.add_subcommand("reproduce", "Run a reference study and check it against its tolerances");
    repro->add_option("--example", example, "1, 2, 3, 4, table1, table2 or table3")
        ->required()
        ->check(CLI::IsMember(lqmpc::reproduce_ids()));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        std::optional<double> zeta;
        auto single_zeta = [&] {
            if (zeta_list.empty()) return;
            zeta = parse_list<double>(zeta_list, "--zeta").front();
        };
        auto emit = [&](const std::string& csv) {
            if (opt.out_dir.empty()) std::cout << csv;
        };

        if (*bounds) {
            const auto s = lqmpc::load_scenario(scenario);
            single_zeta();
            emit(lqmpc::cmd_bounds(s, parse_list<int>(ell_list, "--ell"), zeta, opt));
        } else if (*terminal) {
            const auto s = lqmpc::load_scenario(scenario);
            emit(lqmpc::cmd_terminal_set(s, parse_list<double>(zeta_list, "--zeta"), opt));
        } else if (*region || *submap) {
            const auto s = lqmpc::load_scenario(scenario);
            single_zeta();
            const int h = ell > 0 ? ell : s.horizon;
            const auto g = *region ? lqmpc::cmd_region(s, h, grid, zeta, opt) : lqmpc::cmd_submap(s, h, grid, zeta, opt);
            if (opt.out_dir.empty()) lqmpc::write_csv(std::cout, g);
            if (*submap) std::cerr << "max relative gap " << g.max_rel_gap() << "\n";
            else std::cerr << "feasible points " << g.feasible_count() << " of " << g.points.size() << "\n";
        } else if (*sim) {
            const auto s = lqmpc::load_scenario(scenario);
            single_zeta();
            lqmpc::Vector x0;
            if (!x0_text.empty()) x0 = parse_vector(x0_text);
            else if (s.x0) x0 = *s.x0;
            else throw CLI::ValidationError("--x0", "scenario has no default x0");
            const auto r = lqmpc::cmd_simulate(s, x0, ell > 0 ? ell : s.horizon, zeta, opt);
            emit(r.csv);
            if (!r.feasible) {
                std::cerr << "x0 is infeasible or the closed loop became infeasible\n";
                return 1;
            }
        } else if (*repro) {
            const auto rep = lqmpc::reproduce(example, opt);
            print_report(rep);
            return rep.passed() ? 0 : 1;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const lqmpc::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
