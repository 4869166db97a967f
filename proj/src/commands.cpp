#include "lqmpc/commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "lqmpc/errors.hpp"

namespace lqmpc {

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

std::string tag(double zeta) {
    std::ostringstream os;
    os << zeta;
    return os.str();
}

// max_x H_i x over `inner` <= h_i for every row of `outer`.
bool subset_of(const HPolytope& inner, const HPolytope& outer) {
    for (Eigen::Index i = 0; i < outer.rows(); ++i) {
        const LpResult r = lp_solve(outer.H().row(i).transpose(), inner);
        if (r.status == LpStatus::infeasible) return true;
        if (r.status != LpStatus::optimal) return false;
        if (r.value > outer.h()(i) + feas_tol * std::max(1.0, std::abs(outer.h()(i)))) return false;
    }
    return true;
}

}  // namespace

Check check_relative(std::string name, double value, double target, double rel_tol, double tol_scale) {
    Check c{std::move(name), value, target, "relative", rel_tol * tol_scale, false, {}};
    c.pass = std::isfinite(value) && std::abs(value - target) <= c.tolerance * std::abs(target);
    return c;
}

Check check_absolute(std::string name, double value, double target, double abs_tol, double tol_scale) {
    Check c{std::move(name), value, target, "absolute", abs_tol * tol_scale, false, {}};
    c.pass = std::isfinite(value) && std::abs(value - target) <= c.tolerance;
    return c;
}

Check check_order(std::string name, double value, double exponent, double half_width, double tol_scale) {
    Check c{std::move(name), value, std::pow(10.0, exponent), "order", half_width * tol_scale, false, {}};
    c.pass = value > 0.0 && std::isfinite(value) && std::abs(std::log10(value) - exponent) <= c.tolerance;
    c.note = "decades from target: " + num(value > 0.0 ? std::log10(value) - exponent : std::nan(""));
    return c;
}

Check check_below(std::string name, double value, double bound) {
    Check c{std::move(name), value, bound, "below", 0.0, false, {}};
    c.pass = value < bound;
    return c;
}

Check check_above(std::string name, double value, double bound) {
    Check c{std::move(name), value, bound, "above", 0.0, false, {}};
    c.pass = value > bound;
    return c;
}

Check check_property(std::string name, bool holds, double value, std::string note) {
    Check c{std::move(name), value, 0.0, "property", 0.0, holds, std::move(note)};
    return c;
}

bool ReproduceReport::passed() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

std::string ReproduceReport::to_json() const {
    using json = nlohmann::ordered_json;
    auto number = [](double v) -> json {
        if (std::isfinite(v)) return v;
        return num(v);
    };
    json j;
    j["id"] = id;
    j["pass"] = passed();
    j["numeric_acceptance"] = numeric_acceptance;
    j["seconds"] = seconds;
    j["checks"] = json::array();
    for (const auto& c : checks) {
        json e;
        e["name"] = c.name;
        e["value"] = number(c.value);
        e["target"] = number(c.target);
        e["rule"] = c.rule;
        e["tolerance"] = c.tolerance;
        e["pass"] = c.pass;
        if (!c.note.empty()) e["note"] = c.note;
        j["checks"].push_back(e);
    }
    j["notes"] = notes;
    j["files"] = files;
    return j.dump(2) + "\n";
}

std::string write_output(const RunOptions& opt, const std::string& name, const std::string& content) {
    if (opt.out_dir.empty()) return {};
    std::filesystem::create_directories(opt.out_dir);
    const std::string path = (std::filesystem::path(opt.out_dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write " + path);
    out << content;
    return path;
}

std::string cmd_bounds(const Scenario& s, const std::vector<int>& ells, std::optional<double> zeta,
                       const RunOptions& opt) {
    const LqSystem sys = s.system();
    const BoundsAnalyzer an(sys);
    const SymMatrix k = s.terminal_weight(zeta);
    std::ostringstream os;
    os << "ell,alpha,beta,rho,c1,c2,gamma,gap,contraction,monotone,newton,design_distance,status\n";
    for (int ell : ells) {
        try {
            const BoundsReport r = an.full_report(k, ell);
            os << ell << ',' << num(r.alpha) << ',' << num(r.beta_ell) << ',' << num(r.rho) << ',' << num(r.c1) << ','
               << num(r.c2) << ',' << num(r.gamma) << ',' << num(r.actual_gap) << ',' << num(r.bound_contraction)
               << ',' << num(r.bound_monotone) << ',' << num(r.bound_newton) << ',' << num(r.design_distance)
               << ",ok\n";
        } catch (const DomainError& e) {
            os << ell << ",,,,,,,,,,,," << '"' << e.what() << '"' << '\n';
        }
    }
    const std::string csv = os.str();
    write_output(opt, "bounds_" + s.name + ".csv", csv);
    return csv;
}

std::vector<TerminalSetRow> terminal_set_rows(const Scenario& s, const std::vector<double>& zetas,
                                              const RunOptions& opt) {
    const ConstrainedProblem prob = s.problem();
    const TerminalDesign ref = design_terminal(prob, 1.0);
    const VolumeEstimate v_ref = volume(ref.S, opt.seed);
    std::vector<TerminalSetRow> rows;
    for (double z : zetas) {
        const TerminalDesign d = design_terminal(prob, z);
        const VolumeEstimate v = volume(d.S, opt.seed);
        TerminalSetRow r;
        r.zeta = z;
        r.volume = v.value;
        r.reference_volume = v_ref.value;
        r.ratio = v.value / v_ref.value;
        r.standard_error = v.standard_error;
        r.exact = v.exact;
        r.subset_of_xhat = subset_of(d.S, prob.xhat());
        r.rows = static_cast<int>(d.S.rows());
        r.determinedness_index = d.determinedness_index;
        rows.push_back(r);
        if (!opt.out_dir.empty()) {
            std::ostringstream ps;
            write_csv(ps, d.S);
            write_output(opt, "terminal_set_" + s.name + "_zeta" + tag(z) + ".csv", ps.str());
        }
    }
    return rows;
}

std::string cmd_terminal_set(const Scenario& s, const std::vector<double>& zetas, const RunOptions& opt) {
    const auto rows = terminal_set_rows(s, zetas, opt);
    std::ostringstream os;
    os << "zeta,volume,reference_volume,ratio,standard_error,exact,subset_of_state_set,rows,determinedness_index\n";
    for (const auto& r : rows)
        os << num(r.zeta) << ',' << num(r.volume) << ',' << num(r.reference_volume) << ',' << num(r.ratio) << ','
           << num(r.standard_error) << ',' << (r.exact ? 1 : 0) << ',' << (r.subset_of_xhat ? 1 : 0) << ',' << r.rows
           << ',' << r.determinedness_index << '\n';
    const std::string csv = os.str();
    write_output(opt, "terminal_sets_" + s.name + ".csv", csv);
    return csv;
}

namespace {

GridSpec grid_for(const Scenario& s, int resolution) {
    GridSpec g = s.grid_or_default();
    if (resolution > 0) g.resolution = resolution;
    return g;
}

}  // namespace

CostMapGrid cmd_region(const Scenario& s, int ell, int resolution, std::optional<double> zeta, const RunOptions& opt) {
    const ConstrainedProblem prob = s.problem();
    const TerminalDesign d = s.terminal_design(zeta);
    const CostMapGrid grid = feasible_region_grid(prob, d, ell, grid_for(s, resolution), opt.threads);
    if (!opt.out_dir.empty()) {
        std::ostringstream os;
        write_csv(os, grid);
        const std::string stem = "region_" + s.name + "_ell" + std::to_string(ell) + "_zeta" + tag(d.zeta);
        write_output(opt, stem + ".csv", os.str());
        const MpcController ctrl(prob, d, ell);
        std::ostringstream bs;
        bs << "x1,x2\n" << std::setprecision(12);
        for (const auto& p : refine_boundary(ctrl, grid)) bs << p(0) << ',' << p(1) << '\n';
        write_output(opt, stem + "_boundary.csv", bs.str());
    }
    return grid;
}

CostMapGrid cmd_submap(const Scenario& s, int ell, int resolution, std::optional<double> zeta, const RunOptions& opt) {
    const ConstrainedProblem prob = s.problem();
    const TerminalDesign d = s.terminal_design(zeta);
    const CostMapGrid grid = suboptimality_map(prob, d, ell, grid_for(s, resolution), opt.threads);
    if (!opt.out_dir.empty()) {
        std::ostringstream os;
        write_csv(os, grid);
        write_output(opt, "submap_" + s.name + "_ell" + std::to_string(ell) + "_zeta" + tag(d.zeta) + ".csv",
                     os.str());
    }
    return grid;
}

SimulationResult cmd_simulate(const Scenario& s, const Vector& x0, int ell, std::optional<double> zeta,
                              const RunOptions& opt) {
    const ConstrainedProblem prob = s.problem();
    const TerminalDesign d = s.terminal_design(zeta);
    const MpcController ctrl(prob, d, ell);
    const MpcController reference(prob, d, optimal_horizon);
    const Trajectory tr = simulate(ctrl, x0);
    SimulationResult res;
    res.feasible = tr.feasible;
    const std::size_t steps = tr.u.size();
    // A feasible run ends with the state where the quadratic tail takes over;
    // that row shows the linear law the tail follows.
    const bool tail_row = tr.feasible && !tr.x.empty();
    res.rows.resize(steps + (tail_row ? 1 : 0));
    if (tail_row) {
        auto& row = res.rows[steps];
        row.k = steps;
        row.x = tr.x.back();
        row.u = ctrl.local_gain().L() * row.x;
        row.stage_cost = prob.stage_cost(row.x, row.u);
        row.cost = tr.tail;
    }
    double remaining = tr.tail;
    for (std::size_t k = steps; k-- > 0;) {
        remaining += tr.stage_cost[k];
        auto& row = res.rows[k];
        row.k = k;
        row.x = tr.x[k];
        row.u = tr.u[k];
        row.stage_cost = tr.stage_cost[k];
        row.cost = tr.feasible ? remaining : std::numeric_limits<double>::infinity();
    }
    parallel_for(
        res.rows.size(), [&](std::size_t k) { res.rows[k].optimal_cost = closed_loop_cost_fn(reference, res.rows[k].x); },
        opt.threads);

    const Eigen::Index n = prob.sys().n(), m = prob.sys().m();
    std::ostringstream os;
    os << "# " << s.name << " ell=" << ell << " zeta=" << d.zeta << " feasible=" << (tr.feasible ? 1 : 0)
       << " optimal cost approximated by the horizon-" << optimal_horizon << " closed loop\n";
    os << "k";
    for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i + 1;
    for (Eigen::Index i = 0; i < m; ++i) os << ",u" << i + 1;
    os << ",stage_cost,J_mu,J_star\n";
    for (const auto& r : res.rows) {
        os << r.k;
        for (Eigen::Index i = 0; i < n; ++i) os << ',' << num(r.x(i));
        for (Eigen::Index i = 0; i < m; ++i) os << ',' << num(r.u(i));
        os << ',' << num(r.stage_cost) << ',' << num(r.cost) << ',' << num(r.optimal_cost) << '\n';
    }
    if (!tr.feasible) os << "# infeasible at step " << tr.steps << "\n";
    res.csv = os.str();
    write_output(opt, "simulate_" + s.name + "_ell" + std::to_string(ell) + ".csv", res.csv);
    return res;
}

namespace {

void add_example1(ReproduceReport& rep, const RunOptions& opt) {
    const Scenario s = *builtin_scenario("lqr-scalar");
    const BoundsReport r = full_report(s.system(), s.terminal_weight(), 1);
    const double t = opt.tol_scale;
    rep.checks.push_back(check_relative("example1.gap", r.actual_gap, 3.3, 0.05, t));
    rep.checks.push_back(check_relative("example1.contraction", r.bound_contraction, 534.5, 0.05, t));
    rep.checks.push_back(check_relative("example1.monotone", r.bound_monotone, 14.4, 0.05, t));
    rep.checks.push_back(check_relative("example1.newton", r.bound_newton, 43.0, 0.05, t));
    for (const auto& n : s.notes) rep.notes.push_back("lqr-scalar: " + n);
    rep.files.push_back(write_output(opt, "example1_bounds.csv", cmd_bounds(s, {1}, std::nullopt, RunOptions{})));
}

void add_table1(ReproduceReport& rep, const RunOptions& opt) {
    const double t = opt.tol_scale;
    std::ostringstream os;
    os << "problem,norm_ratio,distance\n";
    for (const auto& [name, ratio, dist] : {std::tuple{"di-2d", 2.5, 9.9}, std::tuple{"ac-4d", 4.3, 486.0}}) {
        const Scenario s = *builtin_scenario(name);
        const LqSystem sys = s.system();
        const SymMatrix ks = solve_dare(sys).K;
        const SymMatrix k = zeta_dare(sys, 50.0);
        const double r = induced_two_norm(k) / induced_two_norm(ks);
        const double d = induced_two_norm(k - ks);
        rep.checks.push_back(check_absolute(std::string("table1.") + name + ".norm_ratio", r, ratio, 0.1, t));
        rep.checks.push_back(check_relative(std::string("table1.") + name + ".distance", d, dist, 0.01, t));
        os << name << ',' << num(r) << ',' << num(d) << '\n';
    }
    rep.files.push_back(write_output(opt, "table1.csv", os.str()));
}

void add_table2(ReproduceReport& rep, const RunOptions& opt) {
    const double t = opt.tol_scale;
    struct Row {
        const char* problem;
        int ell;
        std::vector<Check> (*make)(const std::string&, const BoundsReport&, double);
    };
    const std::vector<Row> rows = {
        {"di-2d", 3,
         [](const std::string& p, const BoundsReport& r, double t) {
             return std::vector<Check>{check_order(p + ".gap", r.actual_gap, -3, 0.5, t),
                                       check_below(p + ".contraction", r.bound_contraction, 1e10),
                                       check_relative(p + ".monotone", r.bound_monotone, 9.8, 0.05, t),
                                       check_order(p + ".newton", r.bound_newton, std::log10(553.0), 0.5, t)};
         }},
        {"di-2d", 10,
         [](const std::string& p, const BoundsReport& r, double) {
             return std::vector<Check>{check_below(p + ".gap", r.actual_gap, 1e-13),
                                       check_below(p + ".contraction", r.bound_contraction, 1e5),
                                       check_below(p + ".monotone", r.bound_monotone, 1e-4),
                                       check_below(p + ".newton", r.bound_newton, 1e-7)};
         }},
        {"ac-4d", 3,
         [](const std::string& p, const BoundsReport& r, double t) {
             return std::vector<Check>{check_relative(p + ".gap", r.actual_gap, 2.8, 0.05, t),
                                       check_order(p + ".contraction", r.bound_contraction, 52, 0.5, t),
                                       check_relative(p + ".monotone", r.bound_monotone, 486, 0.05, t),
                                       check_below(p + ".newton", r.bound_newton, 1e10)};
         }},
        {"ac-4d", 10,
         [](const std::string& p, const BoundsReport& r, double t) {
             return std::vector<Check>{check_below(p + ".gap", r.actual_gap, 1e-3),
                                       check_above(p + ".contraction", r.bound_contraction, 1e53),
                                       check_relative(p + ".monotone", r.bound_monotone, 404, 0.05, t),
                                       check_below(p + ".newton", r.bound_newton, 1e10)};
         }},
        {"ac-4d", 20,
         [](const std::string& p, const BoundsReport& r, double t) {
             return std::vector<Check>{check_below(p + ".gap", r.actual_gap, 1e-7),
                                       check_below(p + ".contraction", r.bound_contraction, 1e53),
                                       check_relative(p + ".monotone", r.bound_monotone, 248, 0.05, t),
                                       check_below(p + ".newton", r.bound_newton, 1e9)};
         }},
    };
    std::ostringstream os;
    os << "problem,ell,gap,contraction,monotone,newton\n";
    for (const auto& row : rows) {
        const Scenario s = *builtin_scenario(row.problem);
        const LqSystem sys = s.system();
        const BoundsReport r = full_report(sys, zeta_dare(sys, 50.0), row.ell);
        const std::string prefix = std::string("table2.") + row.problem + ".ell" + std::to_string(row.ell);
        for (auto& c : row.make(prefix, r, t)) rep.checks.push_back(std::move(c));
        os << row.problem << ',' << row.ell << ',' << num(r.actual_gap) << ',' << num(r.bound_contraction) << ','
           << num(r.bound_monotone) << ',' << num(r.bound_newton) << '\n';
    }
    rep.files.push_back(write_output(opt, "table2.csv", os.str()));
}

void add_table3(ReproduceReport& rep, const RunOptions& opt) {
    const Scenario s = *builtin_scenario("di-2d");
    const std::vector<double> zetas = {5, 15, 25, 35};
    const std::vector<double> targets = {1.23, 1.56, 1.65, 1.63};
    const auto rows = terminal_set_rows(s, zetas, opt);
    std::ostringstream os;
    os << "zeta,ratio,volume,reference_volume,exact\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const std::string p = "table3.zeta" + tag(r.zeta);
        rep.checks.push_back(check_absolute(p + ".ratio", r.ratio, targets[i], 0.05, opt.tol_scale));
        rep.checks.push_back(check_property(p + ".subset_of_state_set", r.subset_of_xhat));
        rep.checks.push_back(check_property(p + ".dominates_reference", r.ratio >= 1.0 - 1e-9, r.ratio));
        os << num(r.zeta) << ',' << num(r.ratio) << ',' << num(r.volume) << ',' << num(r.reference_volume) << ','
           << (r.exact ? 1 : 0) << '\n';
    }
    rep.files.push_back(write_output(opt, "table3.csv", os.str()));
}

void add_example3_maps(ReproduceReport& rep, const RunOptions& opt) {
    const Scenario s = *builtin_scenario("di-2d");
    const ConstrainedProblem prob = s.problem();
    const TerminalDesign d = s.terminal_design();
    const TerminalDesign ref = design_terminal(prob, 1.0);
    const GridSpec g = s.grid_or_default();
    const CostMapGrid region = feasible_region_grid(prob, d, s.horizon, g, opt.threads);
    const CostMapGrid region_ref = feasible_region_grid(prob, ref, s.horizon, g, opt.threads);
    std::size_t violations = 0;
    for (std::size_t i = 0; i < region.points.size(); ++i)
        if (region_ref.points[i].feasible && !region.points[i].feasible) ++violations;
    rep.checks.push_back(check_property("example3.region_contains_reference_region", violations == 0,
                                        static_cast<double>(violations),
                                        "grid points feasible for the reference design but not for the amplified "
                                        "one; feasible counts " +
                                            std::to_string(region.feasible_count()) + " vs " +
                                            std::to_string(region_ref.feasible_count())));
    const CostMapGrid sub = suboptimality_map(prob, d, s.horizon, g, opt.threads);
    rep.checks.push_back(check_below("example3.max_relative_gap", sub.max_rel_gap(), 0.005));
    rep.checks.push_back(check_above("example3.min_relative_gap", sub.min_rel_gap(), -1e-9));
    std::size_t unstable = 0;
    for (const auto& p : sub.points)
        if (p.feasible && !std::isfinite(p.cost)) ++unstable;
    rep.checks.push_back(check_property("example3.recursive_feasibility", unstable == 0,
                                        static_cast<double>(unstable), "feasible grid points whose closed loop "
                                                                       "later hit an infeasible problem"));
    rep.notes.push_back("optimal cost approximated by the horizon-" + std::to_string(optimal_horizon) +
                        " closed loop, an upper bound; gaps compare two upper approximations");
    if (!opt.out_dir.empty()) {
        for (const auto& [name, grid] :
             {std::pair{std::string("example3_region.csv"), &region},
              std::pair{std::string("example3_region_reference.csv"), &region_ref},
              std::pair{std::string("example3_submap.csv"), &sub}}) {
            std::ostringstream os;
            write_csv(os, *grid);
            rep.files.push_back(write_output(opt, name, os.str()));
        }
    }
}

void add_example4(ReproduceReport& rep, const RunOptions& opt) {
    const Scenario s = *builtin_scenario("ac-4d");
    const SimulationResult sim = cmd_simulate(s, *s.x0, s.horizon, std::nullopt, RunOptions{{}, opt.seed, 1.0, opt.threads});
    rep.numeric_acceptance = false;
    rep.checks.push_back(check_property("example4.recursive_feasibility", sim.feasible,
                                        static_cast<double>(sim.rows.size()), "closed-loop steps simulated"));
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& r : sim.rows) worst = std::min(worst, r.cost - r.optimal_cost);
    rep.checks.push_back(check_above("example4.min_cost_minus_optimal", sim.feasible ? worst : -1.0, -1e-6));
    const double rel = sim.rows.empty() ? std::numeric_limits<double>::infinity()
                                        : (sim.rows[0].cost - sim.rows[0].optimal_cost) / sim.rows[0].optimal_cost;
    rep.checks.push_back(check_below("example4.relative_gap_at_x0", rel, 0.01 * opt.tol_scale + 1e-15));
    std::ostringstream x0;
    x0 << s.x0->transpose();
    rep.notes.push_back("non-numeric acceptance: the reference trajectory's initial state is not available; default "
                        "x0 = (" + x0.str() + "), J*(x0) = " + (sim.rows.empty() ? "n/a" : num(sim.rows[0].optimal_cost)));
    rep.files.push_back(write_output(opt, "example4_trajectory.csv", sim.csv));
}

}  // namespace

std::vector<std::string> reproduce_ids() { return {"1", "2", "3", "4", "table1", "table2", "table3"}; }

ReproduceReport reproduce(const std::string& id, const RunOptions& opt) {
    const auto start = std::chrono::steady_clock::now();
    ReproduceReport rep;
    rep.id = id;
    if (id == "1") add_example1(rep, opt);
    else if (id == "table1") add_table1(rep, opt);
    else if (id == "table2") add_table2(rep, opt);
    else if (id == "2") {
        add_table1(rep, opt);
        add_table2(rep, opt);
    } else if (id == "table3") add_table3(rep, opt);
    else if (id == "3") {
        add_table3(rep, opt);
        add_example3_maps(rep, opt);
    } else if (id == "4") add_example4(rep, opt);
    else throw InvalidArgument("unknown example id `" + id + "`; expected one of 1, 2, 3, 4, table1, table2, table3");
    std::erase(rep.files, std::string());
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::string path = write_output(opt, "summary_" + id + ".json", rep.to_json());
    if (!path.empty()) rep.files.push_back(path);
    return rep;
}

}  // namespace lqmpc
