#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lqmpc/bounds.hpp"
#include "lqmpc/cmpc.hpp"
#include "lqmpc/scenario.hpp"

namespace lqmpc {

struct RunOptions {
    std::string out_dir;  // empty: nothing written
    std::uint64_t seed = 1;
    double tol_scale = 1.0;  // multiplies every acceptance tolerance
    unsigned threads = 0;
};

/// One reported number with its acceptance rule.
struct Check {
    std::string name;
    double value = 0.0;
    double target = 0.0;
    std::string rule;  // relative, absolute, order, below, above, property
    double tolerance = 0.0;
    bool pass = false;
    std::string note;
};

Check check_relative(std::string name, double value, double target, double rel_tol, double tol_scale = 1.0);
Check check_absolute(std::string name, double value, double target, double abs_tol, double tol_scale = 1.0);
/// |log10(value) - exponent| <= half_width (default half a decade).
Check check_order(std::string name, double value, double exponent, double half_width = 0.5,
                  double tol_scale = 1.0);
Check check_below(std::string name, double value, double bound);
Check check_above(std::string name, double value, double bound);
Check check_property(std::string name, bool holds, double value = 0.0, std::string note = {});

struct ReproduceReport {
    std::string id;
    std::vector<Check> checks;
    std::vector<std::string> notes;
    std::vector<std::string> files;
    bool numeric_acceptance = true;
    double seconds = 0.0;

    bool passed() const;
    std::string to_json() const;
};

/// Rows of: ell, alpha, beta, rho, c1, c2, gamma, gap, contraction,
/// monotone, newton, status. K outside the region of decreasing marks the
/// row instead of aborting.
std::string cmd_bounds(const Scenario& s, const std::vector<int>& ells, std::optional<double> zeta,
                       const RunOptions& opt);

struct TerminalSetRow {
    double zeta = 1.0;
    double volume = 0.0;
    double reference_volume = 0.0;  // zeta = 1
    double ratio = 1.0;
    double standard_error = 0.0;
    bool exact = false;
    bool subset_of_xhat = false;
    int rows = 0;
    int determinedness_index = 0;
};

std::vector<TerminalSetRow> terminal_set_rows(const Scenario& s, const std::vector<double>& zetas,
                                              const RunOptions& opt);
std::string cmd_terminal_set(const Scenario& s, const std::vector<double>& zetas, const RunOptions& opt);

/// Feasible-region grid (and refined boundary points when written out).
CostMapGrid cmd_region(const Scenario& s, int ell, int resolution, std::optional<double> zeta, const RunOptions& opt);
CostMapGrid cmd_submap(const Scenario& s, int ell, int resolution, std::optional<double> zeta, const RunOptions& opt);

struct SimulationRow {
    std::size_t k = 0;
    Vector x;
    Vector u;
    double stage_cost = 0.0;
    double cost = 0.0;          // J_mu(x_k)
    double optimal_cost = 0.0;  // horizon-100 approximation of J*(x_k)
};

struct SimulationResult {
    bool feasible = false;
    std::vector<SimulationRow> rows;
    std::string csv;
};

SimulationResult cmd_simulate(const Scenario& s, const Vector& x0, int ell, std::optional<double> zeta,
                              const RunOptions& opt);

/// id in {1, 2, 3, 4, table1, table2, table3}. Throws InvalidArgument for
/// anything else.
ReproduceReport reproduce(const std::string& id, const RunOptions& opt);

std::vector<std::string> reproduce_ids();

/// Writes `content` to out_dir/name (creating the directory) and returns the
/// path; does nothing and returns "" when out_dir is empty.
std::string write_output(const RunOptions& opt, const std::string& name, const std::string& content);

}  // namespace lqmpc
