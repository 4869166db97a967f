#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lqmpc/cmpc.hpp"
#include "lqmpc/errors.hpp"

namespace lqmpc {

/// Parse or validation failure. line() is 0 when the problem is not tied to
/// a single line (e.g. a missing key).
class ScenarioError : public InvalidArgument {
public:
    ScenarioError(const std::string& source, int line, const std::string& field, const std::string& message);

    int line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    int line_;
    std::string field_;
};

enum class TerminalKind { dare, zeta_dare, explicit_k };

/// Problem data plus run settings. Text format: one `key = value` per line,
/// `#` starts a comment, matrices and vectors as JSON arrays
/// (e.g. `A = [[1, 1], [0, 1]]`), `null` for an absent box bound.
///
/// Keys: name, A, B, Q, R, state_box | state_H + state_h,
/// input_box | input_H + input_h, terminal (dare | zeta_dare | explicit),
/// zeta, terminal_K, horizon, grid_resolution, grid_bounds
/// ([x1_min, x1_max, x2_min, x2_max]), x0, seed, note.
struct Scenario {
    std::string name;
    Matrix A, B, Q, R;
    std::optional<HPolytope> xhat;
    std::optional<HPolytope> u;
    TerminalKind terminal = TerminalKind::dare;
    double zeta = 1.0;
    std::optional<Matrix> terminal_K;
    int horizon = 1;
    std::optional<GridSpec> grid;
    std::optional<Vector> x0;
    std::uint64_t seed = 1;
    std::vector<std::string> notes;

    bool constrained() const { return xhat.has_value() && u.has_value(); }
    LqSystem system() const;
    ConstrainedProblem problem() const;  // throws ScenarioError when unconstrained
    /// Terminal weight per `terminal` (zeta overrides the scenario value when given).
    SymMatrix terminal_weight(std::optional<double> zeta_override = std::nullopt) const;
    TerminalDesign terminal_design(std::optional<double> zeta_override = std::nullopt) const;
    GridSpec grid_or_default() const;
};

Scenario parse_scenario(std::istream& is, const std::string& source = "<input>");

/// Built-in name or a path to a scenario file.
Scenario load_scenario(const std::string& name_or_path);

std::vector<std::string> builtin_scenario_names();
std::optional<Scenario> builtin_scenario(const std::string& name);

}  // namespace lqmpc
