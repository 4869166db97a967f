#include "lqmpc/scenario.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

namespace lqmpc {

ScenarioError::ScenarioError(const std::string& source, int line, const std::string& field,
                             const std::string& message)
    : InvalidArgument(source + (line > 0 ? ":" + std::to_string(line) : std::string()) +
                      (field.empty() ? std::string() : ": " + field) + ": " + message),
      line_(line),
      field_(field) {}

namespace {

using json = nlohmann::json;

struct Entry {
    std::string value;
    int line = 0;
};

class Reader {
public:
    Reader(std::string source, std::map<std::string, Entry> entries)
        : source_(std::move(source)), entries_(std::move(entries)) {}

    bool has(const std::string& key) const { return entries_.count(key) > 0; }
    const std::string& source() const { return source_; }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        const auto it = entries_.find(key);
        throw ScenarioError(source_, it == entries_.end() ? 0 : it->second.line, key, msg);
    }

    json parse(const std::string& key) const {
        const auto& e = entries_.at(key);
        try {
            return json::parse(e.value);
        } catch (const json::parse_error& ex) {
            throw ScenarioError(source_, e.line, key, std::string("malformed value: ") + ex.what());
        }
    }

    std::string text(const std::string& key) const { return entries_.at(key).value; }

    double number(const std::string& key) const {
        const json j = parse(key);
        if (!j.is_number()) fail(key, "expected a number");
        return j.get<double>();
    }

    long integer(const std::string& key) const {
        const json j = parse(key);
        if (!j.is_number_integer() && !j.is_number_unsigned()) fail(key, "expected an integer");
        return j.get<long>();
    }

    double entry(const std::string& key, const json& v, const std::string& where, bool allow_null) const {
        if (allow_null && v.is_null()) return std::numeric_limits<double>::infinity();
        if (!v.is_number()) fail(key, where + " is not a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) fail(key, where + " is not finite");
        return d;
    }

    Matrix matrix(const std::string& key) const {
        const json j = parse(key);
        if (!j.is_array() || j.empty()) fail(key, "expected a non-empty array of rows");
        const auto rows = static_cast<Eigen::Index>(j.size());
        if (!j[0].is_array() || j[0].empty()) fail(key, "row 0 is not a non-empty array");
        const auto cols = static_cast<Eigen::Index>(j[0].size());
        Matrix m(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            const json& row = j[static_cast<std::size_t>(r)];
            if (!row.is_array()) fail(key, "row " + std::to_string(r) + " is not an array");
            if (static_cast<Eigen::Index>(row.size()) != cols)
                fail(key, "row " + std::to_string(r) + " has " + std::to_string(row.size()) + " entries, expected " +
                              std::to_string(cols));
            for (Eigen::Index c = 0; c < cols; ++c)
                m(r, c) = entry(key, row[static_cast<std::size_t>(c)],
                                "row " + std::to_string(r) + " column " + std::to_string(c), false);
        }
        return m;
    }

    Vector vector(const std::string& key, bool allow_null = false) const {
        const json j = parse(key);
        if (!j.is_array() || j.empty()) fail(key, "expected a non-empty array");
        Vector v(static_cast<Eigen::Index>(j.size()));
        for (std::size_t i = 0; i < j.size(); ++i)
            v(static_cast<Eigen::Index>(i)) = entry(key, j[i], "entry " + std::to_string(i), allow_null);
        return v;
    }

private:
    std::string source_;
    std::map<std::string, Entry> entries_;
};

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "name", "A", "B", "Q", "R", "state_box", "state_H", "state_h", "input_box", "input_H", "input_h",
        "terminal", "zeta", "terminal_K", "horizon", "grid_resolution", "grid_bounds", "x0", "seed", "note"};
    return keys;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::optional<HPolytope> read_set(const Reader& r, const std::string& prefix, Eigen::Index dim) {
    const std::string box = prefix + "_box", hk = prefix + "_H", hv = prefix + "_h";
    if (r.has(box) && (r.has(hk) || r.has(hv))) r.fail(box, "give either a box or an H-representation, not both");
    if (r.has(box)) {
        const Vector radius = r.vector(box, true);
        if (radius.size() != dim)
            r.fail(box, "has " + std::to_string(radius.size()) + " entries, expected " + std::to_string(dim));
        for (Eigen::Index i = 0; i < radius.size(); ++i)
            if (!(radius(i) > 0.0)) r.fail(box, "entry " + std::to_string(i) + " must be positive");
        return HPolytope::symmetric_box(radius);
    }
    if (r.has(hk) != r.has(hv)) r.fail(r.has(hk) ? hk : hv, "needs both " + hk + " and " + hv);
    if (!r.has(hk)) return std::nullopt;
    const Matrix H = r.matrix(hk);
    const Vector h = r.vector(hv);
    if (H.cols() != dim) r.fail(hk, "has " + std::to_string(H.cols()) + " columns, expected " + std::to_string(dim));
    if (H.rows() != h.size()) r.fail(hv, "has " + std::to_string(h.size()) + " entries, expected " +
                                           std::to_string(H.rows()));
    for (Eigen::Index i = 0; i < H.rows(); ++i)
        if (H.row(i).norm() == 0.0) r.fail(hk, "row " + std::to_string(i) + " is zero");
    return HPolytope(H, h);
}

}  // namespace

Scenario parse_scenario(std::istream& is, const std::string& source) {
    std::map<std::string, Entry> entries;
    std::vector<std::string> notes;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ScenarioError(source, lineno, "", "expected `key = value`");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ScenarioError(source, lineno, "", "missing key before `=`");
        bool known = false;
        for (const auto& k : known_keys()) known = known || k == key;
        if (!known) throw ScenarioError(source, lineno, key, "unknown key");
        if (value.empty()) throw ScenarioError(source, lineno, key, "missing value");
        if (key == "note") {
            notes.push_back(value);
            continue;
        }
        if (entries.count(key)) throw ScenarioError(source, lineno, key, "duplicate key");
        entries[key] = Entry{value, lineno};
    }

    const Reader r(source, std::move(entries));
    Scenario s;
    s.notes = std::move(notes);
    s.name = r.has("name") ? r.text("name") : source;
    for (const char* k : {"A", "B", "Q", "R"})
        if (!r.has(k)) throw ScenarioError(source, 0, k, "missing required key");
    s.A = r.matrix("A");
    s.B = r.matrix("B");
    s.Q = r.matrix("Q");
    s.R = r.matrix("R");
    const Eigen::Index n = s.A.rows(), m = s.B.cols();
    if (s.A.cols() != n) r.fail("A", "must be square, got " + std::to_string(n) + "x" + std::to_string(s.A.cols()));
    if (s.B.rows() != n) r.fail("B", "must have " + std::to_string(n) + " rows");
    if (s.Q.rows() != n || s.Q.cols() != n) r.fail("Q", "must be " + std::to_string(n) + "x" + std::to_string(n));
    if (s.R.rows() != m || s.R.cols() != m) r.fail("R", "must be " + std::to_string(m) + "x" + std::to_string(m));
    try {
        (void)s.system();
    } catch (const InvalidArgument& e) {
        throw ScenarioError(source, 0, "Q/R", e.what());
    }

    s.xhat = read_set(r, "state", n);
    s.u = read_set(r, "input", m);
    if (s.xhat.has_value() != s.u.has_value())
        throw ScenarioError(source, 0, s.xhat ? "input_box" : "state_box",
                            "constraints need both a state set and an input set");
    if (s.xhat && !s.xhat->origin_interior()) r.fail(r.has("state_box") ? "state_box" : "state_h",
                                                     "origin must be interior");
    if (s.u && !s.u->origin_interior()) r.fail(r.has("input_box") ? "input_box" : "input_h", "origin must be interior");

    if (r.has("terminal")) {
        const std::string t = r.text("terminal");
        if (t == "dare") s.terminal = TerminalKind::dare;
        else if (t == "zeta_dare") s.terminal = TerminalKind::zeta_dare;
        else if (t == "explicit") s.terminal = TerminalKind::explicit_k;
        else r.fail("terminal", "expected dare, zeta_dare or explicit, got `" + t + "`");
    }
    if (r.has("zeta")) {
        s.zeta = r.number("zeta");
        if (!(s.zeta >= 1.0)) r.fail("zeta", "must be >= 1");
    }
    if (s.terminal == TerminalKind::zeta_dare && !r.has("zeta")) r.fail("terminal", "zeta_dare needs `zeta`");
    if (r.has("terminal_K")) {
        const Matrix k = r.matrix("terminal_K");
        if (k.rows() != n || k.cols() != n) r.fail("terminal_K", "must be " + std::to_string(n) + "x" + std::to_string(n));
        s.terminal_K = k;
    }
    if (s.terminal == TerminalKind::explicit_k && !s.terminal_K) r.fail("terminal", "explicit needs `terminal_K`");

    if (r.has("horizon")) {
        const long h = r.integer("horizon");
        if (h < 1) r.fail("horizon", "must be a positive integer");
        s.horizon = static_cast<int>(h);
    }
    if (r.has("grid_resolution") || r.has("grid_bounds")) {
        if (n != 2) r.fail(r.has("grid_resolution") ? "grid_resolution" : "grid_bounds", "grids need a 2-D state");
        GridSpec g;
        if (s.xhat) {
            try {
                g = GridSpec::covering(*s.xhat, g.resolution);
            } catch (const DomainError&) {
            }
        }
        if (r.has("grid_resolution")) {
            const long res = r.integer("grid_resolution");
            if (res < 2) r.fail("grid_resolution", "must be at least 2");
            g.resolution = static_cast<int>(res);
        }
        if (r.has("grid_bounds")) {
            const Vector b = r.vector("grid_bounds");
            if (b.size() != 4) r.fail("grid_bounds", "expected [x1_min, x1_max, x2_min, x2_max]");
            if (!(b(0) < b(1)) || !(b(2) < b(3))) r.fail("grid_bounds", "each min must be below its max");
            g.x1_min = b(0);
            g.x1_max = b(1);
            g.x2_min = b(2);
            g.x2_max = b(3);
        }
        s.grid = g;
    }
    if (r.has("x0")) {
        const Vector x0 = r.vector("x0");
        if (x0.size() != n) r.fail("x0", "has " + std::to_string(x0.size()) + " entries, expected " + std::to_string(n));
        s.x0 = x0;
    }
    if (r.has("seed")) {
        const long seed = r.integer("seed");
        if (seed < 0) r.fail("seed", "must be non-negative");
        s.seed = static_cast<std::uint64_t>(seed);
    }
    return s;
}

LqSystem Scenario::system() const { return LqSystem(A, B, SymMatrix(Q), SymMatrix(R)); }

ConstrainedProblem Scenario::problem() const {
    if (!constrained()) throw ScenarioError(name, 0, "state_box", "scenario has no constraints");
    return ConstrainedProblem(system(), *xhat, *u);
}

SymMatrix Scenario::terminal_weight(std::optional<double> zeta_override) const {
    const LqSystem sys = system();
    if (zeta_override) return zeta_dare(sys, *zeta_override);
    switch (terminal) {
        case TerminalKind::dare: return solve_dare(sys).K;
        case TerminalKind::zeta_dare: return zeta_dare(sys, zeta);
        case TerminalKind::explicit_k: return SymMatrix(*terminal_K);
    }
    return solve_dare(sys).K;
}

TerminalDesign Scenario::terminal_design(std::optional<double> zeta_override) const {
    const ConstrainedProblem prob = problem();
    if (zeta_override) return design_terminal(prob, *zeta_override);
    switch (terminal) {
        case TerminalKind::dare: return design_terminal(prob, 1.0);
        case TerminalKind::zeta_dare: return design_terminal(prob, zeta);
        case TerminalKind::explicit_k: return design_terminal_explicit(prob, SymMatrix(*terminal_K));
    }
    return design_terminal(prob, 1.0);
}

GridSpec Scenario::grid_or_default() const {
    if (grid) return *grid;
    if (A.rows() != 2) throw ScenarioError(name, 0, "grid_resolution", "grids need a 2-D state");
    GridSpec g;
    if (xhat) g = GridSpec::covering(*xhat, g.resolution);
    return g;
}

namespace {

const char* const lqr_scalar_text = R"(name = lqr-scalar
A = [[2]]
B = [[0.5]]
Q = [[1]]
R = [[10]]
terminal = explicit
terminal_K = [[180]]
horizon = 1
note = terminal weight 180 is a reconstructed value chosen to reproduce the reference gap
)";

const char* const di_2d_text = R"(name = di-2d
A = [[1, 1], [0, 1]]
B = [[0], [1]]
Q = [[1, 0], [0, 1]]
R = [[1]]
state_box = [5, 5]
input_box = [1]
terminal = zeta_dare
zeta = 50
horizon = 3
grid_resolution = 101
grid_bounds = [-5, 5, -5, 5]
)";

const char* const ac_4d_text = R"(name = ac-4d
A = [[0.9993, -3.0083, -0.1131, -1.6081], [0, 0.9862, 0.0478, 0], [0, 2.0833, 1.0089, 0], [0, 0.0526, 0.0498, 1]]
B = [[-0.0804, -0.6347], [-0.0291, -0.0143], [-0.8679, -0.0917], [-0.0216, -0.0022]]
Q = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
R = [[1, 0], [0, 1]]
state_box = [null, 0.5, null, null]
input_box = [25, 25]
terminal = zeta_dare
zeta = 50
horizon = 2
x0 = [11.4, 0, 0, 0]
note = Q and R are identity; x0 is a default airspeed offset with optimal cost near 293
)";

}  // namespace

std::vector<std::string> builtin_scenario_names() { return {"lqr-scalar", "di-2d", "ac-4d"}; }

std::optional<Scenario> builtin_scenario(const std::string& name) {
    const char* text = nullptr;
    if (name == "lqr-scalar") text = lqr_scalar_text;
    if (name == "di-2d") text = di_2d_text;
    if (name == "ac-4d") text = ac_4d_text;
    if (!text) return std::nullopt;
    std::istringstream is(text);
    return parse_scenario(is, name);
}

Scenario load_scenario(const std::string& name_or_path) {
    if (auto s = builtin_scenario(name_or_path)) return *s;
    std::ifstream in(name_or_path);
    if (!in) throw ScenarioError(name_or_path, 0, "", "not a built-in scenario and the file cannot be opened");
    return parse_scenario(in, name_or_path);
}

}  // namespace lqmpc
