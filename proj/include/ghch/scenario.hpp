#pragma once

// Scenario files: INI-style UTF-8 text.
//
//   # comment (also ';')
//   [grid]
//   N = 128            # power of two, >= 8
//   L = 2*pi           # numeric values accept constant expressions
//   [problem]
//   m = 1
//   s = 3
//   c1 = 1
//   a1 = u             # a1, a3: t, x, u      a2: t, x, u, ux
//   a5 = "2 + sin(x)"  # a4, a5, f: t, x      u0: x      (quotes optional)
//   u0 = 0.01*cos(x)
//   [run]
//   T = 0.1
//   dt = 1e-5
//   integrator = ifrk4 # rk4 | ifrk4
//   dealias = on       # on | off
//   v = 0              # frozen state for run-linear, over t, x (default: u0)
//   [picard]
//   tol = 1e-9
//   max_iter = 20
//   [weight]
//   variant = exact    # exact | paper
//   [output]
//   directory = out
//   snapshot_stride = 1
//   [sweep]
//   amplitudes = 0.5, 1, 2
//
// problem.a5 and problem.u0 are required; every other key has a default.

#include "ghch/coefficients.hpp"
#include "ghch/error.hpp"
#include "ghch/expr.hpp"
#include "ghch/linear_solver.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ghch {

class ScenarioError : public Error {
public:
    ScenarioError(const std::string& source, std::size_t line, std::string key, const std::string& what)
        : Error(source + (line ? ":" + std::to_string(line) : std::string()) +
                (key.empty() ? std::string() : ": " + key) + ": " + what),
          line_(line), key_(std::move(key)) {}
    std::size_t line() const noexcept { return line_; }
    const std::string& key() const noexcept { return key_; }

private:
    std::size_t line_;
    std::string key_;
};

struct Scenario {
    std::size_t N = 128;
    double L = 2.0 * std::numbers::pi;
    ProblemText problem;
    CoefficientSet coefficients;
    double T = 0.1;
    IntegratorConfig integrator;
    std::string frozen_v;  // empty: use u0
    Expr frozen_v_expr;
    double tol = 1e-9;
    std::size_t max_iter = 20;
    WeightVariant variant = WeightVariant::exact;
    std::string output_dir = "out";
    std::size_t snapshot_stride = 1;
    std::vector<double> sweep_amplitudes{0.5, 1.0, 2.0};
    std::string source;

    Grid grid() const { return make_grid(N, L); }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string strip_comment(std::string_view s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (!quoted && (s[i] == '#' || s[i] == ';')) return std::string(s.substr(0, i));
    }
    return std::string(s);
}

inline std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

struct Entry {
    std::string value;
    std::size_t line;
};

class ScenarioReader {
public:
    ScenarioReader(std::map<std::string, Entry> entries, std::string source)
        : entries_(std::move(entries)), source_(std::move(source)) {}

    std::optional<Entry> get(const std::string& key) {
        used_.insert(key);
        const auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    [[noreturn]] void fail(const std::string& key, std::size_t line, const std::string& what) const {
        throw ScenarioError(source_, line, key, what);
    }

    double number(const std::string& key, double fallback) {
        const auto e = get(key);
        if (!e) return fallback;
        double v = 0.0;
        try {
            v = parse(e->value, {}).eval(std::span<const double>{});
        } catch (const Error& ex) {
            fail(key, e->line, std::string("not a number: ") + ex.what());
        }
        if (!std::isfinite(v)) fail(key, e->line, "value is not finite");
        return v;
    }

    std::size_t count(const std::string& key, std::size_t fallback) {
        const auto e = get(key);
        if (!e) return fallback;
        const double v = number(key, 0.0);
        if (v < 0.0 || v != std::floor(v) || v > 1e15) fail(key, e->line, "expected a non-negative integer");
        return static_cast<std::size_t>(v);
    }

    std::string text(const std::string& key, const std::string& fallback) {
        const auto e = get(key);
        if (!e) return fallback;
        return e->value;
    }

    std::size_t line_of(const std::string& key) const {
        const auto it = entries_.find(key);
        return it == entries_.end() ? 0 : it->second.line;
    }

    void reject_unknown() const {
        for (const auto& [key, e] : entries_)
            if (!used_.count(key)) fail(key, e.line, "unknown key");
    }

private:
    std::map<std::string, Entry> entries_;
    std::set<std::string> used_;
    std::string source_;
};

}  // namespace detail

/// Parse and validate scenario text. Every failure is a ScenarioError naming
/// the source, line and key.
inline Scenario parse_scenario(std::string_view text, const std::string& source = "<scenario>") {
    static const std::set<std::string> kSections{"grid", "problem", "run", "picard", "weight", "output", "sweep"};
    std::map<std::string, detail::Entry> entries;
    std::string section;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    for (std::string raw; std::getline(in, raw);) {
        ++line_no;
        const std::string line = detail::trim(detail::strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ScenarioError(source, line_no, "", "malformed section header");
            section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
            if (!kSections.count(section)) throw ScenarioError(source, line_no, section, "unknown section");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ScenarioError(source, line_no, "", "expected 'key = value'");
        const std::string name = detail::trim(std::string_view(line).substr(0, eq));
        const std::string value = detail::unquote(detail::trim(std::string_view(line).substr(eq + 1)));
        if (name.empty()) throw ScenarioError(source, line_no, "", "missing key before '='");
        if (section.empty()) throw ScenarioError(source, line_no, name, "key outside of any section");
        const std::string key = section + "." + name;
        if (value.empty()) throw ScenarioError(source, line_no, key, "empty value");
        if (!entries.emplace(key, detail::Entry{value, line_no}).second)
            throw ScenarioError(source, line_no, key, "duplicate key");
    }

    detail::ScenarioReader r(std::move(entries), source);
    Scenario sc;
    sc.source = source;

    sc.N = r.count("grid.N", sc.N);
    sc.L = r.number("grid.L", sc.L);
    if (sc.N < 8 || !is_power_of_two(sc.N)) r.fail("grid.N", r.line_of("grid.N"), "must be a power of two >= 8");
    if (!(sc.L > 0.0)) r.fail("grid.L", r.line_of("grid.L"), "must be positive");

    ProblemText& p = sc.problem;
    p.m = r.number("problem.m", p.m);
    p.s = r.number("problem.s", p.s);
    p.c1 = r.number("problem.c1", p.c1);
    if (!(p.m > 0.0)) r.fail("problem.m", r.line_of("problem.m"), "must be positive");
    if (!(p.c1 > 0.0)) r.fail("problem.c1", r.line_of("problem.c1"), "must be positive");

    struct ExprKey {
        const char* key;
        std::string* target;
        const std::vector<std::string>* vars;
        bool required;
    };
    const ExprKey exprs[] = {
        {"problem.a1", &p.a1, &vars_txu(), false},  {"problem.a2", &p.a2, &vars_txuux(), false},
        {"problem.a3", &p.a3, &vars_txu(), false},  {"problem.a4", &p.a4, &vars_tx(), false},
        {"problem.a5", &p.a5, &vars_tx(), true},    {"problem.f", &p.f, &vars_tx(), false},
        {"problem.u0", &p.u0, &vars_x(), true},
    };
    for (const auto& ek : exprs) {
        const auto e = r.get(ek.key);
        if (!e) {
            if (ek.required) r.fail(ek.key, 0, "required key is missing");
            continue;
        }
        try {
            (void)parse(e->value, *ek.vars);
        } catch (const UnknownVariableError& ex) {
            std::string allowed;
            for (const auto& v : *ek.vars) allowed += (allowed.empty() ? "" : ", ") + v;
            r.fail(ek.key, e->line, std::string(ex.what()) + " (allowed: " + allowed + ")");
        } catch (const ParseError& ex) {
            r.fail(ek.key, e->line, ex.what());
        }
        *ek.target = e->value;
    }
    sc.coefficients = make_coefficient_set(p);

    sc.T = r.number("run.T", sc.T);
    if (!(sc.T > 0.0)) r.fail("run.T", r.line_of("run.T"), "must be positive");
    sc.integrator.dt = r.number("run.dt", sc.integrator.dt);
    if (!(sc.integrator.dt > 0.0)) r.fail("run.dt", r.line_of("run.dt"), "must be positive");
    const std::string scheme = r.text("run.integrator", "ifrk4");
    if (scheme == "rk4") sc.integrator.scheme = Scheme::rk4;
    else if (scheme == "ifrk4") sc.integrator.scheme = Scheme::ifrk4;
    else r.fail("run.integrator", r.line_of("run.integrator"), "expected rk4 or ifrk4, got '" + scheme + "'");
    const std::string dealias = r.text("run.dealias", "on");
    if (dealias == "on" || dealias == "true" || dealias == "1") sc.integrator.dealias = true;
    else if (dealias == "off" || dealias == "false" || dealias == "0") sc.integrator.dealias = false;
    else r.fail("run.dealias", r.line_of("run.dealias"), "expected on or off, got '" + dealias + "'");
    if (const auto v = r.get("run.v")) {
        try {
            sc.frozen_v_expr = parse(v->value, vars_tx());
        } catch (const ParseError& ex) {
            r.fail("run.v", v->line, ex.what());
        }
        sc.frozen_v = v->value;
    }

    sc.tol = r.number("picard.tol", sc.tol);
    if (!(sc.tol > 0.0)) r.fail("picard.tol", r.line_of("picard.tol"), "must be positive");
    sc.max_iter = r.count("picard.max_iter", sc.max_iter);
    if (sc.max_iter < 1) r.fail("picard.max_iter", r.line_of("picard.max_iter"), "must be at least 1");

    const std::string variant = r.text("weight.variant", "exact");
    if (variant == "exact") sc.variant = WeightVariant::exact;
    else if (variant == "paper") sc.variant = WeightVariant::paper;
    else r.fail("weight.variant", r.line_of("weight.variant"), "expected exact or paper, got '" + variant + "'");

    sc.output_dir = r.text("output.directory", sc.output_dir);
    sc.snapshot_stride = r.count("output.snapshot_stride", sc.snapshot_stride);
    if (sc.snapshot_stride < 1)
        r.fail("output.snapshot_stride", r.line_of("output.snapshot_stride"), "must be at least 1");

    if (const auto a = r.get("sweep.amplitudes")) {
        sc.sweep_amplitudes.clear();
        std::istringstream items(a->value);
        for (std::string item; std::getline(items, item, ',');) {
            double v = 0.0;
            try {
                v = parse(detail::trim(item), {}).eval(std::span<const double>{});
            } catch (const Error& ex) {
                r.fail("sweep.amplitudes", a->line, std::string("bad entry: ") + ex.what());
            }
            if (!std::isfinite(v)) r.fail("sweep.amplitudes", a->line, "entries must be finite");
            sc.sweep_amplitudes.push_back(v);
        }
        if (sc.sweep_amplitudes.empty()) r.fail("sweep.amplitudes", a->line, "no amplitudes given");
    }

    r.reject_unknown();
    return sc;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open scenario file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path);
}

}  // namespace ghch
