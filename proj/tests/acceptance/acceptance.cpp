// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Tolerances and runtime budgets are fixed constants below.

#include "ghch/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace ghch;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int failures = 0;

void report(int id, const char* title, double budget_s, double elapsed, const Outcome& o) {
    const bool in_budget = budget_s <= 0 || elapsed <= budget_s;
    const bool pass = o.pass && in_budget;
    if (!pass) ++failures;
    std::printf("%s criterion %d: %s | %s | %.2f s%s\n", pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), elapsed,
                in_budget ? "" : fmt(" (budget %.0f s exceeded)", budget_s).c_str());
    std::fflush(stdout);
}

Outcome run_guarded(const std::function<Outcome()>& body) {
    try {
        return body();
    } catch (const std::exception& e) {
        return {false, std::string("exception: ") + e.what()};
    }
}

// ----------------------------------------------------------------- 1, 2

Outcome operator_bounds() {
    std::size_t configs = 0, norm_fail = 0, est1_fail = 0;
    double worst_ratio = 0.0;
    std::uint64_t seed = 100;
    for (std::size_t N : {64u, 256u})
        for (double m : {0.1, 0.25, 1.0, 2.0, 10.0})
            for (double s : {0.0, 1.0, 2.7}) {
                const OpsCase c = verify_ops_case(N, m, s, 100, seed++);
                ++configs;
                if (!c.norms_ok()) ++norm_fail;
                est1_fail += c.est1_violations;
                worst_ratio = std::max(worst_ratio, c.est1_worst_ratio);
            }
    return {norm_fail == 0 && est1_fail == 0,
            fmt("%zu configs, norm-bound failures %zu, est1 violations %zu/%zu, worst est1 ratio %.15f", configs,
                norm_fail, est1_fail, configs * 100, worst_ratio)};
}

Outcome commutation() {
    double worst = 0.0;
    std::uint64_t seed = 200;
    std::size_t pairs = 0;
    for (double m : {0.1, 0.25, 1.0, 2.0, 4.0, 10.0})
        for (double s : {0.0, 1.0, 2.7, 3.0}) {
            worst = std::max(worst, verify_ops_case(256, m, s, 100, seed++).commutation_error);
            ++pairs;
        }
    return {worst <= 1e-12, fmt("%zu (m,s) pairs x 100 fields at N=256, max relative L2 discrepancy %.3e (tol 1e-12)",
                                pairs, worst)};
}

// ----------------------------------------------------------------- 3

Outcome weight_cancellation() {
    struct Preset {
        const char* a4;
        const char* a5;
        bool constant;
    };
    const Grid g = make_grid(256, 2 * kPi);
    bool ok = true;
    double worst_exact = 0.0, worst_const = 0.0;
    for (const Preset p : {Preset{"0", "2", true}, Preset{"cos(x)", "1", false},
                           Preset{"0.5*cos(x)", "2+sin(x)", false}})
        for (double s : {3.0, 3.5}) {
            ProblemText t;
            t.a4 = p.a4;
            t.a5 = p.a5;
            t.s = s;
            t.c1 = 1.0;
            const CoefficientSet c = make_coefficient_set(t);
            const std::vector<double> ts{0.0};
            if (!validate(c, g, ts).ok()) return {false, std::string("preset failed validation: ") + p.a4 + " / " + p.a5};
            const WeightField ex = compute_weight(c, 0.0, g, WeightVariant::exact);
            const double rel = weight_residual(c, ex, 0.0, g) / max_abs(ex.g);
            worst_exact = std::max(worst_exact, rel);
            ok = ok && rel <= 1e-8;
            if (p.constant)
                for (auto v : {WeightVariant::exact, WeightVariant::paper}) {
                    const double r = weight_residual(c, compute_weight(c, 0.0, g, v), 0.0, g);
                    worst_const = std::max(worst_const, r);
                    ok = ok && r <= 1e-12;
                }
        }
    return {ok, fmt("max exact residual/max|g| %.3e (tol 1e-8); constant preset residual %.3e (tol 1e-12)",
                    worst_exact, worst_const)};
}

// ----------------------------------------------------------------- 4, 5

struct Mode {
    int k;
    double amp;
    double phase;
};

std::vector<Mode> random_low_modes() {
    std::mt19937_64 rng(20240601);
    std::vector<int> pool{3, 4, 5, 6, 7, 8};
    std::shuffle(pool.begin(), pool.end(), rng);
    std::uniform_real_distribution<double> amp(0.5, 1.0), ph(0.0, 2 * kPi);
    std::vector<Mode> out;
    for (int i = 0; i < 3; ++i) out.push_back({pool[i], amp(rng), ph(rng)});
    return out;
}

std::string modes_expr(const std::vector<Mode>& modes) {
    std::string s;
    for (const Mode& m : modes)
        s += (s.empty() ? "" : " + ") + format_double(m.amp) + "*cos(" + std::to_string(m.k) + "*x + " +
             format_double(m.phase) + ")";
    return s;
}

ProblemText dispersive_problem(const char* a1) {
    ProblemText p;
    p.a1 = a1;
    p.a3 = "0.3";
    p.a5 = "1";
    p.m = 1.0;
    p.u0 = modes_expr(random_low_modes());
    return p;
}

FrozenCoefficients static_frozen(const CoefficientSet& c, const Grid& g, double T) {
    const Field z = Field::zeros(g);
    return FrozenCoefficients(c, g, [z](double) { return z; }, 0.0, T);
}

double rk4_dt_limit(const FrozenCoefficients& fr, const Grid& g, double m) {
    return kRk4StabilityLimit / stability_number(fr.at(0.0), g, m, Scheme::rk4, 1.0);
}

Outcome dispersive_conservation() {
    const Grid g = make_grid(128, 2 * kPi);
    const CoefficientSet c = make_coefficient_set(dispersive_problem("1"));
    const Field u0 = initial_field(c, g);
    const double T = 1.0;
    const FrozenCoefficients fr = static_frozen(c, g, T);

    Spectrum s = forward(u0);
    for (std::size_t j = 0; j < s.size(); ++j) {
        const double xi = g.wavenumber(j);
        const double omega = (xi - 0.3 * xi * xi * xi + std::pow(xi, 5)) / (1.0 + xi * xi);
        s[j] *= std::polar(1.0, -omega * T);
    }
    const Field exact = inverse(g, std::move(s));
    const double h0 = sobolev_norm(u0, 3.0);

    std::string detail = "u0 = " + c.u0.source();
    bool ok = true;
    for (Scheme sc : {Scheme::rk4, Scheme::ifrk4}) {
        IntegratorConfig cfg;
        cfg.scheme = sc;
        cfg.dt = sc == Scheme::rk4 ? 0.5 * rk4_dt_limit(fr, g, 1.0) : 1e-3;
        cfg.store_every = sc == Scheme::rk4 ? 1000 : 100;
        const Trajectory tr = solve_linear(fr, u0, T, cfg);
        const Field& uT = tr.snapshots().back();
        const double drift = std::abs(sobolev_norm(uT, 3.0) / h0 - 1.0);
        const double err = sobolev_norm(uT - exact, 3.0) / h0;
        ok = ok && !tr.blowup_time && drift <= 1e-8 && err <= 1e-8;
        detail += fmt("; %s dt=%.3e: H3 drift %.2e, H3 error vs exact %.2e", to_string(sc), cfg.dt, drift, err);
    }
    return {ok, detail + " (tol 1e-8)"};
}

Outcome temporal_order() {
    const Grid g = make_grid(128, 2 * kPi);
    const CoefficientSet c = make_coefficient_set(dispersive_problem("1 + 0.1*cos(x)"));
    const Field u0 = initial_field(c, g);
    const double T = 1.0;
    const FrozenCoefficients fr = static_frozen(c, g, T);

    bool ok = true;
    std::string detail;
    for (Scheme sc : {Scheme::rk4, Scheme::ifrk4}) {
        const double h = sc == Scheme::rk4 ? rk4_dt_limit(fr, g, 1.0) * 0.99 : 4e-3;
        std::vector<Field> terminal;
        for (double dt : {h, h / 2, h / 4}) {
            IntegratorConfig cfg;
            cfg.scheme = sc;
            cfg.dt = dt;
            cfg.store_every = static_cast<std::size_t>(std::ceil(T / dt));
            terminal.push_back(solve_linear(fr, u0, T, cfg).snapshots().back());
        }
        const double d1 = sobolev_norm(terminal[0] - terminal[1], 0.0);
        const double d2 = sobolev_norm(terminal[1] - terminal[2], 0.0);
        const double order = std::log2(d1 / d2);
        ok = ok && order >= 3.7 && order <= 4.3;
        detail += fmt("%s%s h=%.3e: |u_h-u_h/2|=%.2e |u_h/2-u_h/4|=%.2e order %.3f", detail.empty() ? "" : "; ",
                      to_string(sc), h, d1, d2, order);
    }
    return {ok, detail + " (accept [3.7, 4.3])"};
}

// ----------------------------------------------------------------- 6, 7

struct PicardEvidence {
    bool ran = false;
    picard::PicardResult result;
    double direct_distance = 0.0;
    EnergySummary energy;
};

Scenario picard_preset() {
    return parse_scenario(R"([grid]
N = 128
L = 2*pi
[problem]
m = 1
s = 3
c1 = 1
a1 = u
a2 = 0.1*ux
a3 = 0.1
a4 = 0.05*cos(x)*(2+sin(x))
a5 = 2+sin(x)
f = 0
u0 = 0.01*(cos(x)+0.5*cos(2*x))
[run]
T = 0.1
dt = 1e-5
integrator = ifrk4
[picard]
tol = 1e-9
max_iter = 12
)",
                          "<criterion-6 preset>");
}

Outcome picard_contraction(PicardEvidence& ev) {
    const Scenario sc = picard_preset();
    const ValidationReport vr = validate_scenario(sc);
    if (!vr.ok()) return {false, "preset failed validation: " + vr.summary()};
    const picard::PicardConfig cfg = picard_config(sc);
    ev.result = picard::run(sc.coefficients, sc.grid(), cfg);
    ev.ran = true;
    const auto& d = ev.result.distances;
    bool ratios_ok = !d.empty();
    std::string ds;
    for (std::size_t n = 0; n < d.size(); ++n) {
        ds += fmt("%s%.2e", n ? "," : "", d[n]);
        if (n > 0 && !(d[n] < d[n - 1])) ratios_ok = false;
    }
    const Trajectory direct = picard::solve_direct(sc.coefficients, sc.grid(), cfg);
    ev.direct_distance = picard::trajectory_distance(ev.result.last(), direct, sc.problem.s);
    ev.energy = energy_summary(ev.result.last(), sc);
    const bool ok = ratios_ok && ev.result.converged && ev.result.n_final <= 12 && !direct.blowup_time &&
                    ev.direct_distance <= 1e-6;
    return {ok, fmt("distances [%s], converged=%d in %zu iterations (cap 12), sup-t H3 distance to direct %.3e (tol 1e-6)",
                    ds.c_str(), ev.result.converged ? 1 : 0, ev.result.n_final, ev.direct_distance)};
}

Outcome gronwall(const PicardEvidence& ev) {
    if (!ev.ran) return {false, "criterion 6 run unavailable"};
    const EnergyTrace& tr = ev.energy.trace;
    const bool ok = ev.result.converged && std::isfinite(tr.lambda_fit) && tr.bound_ok && ev.energy.sandwich_ok;
    return {ok, fmt("lambda_fit=%.6g bound_ok=%d, sandwich w1=%.6g <= Es/Hs <= w2=%.6g at %zu snapshots: %s",
                    tr.lambda_fit, tr.bound_ok ? 1 : 0, tr.w1, tr.w2, tr.times.size(),
                    ev.energy.sandwich_ok ? "holds" : "violated")};
}

// ----------------------------------------------------------------- 8

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Outcome determinism_and_formats() {
    const fs::path root = fs::temp_directory_path() / "ghch_acceptance_c8";
    fs::remove_all(root);
    Scenario sc = load_scenario(std::string(GHCH_SCENARIO_DIR) + "/ch_small.ini");

    const fs::path a = root / "a", b = root / "b";
    run_picard_scenario(sc, a);
    run_picard_scenario(sc, b);
    bool identical = slurp(a / "trace.csv") == slurp(b / "trace.csv") && slurp(a / "picard.csv") == slurp(b / "picard.csv");
    std::size_t snaps = 0;
    for (const auto& e : fs::directory_iterator(a / "snapshots")) {
        ++snaps;
        identical = identical && slurp(e.path()) == slurp(b / "snapshots" / e.path().filename());
    }

    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::uint64_t> bits;
    std::size_t roundtrip_fail = 0;
    for (int i = 0; i < 50; ++i) {
        const std::size_t n = std::size_t{8} << (i % 6);
        std::vector<double> v(n);
        for (double& x : v) {
            do x = std::bit_cast<double>(bits(rng));
            while (std::isnan(x));
        }
        const Field f(make_grid(n, 1.0 + i), v);
        const fs::path p = root / "rt.ghch";
        write_snapshot(f, 0.1 * i, SnapshotMeta{0.5 + i, 3.0}, p);
        const Snapshot s = read_snapshot(p);
        if (std::memcmp(s.field.values().data(), v.data(), 8 * n) != 0 || s.t != 0.1 * i || s.meta.m != 0.5 + i ||
            s.meta.s != 3.0 || s.field.grid().length() != 1.0 + i)
            ++roundtrip_fail;
    }

    const std::string base = slurp(std::string(GHCH_SCENARIO_DIR) + "/ch_small.ini");
    const std::vector<std::string> tokens{"=", "[", "]", "\n", "u", "ux", "pi", "-", "1e999", "\"", "#",
                                          "0", "/", "(", ")", "grid", "N", "^", " ", "x", "t", ",", "run"};
    std::size_t named = 0, accepted = 0, uncontrolled = 0;
    for (int i = 0; i < 500; ++i) {
        std::string s = base;
        const int edits = 1 + static_cast<int>(rng() % 4);
        for (int e = 0; e < edits; ++e) {
            const std::size_t pos = rng() % (s.size() + 1);
            switch (rng() % 3) {
            case 0: s.insert(pos, tokens[rng() % tokens.size()]); break;
            case 1: if (pos < s.size()) s.erase(pos, 1 + rng() % 8); break;
            default: if (pos < s.size()) s[pos] = static_cast<char>(32 + rng() % 95); break;
            }
        }
        try {
            (void)parse_scenario(s, "fuzz");
            ++accepted;
        } catch (const ScenarioError& e) {
            ++(e.key().empty() && e.line() == 0 ? uncontrolled : named);
        } catch (...) {
            ++uncontrolled;
        }
    }
    fs::remove_all(root);
    const bool ok = identical && snaps > 0 && roundtrip_fail == 0 && uncontrolled == 0;
    return {ok, fmt("rerun byte-identical: %s (trace.csv, picard.csv, %zu snapshots); snapshot round-trip failures "
                    "%zu/50; fuzz 500: %zu named errors, %zu accepted, %zu uncontrolled",
                    identical ? "yes" : "no", snaps, roundtrip_fail, named, accepted, uncontrolled)};
}

}  // namespace

int main() {
    struct Step {
        int id;
        const char* title;
        double budget;
        std::function<Outcome()> body;
    };
    PicardEvidence ev;
    double picard_elapsed = 0.0;
    const std::vector<Step> steps{
        {1, "operator bound suite", 5, operator_bounds},
        {2, "commutation identity", 5, commutation},
        {3, "weight cancellation", 5, weight_cancellation},
        {4, "dispersive conservation oracle", 120, dispersive_conservation},
        {5, "temporal order (Richardson)", 300, temporal_order},
        {6, "Picard contraction and direct-solve agreement", 600, [&] { return picard_contraction(ev); }},
        {7, "Gronwall bound and norm equivalence", 0, [&] { return gronwall(ev); }},
        {8, "determinism and formats", 60, determinism_and_formats},
    };
    for (const Step& s : steps) {
        const auto t0 = Clock::now();
        const Outcome o = run_guarded(s.body);
        double elapsed = seconds_since(t0);
        if (s.id == 6) picard_elapsed = elapsed;
        if (s.id == 7) elapsed += picard_elapsed;  // budget shared with criterion 6
        report(s.id, s.title, s.id == 7 ? 600 : s.budget, elapsed, o);
    }
    std::printf("%s: %d of %zu criteria failed\n", failures ? "FAIL" : "PASS", failures, steps.size());
    return failures ? 1 : 0;
}
