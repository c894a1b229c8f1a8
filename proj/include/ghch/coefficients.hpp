#pragma once

// Problem data for
//   (1 - m d_x^2) u_t + a1(t,x,u) u_x + a2(t,x,u,u_x) u_xx + a3(t,x,u) u_xxx
//                     + a4(t,x) u_xxxx + a5(t,x) u_xxxxx = f(t,x),   u(0) = u0,
// hypothesis checks on a grid, the primitive F = int_0^x a4/a5, and the
// energy weight w.

#include "ghch/error.hpp"
#include "ghch/expr.hpp"
#include "ghch/spectral.hpp"
#include "ghch/trajectory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace ghch {

class PeriodicityError : public Error {
public:
    using Error::Error;
};

inline const std::vector<std::string>& vars_txu() {
    static const std::vector<std::string> v{"t", "x", "u"};
    return v;
}
inline const std::vector<std::string>& vars_txuux() {
    static const std::vector<std::string> v{"t", "x", "u", "ux"};
    return v;
}
inline const std::vector<std::string>& vars_tx() {
    static const std::vector<std::string> v{"t", "x"};
    return v;
}
inline const std::vector<std::string>& vars_x() {
    static const std::vector<std::string> v{"x"};
    return v;
}

/// Expression sources for the problem data; defaults give u_t = -Lambda_m^{-2} u_xxxxx.
struct ProblemText {
    double m = 1.0;
    double s = 3.0;
    double c1 = 1.0;
    std::string a1 = "0";
    std::string a2 = "0";
    std::string a3 = "0";
    std::string a4 = "0";
    std::string a5 = "1";
    std::string f = "0";
    std::string u0 = "0";
};

struct CoefficientSet {
    double m = 1.0;
    double s = 3.0;
    double c1 = 1.0;
    Expr a1, a2, a3, a4, a5, f, u0;

    const Expr& a(int i) const {
        switch (i) {
        case 1: return a1;
        case 2: return a2;
        case 3: return a3;
        case 4: return a4;
        case 5: return a5;
        default: throw ContractViolation("coefficient index must be 1..5");
        }
    }

    /// FNV-1a over the parameters and expression sources.
    std::uint64_t hash() const {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](const void* p, std::size_t n) {
            const auto* b = static_cast<const unsigned char*>(p);
            for (std::size_t i = 0; i < n; ++i) {
                h ^= b[i];
                h *= 1099511628211ull;
            }
        };
        for (double d : {m, s, c1}) mix(&d, sizeof d);
        for (const Expr* e : {&a1, &a2, &a3, &a4, &a5, &f, &u0}) {
            mix(e->source().data(), e->source().size());
            mix("\n", 1);
        }
        return h;
    }
};

/// Parse every expression against its allowed variables. m must be positive;
/// the remaining hypotheses (s > 5/2, c1 > 0, |a5| >= c1, ...) are reported by validate().
inline CoefficientSet make_coefficient_set(const ProblemText& p) {
    require_positive_m(p.m);
    CoefficientSet c;
    c.m = p.m;
    c.s = p.s;
    c.c1 = p.c1;
    c.a1 = parse(p.a1, vars_txu());
    c.a2 = parse(p.a2, vars_txuux());
    c.a3 = parse(p.a3, vars_txu());
    c.a4 = parse(p.a4, vars_tx());
    c.a5 = parse(p.a5, vars_tx());
    c.f = parse(p.f, vars_tx());
    c.u0 = parse(p.u0, vars_x());
    return c;
}

/// Evaluate e at every node of the grid. u and ux are required only if e uses them.
inline Field sample_expr(const Expr& e, const Grid& g, double t, const Field* u = nullptr,
                         const Field* ux = nullptr) {
    const auto& names = e.variables();
    enum class Src { t, x, u, ux };
    std::vector<Src> src(names.size(), Src::t);
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == "t") src[i] = Src::t;
        else if (names[i] == "x") src[i] = Src::x;
        else if (names[i] == "u") src[i] = Src::u;
        else if (names[i] == "ux") src[i] = Src::ux;
        else throw ContractViolation("unsupported variable '" + names[i] + "'");
        if (src[i] == Src::u && !u && e.depends_on("u"))
            throw ContractViolation("expression '" + e.source() + "' needs u");
        if (src[i] == Src::ux && !ux && e.depends_on("ux"))
            throw ContractViolation("expression '" + e.source() + "' needs ux");
    }
    std::vector<double> slots(names.size(), 0.0);
    std::vector<double> out(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        for (std::size_t i = 0; i < names.size(); ++i) {
            switch (src[i]) {
            case Src::t: slots[i] = t; break;
            case Src::x: slots[i] = g.node(j); break;
            case Src::u: slots[i] = u ? (*u)[j] : 0.0; break;
            case Src::ux: slots[i] = ux ? (*ux)[j] : 0.0; break;
            }
        }
        out[j] = e.eval(slots);
    }
    return Field(g, std::move(out));
}

inline Field initial_field(const CoefficientSet& c, const Grid& g) { return sample_expr(c.u0, g, 0.0); }

// ---------------------------------------------------------------------------
// validate

enum class CheckKind { parameter, nondegeneracy, finiteness, periodicity };

inline const char* to_string(CheckKind k) {
    switch (k) {
    case CheckKind::parameter: return "parameter";
    case CheckKind::nondegeneracy: return "nondegeneracy";
    case CheckKind::finiteness: return "finiteness";
    case CheckKind::periodicity: return "periodic-compatibility";
    }
    return "?";
}

struct ValidationIssue {
    CheckKind kind;
    double t = 0.0;
    double x = 0.0;
    double value = 0.0;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    /// Failed points beyond the recorded issues.
    std::size_t suppressed = 0;

    bool ok() const { return issues.empty(); }
    bool has(CheckKind k) const {
        return std::any_of(issues.begin(), issues.end(), [k](const ValidationIssue& i) { return i.kind == k; });
    }
    std::string summary() const {
        std::ostringstream os;
        for (const auto& i : issues) os << to_string(i.kind) << ": " << i.message << '\n';
        if (suppressed) os << "(" << suppressed << " further failures not listed)\n";
        return os.str();
    }
};

inline constexpr double kPeriodicMeanTolerance = 1e-10;

namespace detail {

inline void add_issue(ValidationReport& r, ValidationIssue issue) {
    constexpr std::size_t kMaxIssues = 64;
    if (r.issues.size() < kMaxIssues) r.issues.push_back(std::move(issue));
    else ++r.suppressed;
}

inline std::string at_point(double t, double x) {
    std::ostringstream os;
    os << " at (t=" << t << ", x=" << x << ")";
    return os.str();
}

inline std::optional<Field> checked_sample(ValidationReport& r, const char* name, const Expr& e, const Grid& g,
                                           double t, const Field* u, const Field* ux) {
    try {
        Field f = sample_expr(e, g, t, u, ux);
        for (std::size_t j = 0; j < f.size(); ++j) {
            if (!std::isfinite(f[j]))
                add_issue(r, {CheckKind::finiteness, t, g.node(j), f[j],
                              std::string(name) + " is not finite" + at_point(t, g.node(j))});
        }
        return f;
    } catch (const EvalError& ex) {
        add_issue(r, {CheckKind::finiteness, t, 0.0, 0.0, std::string(name) + ": " + ex.what() + " at t=" +
                                                             std::to_string(t)});
        return std::nullopt;
    }
}

}  // namespace detail

/// Sampled checks of the well-posedness hypotheses. Never throws for failed
/// checks; each failure is listed with its location.
inline ValidationReport validate(const CoefficientSet& c, const Grid& g, std::span<const double> t_samples) {
    ValidationReport r;
    if (!(c.s > 2.5))
        detail::add_issue(r, {CheckKind::parameter, 0, 0, c.s, "s must exceed 5/2, got " + std::to_string(c.s)});
    if (!(c.c1 > 0.0))
        detail::add_issue(r, {CheckKind::parameter, 0, 0, c.c1, "c1 must be positive, got " + std::to_string(c.c1)});
    if (!(c.m > 0.0))
        detail::add_issue(r, {CheckKind::parameter, 0, 0, c.m, "m must be positive, got " + std::to_string(c.m)});

    const auto u0 = detail::checked_sample(r, "u0", c.u0, g, 0.0, nullptr, nullptr);
    std::optional<Field> u0x;
    if (u0 && u0->all_finite()) u0x = derivative(*u0, 1);

    for (double t : t_samples) {
        const auto a5 = detail::checked_sample(r, "a5", c.a5, g, t, nullptr, nullptr);
        const auto a4 = detail::checked_sample(r, "a4", c.a4, g, t, nullptr, nullptr);
        detail::checked_sample(r, "f", c.f, g, t, nullptr, nullptr);
        if (u0 && u0x) {
            detail::checked_sample(r, "a1", c.a1, g, t, &*u0, &*u0x);
            detail::checked_sample(r, "a2", c.a2, g, t, &*u0, &*u0x);
            detail::checked_sample(r, "a3", c.a3, g, t, &*u0, &*u0x);
        }
        if (!a5) continue;
        bool degenerate = false;
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (!(std::abs((*a5)[j]) >= c.c1)) {
                degenerate = true;
                detail::add_issue(r, {CheckKind::nondegeneracy, t, g.node(j), (*a5)[j],
                                      "|a5| = " + std::to_string(std::abs((*a5)[j])) + " < c1 = " +
                                          std::to_string(c.c1) + detail::at_point(t, g.node(j))});
            }
        }
        if (degenerate || !a4) continue;
        double sum = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) sum += (*a4)[j] / (*a5)[j];
        const double avg = sum / static_cast<double>(g.size());
        if (!(std::abs(avg) <= kPeriodicMeanTolerance))
            detail::add_issue(r, {CheckKind::periodicity, t, 0.0, avg,
                                  "mean of a4/a5 over one period is " + std::to_string(avg) + " at t=" +
                                      std::to_string(t) + "; F = int a4/a5 would not be periodic"});
    }
    return r;
}

// ---------------------------------------------------------------------------
// F and the weight

/// F(t, x) = int_0^x a4/a5 dy by spectral antiderivative, F(t, 0) = 0.
inline Field compute_F(const CoefficientSet& c, double t, const Grid& g) {
    const Field a4 = sample_expr(c.a4, g, t);
    const Field a5 = sample_expr(c.a5, g, t);
    std::vector<double> q(g.size());
    for (std::size_t j = 0; j < q.size(); ++j) q[j] = a4[j] / a5[j];
    const Field ratio(g, std::move(q));
    Spectrum s = forward(ratio);
    const double avg = s[0].real() / static_cast<double>(g.size());
    if (!(std::abs(avg) <= kPeriodicMeanTolerance))
        throw PeriodicityError("a4/a5 has mean " + std::to_string(avg) + " at t=" + std::to_string(t) +
                               "; its primitive is not periodic");
    s[0] = {};
    s[g.nyquist()] = {};
    for (std::size_t j = 1; j < s.size(); ++j) {
        if (j == g.nyquist()) continue;
        const double xi = g.wavenumber(j);
        s[j] = {s[j].imag() / xi, -s[j].real() / xi};  // divide by i xi
    }
    const Field F = inverse(g, std::move(s));
    const double origin = F[0];
    std::vector<double> v(F.values().begin(), F.values().end());
    for (double& x : v) x -= origin;
    return Field(g, std::move(v));
}

enum class WeightVariant {
    /// w = (Lambda_m^0)^{-1}( |a5|^{(2s-7)/6} exp(-F/3) ), the closed formula.
    paper,
    /// w = sqrt( (Lambda_m^0)^{-1} g ), g = |a5|^{(2s-7)/3} exp(-2F/3), so that
    /// Lambda_m^0 w^2 solves the cancellation condition exactly.
    exact,
};

inline const char* to_string(WeightVariant v) { return v == WeightVariant::paper ? "paper" : "exact"; }

struct WeightField {
    Field w;
    Field w_t;
    /// Target profile |a5|^{(2s-7)/3} exp(-2F/3) for Lambda_m^0 w^2.
    Field g;
    double w1 = 0.0;
    double w2 = 0.0;
    WeightVariant variant = WeightVariant::exact;
    double t = 0.0;
};

namespace detail {

inline std::pair<Field, Field> weight_and_profile(const CoefficientSet& c, double t, const Grid& g,
                                                  WeightVariant variant) {
    const Field a5 = sample_expr(c.a5, g, t);
    const Field F = compute_F(c, t, g);
    const double expo = (2.0 * c.s - 7.0) / 3.0;
    std::vector<double> prof(g.size());
    for (std::size_t j = 0; j < g.size(); ++j)
        prof[j] = std::pow(std::abs(a5[j]), expo) * std::exp(-2.0 * F[j] / 3.0);
    Field profile(g, std::move(prof));

    if (variant == WeightVariant::paper) {
        std::vector<double> h(g.size());
        for (std::size_t j = 0; j < g.size(); ++j)
            h[j] = std::pow(std::abs(a5[j]), 0.5 * expo) * std::exp(-F[j] / 3.0);
        return {lambda_m0(Field(g, std::move(h)), c.m, true), profile};
    }
    const Field r = lambda_m0(profile, c.m, true);
    std::vector<double> w(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (!(r[j] > 0.0))
            throw DegenerateWeightError("(Lambda_m^0)^{-1} g = " + std::to_string(r[j]) + " <= 0 at x=" +
                                        std::to_string(g.node(j)) + ", t=" + std::to_string(t));
        w[j] = std::sqrt(r[j]);
    }
    return {Field(g, std::move(w)), profile};
}

}  // namespace detail

/// Weight at time t. w_t is a centered difference with step 1e-4 max(1, horizon).
inline WeightField compute_weight(const CoefficientSet& c, double t, const Grid& g,
                                  WeightVariant variant = WeightVariant::exact, double horizon = 1.0) {
    auto [w, profile] = detail::weight_and_profile(c, t, g, variant);
    double w1 = w[0], w2 = w[0];
    for (double v : w.values()) {
        w1 = std::min(w1, v);
        w2 = std::max(w2, v);
    }
    if (!(w1 > 0.0))
        throw DegenerateWeightError("weight minimum " + std::to_string(w1) + " is not positive at t=" +
                                    std::to_string(t));

    Field w_t = Field::zeros(g);
    if (c.a4.depends_on("t") || c.a5.depends_on("t")) {
        const double h = 1e-4 * std::max(1.0, horizon);
        const Field plus = detail::weight_and_profile(c, t + h, g, variant).first;
        const Field minus = detail::weight_and_profile(c, t - h, g, variant).first;
        w_t = (0.5 / h) * (plus - minus);
    }
    return WeightField{std::move(w), std::move(w_t), std::move(profile), w1, w2, variant, t};
}

/// Pointwise residual R = (3/2)(a5 g)' - (s-2) a5' g + a4 g with g = Lambda_m^0(w^2).
/// R == 0 is the pointwise condition under which the three top-order terms of the
/// energy identity cancel for every u.
inline Field weight_residual_field(const CoefficientSet& c, const WeightField& wf, double t, const Grid& g) {
    const Field a4 = sample_expr(c.a4, g, t);
    const Field a5 = sample_expr(c.a5, g, t);
    const Field gg = lambda_m0(pointwise_product(wf.w, wf.w), c.m);
    const Field d_a5g = derivative(pointwise_product(a5, gg), 1);
    const Field d_a5 = derivative(a5, 1);
    std::vector<double> r(g.size());
    for (std::size_t j = 0; j < g.size(); ++j)
        r[j] = 1.5 * d_a5g[j] - (c.s - 2.0) * d_a5[j] * gg[j] + a4[j] * gg[j];
    return Field(g, std::move(r));
}

inline double weight_residual(const CoefficientSet& c, const WeightField& wf, double t, const Grid& g) {
    return max_abs(weight_residual_field(c, wf, t, g));
}

// ---------------------------------------------------------------------------
// freeze

/// Coefficient samples at one time.
struct CoefficientFields {
    double t;
    std::array<Field, 5> a;  // a[i-1] = a_i
    Field f;
};

/// Evaluates the coefficient fields at (t, u). Expressions that depend on none
/// of t, u, ux are sampled once and shared between calls, so repeated calls
/// return Fields with identical storage_id().
class CoefficientEvaluator {
public:
    CoefficientEvaluator(CoefficientSet c, Grid g) : c_(std::move(c)), g_(std::move(g)) {
        for (int i = 1; i <= 5; ++i)
            if (is_static(c_.a(i))) static_[i - 1] = sample_expr(c_.a(i), g_, 0.0);
        if (is_static(c_.f)) static_[5] = sample_expr(c_.f, g_, 0.0);
        needs_u_ = false;
        for (int i = 1; i <= 3; ++i) needs_u_ = needs_u_ || c_.a(i).depends_on("u") || c_.a(i).depends_on("ux");
    }

    const CoefficientSet& coefficients() const noexcept { return c_; }
    const Grid& grid() const noexcept { return g_; }
    bool depends_on_state() const noexcept { return needs_u_; }

    CoefficientFields operator()(double t, const Field& u) const {
        std::optional<Field> ux;
        if (c_.a2.depends_on("ux")) ux = derivative(u, 1);
        const Field* uxp = ux ? &*ux : nullptr;
        auto field = [&](int slot, const Expr& e) {
            return static_[slot] ? *static_[slot] : sample_expr(e, g_, t, &u, uxp);
        };
        return CoefficientFields{t,
                                 {field(0, c_.a1), field(1, c_.a2), field(2, c_.a3), field(3, c_.a4),
                                  field(4, c_.a5)},
                                 field(5, c_.f)};
    }

private:
    static bool is_static(const Expr& e) {
        return !e.depends_on("t") && !e.depends_on("u") && !e.depends_on("ux");
    }

    CoefficientSet c_;
    Grid g_;
    std::array<std::optional<Field>, 6> static_;
    bool needs_u_ = false;
};

/// Coefficients of the linearized operator, frozen along a given state v(t).
class FrozenCoefficients {
public:
    using StateFunction = std::function<Field(double)>;

    FrozenCoefficients(const CoefficientSet& c, const Grid& g, StateFunction v, double t_begin, double t_end)
        : eval_(c, g), v_(std::move(v)), t_begin_(t_begin), t_end_(t_end), zero_(Field::zeros(g)) {}

    CoefficientFields at(double t) const {
        const double slack = 1e-12 * std::max(1.0, std::abs(t_end_));
        if (t < t_begin_ - slack || t > t_end_ + slack)
            throw ContractViolation("frozen coefficients requested at t=" + std::to_string(t) + " outside [" +
                                    std::to_string(t_begin_) + ", " + std::to_string(t_end_) + "]");
        if (!eval_.depends_on_state()) return eval_(t, zero_);
        return eval_(t, v_(t));
    }

    const CoefficientSet& coefficients() const noexcept { return eval_.coefficients(); }
    const Grid& grid() const noexcept { return eval_.grid(); }
    double t_begin() const noexcept { return t_begin_; }
    double t_end() const noexcept { return t_end_; }

private:
    CoefficientEvaluator eval_;
    StateFunction v_;
    double t_begin_;
    double t_end_;
    Field zero_;
};

inline FrozenCoefficients freeze(const CoefficientSet& c, const Trajectory& v, const Grid& g) {
    if (!(v.grid() == g)) throw ContractViolation("trajectory lives on a different grid");
    return FrozenCoefficients(c, g, [v](double t) { return v.sample(t); }, v.t0(), v.t_end());
}

}  // namespace ghch
