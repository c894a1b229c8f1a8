#pragma once

// Weighted energy E^s(u) = |w Lambda^s u|_{L2} along trajectories, and the
// a-posteriori Gronwall rate: the smallest lambda with
//   E^s(u(t)) <= e^{lambda t} E^s(u(0)) + 2 int_0^t e^{lambda (t - t')} E^s(f(t')) dt'
// at every stored time.

#include "ghch/coefficients.hpp"
#include "ghch/error.hpp"
#include "ghch/spectral.hpp"
#include "ghch/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ghch {

namespace detail {

inline double weighted_l2(const Field& y, const Field& w) {
    double acc = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) {
        const double v = w[j] * y[j];
        acc += v * v;
    }
    return std::sqrt(acc * y.grid().spacing());
}

}  // namespace detail

inline double energy(const Field& u, const WeightField& wf, double s) {
    if (!(u.grid() == wf.w.grid())) throw ContractViolation("field and weight live on different grids");
    return detail::weighted_l2(lambda_s(u, s), wf.w);
}

struct EnergyTrace {
    std::vector<double> times;
    std::vector<double> Es;
    std::vector<double> Hs;
    double lambda_fit = 0.0;
    bool bound_ok = false;
    double w1 = 0.0;
    double w2 = 0.0;
};

/// Weights at each snapshot time; computed once when a4, a5 do not depend on t.
inline std::vector<WeightField> weights_along(const Trajectory& traj, const CoefficientSet& c, WeightVariant variant) {
    const bool time_dependent = c.a4.depends_on("t") || c.a5.depends_on("t");
    const double horizon = traj.t_end() - traj.t0();
    std::vector<WeightField> out;
    out.reserve(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const double t = traj.time(k);
        if (k > 0 && !time_dependent) {
            WeightField wf = out.back();
            wf.t = t;
            out.push_back(std::move(wf));
            continue;
        }
        try {
            out.push_back(compute_weight(c, t, traj.grid(), variant, horizon));
        } catch (const DegenerateWeightError& e) {
            throw DegenerateWeightError(std::string(e.what()) + " (snapshot time " + std::to_string(t) + ")");
        }
    }
    return out;
}

/// E^s and H^s at every snapshot. H^s uses the same trapezoidal quadrature as
/// E^s, so w1 Hs <= Es <= w2 Hs holds up to rounding in the last bits.
inline EnergyTrace trace(const Trajectory& traj, const CoefficientSet& c, double s,
                         WeightVariant variant = WeightVariant::exact) {
    const std::vector<WeightField> weights = weights_along(traj, c, variant);
    EnergyTrace tr;
    tr.w1 = std::numeric_limits<double>::infinity();
    tr.w2 = 0.0;
    const Field ones = Field::constant(traj.grid(), 1.0);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const Field y = lambda_s(traj.snapshot(k), s);
        tr.times.push_back(traj.time(k));
        tr.Es.push_back(detail::weighted_l2(y, weights[k].w));
        tr.Hs.push_back(detail::weighted_l2(y, ones));
        tr.w1 = std::min(tr.w1, weights[k].w1);
        tr.w2 = std::max(tr.w2, weights[k].w2);
    }
    return tr;
}

/// E^s(f(t_k)) at the snapshot times of traj.
inline std::vector<double> forcing_energy(const Trajectory& traj, const CoefficientSet& c, double s,
                                          WeightVariant variant = WeightVariant::exact) {
    std::vector<double> out;
    out.reserve(traj.size());
    if (c.f.root().kind == NodeKind::constant && c.f.root().value == 0.0) {
        out.assign(traj.size(), 0.0);
        return out;
    }
    const std::vector<WeightField> weights = weights_along(traj, c, variant);
    for (std::size_t k = 0; k < traj.size(); ++k)
        out.push_back(energy(sample_expr(c.f, traj.grid(), traj.time(k)), weights[k], s));
    return out;
}

/// Relative slack on the right-hand side of the Gronwall inequality; absorbs
/// rounding so that an exactly conserved energy fits lambda = 0.
inline constexpr double kBoundRelativeSlack = 1e-12;

/// Does the discrete Gronwall inequality hold at every stored time with rate lambda?
/// The Duhamel integral uses the trapezoidal rule on the snapshot times.
inline bool check_bound(const EnergyTrace& tr, std::span<const double> f_energy, double lambda) {
    const std::size_t n = tr.times.size();
    const bool forced = std::any_of(f_energy.begin(), f_energy.end(), [](double v) { return v != 0.0; });
    if (forced && f_energy.size() != n) throw ContractViolation("forcing energies do not match the trace length");
    // integral_k = int_0^{t_k} e^{lambda (t_k - t')} E^s(f) dt', accumulated by
    // integral_k = e^{lambda dt} integral_{k-1} + trapezoid on [t_{k-1}, t_k].
    double integral = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double tk = tr.times[k];
        if (forced && k > 0) {
            const double step = tk - tr.times[k - 1];
            const double grow = std::exp(lambda * step);
            const double carried = integral == 0.0 ? 0.0 : grow * integral;
            const double left = f_energy[k - 1] == 0.0 ? 0.0 : grow * f_energy[k - 1];
            integral = carried + 0.5 * step * (left + f_energy[k]);
        }
        // zero times an overflowed exponential is zero, not NaN
        const double free = tr.Es[0] == 0.0 ? 0.0 : std::exp(lambda * (tk - tr.times[0])) * tr.Es[0];
        const double rhs = free + 2.0 * integral;
        if (!(tr.Es[k] <= rhs * (1.0 + kBoundRelativeSlack))) return false;
    }
    return true;
}

struct LambdaFit {
    double lambda = 0.0;
    bool bound_ok = false;
};

inline constexpr double kLambdaMin = 1e-6;
inline constexpr double kLambdaMax = 1e6;
inline constexpr double kLambdaResolution = 1e-3;

/// Smallest lambda >= 0 on the grid {0} U {kLambdaMin (1 + 1e-3)^j} up to
/// kLambdaMax for which check_bound holds. The inequality is monotone in
/// lambda, so the grid is bisected. Stores the result in tr.
inline LambdaFit fit_lambda(EnergyTrace& tr, std::span<const double> f_energy) {
    if (tr.times.empty()) throw ContractViolation("cannot fit an empty trace");
    LambdaFit fit;
    if (check_bound(tr, f_energy, 0.0)) {
        fit = {0.0, true};
    } else {
        const double ratio = 1.0 + kLambdaResolution;
        const auto top = static_cast<std::size_t>(std::ceil(std::log(kLambdaMax / kLambdaMin) / std::log(ratio)));
        auto grid_value = [&](std::size_t j) { return kLambdaMin * std::pow(ratio, static_cast<double>(j)); };
        if (!check_bound(tr, f_energy, grid_value(top))) {
            fit = {std::numeric_limits<double>::infinity(), false};
        } else {
            std::size_t lo = 0, hi = top;  // invariant: hi feasible
            if (check_bound(tr, f_energy, grid_value(0))) hi = 0;
            while (hi > lo + 1) {
                const std::size_t mid = lo + (hi - lo) / 2;
                if (check_bound(tr, f_energy, grid_value(mid))) hi = mid;
                else lo = mid;
            }
            fit = {grid_value(hi), true};
        }
    }
    tr.lambda_fit = fit.lambda;
    tr.bound_ok = fit.bound_ok;
    return fit;
}

/// w1 Hs[k] <= Es[k] <= w2 Hs[k] at every k, up to a relative rounding slack.
inline bool sandwich_holds(const EnergyTrace& tr, double relative_slack = 1e-13) {
    for (std::size_t k = 0; k < tr.Es.size(); ++k) {
        const double lo = tr.w1 * tr.Hs[k];
        const double hi = tr.w2 * tr.Hs[k];
        if (tr.Es[k] < lo * (1.0 - relative_slack) || tr.Es[k] > hi * (1.0 + relative_slack)) return false;
    }
    return true;
}

}  // namespace ghch
