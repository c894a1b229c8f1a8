#pragma once

// Picard iteration for the nonlinear problem: u^0(t) = u0 for all t, and
// u^{n+1} solves the linear problem with coefficients frozen along u^n.
// solve_direct integrates the nonlinear equation itself and serves as an
// independent check on the limit.

#include "ghch/coefficients.hpp"
#include "ghch/error.hpp"
#include "ghch/linear_solver.hpp"
#include "ghch/spectral.hpp"
#include "ghch/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace ghch::picard {

struct PicardConfig {
    double tol = 1e-9;
    std::size_t max_iter = 20;
    double T = 0.1;
    IntegratorConfig integrator;
    /// Sobolev index of the distance sup_t |u^{n+1} - u^n|_{H^s}.
    double s = 3.0;
};

struct PicardResult {
    /// The last two iterates, oldest first.
    std::vector<Trajectory> iterates_kept;
    /// distances[n] = sup_t |u^{n+1}(t) - u^n(t)|_{H^s}.
    std::vector<double> distances;
    bool converged = false;
    std::size_t n_final = 0;
    std::optional<double> blowup_time;

    const Trajectory& last() const { return iterates_kept.back(); }
};

inline void check_config(const PicardConfig& cfg) {
    if (!(cfg.tol > 0.0)) throw ContractViolation("Picard tolerance must be positive");
    if (cfg.max_iter < 1) throw ContractViolation("Picard max_iter must be at least 1");
    if (!(cfg.T > 0.0)) throw ContractViolation("Picard horizon must be positive");
}

/// The time-constant extension of u0 on the integrator's snapshot grid.
inline Trajectory constant_trajectory(const Field& u0, double T, const IntegratorConfig& cfg) {
    const TimeGrid tg = make_time_grid(T, cfg);
    Trajectory traj(u0.grid(), 0.0, tg.snapshot_dt(), std::vector<Field>(tg.stored(), u0));
    traj.integrator = "constant";
    return traj;
}

/// sup over common snapshot indices of |a_k - b_k|_{H^s}.
inline double trajectory_distance(const Trajectory& a, const Trajectory& b, double s) {
    if (a.size() != b.size()) throw ContractViolation("trajectories have different time grids");
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, sobolev_norm(a.snapshot(k) - b.snapshot(k), s));
    return d;
}

inline PicardResult run(const CoefficientSet& c, const Grid& g, const PicardConfig& cfg) {
    check_config(cfg);
    const Field u0 = initial_field(c, g);
    PicardResult res;
    Trajectory prev = constant_trajectory(u0, cfg.T, cfg.integrator);

    for (std::size_t n = 0; n < cfg.max_iter; ++n) {
        const FrozenCoefficients frozen = freeze(c, prev, g);
        Trajectory next = solve_linear(frozen, u0, cfg.T, cfg.integrator);
        if (next.blowup_time) {
            res.blowup_time = next.blowup_time;
            res.iterates_kept = {std::move(prev), std::move(next)};
            break;
        }
        const double d = trajectory_distance(next, prev, cfg.s);
        res.distances.push_back(d);
        res.iterates_kept.clear();
        res.iterates_kept.push_back(std::move(prev));
        res.iterates_kept.push_back(next);
        prev = std::move(next);
        if (d <= cfg.tol) {
            res.converged = true;
            break;
        }
    }
    res.n_final = res.distances.size();
    return res;
}

/// Nonlinear method-of-lines solve: each stage evaluates the coefficients at
/// the stage value of u and its spectral derivative.
inline Trajectory solve_direct(const CoefficientSet& c, const Grid& g, const PicardConfig& cfg) {
    check_config(cfg);
    const Field u0 = initial_field(c, g);
    const CoefficientEvaluator eval(c, g);
    const Field zero = Field::zeros(g);
    auto coeffs = [&](double t, const Spectrum& u_hat) {
        if (!eval.depends_on_state()) return eval(t, zero);
        return eval(t, inverse(g, u_hat));
    };
    Trajectory traj = detail::integrate(coeffs, u0, 0.0, cfg.T, cfg.integrator, c.m, c.hash());
    traj.integrator += "-direct";
    return traj;
}

/// Discrete residual of the nonlinear equation along a trajectory:
///   Lambda_m^2 u_t + sum_i a_i(t,x,u,u_x) d_x^i u - f,
/// with u_t by fourth-order centered differences of the snapshots. Returns the
/// largest H^{norm_index} norm over interior snapshots (k = 2..K-2).
inline double pde_residual(const CoefficientSet& c, const Trajectory& traj, double norm_index, bool dealias = true) {
    if (traj.size() < 5) throw ContractViolation("residual needs at least five snapshots");
    const Grid& g = traj.grid();
    const CoefficientEvaluator eval(c, g);
    const Multiplier elliptic = lambda_m_op(c.m, 2.0);
    const double h = traj.dt();
    double worst = 0.0;
    for (std::size_t k = 2; k + 2 < traj.size(); ++k) {
        const Field& u = traj.snapshot(k);
        const Field ut = (1.0 / (12.0 * h)) * ((-1.0 * traj.snapshot(k + 2) + 8.0 * traj.snapshot(k + 1)) -
                                               (8.0 * traj.snapshot(k - 1) - traj.snapshot(k - 2)));
        const CoefficientFields cf = eval(traj.time(k), u);
        Field r = elliptic(ut) - cf.f;
        for (int i = 1; i <= 5; ++i) {
            const Field d = derivative(u, i);
            r = r + (dealias ? dealiased_product(cf.a[i - 1], d) : pointwise_product(cf.a[i - 1], d));
        }
        worst = std::max(worst, sobolev_norm(r, norm_index));
    }
    return worst;
}

}  // namespace ghch::picard
