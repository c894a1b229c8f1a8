#pragma once

// Method-of-lines solver for the linearized problem
//   Lambda_m^2 u_t + a1 u_x + a2 u_xx + a3 u_xxx + a4 u_xxxx + a5 u_xxxxx = f
// written as u_t = Lambda_m^{-2} [ f - sum_i a_i d_x^i u ] and integrated in
// spectral space. Lambda_m^{-2} turns the fifth-order term into an operator
// with symbol ~ xi^3 / m, which keeps explicit stepping feasible.

#include "ghch/coefficients.hpp"
#include "ghch/error.hpp"
#include "ghch/spectral.hpp"
#include "ghch/trajectory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ghch {

enum class Scheme {
    /// Classical four-stage Runge-Kutta.
    rk4,
    /// Lawson integrating-factor RK4. The factor is the constant-coefficient
    /// dispersive operator built from the spatial means of a1, a3, a5 at the
    /// start of each step; only the mean-free remainder is stepped explicitly.
    ifrk4,
};

inline const char* to_string(Scheme s) { return s == Scheme::rk4 ? "rk4" : "ifrk4"; }

struct IntegratorConfig {
    Scheme scheme = Scheme::ifrk4;
    double dt = 1e-3;
    bool dealias = true;
    /// Store a snapshot every this many steps.
    std::size_t store_every = 1;
};

/// Bound on dt * max_xi |omega(xi)| (RK4 covers roughly +-2.83 i on the imaginary axis).
inline constexpr double kRk4StabilityLimit = 2.8;

/// Uniform step layout covering [t0, t0 + T].
struct TimeGrid {
    std::size_t steps = 0;
    double step = 0.0;
    std::size_t store_every = 1;
    std::size_t stored() const { return steps / store_every + 1; }
    double snapshot_dt() const { return step * static_cast<double>(store_every); }
};

/// The requested dt is reduced (never enlarged) so that a whole number of
/// stored intervals spans T exactly.
inline TimeGrid make_time_grid(double T, const IntegratorConfig& cfg) {
    if (!(T > 0.0) || !std::isfinite(T)) throw ContractViolation("horizon T must be positive");
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ContractViolation("dt must be positive");
    if (cfg.store_every == 0) throw ContractViolation("store_every must be at least 1");
    const double interval = cfg.dt * static_cast<double>(cfg.store_every);
    const auto intervals = static_cast<std::size_t>(std::max(1.0, std::ceil(T / interval - 1e-9)));
    TimeGrid tg;
    tg.store_every = cfg.store_every;
    tg.steps = intervals * cfg.store_every;
    tg.step = T / static_cast<double>(tg.steps);
    return tg;
}

/// dt * max_xi (A1|xi| + A3|xi|^3 + A5|xi|^5) / (1 + m xi^2), where A_i is the
/// max of |a_i| (rk4) or of |a_i - mean a_i| (ifrk4) over the grid.
inline double stability_number(const CoefficientFields& cf, const Grid& g, double m, Scheme scheme, double dt) {
    std::array<double, 3> amp{};
    const int idx[3] = {1, 3, 5};
    for (int k = 0; k < 3; ++k) {
        const Field& a = cf.a[idx[k] - 1];
        const double shift = scheme == Scheme::ifrk4 ? mean(a) : 0.0;
        double mx = 0.0;
        for (double v : a.values()) mx = std::max(mx, std::abs(v - shift));
        amp[k] = mx;
    }
    double worst = 0.0;
    for (double xi : g.wavenumbers()) {
        const double ax = std::abs(xi);
        const double num = amp[0] * ax + amp[1] * ax * ax * ax + amp[2] * ax * ax * ax * ax * ax;
        worst = std::max(worst, num / (1.0 + m * xi * xi));
    }
    return dt * worst;
}

/// Right-hand side machinery for one solve. Holds the precomputed symbols,
/// the padded-coefficient cache and scratch buffers, so an instance must not
/// be shared between threads.
class SpatialOperator {
public:
    SpatialOperator(Grid g, double m, bool dealias) : g_(std::move(g)), m_(m), dealias_(dealias) {
        require_positive_m(m);
        const std::size_t n = g_.size();
        inv_elliptic_.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double xi = g_.wavenumber(j);
            inv_elliptic_[j] = 1.0 / (1.0 + m * xi * xi);
        }
        for (int k = 1; k <= 5; ++k) {
            auto& sym = dsym_[k - 1];
            sym.resize(n);
            for (std::size_t j = 0; j < n; ++j) sym[j] = derivative_symbol(g_.wavenumber(j), k);
            if (k % 2 == 1) sym[g_.nyquist()] = {};
        }
        const std::size_t np = g_.padded_size();
        pad_a_.resize(np);
        acc_pad_.resize(np);
        acc_phys_.resize(n);
        work_.resize(n);
    }

    const Grid& grid() const noexcept { return g_; }
    double m() const noexcept { return m_; }

    /// Dispersion relation omega(xi) of the constant-coefficient part with
    /// coefficients (a1, a3, a5): u_hat_t = -i omega u_hat.
    std::vector<double> dispersion(double a1, double a3, double a5) const {
        std::vector<double> w(g_.size());
        for (std::size_t j = 0; j < w.size(); ++j) {
            const double xi = g_.wavenumber(j);
            w[j] = (a1 * xi - a3 * xi * xi * xi + a5 * xi * xi * xi * xi * xi) * inv_elliptic_[j];
        }
        w[g_.nyquist()] = 0.0;
        return w;
    }

    /// out = Lambda_m^{-2} [ f - sum_i (a_i - shift_i) d_x^i u ] in spectral form.
    void rhs(const CoefficientFields& cf, const Spectrum& u_hat, Spectrum& out,
             const std::array<double, 5>& shift = {}) {
        const std::size_t n = g_.size();
        out.assign(n, {});
        std::fill(acc_pad_.begin(), acc_pad_.end(), std::complex<double>{});
        std::fill(acc_phys_.begin(), acc_phys_.end(), 0.0);
        bool used_pad = false, used_phys = false;

        // Variable-coefficient terms are gathered and transformed in pairs:
        // two conjugate-symmetric spectra share one complex inverse FFT.
        std::array<int, 5> pending{};
        std::size_t n_pending = 0;

        for (int k = 1; k <= 5; ++k) {
            CacheEntry& ce = coefficient(k - 1, cf.a[k - 1]);
            if (ce.is_constant) {
                const double c = ce.value - shift[k - 1];
                if (c == 0.0) continue;
                const auto& sym = dsym_[k - 1];
                for (std::size_t j = 0; j < n; ++j) out[j] += c * (sym[j] * u_hat[j]);
                continue;
            }
            pending[n_pending++] = k;
        }

        for (std::size_t p = 0; p < n_pending; p += 2) {
            const int ka = pending[p];
            const int kb = p + 1 < n_pending ? pending[p + 1] : 0;
            if (dealias_) {
                used_pad = true;
                combine_derivatives(u_hat, ka, kb, work_);
                pad_spectrum(work_, pad_a_);
                g_.padded_plan().inverse(pad_a_);
                const auto& ca = cache_[ka - 1].padded;
                const double sa = shift[ka - 1];
                for (std::size_t j = 0; j < pad_a_.size(); ++j) {
                    double v = (ca[j] - sa) * 2.0 * pad_a_[j].real();
                    if (kb) v += (cache_[kb - 1].padded[j] - shift[kb - 1]) * 2.0 * pad_a_[j].imag();
                    acc_pad_[j] += v;
                }
            } else {
                used_phys = true;
                combine_derivatives(u_hat, ka, kb, work_);
                g_.plan().inverse(work_);
                const Field& fa = cache_[ka - 1].field.value();
                const double sa = shift[ka - 1];
                for (std::size_t j = 0; j < n; ++j) {
                    double v = (fa[j] - sa) * work_[j].real();
                    if (kb) v += (cache_[kb - 1].field.value()[j] - shift[kb - 1]) * work_[j].imag();
                    acc_phys_[j] += v;
                }
            }
        }

        if (used_pad) {
            g_.padded_plan().forward(acc_pad_);
            truncate_spectrum(acc_pad_, work_);
            for (std::size_t j = 0; j < n; ++j) out[j] += 0.5 * work_[j];
        }
        if (used_phys) {
            for (std::size_t j = 0; j < n; ++j) work_[j] = acc_phys_[j];
            g_.plan().forward(work_);
            for (std::size_t j = 0; j < n; ++j) out[j] += work_[j];
        }
        // Dealiased products carry no Nyquist content.
        if (dealias_) out[g_.nyquist()] = {};

        const Spectrum& f_hat = forcing(cf.f);
        for (std::size_t j = 0; j < n; ++j) out[j] = inv_elliptic_[j] * (f_hat[j] - out[j]);
    }

private:
    struct CacheEntry {
        std::optional<Field> field;
        bool is_constant = false;
        double value = 0.0;
        std::vector<double> padded;
    };

    CacheEntry& coefficient(int slot, const Field& a) {
        CacheEntry& ce = cache_[slot];
        if (ce.field && ce.field->storage_id() == a.storage_id()) return ce;
        ce.field = a;
        const auto v = a.values();
        ce.is_constant = std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
        ce.value = v[0];
        if (!ce.is_constant && dealias_) ce.padded = padded_values(a);
        return ce;
    }

    const Spectrum& forcing(const Field& f) {
        if (!f_field_ || f_field_->storage_id() != f.storage_id()) {
            f_field_ = f;
            f_hat_ = forward(f);
        }
        return f_hat_;
    }

    /// dst = D_ka u_hat + i D_kb u_hat (kb == 0: only the first term).
    void combine_derivatives(const Spectrum& u_hat, int ka, int kb, Spectrum& dst) const {
        const auto& sa = dsym_[ka - 1];
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = sa[j] * u_hat[j];
        if (kb) {
            const auto& sb = dsym_[kb - 1];
            for (std::size_t j = 0; j < dst.size(); ++j) {
                const std::complex<double> d = sb[j] * u_hat[j];
                dst[j] += std::complex<double>{-d.imag(), d.real()};
            }
        }
        if (dealias_) dst[g_.nyquist()] = {};
    }

    Grid g_;
    double m_;
    bool dealias_;
    std::vector<double> inv_elliptic_;
    std::array<std::vector<std::complex<double>>, 5> dsym_;
    std::array<CacheEntry, 5> cache_;
    std::optional<Field> f_field_;
    Spectrum f_hat_;
    Spectrum pad_a_, acc_pad_;
    std::vector<double> acc_phys_;
    Spectrum work_;
};

/// u_t of the method-of-lines system at time t.
inline Field rhs(const FrozenCoefficients& frozen, const Field& u, double t, bool dealias = true) {
    SpatialOperator op(frozen.grid(), frozen.coefficients().m, dealias);
    Spectrum out;
    op.rhs(frozen.at(t), forward(u), out);
    return inverse(frozen.grid(), std::move(out));
}

namespace detail {

inline bool all_finite(const Spectrum& s) {
    return std::all_of(s.begin(), s.end(),
                       [](const std::complex<double>& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

inline void axpy(Spectrum& y, const Spectrum& x, double a) {
    for (std::size_t j = 0; j < y.size(); ++j) y[j] += a * x[j];
}

/// Integrate u_t = F(t, u) from (t0, u0) over [t0, t0 + T]. `coeffs(t, u_hat)`
/// returns the coefficient fields at a stage; stage times are t0 + (k + c) h.
template <class CoefficientsAt>
Trajectory integrate(CoefficientsAt&& coeffs, const Field& u0, double t0, double T, const IntegratorConfig& cfg,
                     double m, std::uint64_t hash) {
    const Grid& g = u0.grid();
    const TimeGrid tg = make_time_grid(T, cfg);
    const double h = tg.step;
    const std::size_t n = g.size();

    SpatialOperator op(g, m, cfg.dealias);
    Spectrum u = forward(u0);

    {
        const CoefficientFields cf0 = coeffs(t0, u);
        const double sn = stability_number(cf0, g, m, cfg.scheme, h);
        if (sn > kRk4StabilityLimit)
            throw StabilityError(std::string(to_string(cfg.scheme)) + ": dt * max|omega| = " + std::to_string(sn) +
                                 " exceeds " + std::to_string(kRk4StabilityLimit) + " (dt = " + std::to_string(h) +
                                 ")");
    }

    std::vector<Field> snaps;
    snaps.reserve(tg.stored());
    snaps.push_back(u0);
    std::optional<double> blowup;

    Spectrum k1(n), k2(n), k3(n), k4(n), stage(n), eu(n);
    std::vector<std::complex<double>> e_half(n), e_full(n);
    auto time_at = [&](std::size_t step, double c) { return t0 + (static_cast<double>(step) + c) * h; };

    for (std::size_t step = 0; step < tg.steps; ++step) {
        const double t = time_at(step, 0.0);
        const double t_half = time_at(step, 0.5);
        const double t_next = time_at(step + 1, 0.0);

        if (cfg.scheme == Scheme::rk4) {
            op.rhs(coeffs(t, u), u, k1);
            stage = u;
            axpy(stage, k1, 0.5 * h);
            op.rhs(coeffs(t_half, stage), stage, k2);
            stage = u;
            axpy(stage, k2, 0.5 * h);
            op.rhs(coeffs(t_half, stage), stage, k3);
            stage = u;
            axpy(stage, k3, h);
            op.rhs(coeffs(t_next, stage), stage, k4);
            for (std::size_t j = 0; j < n; ++j) u[j] += (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        } else {
            const CoefficientFields cf = coeffs(t, u);
            std::array<double, 5> shift{};
            shift[0] = mean(cf.a[0]);
            shift[2] = mean(cf.a[2]);
            shift[4] = mean(cf.a[4]);
            const std::vector<double> omega = op.dispersion(shift[0], shift[2], shift[4]);
            for (std::size_t j = 0; j < n; ++j) {
                e_half[j] = std::polar(1.0, -omega[j] * 0.5 * h);
                e_full[j] = std::polar(1.0, -omega[j] * h);
            }
            op.rhs(cf, u, k1, shift);
            for (std::size_t j = 0; j < n; ++j) stage[j] = e_half[j] * (u[j] + 0.5 * h * k1[j]);
            op.rhs(coeffs(t_half, stage), stage, k2, shift);
            for (std::size_t j = 0; j < n; ++j) stage[j] = e_half[j] * u[j] + 0.5 * h * k2[j];
            op.rhs(coeffs(t_half, stage), stage, k3, shift);
            for (std::size_t j = 0; j < n; ++j) {
                eu[j] = e_full[j] * u[j];
                stage[j] = eu[j] + h * e_half[j] * k3[j];
            }
            op.rhs(coeffs(t_next, stage), stage, k4, shift);
            for (std::size_t j = 0; j < n; ++j)
                u[j] = eu[j] + (h / 6.0) * (e_full[j] * k1[j] + 2.0 * e_half[j] * (k2[j] + k3[j]) + k4[j]);
        }

        if (!all_finite(u)) {
            blowup = t_next;
            break;
        }
        if ((step + 1) % tg.store_every == 0) snaps.push_back(inverse(g, u));
    }

    Trajectory traj(g, t0, tg.snapshot_dt(), std::move(snaps));
    traj.integrator = to_string(cfg.scheme);
    traj.coefficient_hash = hash;
    traj.blowup_time = blowup;
    return traj;
}

}  // namespace detail

/// Solve the linearized problem with coefficients frozen along a given state,
/// starting from u0 at frozen.t_begin(). Stops at the first non-finite value and
/// returns the partial trajectory with blowup_time set.
inline Trajectory solve_linear(const FrozenCoefficients& frozen, const Field& u0, double T,
                               const IntegratorConfig& cfg) {
    if (!(u0.grid() == frozen.grid())) throw ContractViolation("u0 lives on a different grid");
    const double t0 = frozen.t_begin();
    if (t0 + T > frozen.t_end() + 1e-12 * std::max(1.0, std::abs(frozen.t_end())))
        throw ContractViolation("horizon exceeds the interval of the frozen coefficients");
    return detail::integrate([&frozen](double t, const Spectrum&) { return frozen.at(t); }, u0, t0, T, cfg,
                             frozen.coefficients().m, frozen.coefficients().hash());
}

}  // namespace ghch
