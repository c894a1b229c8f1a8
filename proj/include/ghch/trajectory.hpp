#pragma once

#include "ghch/error.hpp"
#include "ghch/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ghch {

/// Fields on a uniform time grid t_k = t0 + k dt, k = 0..K, with 4-point
/// Lagrange dense output.
class Trajectory {
public:
    Trajectory(Grid grid, double t0, double dt, std::vector<Field> snapshots)
        : grid_(std::move(grid)), t0_(t0), dt_(dt), snapshots_(std::move(snapshots)) {
        if (snapshots_.empty()) throw ContractViolation("trajectory needs at least one snapshot");
        if (!(dt_ > 0.0)) throw ContractViolation("trajectory time step must be positive");
        for (const Field& f : snapshots_)
            if (!(f.grid() == grid_)) throw ContractViolation("trajectory snapshots must share one grid");
    }

    const Grid& grid() const noexcept { return grid_; }
    double t0() const noexcept { return t0_; }
    double dt() const noexcept { return dt_; }
    /// Number of stored snapshots, K + 1.
    std::size_t size() const noexcept { return snapshots_.size(); }
    double time(std::size_t k) const noexcept { return t0_ + static_cast<double>(k) * dt_; }
    double t_end() const noexcept { return time(snapshots_.size() - 1); }
    const Field& snapshot(std::size_t k) const { return snapshots_.at(k); }
    const std::vector<Field>& snapshots() const noexcept { return snapshots_; }

    Field sample(double t) const {
        const std::size_t last = snapshots_.size() - 1;
        const double slack = 1e-12 * std::max(1.0, std::abs(t_end()));
        if (t < t0_ - slack || t > t_end() + slack)
            throw ContractViolation("sample time " + std::to_string(t) + " outside [" + std::to_string(t0_) + ", " +
                                    std::to_string(t_end()) + "]");
        if (last == 0) return snapshots_[0];

        const double pos = (t - t0_) / dt_;
        std::size_t k = pos <= 0.0 ? 0 : std::min(static_cast<std::size_t>(pos), last - 1);
        if (t == time(k)) return snapshots_[k];
        if (t == time(k + 1)) return snapshots_[k + 1];

        const std::size_t width = std::min<std::size_t>(4, last + 1);
        std::size_t first = k > 0 ? k - 1 : 0;
        first = std::min(first, last + 1 - width);

        std::vector<double> weight(width, 1.0);
        for (std::size_t i = 0; i < width; ++i) {
            const double ti = time(first + i);
            for (std::size_t j = 0; j < width; ++j) {
                if (j == i) continue;
                const double tj = time(first + j);
                weight[i] *= (t - tj) / (ti - tj);
            }
        }
        std::vector<double> out(grid_.size(), 0.0);
        for (std::size_t i = 0; i < width; ++i) {
            const Field& s = snapshots_[first + i];
            for (std::size_t x = 0; x < out.size(); ++x) out[x] += weight[i] * s[x];
        }
        return Field(grid_, std::move(out));
    }

    std::string integrator;
    std::uint64_t coefficient_hash = 0;
    /// Set when stepping stopped at a non-finite value; snapshots end just before it.
    std::optional<double> blowup_time;

private:
    Grid grid_;
    double t0_;
    double dt_;
    std::vector<Field> snapshots_;
};

inline Field sample(const Trajectory& traj, double t) { return traj.sample(t); }

}  // namespace ghch
