#pragma once

// In-place radix-2 complex FFT.
//
// Convention: forward is unnormalized, X_k = sum_j x_j exp(-2 pi i j k / n);
// inverse carries the 1/n factor. A plan is immutable after construction, so
// one plan may be shared by any number of threads transforming distinct buffers.

#include "ghch/error.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ghch {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

class FftPlan {
public:
    explicit FftPlan(std::size_t n) : n_(n) {
        if (!is_power_of_two(n) || n < 2)
            throw ContractViolation("FFT size must be a power of two >= 2, got " + std::to_string(n));
        twiddle_.resize(n / 2);
        for (std::size_t k = 0; k < n / 2; ++k) {
            const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
            twiddle_[k] = {std::cos(angle), std::sin(angle)};
        }
        // Exact values on the axes keep the transform of symmetric data symmetric.
        if (n % 4 == 0) twiddle_[n / 4] = {0.0, -1.0};
        twiddle_[0] = {1.0, 0.0};

        bitrev_.resize(n);
        std::size_t bits = 0;
        while ((std::size_t{1} << bits) < n) ++bits;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < bits; ++b)
                if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
            bitrev_[i] = static_cast<std::uint32_t>(r);
        }
    }

    std::size_t size() const noexcept { return n_; }

    void forward(std::span<std::complex<double>> a) const { transform(a, false); }

    void inverse(std::span<std::complex<double>> a) const {
        transform(a, true);
        const double scale = 1.0 / static_cast<double>(n_);
        for (auto& z : a) z *= scale;
    }

private:
    void transform(std::span<std::complex<double>> a, bool conjugate) const {
        if (a.size() != n_)
            throw ContractViolation("FFT buffer has " + std::to_string(a.size()) + " entries, plan expects " +
                                    std::to_string(n_));
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t r = bitrev_[i];
            if (i < r) std::swap(a[i], a[r]);
        }
        const double sign = conjugate ? -1.0 : 1.0;
        for (std::size_t len = 2; len <= n_; len <<= 1) {
            const std::size_t half = len / 2;
            const std::size_t stride = n_ / len;
            for (std::size_t i = 0; i < n_; i += len) {
                for (std::size_t j = 0; j < half; ++j) {
                    const std::complex<double> w = twiddle_[j * stride];
                    const double wr = w.real();
                    const double wi = sign * w.imag();
                    const std::complex<double> u = a[i + j];
                    const std::complex<double> x = a[i + j + half];
                    // Plain arithmetic: std::complex operator* takes the slow NaN-recovery path.
                    const std::complex<double> v{x.real() * wr - x.imag() * wi, x.real() * wi + x.imag() * wr};
                    a[i + j] = {u.real() + v.real(), u.imag() + v.imag()};
                    a[i + j + half] = {u.real() - v.real(), u.imag() - v.imag()};
                }
            }
        }
    }

    std::size_t n_;
    std::vector<std::complex<double>> twiddle_;
    std::vector<std::uint32_t> bitrev_;
};

}  // namespace ghch
