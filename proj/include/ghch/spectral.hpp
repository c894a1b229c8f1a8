#pragma once

// Periodic pseudospectral calculus on [0, L).
//
// Grid nodes are x_j = j L / N. Spectra are stored in FFT order: index j holds
// the mode with wavenumber xi_j = 2 pi n_j / L, where n_j = j for j < N/2 and
// n_j = j - N for j >= N/2. Index N/2 is the lone Nyquist mode (n = -N/2).
//
// Transform normalization: forward() is unnormalized, inverse() carries 1/N.
// Hence the trapezoidal L2 norm satisfies Parseval in the form
//     |u|_{L2}^2 = (L/N) sum_j u_j^2 = (L/N^2) sum_n |u_hat_n|^2.

#include "ghch/error.hpp"
#include "ghch/fft.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ghch {

using Spectrum = std::vector<std::complex<double>>;

class Grid {
public:
    Grid(std::size_t n, double length) {
        if (n < 8 || n % 2 != 0)
            throw ContractViolation("grid size must be even and >= 8, got " + std::to_string(n));
        if (!is_power_of_two(n))
            throw ContractViolation("grid size must be a power of two, got " + std::to_string(n));
        if (!(length > 0.0) || !std::isfinite(length))
            throw ContractViolation("grid period must be positive and finite");
        auto d = std::make_shared<Data>(n, length);
        d->wavenumbers.resize(n);
        for (std::size_t j = 0; j < n; ++j)
            d->wavenumbers[j] = 2.0 * std::numbers::pi * static_cast<double>(mode(j, n)) / length;
        data_ = std::move(d);
    }

    std::size_t size() const noexcept { return data_->n; }
    double length() const noexcept { return data_->length; }
    double spacing() const noexcept { return data_->length / static_cast<double>(data_->n); }
    double node(std::size_t j) const noexcept { return static_cast<double>(j) * spacing(); }
    std::size_t nyquist() const noexcept { return data_->n / 2; }

    /// Signed mode number of FFT index j.
    long mode(std::size_t j) const noexcept { return mode(j, data_->n); }
    double wavenumber(std::size_t j) const noexcept { return data_->wavenumbers[j]; }
    std::span<const double> wavenumbers() const noexcept { return data_->wavenumbers; }

    const FftPlan& plan() const noexcept { return data_->plan; }
    /// Plan for the zero-padded grid used by dealiased products (2N >= 3N/2 points).
    const FftPlan& padded_plan() const noexcept { return data_->padded; }
    std::size_t padded_size() const noexcept { return 2 * data_->n; }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.data_ == b.data_ || (a.size() == b.size() && a.length() == b.length());
    }

private:
    static long mode(std::size_t j, std::size_t n) {
        return j < n / 2 ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(n);
    }

    struct Data {
        Data(std::size_t n_, double l_) : n(n_), length(l_), plan(n_), padded(2 * n_) {}
        std::size_t n;
        double length;
        std::vector<double> wavenumbers;
        FftPlan plan;
        FftPlan padded;
    };
    std::shared_ptr<const Data> data_;
};

inline Grid make_grid(std::size_t n, double length) { return Grid(n, length); }

/// Real samples on a Grid, optionally with their cached spectrum. Immutable;
/// copies share storage.
class Field {
public:
    Field(Grid grid, std::vector<double> values)
        : grid_(std::move(grid)), values_(std::make_shared<const std::vector<double>>(std::move(values))) {
        if (values_->size() != grid_.size())
            throw ContractViolation("field has " + std::to_string(values_->size()) + " samples, grid has " +
                                    std::to_string(grid_.size()));
    }

    /// `spectrum` must be conjugate-symmetric and agree with `values` up to rounding.
    Field(Grid grid, std::vector<double> values, Spectrum spectrum) : Field(std::move(grid), std::move(values)) {
        if (spectrum.size() != grid_.size()) throw ContractViolation("spectrum size does not match the grid");
        spectrum_ = std::make_shared<const Spectrum>(std::move(spectrum));
    }

    static Field zeros(const Grid& g) { return Field(g, std::vector<double>(g.size(), 0.0)); }
    static Field constant(const Grid& g, double c) { return Field(g, std::vector<double>(g.size(), c)); }

    template <class F>
    static Field from_function(const Grid& g, F&& f) {
        std::vector<double> v(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) v[j] = f(g.node(j));
        return Field(g, std::move(v));
    }

    const Grid& grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return *values_; }
    double operator[](std::size_t j) const { return (*values_)[j]; }
    std::size_t size() const noexcept { return values_->size(); }
    /// Identity of the shared sample buffer; equal ids imply equal samples.
    const void* storage_id() const noexcept { return values_.get(); }

    bool all_finite() const {
        return std::all_of(values_->begin(), values_->end(), [](double v) { return std::isfinite(v); });
    }

    const Spectrum* cached_spectrum() const noexcept { return spectrum_.get(); }

private:
    Grid grid_;
    std::shared_ptr<const std::vector<double>> values_;
    std::shared_ptr<const Spectrum> spectrum_;
};

namespace detail {

inline void require_same_grid(const Field& a, const Field& b) {
    if (!(a.grid() == b.grid())) throw ContractViolation("fields live on different grids");
}

template <class Op>
Field zip(const Field& a, const Field& b, Op op) {
    require_same_grid(a, b);
    std::vector<double> out(a.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = op(a[j], b[j]);
    return Field(a.grid(), std::move(out));
}

}  // namespace detail

inline Field operator+(const Field& a, const Field& b) { return detail::zip(a, b, std::plus<>{}); }
inline Field operator-(const Field& a, const Field& b) { return detail::zip(a, b, std::minus<>{}); }

inline Field operator*(double c, const Field& a) {
    std::vector<double> out(a.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = c * a[j];
    return Field(a.grid(), std::move(out));
}

/// Pointwise product on the grid (aliased).
inline Field pointwise_product(const Field& a, const Field& b) { return detail::zip(a, b, std::multiplies<>{}); }

inline double max_abs(const Field& u) {
    double m = 0.0;
    for (double v : u.values()) m = std::max(m, std::abs(v));
    return m;
}

inline double mean(const Field& u) {
    double s = 0.0;
    for (double v : u.values()) s += v;
    return s / static_cast<double>(u.size());
}

// ---------------------------------------------------------------------------
// Transforms

/// Unnormalized DFT: s_n = sum_j u_j e^{-i xi_n x_j}. Reuses the cached spectrum when present.
inline Spectrum forward(const Field& u) {
    if (const Spectrum* c = u.cached_spectrum()) return *c;
    Spectrum s(u.values().begin(), u.values().end());
    u.grid().plan().forward(s);
    return s;
}

/// Full complex inverse; the imaginary part is the realness residue.
inline std::vector<std::complex<double>> inverse_complex(const Grid& g, Spectrum s) {
    g.plan().inverse(s);
    return s;
}

/// Real part of the inverse transform (1/N normalization). The returned Field
/// caches the conjugate-symmetric part of `s`, which is the exact spectrum of
/// that real part, so chained spectral operations skip a transform pair.
inline Field inverse(const Grid& g, Spectrum s) {
    const std::size_t n = s.size();
    Spectrum sym(n);
    sym[0] = s[0].real();
    sym[n / 2] = s[n / 2].real();
    for (std::size_t j = 1; j < n / 2; ++j) {
        const std::complex<double> z = 0.5 * (s[j] + std::conj(s[n - j]));
        sym[j] = z;
        sym[n - j] = std::conj(z);
    }
    s = sym;
    g.plan().inverse(s);
    std::vector<double> v(n);
    for (std::size_t j = 0; j < n; ++j) v[j] = s[j].real();
    return Field(g, std::move(v), std::move(sym));
}

/// Copy an N-mode spectrum into a 2N-mode buffer, dropping the Nyquist mode.
inline void pad_spectrum(std::span<const std::complex<double>> src, std::span<std::complex<double>> dst) {
    const std::size_t n = src.size();
    std::fill(dst.begin(), dst.end(), std::complex<double>{});
    for (std::size_t j = 0; j < n / 2; ++j) dst[j] = src[j];
    for (std::size_t j = n / 2 + 1; j < n; ++j) dst[j + n] = src[j];
}

/// Inverse of pad_spectrum: keep |n| < N/2, Nyquist set to zero.
inline void truncate_spectrum(std::span<const std::complex<double>> src, std::span<std::complex<double>> dst) {
    const std::size_t n = dst.size();
    for (std::size_t j = 0; j < n / 2; ++j) dst[j] = src[j];
    dst[n / 2] = {};
    for (std::size_t j = n / 2 + 1; j < n; ++j) dst[j] = src[j + n];
}

/// Samples of u on the 2N-point padded grid.
inline std::vector<double> padded_values(const Field& u) {
    const Grid& g = u.grid();
    const Spectrum s = forward(u);
    Spectrum p(g.padded_size());
    pad_spectrum(s, p);
    g.padded_plan().inverse(p);
    std::vector<double> out(p.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = 2.0 * p[j].real();
    return out;
}

/// Product with the 2/3-rule: both factors are evaluated on a zero-padded
/// 2N grid, multiplied, and truncated back to the N retained modes.
inline Field dealiased_product(const Field& a, const Field& b) {
    detail::require_same_grid(a, b);
    const Grid& g = a.grid();
    const std::vector<double> pa = padded_values(a);
    const std::vector<double> pb = padded_values(b);
    Spectrum p(g.padded_size());
    for (std::size_t j = 0; j < p.size(); ++j) p[j] = pa[j] * pb[j];
    g.padded_plan().forward(p);
    Spectrum s(g.size());
    truncate_spectrum(p, s);
    for (auto& z : s) z *= 0.5;
    return inverse(g, std::move(s));
}

// ---------------------------------------------------------------------------
// Differentiation

/// Symbol (i xi)^k of the k-th derivative.
inline std::complex<double> derivative_symbol(double xi, int k) {
    std::complex<double> z{1.0, 0.0};
    for (int i = 0; i < k; ++i) z = {-z.imag() * xi, z.real() * xi};
    return z;
}

inline void apply_derivative(Spectrum& s, const Grid& g, int k) {
    for (std::size_t j = 0; j < s.size(); ++j) s[j] *= derivative_symbol(g.wavenumber(j), k);
    if (k % 2 == 1) s[g.nyquist()] = {};
}

inline Field derivative(const Field& u, int k) {
    if (k < 1 || k > 5) throw ContractViolation("derivative order must be in 1..5, got " + std::to_string(k));
    Spectrum s = forward(u);
    apply_derivative(s, u.grid(), k);
    return inverse(u.grid(), std::move(s));
}

// ---------------------------------------------------------------------------
// Real, even Fourier multipliers

/// Diagonal operator u_hat(xi) -> symbol(xi) u_hat(xi) with a real symbol.
class Multiplier {
public:
    Multiplier(std::function<double(double)> symbol, std::string name)
        : symbol_(std::move(symbol)), name_(std::move(name)) {}

    double symbol(double xi) const { return symbol_(xi); }
    const std::string& name() const noexcept { return name_; }

    void apply(Spectrum& s, const Grid& g) const {
        for (std::size_t j = 0; j < s.size(); ++j) s[j] *= symbol_(g.wavenumber(j));
    }

    Field operator()(const Field& u) const {
        Spectrum s = forward(u);
        apply(s, u.grid());
        return inverse(u.grid(), std::move(s));
    }

    /// Composition (order irrelevant: multipliers commute).
    friend Multiplier operator*(const Multiplier& a, const Multiplier& b) {
        return Multiplier([sa = a.symbol_, sb = b.symbol_](double xi) { return sa(xi) * sb(xi); },
                          a.name_ + "*" + b.name_);
    }

private:
    std::function<double(double)> symbol_;
    std::string name_;
};

inline void require_positive_m(double m) {
    if (!(m > 0.0) || !std::isfinite(m)) throw ContractViolation("m must be positive, got " + std::to_string(m));
}

/// Lambda^s = (1 - d_x^2)^{s/2}, symbol (1 + xi^2)^{s/2}.
inline Multiplier lambda_s_op(double s) {
    return Multiplier([s](double xi) { return std::pow(1.0 + xi * xi, 0.5 * s); },
                      "Lambda^" + std::to_string(s));
}

/// Lambda_m^s = (1 - m d_x^2)^{s/2}, symbol (1 + m xi^2)^{s/2}.
inline Multiplier lambda_m_op(double m, double s) {
    require_positive_m(m);
    return Multiplier([m, s](double xi) { return std::pow(1.0 + m * xi * xi, 0.5 * s); },
                      "Lambda_m^" + std::to_string(s));
}

/// Lambda_m^0 with symbol (1 + xi^2) / (1 + m xi^2), or its reciprocal.
inline Multiplier lambda_m0_op(double m, bool inverse = false) {
    require_positive_m(m);
    if (inverse)
        return Multiplier([m](double xi) { return (1.0 + m * xi * xi) / (1.0 + xi * xi); }, "(Lambda_m^0)^-1");
    return Multiplier([m](double xi) { return (1.0 + xi * xi) / (1.0 + m * xi * xi); }, "Lambda_m^0");
}

inline Field lambda_s(const Field& u, double s) { return lambda_s_op(s)(u); }
inline Field lambda_m(const Field& u, double m, double s) { return lambda_m_op(m, s)(u); }
inline Field lambda_m0(const Field& u, double m, bool inverse = false) { return lambda_m0_op(m, inverse)(u); }

// ---------------------------------------------------------------------------
// Norms

/// Trapezoidal inner product (L/N) sum u_j v_j.
inline double inner_product(const Field& u, const Field& v) {
    detail::require_same_grid(u, v);
    double acc = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) acc += u[j] * v[j];
    return acc * u.grid().spacing();
}

inline double l2_norm(const Field& u) {
    double acc = 0.0;
    for (double v : u.values()) acc += v * v;
    return std::sqrt(acc * u.grid().spacing());
}

/// L2 norm from the spectrum via Parseval: sqrt((L/N^2) sum |s_n|^2).
inline double spectral_l2_norm(std::span<const std::complex<double>> s, const Grid& g) {
    double acc = 0.0;
    for (const auto& z : s) acc += std::norm(z);
    const double n = static_cast<double>(g.size());
    return std::sqrt(acc * g.length() / (n * n));
}

/// |u|_{H^s} = |Lambda^s u|_{L2}, evaluated exactly on the discrete spectrum.
inline double sobolev_norm(const Field& u, double s) {
    const Grid& g = u.grid();
    Spectrum sp = forward(u);
    double acc = 0.0;
    for (std::size_t j = 0; j < sp.size(); ++j) {
        const double xi = g.wavenumber(j);
        acc += std::norm(sp[j]) * std::pow(1.0 + xi * xi, s);
    }
    const double n = static_cast<double>(g.size());
    return std::sqrt(acc * g.length() / (n * n));
}

/// Exact discrete H^{s_from} -> H^{s_to} norm of a multiplier:
/// max over grid wavenumbers of |symbol(xi)| (1 + xi^2)^{(s_to - s_from)/2}.
inline double empirical_operator_norm(const Multiplier& op, double s_from, double s_to, const Grid& g) {
    double best = 0.0;
    for (double xi : g.wavenumbers())
        best = std::max(best, std::abs(op.symbol(xi)) * std::pow(1.0 + xi * xi, 0.5 * (s_to - s_from)));
    return best;
}

/// H^s -> H^s norm. Independent of s for Fourier multipliers.
inline double empirical_operator_norm(const Multiplier& op, double s, const Grid& g) {
    return empirical_operator_norm(op, s, s, g);
}

}  // namespace ghch
