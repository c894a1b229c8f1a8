#include "ghch/fft.hpp"
#include "ghch/spectral.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

using namespace ghch;

namespace {

constexpr double kPi = std::numbers::pi;

Field random_field(const Grid& g, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    std::vector<double> v(g.size());
    for (double& x : v) x = nd(rng);
    return Field(g, std::move(v));
}

double max_diff(const Field& a, const Field& b) { return max_abs(a - b); }

// O(N^2) DFT with the library's sign and normalization conventions.
std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j)
            out[k] += x[j] * std::polar(1.0, -2.0 * kPi * static_cast<double>(j * k % n) / static_cast<double>(n));
    return out;
}

}  // namespace

TEST(Fft, MatchesNaiveDft) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    for (std::size_t n : {8u, 16u, 64u, 256u}) {
        std::vector<std::complex<double>> x(n);
        for (auto& z : x) z = {nd(rng), nd(rng)};
        const auto ref = naive_dft(x);
        auto y = x;
        FftPlan plan(n);
        plan.forward(y);
        for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(std::abs(y[k] - ref[k]), 0.0, 1e-11 * n) << n << " " << k;
        plan.inverse(y);
        for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(std::abs(y[k] - x[k]), 0.0, 1e-13 * n);
    }
}

TEST(Fft, RejectsNonPowerOfTwo) { EXPECT_THROW(FftPlan(12), ContractViolation); }

TEST(Grid, WavenumbersOf8On2Pi) {
    const Grid g = make_grid(8, 2 * kPi);
    std::vector<double> ks(g.wavenumbers().begin(), g.wavenumbers().end());
    std::sort(ks.begin(), ks.end());
    const std::vector<double> expect{-4, -3, -2, -1, 0, 1, 2, 3};
    ASSERT_EQ(ks.size(), expect.size());
    for (std::size_t i = 0; i < ks.size(); ++i) EXPECT_NEAR(ks[i], expect[i], 1e-15);
    EXPECT_NEAR(g.wavenumber(g.nyquist()), -4.0, 1e-15);
}

TEST(Grid, FirstWavenumberOnUnitPeriod) { EXPECT_NEAR(make_grid(16, 1.0).wavenumber(1), 2 * kPi, 1e-14); }

TEST(Grid, InvalidConstruction) {
    EXPECT_THROW(make_grid(7, 1.0), ContractViolation);
    EXPECT_THROW(make_grid(4, 1.0), ContractViolation);
    EXPECT_THROW(make_grid(24, 1.0), ContractViolation);
    EXPECT_THROW(make_grid(16, 0.0), ContractViolation);
    EXPECT_THROW(make_grid(16, -1.0), ContractViolation);
}

TEST(Grid, Nodes) {
    const Grid g = make_grid(16, 3.0);
    for (std::size_t j = 0; j < 16; ++j) EXPECT_DOUBLE_EQ(g.node(j), 3.0 * j / 16.0);
}

TEST(Derivative, Examples) {
    const Grid g = make_grid(64, 2 * kPi);
    const Field s = Field::from_function(g, [](double x) { return std::sin(x); });
    const Field c = Field::from_function(g, [](double x) { return std::cos(x); });
    EXPECT_LE(max_diff(derivative(s, 1), c), 1e-12);
    const Field c2 = Field::from_function(g, [](double x) { return std::cos(2 * x); });
    EXPECT_LE(max_diff(derivative(c2, 2), -4.0 * c2), 1e-12);
    const Field k = Field::constant(g, 3.5);
    for (int order = 1; order <= 5; ++order) EXPECT_LE(max_abs(derivative(k, order)), 1e-12);
    EXPECT_THROW(derivative(s, 0), ContractViolation);
    EXPECT_THROW(derivative(s, 6), ContractViolation);
}

TEST(Derivative, FifthOrderOnMode) {
    const Grid g = make_grid(32, 2 * kPi);
    const Field u = Field::from_function(g, [](double x) { return std::sin(3 * x); });
    const Field expect = Field::from_function(g, [](double x) { return 243.0 * std::cos(3 * x); });
    EXPECT_LE(max_diff(derivative(u, 5), expect), 1e-9);
}

TEST(Derivative, OddOrdersZeroNyquist) {
    const Grid g = make_grid(16, 2 * kPi);
    const Field nyq = Field::from_function(g, [](double x) { return std::cos(8 * x); });
    EXPECT_LE(max_abs(derivative(nyq, 1)), 1e-12);
    EXPECT_LE(max_abs(derivative(nyq, 3)), 1e-9);
    EXPECT_LE(max_diff(derivative(nyq, 2), -64.0 * nyq), 1e-10);
}

TEST(Multipliers, LambdaSExamples) {
    const Grid g = make_grid(64, 2 * kPi);
    std::mt19937_64 rng(5);
    const Field u = random_field(g, rng);
    EXPECT_LE(max_diff(lambda_s(u, 0.0), u), 1e-13);
    const Field c = Field::from_function(g, [](double x) { return std::cos(x); });
    EXPECT_LE(max_diff(lambda_s(c, 2.0), 2.0 * c), 1e-12);
    for (double s : {0.5, 1.0, 2.7, -3.0}) EXPECT_LE(max_diff(lambda_s(lambda_s(u, s), -s), u), 1e-12);
}

TEST(Multipliers, LambdaMExamples) {
    const Grid g = make_grid(64, 2 * kPi);
    std::mt19937_64 rng(6);
    const Field u = random_field(g, rng);
    for (double s : {-2.0, 1.0, 3.0}) EXPECT_LE(max_diff(lambda_m(u, 1.0, s), lambda_s(u, s)), 1e-12);
    const Field c2 = Field::from_function(g, [](double x) { return std::cos(2 * x); });
    EXPECT_LE(max_diff(lambda_m(c2, 0.5, -2.0), (1.0 / 3.0) * c2), 1e-14);
    for (double m : {0.1, 3.0}) EXPECT_LE(max_diff(lambda_m(lambda_m(u, m, 2.0), m, -2.0), u), 1e-11);
    EXPECT_THROW(lambda_m(u, 0.0, 1.0), ContractViolation);
    EXPECT_THROW(lambda_m(u, -1.0, 1.0), ContractViolation);
}

TEST(Multipliers, LambdaM0Examples) {
    const Grid g = make_grid(64, 2 * kPi);
    std::mt19937_64 rng(8);
    const Field u = random_field(g, rng);
    EXPECT_LE(max_diff(lambda_m0(u, 1.0), u), 1e-13);
    for (double m : {0.1, 4.0}) EXPECT_LE(max_diff(lambda_m0(Field::constant(g, 2.5), m), Field::constant(g, 2.5)), 1e-14);
    const Field c = Field::from_function(g, [](double x) { return std::cos(x); });
    EXPECT_LE(max_diff(lambda_m0(c, 4.0), 0.4 * c), 1e-14);
    EXPECT_LE(max_diff(lambda_m0(lambda_m0(u, 0.3), 0.3, true), u), 1e-12);
    EXPECT_THROW(lambda_m0(u, 0.0), ContractViolation);
}

TEST(Norms, SobolevExamples) {
    const Grid g = make_grid(64, 2 * kPi);
    EXPECT_EQ(sobolev_norm(Field::zeros(g), 3.0), 0.0);
    const Field c = Field::from_function(g, [](double x) { return std::cos(x); });
    EXPECT_NEAR(sobolev_norm(c, 0.0), std::sqrt(kPi), 1e-13);
    EXPECT_NEAR(sobolev_norm(c, 1.0), std::sqrt(2 * kPi), 1e-13);
    EXPECT_NEAR(l2_norm(c), std::sqrt(kPi), 1e-13);
}

TEST(Norms, ParsevalBothSides) {
    std::mt19937_64 rng(9);
    for (double L : {1.0, 2 * kPi, 40.0}) {
        const Grid g = make_grid(128, L);
        const Field u = random_field(g, rng);
        const double physical = l2_norm(u);
        const Spectrum s = forward(Field(g, std::vector<double>(u.values().begin(), u.values().end())));
        double acc = 0.0;
        for (const auto& z : s) acc += std::norm(z);
        const double spectral = std::sqrt(L * acc / (128.0 * 128.0));
        EXPECT_NEAR(physical / spectral, 1.0, 1e-13);
        EXPECT_NEAR(sobolev_norm(u, 0.0) / physical, 1.0, 1e-13);
        EXPECT_NEAR(spectral_l2_norm(s, g) / physical, 1.0, 1e-13);
    }
}

TEST(Norms, InnerProductMatchesNorm) {
    std::mt19937_64 rng(10);
    const Grid g = make_grid(64, 3.0);
    const Field u = random_field(g, rng);
    EXPECT_NEAR(inner_product(u, u), l2_norm(u) * l2_norm(u), 1e-12);
}

TEST(OperatorNorm, BoundExamples) {
    EXPECT_EQ(empirical_operator_norm(lambda_m0_op(1.0), 2.0, make_grid(64, 2 * kPi)), 1.0);
    double prev = 0.0;
    for (std::size_t n : {16u, 64u, 256u, 1024u}) {
        const double v = empirical_operator_norm(lambda_m0_op(0.25), 1.0, make_grid(n, 2 * kPi));
        EXPECT_LE(v, 4.0);
        EXPECT_GE(v, prev);
        prev = v;
    }
    EXPECT_GT(prev, 3.99);
    EXPECT_LE(empirical_operator_norm(lambda_m0_op(2.0, true), 1.0, make_grid(256, 2 * kPi)), 2.0);
}

TEST(OperatorNorm, AttainedByExtremalMode) {
    // The discrete norm is attained: apply the operator to the maximizing mode.
    const Grid g = make_grid(64, 2 * kPi);
    const double m = 0.25, s = 1.5;
    const Multiplier op = lambda_m0_op(m);
    const double norm = empirical_operator_norm(op, s, g);
    const Field top = Field::from_function(g, [](double x) { return std::cos(32 * x); });
    EXPECT_NEAR(sobolev_norm(op(top), s) / sobolev_norm(top, s), norm, 1e-12);
}

TEST(Property, Est1RandomFields) {
    std::mt19937_64 rng(12);
    for (double m : {0.1, 0.5, 1.0, 3.0}) {
        const Grid g = make_grid(128, 2 * kPi);
        const double c = m <= 1.0 ? 1.0 / m : 1.0;
        for (double s : {0.0, 1.0, 2.7}) {
            for (int i = 0; i < 50; ++i) {
                const Field f = random_field(g, rng);
                EXPECT_LE(sobolev_norm(lambda_m(f, m, -2.0), s + 2.0), c * sobolev_norm(f, s) * (1.0 + 1e-13));
            }
        }
    }
}

TEST(Property, CommutationIdentity) {
    std::mt19937_64 rng(13);
    const Grid g = make_grid(128, 2 * kPi);
    for (double m : {0.25, 1.0, 4.0})
        for (double s : {0.0, 1.0, 2.7, 3.0})
            for (int i = 0; i < 20; ++i) {
                const Field u = random_field(g, rng);
                const Field a = lambda_s(lambda_m(u, m, -2.0), s);
                const Field b = lambda_m0(lambda_s(u, s - 2.0), m);
                EXPECT_LE(l2_norm(a - b) / l2_norm(a), 1e-12);
            }
}

TEST(Property, MultipliersCommute) {
    std::mt19937_64 rng(14);
    const Grid g = make_grid(64, 5.0);
    const Field u = random_field(g, rng);
    const Multiplier a = lambda_s_op(1.3), b = lambda_m_op(0.7, -2.0), c = lambda_m0_op(2.0, true);
    const Field abc = a(b(c(u))), cba = c(b(a(u))), bac = b(a(c(u)));
    EXPECT_LE(l2_norm(abc - cba) / l2_norm(abc), 1e-13);
    EXPECT_LE(l2_norm(abc - bac) / l2_norm(abc), 1e-13);
    EXPECT_LE(l2_norm((a * b * c)(u) - abc) / l2_norm(abc), 1e-13);
}

TEST(Property, RealnessPreserved) {
    std::mt19937_64 rng(15);
    const Grid g = make_grid(128, 2 * kPi);
    const Field u = random_field(g, rng);
    auto residue = [&](Spectrum s) {
        const auto z = inverse_complex(g, std::move(s));
        double re = 0.0, im = 0.0;
        for (const auto& v : z) {
            re = std::max(re, std::abs(v.real()));
            im = std::max(im, std::abs(v.imag()));
        }
        return im / re;
    };
    for (int k = 1; k <= 5; ++k) {
        Spectrum s = forward(u);
        apply_derivative(s, g, k);
        EXPECT_LE(residue(s), 1e-13) << "derivative " << k;
    }
    for (const Multiplier& op : {lambda_s_op(2.7), lambda_m_op(0.3, -2.0), lambda_m0_op(5.0), lambda_m0_op(0.1, true)}) {
        Spectrum s = forward(u);
        op.apply(s, g);
        EXPECT_LE(residue(s), 1e-13) << op.name();
    }
}

TEST(Property, InverseReproducesValues) {
    std::mt19937_64 rng(16);
    const Grid g = make_grid(256, 2 * kPi);
    const Field u = random_field(g, rng);
    const Field v = inverse(g, forward(u));
    EXPECT_LE(l2_norm(v - u) / l2_norm(u), 1e-12);
}

TEST(Dealias, ProductOfResolvedModesIsExact) {
    const Grid g = make_grid(32, 2 * kPi);
    const Field a = Field::from_function(g, [](double x) { return std::cos(5 * x); });
    const Field b = Field::from_function(g, [](double x) { return std::sin(7 * x); });
    const Field expect = Field::from_function(g, [](double x) { return 0.5 * (std::sin(12 * x) + std::sin(2 * x)); });
    EXPECT_LE(max_diff(dealiased_product(a, b), expect), 1e-13);
}

TEST(Dealias, AliasedModesAreRemoved) {
    // cos(10x)^2 = (1 + cos(20x))/2; on N=32, mode 20 aliases to 12 without padding.
    const Grid g = make_grid(32, 2 * kPi);
    const Field a = Field::from_function(g, [](double x) { return std::cos(10 * x); });
    const Field aliased = pointwise_product(a, a);
    const Field clean = dealiased_product(a, a);
    const Field cos12 = Field::from_function(g, [](double x) { return std::cos(12 * x); });
    EXPECT_NEAR(inner_product(aliased, cos12) / kPi, 0.5, 1e-12);
    EXPECT_NEAR(inner_product(clean, cos12) / kPi, 0.0, 1e-12);
    EXPECT_NEAR(mean(clean), 0.5, 1e-13);
}

TEST(Concurrency, DistinctFieldsInParallel) {
    const Grid g = make_grid(128, 2 * kPi);
    std::vector<Field> in, serial, parallel;
    std::mt19937_64 rng(17);
    for (int i = 0; i < 16; ++i) in.push_back(random_field(g, rng));
    for (const Field& f : in) serial.push_back(lambda_m(derivative(f, 3), 0.5, -2.0));
    parallel.assign(in.size(), Field::zeros(g));
    std::vector<std::thread> th;
    for (int k = 0; k < 4; ++k)
        th.emplace_back([&, k] {
            for (std::size_t i = k; i < in.size(); i += 4) parallel[i] = lambda_m(derivative(in[i], 3), 0.5, -2.0);
        });
    for (auto& t : th) t.join();
    for (std::size_t i = 0; i < in.size(); ++i)
        EXPECT_EQ(std::vector<double>(serial[i].values().begin(), serial[i].values().end()),
                  std::vector<double>(parallel[i].values().begin(), parallel[i].values().end()));
}
