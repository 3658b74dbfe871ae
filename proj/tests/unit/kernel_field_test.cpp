#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "qipf/error.hpp"
#include "qipf/kernel_field.hpp"
#include "qipf/random.hpp"

using namespace qipf;

namespace {

std::vector<double> v(std::initializer_list<double> xs) { return xs; }

SampleSet random_set(Rng& rng, std::size_t n, std::size_t d, double spread) {
    std::vector<double> values(n * d);
    for (double& x : values) x = rng.normal(0.0, spread);
    return SampleSet(std::move(values), d);
}

}  // namespace

TEST_CASE("gaussian_kernel closed forms") {
    CHECK(gaussian_kernel(v({0}), v({0}), Bandwidth(1)) == 1.0);
    CHECK(gaussian_kernel(v({1}), v({-1}), Bandwidth(1)) == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
    CHECK(gaussian_kernel(v({1}), v({-1}), Bandwidth(1)) == doctest::Approx(0.135335).epsilon(1e-6));
    const double expect = std::exp(-(1.69 + 0.16) / 1.28);
    CHECK(gaussian_kernel(v({0.3, 0.1}), v({-1.0, 0.5}), Bandwidth(0.8)) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("gaussian_kernel rejects bad input") {
    CHECK_THROWS_AS(gaussian_kernel(v({0.3}), v({-1.0, 0.5}), Bandwidth(1)), DimensionMismatch);
    CHECK_THROWS_AS(gaussian_kernel(v({NAN}), v({0}), Bandwidth(1)), InvalidArgument);
    CHECK_THROWS_AS(Bandwidth{0.0}, InvalidArgument);
    CHECK_THROWS_AS(Bandwidth{-1.0}, InvalidArgument);
    CHECK_THROWS_AS(Bandwidth{INFINITY}, InvalidArgument);
}

TEST_CASE("SampleSet shape checks") {
    CHECK_THROWS_AS(SampleSet(std::vector<double>{}, 1), InvalidArgument);
    CHECK_THROWS_AS(SampleSet(std::vector<double>{1, 2, 3}, 2), DimensionMismatch);
    CHECK_THROWS(SampleSet(std::vector<std::vector<double>>{{1, 2}, {3}}));
    SampleSet s(std::vector<std::vector<double>>{{1, 2}, {3, 4}, {5, 6}});
    CHECK(s.size() == 3);
    CHECK(s.dim() == 2);
    CHECK(s.point(1)[1] == 4);
    CHECK(s.prefix(2).size() == 2);
}

TEST_CASE("ipf examples") {
    CHECK(ipf(SampleSet::scalars({0}), Bandwidth(1), v({0})) == 1.0);
    CHECK(ipf(SampleSet::scalars({-1, 1}), Bandwidth(1), v({0})) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(ipf(SampleSet::scalars({-1, 1}), Bandwidth(1), v({0})) == doctest::Approx(0.606531).epsilon(1e-6));

    const std::vector<double> c{-1, 0.5, 2};
    const double expect = static_cast<double>(oracle::ipf_sum(c, 1, v({0.3}), 0.8));
    CHECK(ipf(SampleSet::scalars(c), Bandwidth(0.8), v({0.3})) == doctest::Approx(expect).epsilon(1e-15));
    CHECK_THROWS_AS(ipf(SampleSet::scalars(c), Bandwidth(0.8), v({0.3, 1})), DimensionMismatch);
}

TEST_CASE("ipf_derivatives examples") {
    auto sym = ipf_derivatives(SampleSet::scalars({-1, 1}), Bandwidth(1), v({0}));
    REQUIRE(sym.gradient.size() == 1);
    CHECK(sym.gradient[0] == 0.0);
    auto peak = ipf_derivatives(SampleSet::scalars({0}), Bandwidth(1), v({0}));
    CHECK(peak.laplacian == -1.0);
    CHECK(peak.value == 1.0);
    auto peak3 = ipf_derivatives(SampleSet(v({0, 0, 0}), 3), Bandwidth(2), v({0, 0, 0}));
    CHECK(peak3.laplacian == doctest::Approx(-3.0 / 4.0));
    CHECK(peak3.gradient.size() == 3);
}

TEST_CASE("wavefunction examples") {
    CHECK(wavefunction_derivatives(SampleSet::scalars({0}), Bandwidth(1), v({0})).value == 1.0);
    auto sym = wavefunction_derivatives(SampleSet::scalars({-1, 1}), Bandwidth(1), v({0}));
    CHECK(sym.gradient[0] == 0.0);
    CHECK_FALSE(sym.far_field);
}

TEST_CASE("wavefunction matches the closed-form composition of the ipf derivatives") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        auto centers = random_set(rng, 30, 2, 1.0);
        Bandwidth sigma(rng.uniform(0.3, 2.0));
        std::vector<double> x{rng.normal(), rng.normal()};
        auto p = ipf_derivatives(centers, sigma, x);
        auto w = wavefunction_derivatives(centers, sigma, x);
        const double g2 = p.gradient[0] * p.gradient[0] + p.gradient[1] * p.gradient[1];
        CHECK(w.value == doctest::Approx(std::sqrt(p.value)).epsilon(1e-14));
        CHECK(w.gradient[0] == doctest::Approx(p.gradient[0] / (2 * std::sqrt(p.value))).epsilon(1e-13));
        const double lap = p.laplacian / (2 * std::sqrt(p.value)) - g2 / (4 * std::pow(p.value, 1.5));
        CHECK(oracle::rel_err(w.laplacian, lap, 1e-12) < 1e-10);
    }
}

TEST_CASE("far field clamps to the floor and flags the point") {
    auto w = wavefunction_derivatives(SampleSet::scalars({0}), Bandwidth(0.1), v({1e3}));
    CHECK(w.far_field);
    CHECK(w.value == doctest::Approx(std::sqrt(kDefaultIpfFloor)));
    CHECK(std::isfinite(w.laplacian));
    CHECK(w.gradient[0] == 0.0);
    auto custom = wavefunction_derivatives(SampleSet::scalars({0}), Bandwidth(1), v({10}), 1e-10);
    CHECK(custom.far_field);
    CHECK(custom.value == doctest::Approx(1e-5));
}

TEST_CASE("cip examples") {
    CHECK(cip(SampleSet::scalars({0.5}), Bandwidth(1), 0.5) == 1.0);
    CHECK(cip(SampleSet::scalars({0, 1}), Bandwidth(1), 0.5) == doctest::Approx(std::exp(-0.125)).epsilon(1e-15));
    CHECK(cip(SampleSet::scalars({0, 1}), Bandwidth(1), 0.5) == doctest::Approx(0.882497).epsilon(1e-6));
    Rng rng(3);
    std::vector<double> act(40);
    for (double& a : act) a = std::max(0.0, rng.normal());
    const double expect = static_cast<double>(oracle::ipf_sum(act, 1, v({0.7}), 0.4));
    CHECK(cip(SampleSet::scalars(act), Bandwidth(0.4), 0.7) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("information_potential examples") {
    CHECK(information_potential(SampleSet::scalars({0}), Bandwidth(1)) == 1.0);
    CHECK(information_potential(SampleSet::scalars({-1, 1}), Bandwidth(1)) ==
          doctest::Approx(0.5 + 0.5 * std::exp(-1.0)).epsilon(1e-15));
    Rng rng(5);
    auto s = random_set(rng, 50, 2, 1.5);
    const double width = std::sqrt(2.0) * 0.9;
    long double brute = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = 0; j < s.size(); ++j) {
            const double dx = s.point(i)[0] - s.point(j)[0];
            const double dy = s.point(i)[1] - s.point(j)[1];
            brute += std::exp(-(dx * dx + dy * dy) / (2 * width * width));
        }
    }
    brute /= 2500.0L;
    CHECK(information_potential(s, Bandwidth(0.9)) == doctest::Approx(static_cast<double>(brute)).epsilon(1e-13));
}

TEST_CASE("silverman_bandwidth") {
    const double sd = std::sqrt(2.0);  // unbiased std of {-1, 1}
    CHECK(silverman_bandwidth(SampleSet::scalars({-1, 1})).value() ==
          doctest::Approx(1.06 * sd * std::pow(2.0, -0.2)).epsilon(1e-15));
    CHECK_THROWS_AS(silverman_bandwidth(SampleSet::scalars({2, 2, 2})), DegenerateInput);
    CHECK_THROWS(silverman_bandwidth(SampleSet::scalars({2})));
    CHECK_THROWS(silverman_bandwidth(SampleSet(v({1, 2, 3, 4}), 2)));

    Rng rng(2024);
    std::vector<double> draws(1000);
    for (double& d : draws) d = rng.normal();
    const double h = silverman_bandwidth(SampleSet::scalars(draws)).value();
    // Sampling error of a 1000-draw std is about 2.2%; allow 4 standard errors.
    CHECK(h == doctest::Approx(1.06 * std::pow(1000.0, -0.2)).epsilon(0.09));
    CHECK(1.06 * std::pow(1000.0, -0.2) == doctest::Approx(0.2663).epsilon(1e-3));
}

TEST_CASE("permutation invariance") {
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        auto s = random_set(rng, 40, 2, 1.0);
        std::vector<std::size_t> order(s.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng.engine());
        std::vector<double> shuffled;
        for (std::size_t i : order) shuffled.insert(shuffled.end(), s.point(i).begin(), s.point(i).end());
        SampleSet p(shuffled, 2);
        Bandwidth sigma(0.7);
        std::vector<double> x{0.2, -0.4};
        CHECK(ipf(p, sigma, x) == doctest::Approx(ipf(s, sigma, x)).epsilon(1e-12));
        CHECK(information_potential(p, sigma) == doctest::Approx(information_potential(s, sigma)).epsilon(1e-12));

        std::vector<double> scalars(s.flat().begin(), s.flat().begin() + 20);
        std::vector<double> rev(scalars.rbegin(), scalars.rend());
        CHECK(cip(SampleSet::scalars(rev), sigma, 0.1) ==
              doctest::Approx(cip(SampleSet::scalars(scalars), sigma, 0.1)).epsilon(1e-12));
    }
}

TEST_CASE("translation equivariance and scale invariance") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t d = 1 + trial % 3;
        auto s = random_set(rng, 25, d, 1.0);
        std::vector<double> x(d);
        for (double& xi : x) xi = rng.normal();
        Bandwidth sigma(rng.uniform(0.2, 2.0));
        const double base = ipf(s, sigma, x);

        std::vector<double> shift(d);
        for (double& c : shift) c = rng.uniform(-5, 5);
        std::vector<double> moved(s.flat().begin(), s.flat().end());
        for (std::size_t i = 0; i < moved.size(); ++i) moved[i] += shift[i % d];
        std::vector<double> xm = x;
        for (std::size_t j = 0; j < d; ++j) xm[j] += shift[j];
        CHECK(ipf(SampleSet(moved, d), sigma, xm) == doctest::Approx(base).epsilon(1e-12));

        const double c = rng.uniform(0.1, 10);
        std::vector<double> scaled(s.flat().begin(), s.flat().end());
        for (double& e : scaled) e *= c;
        std::vector<double> xs = x;
        for (double& e : xs) e *= c;
        CHECK(ipf(SampleSet(scaled, d), Bandwidth(c * sigma.value()), xs) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("bounds: 0 < ipf <= 1 with equality only at full coincidence") {
    Rng rng(29);
    for (int trial = 0; trial < 50; ++trial) {
        auto s = random_set(rng, 10, 2, 2.0);
        std::vector<double> x{rng.normal(), rng.normal()};
        const double p = ipf(s, Bandwidth(0.5), x);
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }
    CHECK(ipf(SampleSet(v({1, 2, 1, 2}), 2), Bandwidth(0.5), v({1, 2})) == 1.0);
}

TEST_CASE("analytic derivatives agree with finite differences in every dimension") {
    Rng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t d = 1 + trial % 3;
        auto s = random_set(rng, 1 + rng.index(60), d, 1.0);
        const double sig = rng.uniform(0.3, 1.5);
        Bandwidth sigma(sig);
        std::vector<double> x(d);
        for (double& xi : x) xi = rng.normal(0.0, 1.2);

        auto analytic = ipf_derivatives(s, sigma, x);
        double fd_lap = 0;
        for (std::size_t j = 0; j < d; ++j) {
            auto f = [&](double t) {
                auto y = x;
                y[j] = t;
                return ipf(s, sigma, y);
            };
            const double scale1 = analytic.value / sig;
            CHECK(oracle::rel_err(analytic.gradient[j], oracle::central_diff(f, x[j]), scale1) <= 1e-5);
            fd_lap += oracle::central_second_diff(f, x[j]);
        }
        CHECK(oracle::rel_err(analytic.laplacian, fd_lap, analytic.value / (sig * sig)) <= 1e-5);
    }
}
