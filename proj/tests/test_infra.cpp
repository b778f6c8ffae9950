#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numeric>

#include "helpers.hpp"
#include "levmag/fft.hpp"
#include "levmag/fit.hpp"
#include "levmag/linalg.hpp"
#include "levmag/rng.hpp"

using namespace levmag;
using Catch::Approx;

TEST_CASE("counter rng is reproducible and order independent") {
    const auto key = rng::derive_key(42, 1);
    const double a = rng::uniform(key, 1000);
    const double b = rng::uniform(key, 5);
    CHECK(rng::uniform(key, 5) == b);
    CHECK(rng::uniform(key, 1000) == a);
    CHECK(a != b);
    CHECK(rng::derive_key(42, 1) != rng::derive_key(42, 2));
    CHECK(rng::derive_key(42, 1) != rng::derive_key(43, 1));
}

TEST_CASE("counter rng normals have unit variance") {
    const auto key = rng::derive_key(7, 9);
    std::vector<double> xs(200000);
    for (std::size_t i = 0; i < xs.size() / 2; ++i) {
        const auto [g1, g2] = rng::normal_pair(key, i);
        xs[2 * i] = g1;
        xs[2 * i + 1] = g2;
    }
    CHECK(test_helpers::mean(xs) == Approx(0.0).margin(0.01));
    CHECK(test_helpers::variance(xs) == Approx(1.0).epsilon(0.01));
}

TEST_CASE("linear solve and symmetric inverse") {
    linalg::Matrix a = {4, 1, 2, 1, 3, 0, 2, 0, 5};
    const std::vector<double> x = linalg::solve(a, {1, 2, 3});
    CHECK(4 * x[0] + 1 * x[1] + 2 * x[2] == Approx(1.0));
    CHECK(1 * x[0] + 3 * x[1] + 0 * x[2] == Approx(2.0));
    CHECK(2 * x[0] + 0 * x[1] + 5 * x[2] == Approx(3.0));

    const auto inv = linalg::sym_inverse(a, 3);
    CHECK_FALSE(inv.degenerate);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0;
            for (int k = 0; k < 3; ++k) s += a[i * 3 + k] * inv.inverse[k * 3 + j];
            CHECK(s == Approx(i == j ? 1.0 : 0.0).margin(1e-12));
        }
}

TEST_CASE("singular symmetric matrix is flagged") {
    linalg::Matrix a = {1, 1, 1, 1}; // rank 1
    const auto inv = linalg::sym_inverse(a, 2);
    CHECK(inv.degenerate);
}

TEST_CASE("fft matches a direct dft") {
    const auto key = rng::derive_key(3, 3);
    for (std::size_t n : {8u, 16u, 12u, 27u}) {
        std::vector<fft::cplx> x(n);
        for (std::size_t i = 0; i < n; ++i)
            x[i] = fft::cplx(rng::uniform(key, 2 * (i + n * 100)) - 0.5,
                             rng::uniform(key, 2 * (i + n * 100) + 1) - 0.5);
        const auto got = fft::dft(x);
        for (std::size_t k = 0; k < n; ++k) {
            fft::cplx want(0, 0);
            for (std::size_t j = 0; j < n; ++j) {
                const double ang = -2.0 * constants::pi * static_cast<double>(j * k) /
                                   static_cast<double>(n);
                want += x[j] * fft::cplx(std::cos(ang), std::sin(ang));
            }
            CHECK(std::abs(got[k] - want) < 1e-9 * (1.0 + std::abs(want)));
        }
    }
}

TEST_CASE("least squares recovers a quadratic exactly") {
    // y = 2 x^2 - 3 x + 1, noiseless -> exact recovery
    std::vector<double> xs, ys;
    for (int i = 0; i < 20; ++i) {
        const double x = -1.0 + 0.1 * i;
        xs.push_back(x);
        ys.push_back(2 * x * x - 3 * x + 1);
    }
    auto res = [&](const std::vector<double>& p, std::vector<double>& r) {
        r.resize(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i)
            r[i] = p[0] * xs[i] * xs[i] + p[1] * xs[i] + p[2] - ys[i];
    };
    const auto fit = fit::least_squares(res, {1.0, 0.0, 0.0});
    CHECK(fit.params[0] == Approx(2.0).epsilon(1e-9));
    CHECK(fit.params[1] == Approx(-3.0).epsilon(1e-9));
    CHECK(fit.params[2] == Approx(1.0).epsilon(1e-9));
    CHECK(fit.converged);
}

TEST_CASE("least squares covariance matches the known linear-model answer") {
    // weighted linear fit: covariance has the closed form (X^T W X)^-1
    std::vector<double> xs = {0, 1, 2, 3, 4, 5};
    std::vector<double> ys = {0.1, 1.9, 4.2, 5.8, 8.1, 9.9};
    const double sigma = 0.2;
    auto res = [&](const std::vector<double>& p, std::vector<double>& r) {
        r.resize(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i)
            r[i] = (p[0] * xs[i] + p[1] - ys[i]) / sigma;
    };
    const auto fit = fit::least_squares(res, {1.0, 0.0});
    double s0 = 0, s1 = 0, s2 = 0;
    for (double x : xs) {
        s0 += 1;
        s1 += x;
        s2 += x * x;
    }
    const double det = (s2 * s0 - s1 * s1) / (sigma * sigma * sigma * sigma);
    CHECK(fit.covariance[0] == Approx(s0 / (sigma * sigma) / det).epsilon(1e-6));
    CHECK(fit.covariance[3] == Approx(s2 / (sigma * sigma) / det).epsilon(1e-6));
}
