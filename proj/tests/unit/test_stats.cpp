#include <doctest.h>

#include <cmath>
#include <vector>

#include "lab/error.hpp"
#include "lab/rng.hpp"
#include "lab/stats.hpp"

using namespace lab;

TEST_CASE("fit_loglog recovers exact power laws") {
    std::vector<double> T{32, 64, 128, 256, 512, 1024}, v(T.size()), c(T.size(), 3.5);
    for (std::size_t i = 0; i < T.size(); ++i) v[i] = 1.0 / T[i];
    const auto f = fit_loglog(T, v);
    CHECK(std::abs(f.slope + 1.0) < 1e-12);
    CHECK(std::abs(f.intercept) < 1e-11);
    CHECK(std::abs(fit_loglog(T, c).slope) < 1e-14);
}

TEST_CASE("fit_loglog with 1% noise on T^-1/2") {
    RngStream rng(11, 0, RngTag::test);
    std::vector<double> T, v;
    for (int k = 0; k < 8; ++k) {
        T.push_back(32.0 * std::pow(2.0, k));
        v.push_back(std::pow(T.back(), -0.5) * (1 + 0.01 * rng.normal()));
    }
    const auto f = fit_loglog(T, v);
    CHECK(std::abs(f.slope + 0.5) < 0.05);
    CHECK(f.slope_se > 0);
    CHECK(f.slope_se < 0.01);
}

TEST_CASE("fit_loglog input checks") {
    CHECK_THROWS_AS(fit_loglog({1, 2}, {1, 2}), InputError);
    CHECK_THROWS_AS(fit_loglog({1, 2, 3}, {1, 0, 2}), InputError);
    CHECK_THROWS_AS(fit_loglog({1, 2, 3}, {1, -1, 2}), InputError);
}

TEST_CASE("weighted least squares") {
    // Collinear points: any positive weights give the same line.
    std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
    const auto a = wls(x, y, {});
    const auto b = wls(x, y, {1, 10, 0.1, 5});
    CHECK(a.slope == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(b.slope == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(b.intercept == doctest::Approx(1.0).epsilon(1e-14));
    // A heavy weight pulls the line through the weighted point.
    CHECK(std::abs(wls({0, 1, 2}, {0, 1, 0}, {}).slope) < 1e-15);
    CHECK(wls({0, 1, 2}, {0, 1, 0}, {1, 1, 100}).slope < -0.1);
}

TEST_CASE("pairwise sum and summary") {
    std::vector<double> v(1000, 0.1);
    CHECK(std::abs(pairwise_sum(v.data(), v.size()) - 100.0) < 1e-12);
    const auto s = summarize({1, 2, 3, 4});
    CHECK(s.mean == 2.5);
    CHECK(s.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(s.stderr_ == doctest::Approx(std::sqrt(5.0 / 3.0) / 2));
    CHECK_THROWS_AS(mean({}), InputError);
}

TEST_CASE("KS statistic on known samples") {
    CHECK(ks_statistic({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(ks_statistic({1, 2, 3}, {4, 5, 6}) == 1.0);
    CHECK(ks_statistic({1, 2, 3}, {2, 3, 4}) == doctest::Approx(1.0 / 3.0));
    CHECK(ks_statistic({1, 2}, {1.5}) == doctest::Approx(0.5));
    // Same law, large samples: sup gap shrinks like n^{-1/2}.
    RngStream a(3, 0, RngTag::test), b(3, 1, RngTag::test);
    std::vector<double> x(20000), y(20000);
    for (auto& v : x) v = a.normal();
    for (auto& v : y) v = b.normal();
    CHECK(ks_statistic(x, y) < 0.02);
    for (auto& v : y) v += 0.5;
    CHECK(ks_statistic(x, y) > 0.15);
}

TEST_CASE("bootstrap of the mean matches the normal theory standard error") {
    RngStream rng(5, 0, RngTag::test);
    std::vector<double> x(400);
    for (auto& v : x) v = 2.0 + rng.normal();
    const auto s = summarize(x);
    const auto iv = bootstrap_mean(x, 2000, 9);
    CHECK(iv.estimate == doctest::Approx(s.mean).epsilon(1e-12));
    CHECK(iv.lo < iv.estimate);
    CHECK(iv.hi > iv.estimate);
    CHECK(iv.se == doctest::Approx(s.stderr_).epsilon(0.1));
    CHECK((iv.hi - iv.lo) == doctest::Approx(2 * 1.96 * s.stderr_).epsilon(0.15));
    const auto again = bootstrap_mean(x, 2000, 9);
    CHECK(again.lo == iv.lo);
    CHECK(again.hi == iv.hi);
    const auto other = bootstrap_mean(x, 2000, 9, 1);
    CHECK(other.lo != iv.lo);
    CHECK_THROWS_AS(bootstrap_mean({1.0}, 100, 1), InputError);
}

TEST_CASE("batch means and autocovariance on an AR(1) series") {
    // x_{t+1} = a x_t + e_t: Var = 1/(1-a^2), c(k) = a^k Var, lim n Var(mean) = 1/(1-a)^2.
    const double a = 0.6;
    RngStream rng(21, 0, RngTag::test);
    std::vector<std::vector<double>> series(20, std::vector<double>(20000));
    for (auto& s : series) {
        double x = rng.normal() / std::sqrt(1 - a * a);
        for (auto& v : s) {
            v = x;
            x = a * x + rng.normal();
        }
    }
    const auto c = autocovariance(series, 5);
    const double var = 1 / (1 - a * a);
    for (std::size_t k = 0; k <= 5; ++k) CHECK(c[k] == doctest::Approx(std::pow(a, double(k)) * var).epsilon(0.03));
    std::vector<double> bm;
    for (const auto& s : series) bm.push_back(batch_means_variance(s, 50));
    CHECK(mean(bm) == doctest::Approx(1 / ((1 - a) * (1 - a))).epsilon(0.1));
    CHECK_THROWS_AS(autocovariance(series, 20000), InputError);
    CHECK_THROWS_AS(batch_means_variance({1, 2, 3}, 2), InputError);
}

TEST_CASE("pearson and binomial standard error") {
    CHECK(pearson({1, 2, 3, 4}, {2, 4, 6, 8}) == doctest::Approx(1.0));
    CHECK(pearson({1, 2, 3, 4}, {8, 6, 4, 2}) == doctest::Approx(-1.0));
    CHECK(binomial_se(0.5, 100) == doctest::Approx(0.05));
    CHECK(binomial_se(0.0, 100) == 0.0);
}
