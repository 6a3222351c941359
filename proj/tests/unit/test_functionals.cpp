#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "lab/error.hpp"
#include "lab/functionals.hpp"
#include "lab/parallel.hpp"

using namespace lab;
using std::numbers::pi;

namespace {

Trajectory constant_path(double x0, double T, double dt) {
    Trajectory tr;
    tr.dim = 1;
    tr.h = dt;
    tr.T = T;
    const std::size_t n = std::size_t(std::llround(T / dt)) + 1;
    tr.points.assign(n, x0);
    return tr;
}

std::vector<Trajectory> stationary_runs(const ModelSpace& sp, double T, std::size_t R, std::uint64_t seed,
                                        std::size_t stride) {
    SimulationParams p;
    p.T = T;
    p.stride = stride;
    std::vector<Trajectory> v(R);
    parallel_for(R, 1, [&](std::size_t r) { v[r] = simulate(sp, p, {seed, std::uint32_t(r)}); });
    return v;
}

struct MeanSe {
    double mean, se;
};
MeanSe mean_se(const std::vector<double>& v) {
    double s = 0, s2 = 0;
    for (double x : v) {
        s += x;
        s2 += x * x;
    }
    const double n = double(v.size());
    const double m = s / n;
    return {m, std::sqrt((s2 / n - m * m) / (n - 1))};
}

}  // namespace

TEST_CASE("psi on deterministic paths") {
    const auto basis = SpectralBasis::build(ModelSpace::torus(1), 8);
    const auto tr = constant_path(0.3, 4.0, 0.01);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(psi(tr, basis, i) == doctest::Approx(2.0 * basis.eval(i, tr.point(0))).epsilon(1e-12));
        CHECK(psi_all(tr, basis)[i] == doctest::Approx(2.0 * basis.eval(i, tr.point(0))).epsilon(1e-12));
    }
    // phi_1 = sqrt2 cos(2 pi x) along x(t) = t/T sweeping one period: odd about T/2
    Trajectory sweep = constant_path(0.0, 1.0, 1e-3);
    for (std::size_t j = 0; j < sweep.count(); ++j) sweep.points[j] = std::fmod(0.25 + double(j) * 1e-3, 1.0);
    CHECK(std::abs(psi(sweep, basis, 0)) < 1e-12);
    // interval modes through the same paths
    const auto ib = SpectralBasis::build(ModelSpace::interval(), 6);
    const auto ic = constant_path(0.7, 9.0, 0.01);
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(psi_all(ic, ib)[i] == doctest::Approx(3.0 * ib.eval(i, ic.point(0))).epsilon(1e-12));
    CHECK_THROWS_AS(psi(tr, basis, 8), InputError);
}

TEST_CASE("psi variance and the batch-means long-run variance oracle") {
    const auto sp = ModelSpace::torus(1);
    const auto basis = SpectralBasis::build(sp, 2);
    const auto runs = stationary_runs(sp, 100, 800, 31, 10);
    std::vector<double> p(runs.size());
    for (std::size_t r = 0; r < runs.size(); ++r) p[r] = psi(runs[r], basis, 0);
    double s2 = 0;
    for (double v : p) s2 += v * v;
    const double var = s2 / double(p.size());
    const double se = var * std::sqrt(2.0 / double(p.size()));
    CHECK(std::abs(var - 2 / basis.eigenvalue(0)) < 3 * se);
    CHECK(2 / basis.eigenvalue(0) == doctest::Approx(0.050660).epsilon(1e-4));

    // batch means on one long path: asymptotic variance of sqrt(T) * mean
    SimulationParams lp;
    lp.T = 20000;
    lp.stride = 10;
    const std::size_t batch = 10000;  // 100 time units
    std::vector<double> means;
    double acc = 0;
    std::size_t cnt = 0;
    simulate_visit(sp, lp, {32, 0}, [&](std::size_t j, const double* x) {
        if (j == 0) return;
        acc += std::sqrt(2.0) * std::cos(2 * pi * x[0]);
        if (++cnt == batch) {
            means.push_back(acc / double(batch));
            acc = 0;
            cnt = 0;
        }
    });
    const auto ms = mean_se(means);
    const double bm = 100.0 * ms.se * ms.se * double(means.size());
    MESSAGE("batch-means 2V = " << bm << ", replica variance " << var);
    CHECK(bm == doctest::Approx(2 / basis.eigenvalue(0)).epsilon(0.25));
}

TEST_CASE("Xi and its smoothed variant") {
    const auto basis = SpectralBasis::build(ModelSpace::torus(1), 8);
    const double l1 = basis.eigenvalue(0);
    std::vector<double> one(8, 0.0);
    one[0] = 1.0;
    CHECK(xi_from_psi(one, basis) == doctest::Approx(1 / l1));
    CHECK(xi_from_psi(std::vector<double>(8, 0.0), basis) == 0.0);
    CHECK(xi_from_psi({}, basis) == 0.0);
    CHECK(xi_smoothed(one, basis, 0.0) == xi_from_psi(one, basis));
    CHECK(xi_smoothed(one, basis, 1 / (2 * l1)) == doctest::Approx(std::exp(-1.0) / l1));
    CHECK(xi_smoothed(one, basis, 1e3) == 0.0);
    CHECK_THROWS_AS(xi_smoothed(one, basis, -1.0), InputError);
    RngStream rs(8, 0, RngTag::test);
    for (int it = 0; it < 50; ++it) {
        std::vector<double> v(8);
        for (auto& e : v) e = rs.normal();
        double prev = xi_from_psi(v, basis);
        for (double eps : {1e-4, 1e-3, 1e-2, 0.1}) {
            const double cur = xi_smoothed(v, basis, eps);
            REQUIRE(cur <= prev);
            prev = cur;
        }
    }
}

TEST_CASE("stationary means of Xi and the shifted variants") {
    const auto sp = ModelSpace::torus(1);
    const auto basis = SpectralBasis::build(sp, 64);
    const auto runs = stationary_runs(sp, 201, 500, 41, 10);
    std::vector<double> x, xt, xb;
    for (const auto& tr : runs) {
        const auto st = xi(tr, basis);
        (void)st;
        xt.push_back(xi_shifted(tr, basis, 1.0, ShiftMode::tilde, 200.0));
        xb.push_back(xi_shifted(tr, basis, 1.0, ShiftMode::bar, 201.0));
        x.push_back(xi_shifted(tr, basis, 0.0, ShiftMode::tilde, 200.0));
        CHECK(xi_shifted(tr, basis, 0.0, ShiftMode::bar) == doctest::Approx(st.xi.value).epsilon(1e-12));
        CHECK(st.xi.tail_bound >= 0);
    }
    const auto m = mean_se(x), mt = mean_se(xt);
    MESSAGE("E Xi(200) = " << m.mean << " +- " << m.se << ", E Xi~_1 = " << mt.mean);
    CHECK(std::abs(m.mean / (1.0 / 360) - 1) < 0.1);
    CHECK(std::abs(mt.mean / (1.0 / 360) - 1) < 0.1);
    CHECK(std::abs(mean_se(xb).mean / (1.0 / 360) - 1) < 0.1);

    const auto c = constant_path(0.2, 10.0, 0.01);
    double expect = 0;
    for (std::size_t i = 0; i < basis.size(); ++i) expect += 7.0 * std::pow(basis.eval(i, c.point(0)), 2) / basis.eigenvalue(i);
    CHECK(xi_shifted(c, basis, 3.0, ShiftMode::bar) == doctest::Approx(expect).epsilon(1e-10));
    CHECK_THROWS_AS(xi_shifted(c, basis, 3.0, ShiftMode::tilde, 8.0), InputError);
    CHECK_THROWS_AS(xi_shifted(c, basis, 10.0, ShiftMode::bar), InputError);
}

TEST_CASE("smoothed density") {
    const auto basis = SpectralBasis::build(ModelSpace::torus(1), 16);
    const Grid g{1, 256, true};
    const auto flat = smoothed_density(std::vector<double>(16, 0.0), 50.0, basis, 0.01, g);
    for (double f : flat.f) CHECK(f == 1.0);
    std::vector<double> one(16, 0.0);
    one[0] = 0.7;
    const auto sd = smoothed_density(one, 50.0, basis, 0.02, g);
    double x;
    for (std::size_t c = 0; c < g.size(); c += 17) {
        g.center(c, &x);
        CHECK(sd.f[c] == doctest::Approx(1 + 0.7 / std::sqrt(50.0) * std::exp(-0.02 * basis.eigenvalue(0)) * basis.eval(0, &x)));
    }
    CHECK(std::abs(sd.quadrature_mass - 1) < 1e-6);
    const auto big = smoothed_density(one, 50.0, basis, 10.0, g);
    for (double f : big.f) CHECK(std::abs(f - 1) < 1e-12);
    CHECK_THROWS_AS(smoothed_density(one, 50.0, basis, 0.0, g), InputError);
    // strongly concentrated coefficients go negative and get floored
    std::vector<double> wild(16, 40.0);
    const auto neg = smoothed_density(wild, 1.0, basis, 1e-4, g);
    CHECK(neg.floored_mass > 0);
    neg.measure().validate(1e-12);
    // interval with potential: cell masses follow mu
    const auto ib = SpectralBasis::build(ModelSpace::interval({PotentialKind::cosine, 1.0}), 8);
    const auto isd = smoothed_density(std::vector<double>(8, 0.3), 20.0, ib, 0.01, Grid{1, 512, false});
    CHECK(std::abs(isd.quadrature_mass - 1) < 1e-6);
}

TEST_CASE("deviation parameters") {
    const auto basis = SpectralBasis::build(ModelSpace::torus(1), 4);
    const auto dp = deviation_params(basis, {1.0}, 1.0);
    CHECK(dp.sigma_sq == doctest::Approx(0.0506606).epsilon(1e-5));
    CHECK(dp.frak_m == doctest::Approx(0.159155).epsilon(1e-5));
    const auto dp2 = deviation_params(basis, {2.0}, 1.0);
    CHECK(dp2.sigma_sq == doctest::Approx(4 * dp.sigma_sq));
    CHECK(dp2.frak_m == doctest::Approx(2 * dp.frak_m));
    CHECK_THROWS_AS(deviation_params(basis, {}, 1.0), InputError);

    const auto b2 = SpectralBasis::build(ModelSpace::torus(2), 12);
    const std::vector<double> c{0.5, -1.0, 0.25, 0, 0.3};
    std::vector<double> c3 = c;
    for (auto& v : c3) v *= -3;
    for (double d : {2.0, 3.0}) {
        const auto a = deviation_params(b2, c, d, 64), b = deviation_params(b2, c3, d, 64);
        CHECK(b.sigma_sq == doctest::Approx(9 * a.sigma_sq));
        CHECK(b.frak_m == doctest::Approx(3 * a.frak_m));
        CHECK(a.frak_m > 0);
    }
    // the d = 2 rule for a single torus mode: |grad L^{-1} phi| = (2pi|k|/lambda) sqrt2 |sin|
    const auto single = deviation_params(b2, {1.0}, 2.0, 256);
    CHECK(single.rule == DimensionRule::two);
    CHECK(single.p_star > 2.0);
}

TEST_CASE("long-run variance") {
    const auto basis = SpectralBasis::build(ModelSpace::torus(1), 4);
    CHECK(long_run_variance(basis, {1.0}, {}) == doctest::Approx(0.0253303).epsilon(1e-5));
    const DriftSpec z{{1.0}};
    const double a = 4 * pi * pi, w = 2 * pi;
    CHECK(long_run_variance(basis, {1.0}, z) == doctest::Approx(a / (a * a + w * w)).epsilon(1e-14));
    CHECK(long_run_variance(basis, {1.0}, z) == doctest::Approx(0.024704).epsilon(1e-4));
    CHECK(long_run_variance(basis, {0.0, 1.0}, z) == doctest::Approx(0.024704).epsilon(1e-4));
    CHECK(long_run_variance_of_drift_derivative(basis, 0, z) == doctest::Approx(w * w * a / (a * a + w * w)));
    CHECK(long_run_variance_of_drift_derivative(basis, 0, z) == doctest::Approx(0.975296).epsilon(1e-6));
    // identity 2V(phi) = 2/lambda - 2 V(Z phi)/lambda^2
    CHECK(2 * long_run_variance(basis, {1.0}, z) ==
          doctest::Approx(2 / a - 2 * long_run_variance_of_drift_derivative(basis, 0, z) / (a * a)).epsilon(1e-13));
}

TEST_CASE("sampling the limit law") {
    for (auto [sp, target] : {std::pair{ModelSpace::torus(1), 1.0 / 360}, std::pair{ModelSpace::interval(), 1.0 / 45}}) {
        const auto basis = SpectralBasis::build(sp, 512);
        CHECK(xi_infinity_mean(basis) == doctest::Approx(target).epsilon(1e-8));
        RngStream rs(5, 0, RngTag::xi_infinity);
        std::vector<double> v(100000);
        for (auto& e : v) e = sample_xi_infinity(basis, rs);
        const auto m = mean_se(v);
        CHECK(std::abs(m.mean - target) < 3 * m.se);
    }
}

TEST_CASE("log mean") {
    CHECK(log_mean(1.0) == 1.0);
    CHECK(log_mean(0.0) == 0.0);
    CHECK(log_mean(-1.0) == 0.0);
    CHECK(log_mean(std::exp(1.0)) == doctest::Approx(std::exp(1.0) - 1));
    CHECK(log_mean(1 + 1e-9) == doctest::Approx(1 + 5e-10).epsilon(1e-15));
    CHECK(log_mean(1 + 1e-6) == doctest::Approx(1 + 5e-7 - 1e-12 / 12).epsilon(1e-14));
}
