#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "lab/error.hpp"
#include "lab/parallel.hpp"
#include "lab/sde.hpp"

using namespace lab;

TEST_CASE("single Euler steps") {
    const auto t1 = ModelSpace::torus(1);
    double x = 0, xi = 0;
    em_step(t1, 1e-3, &x, &xi);
    CHECK(x == 0.0);

    const auto iv = ModelSpace::interval();
    double y = 0.999;
    const double h = 1e-3;
    const double forced = 0.002 / std::sqrt(2 * h);
    em_step(iv, h, &y, &forced);
    CHECK(y == doctest::Approx(0.999).epsilon(1e-12));

    const auto t2 = ModelSpace::torus(2, {{1.0, 0.0}});
    double p[2] = {0, 0};
    const double z[2] = {0, 0};
    em_step(t2, 1e-3, p, z);
    CHECK(p[0] == doctest::Approx(0.001));
    CHECK(p[1] == 0.0);
}

TEST_CASE("simulate validates and honours the length arithmetic") {
    const auto t1 = ModelSpace::torus(1);
    SimulationParams p;
    p.h = 0;
    CHECK_THROWS_AS(simulate(t1, p, {1, 0}), InputError);
    p.h = 1e-3;
    p.T = 1e-4;
    CHECK_THROWS_AS(simulate(t1, p, {1, 0}), InputError);
    p.h = 0.02;
    p.T = 1;
    CHECK_THROWS_AS(simulate(t1, p, {1, 0}), InputError);
    p.h = 1e-3;
    p.T = 1.0;
    p.stride = 7;
    const auto tr = simulate(t1, p, {1, 0});
    CHECK(tr.count() == 1000 / 7 + 1);
    p.stride = 1;
    p.T = 0.3;
    CHECK(simulate(t1, p, {1, 0}).count() == 301);
    p.init = InitialLaw::point({0.1, 0.2});
    CHECK_THROWS_AS(simulate(t1, p, {1, 0}), InputError);
}

TEST_CASE("stored points are canonical and paths are reproducible") {
    for (const auto& sp : {ModelSpace::torus(2, {{0.7, -0.3}}), ModelSpace::interval({PotentialKind::cosine, 2.0}),
                           ModelSpace::interval()}) {
        SimulationParams p;
        p.T = 5;
        const auto a = simulate(sp, p, {42, 3});
        const auto b = simulate(sp, p, {42, 3});
        const auto c = simulate(sp, p, {42, 4});
        CHECK(a.points == b.points);
        CHECK(a.points != c.points);
        for (double v : a.points) {
            REQUIRE(v >= 0);
            if (sp.is_torus())
                REQUIRE(v < 1);
            else
                REQUIRE(v <= 1);
        }
    }
}

TEST_CASE("worker count does not change replicas") {
    const auto sp = ModelSpace::torus(1, {{1.0}});
    SimulationParams p;
    p.T = 2;
    std::vector<std::vector<double>> serial(8), threaded(8);
    parallel_for(8, 1, [&](std::size_t r) { serial[r] = simulate(sp, p, {9, std::uint32_t(r)}).points; });
    parallel_for(8, 3, [&](std::size_t r) { threaded[r] = simulate(sp, p, {9, std::uint32_t(r)}).points; });
    CHECK(serial == threaded);
}

TEST_CASE("substep coupling shares the Brownian path across step sizes") {
    const auto sp = ModelSpace::torus(1, {{0.4}});
    SimulationParams coarse;
    coarse.h = 2e-3;
    coarse.T = 3;
    coarse.substeps = 2;
    SimulationParams fine = coarse;
    fine.h = 1e-3;
    fine.substeps = 1;
    fine.stride = 2;
    const auto a = simulate(sp, coarse, {5, 1});
    const auto b = simulate(sp, fine, {5, 1});
    REQUIRE(a.count() == b.count());
    double worst = 0;
    for (std::size_t j = 0; j < a.count(); ++j) {
        const double d = std::abs(a.points[j] - b.points[j]);
        worst = std::max(worst, std::min(d, 1 - d));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("stationarity reports") {
    const auto run = [](const ModelSpace& sp, std::size_t reps, double T) {
        SimulationParams p;
        p.T = T;
        p.stride = 10;
        std::vector<Trajectory> v(reps);
        parallel_for(reps, 1, [&](std::size_t r) { v[r] = simulate(sp, p, {77, std::uint32_t(r)}); });
        return v;
    };
    for (const auto& sp : {ModelSpace::torus(1), ModelSpace::interval(), ModelSpace::torus(1, {{1.0}})}) {
        const auto basis = SpectralBasis::build(sp, 4);
        const auto rows = stationarity_report(run(sp, 100, 50), basis, 4);
        for (const auto& r : rows) {
            CHECK_FALSE(r.flagged);
            CHECK(r.stderr_ > 0);
        }
    }
    // long-run histogram oracle for the drifting torus: 20 bins, chi-square
    const auto sp = ModelSpace::torus(1, {{1.0}});
    SimulationParams p;
    p.T = 2000;
    p.stride = 100;
    const auto tr = simulate(sp, p, {3, 0});
    std::vector<double> bins(20, 0);
    for (std::size_t j = 0; j < tr.count(); ++j) bins[std::min<std::size_t>(19, std::size_t(tr.points[j] * 20))] += 1;
    double chi2 = 0;
    const double e = double(tr.count()) / 20;
    for (double b : bins) chi2 += (b - e) * (b - e) / e;
    CHECK(chi2 < 43.8);  // 99.9% quantile, 19 dof
}

TEST_CASE("reflection preserves the uniform law on the interval") {
    const auto sp = ModelSpace::interval();
    SimulationParams p;
    p.T = 1.0;
    p.h = 1e-3;
    const std::size_t R = 4000;
    std::vector<double> last(R);
    parallel_for(R, 1, [&](std::size_t r) {
        simulate_visit(sp, p, {11, std::uint32_t(r)}, [&](std::size_t, const double* x) { last[r] = x[0]; });
    });
    std::sort(last.begin(), last.end());
    double ks = 0;
    for (std::size_t i = 0; i < R; ++i)
        ks = std::max({ks, std::abs(double(i + 1) / double(R) - last[i]), std::abs(last[i] - double(i) / double(R))});
    CHECK(ks < 1.63 / std::sqrt(double(R)));
}

TEST_CASE("weak error of the scheme against the heat semigroup") {
    // E[phi_1(X_t) | X_0 = x] = e^{-lambda_1 t} phi_1(x) for Brownian motion on
    // the torus; the scheme is exact here, so both step sizes agree with the
    // semigroup to Monte Carlo accuracy.
    const auto sp = ModelSpace::torus(1);
    const double x0 = 0.1, t = 0.1, lam = 4 * std::numbers::pi * std::numbers::pi;
    const double exact = std::exp(-lam * t) * std::sqrt(2.0) * std::cos(2 * std::numbers::pi * x0);
    double err[2];
    for (int level = 0; level < 2; ++level) {
        SimulationParams p;
        p.h = level == 0 ? 1e-2 : 5e-3;
        p.T = t;
        p.init = InitialLaw::point({x0});
        const std::size_t R = 100000;
        double s = 0, s2 = 0;
        for (std::size_t r = 0; r < R; ++r) {
            double last = 0;
            simulate_visit(sp, p, {12, std::uint32_t(r)}, [&](std::size_t, const double* x) { last = x[0]; });
            const double v = std::sqrt(2.0) * std::cos(2 * std::numbers::pi * last);
            s += v;
            s2 += v * v;
        }
        const double mean = s / double(R);
        const double se = std::sqrt((s2 / double(R) - mean * mean) / double(R));
        err[level] = mean - exact;
        CHECK(std::abs(err[level]) < 4 * se);
    }
    MESSAGE("weak errors " << err[0] << " " << err[1]);
}

TEST_CASE("trajectory dump round trip") {
    const auto sp = ModelSpace::torus(3);
    SimulationParams p;
    p.T = 0.5;
    const auto tr = simulate(sp, p, {1, 2});
    const std::string path = "traj_roundtrip.bin";
    write_trajectory(path, tr);
    const auto back = read_trajectory(path);
    CHECK(back.dim == 3);
    CHECK(back.points == tr.points);
    std::FILE* f = std::fopen(path.c_str(), "rb");
    std::fseek(f, 0, SEEK_END);
    CHECK(std::ftell(f) == long(32 + 8 * tr.points.size()));
    std::fclose(f);
    f = std::fopen(path.c_str(), "r+b");
    std::fputc('X', f);
    std::fclose(f);
    CHECK_THROWS_AS(read_trajectory(path), InputError);
    std::remove(path.c_str());
}
