#include <doctest.h>

#include <cmath>
#include <vector>

#include "lab/error.hpp"
#include "lab/experiments.hpp"
#include "lab/functionals.hpp"

using namespace lab;

TEST_CASE("gamma_rate examples") {
    CHECK(gamma_rate(1, 100) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(gamma_rate(3, 100) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(gamma_rate(4, std::exp(2.0)) == doctest::Approx(std::sqrt(2.0) / std::exp(1.0)).epsilon(1e-15));
    CHECK(gamma_rate(4, std::exp(2.0)) == doctest::Approx(0.520260).epsilon(1e-6));
    CHECK(gamma_rate(6, 64) == doctest::Approx(0.353553).epsilon(1e-6));
    CHECK(gamma_rate(5, 1000) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK_THROWS_AS(gamma_rate(1, 1.5), InputError);
}

TEST_CASE("admissible exponent ranges") {
    const auto i3 = admissible_p(3);
    CHECK(i3.lo == 1.0);
    CHECK(i3.hi == 6.0);
    CHECK(i3.contains(6.0));
    CHECK_FALSE(i3.contains(6.01));
    CHECK(admissible_p(5).hi == 7.5);
    CHECK(std::isinf(admissible_p(2).hi));
    CHECK(admissible_p(4).hi == 4.0);
    const auto j = admissible_q_limit(3.5);
    CHECK(j.hi == doctest::Approx(1.5));
    CHECK(j.contains(1.49));
    CHECK_FALSE(j.contains(1.5));
    CHECK(std::isinf(admissible_q_limit(3).hi));
}

TEST_CASE("config validation") {
    ExperimentConfig c;
    CHECK_NOTHROW(c.validate());
    auto bad = c;
    bad.T_list = {64, 32};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.T_list = {32, 32};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.replicas = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.zeta = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    // the smoothing range only binds where Xi_eps is computed
    bad = c;
    bad.dim = 4;
    CHECK_NOTHROW(bad.validate());
    bad.dim = 3;
    bad.zeta = 2.0;
    bad.T_list = {4};
    CHECK_THROWS_AS(run_limit_experiment(bad), ConfigError);
    bad = c;
    bad.space = SpaceKind::interval;
    bad.drift = {1.0};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.init = InitialLaw::point({0.1, 0.2});
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.modes = {c.basis_size()};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.dim = 2;
    bad.grid_m = 100;
    bad.solver = SolverChoice::exact;
    CHECK_THROWS_AS(run_rate_experiment(bad), ConfigError);
}

TEST_CASE("csv output is locale free and round trips") {
    Table t;
    t.add(32, 0, "W_p2", 0.1);
    t.add(1024, -1, "slope", -1.0 / 3.0);
    const auto s = t.csv();
    CHECK(s == "T,replicate,statistic,value\n32,0,W_p2,0.1\n1024,-1,slope,-0.3333333333333333\n");
    for (double v : {0.1, 1e-300, 12345.678, -2.5e17, 1.0 / 3.0}) CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("bernstein bound and minimal alpha") {
    const double T = 50, s2 = 0.05, m = 0.16;
    CHECK(bernstein_bound(0.0, T, s2, m, 10) == 2.0);
    CHECK(bernstein_bound(1e-9, T, s2, m, 10) == doctest::Approx(2.0));
    // The bound grows with alpha, so alpha-hat makes every target tight or slack.
    std::vector<double> xi{0.02, 0.05, 0.08, 0.12}, tgt{1.5, 0.9, 0.5, 0.2};
    const double a = minimal_alpha(xi, tgt, T, s2, m);
    CHECK(a > 0);
    bool tight = false;
    for (std::size_t k = 0; k < xi.size(); ++k) {
        const double b = bernstein_bound(xi[k], T, s2, m, a);
        CHECK(b >= tgt[k] * (1 - 1e-12));
        tight = tight || std::abs(b - tgt[k]) < 1e-9;
        CHECK(bernstein_bound(xi[k], T, s2, m, 0.99 * a) <= bernstein_bound(xi[k], T, s2, m, a));
    }
    CHECK(tight);
    // Rescaling g by c scales sigma^2 by c^2, m by c and xi by c.
    std::vector<double> xi2;
    for (double x : xi) xi2.push_back(2 * x);
    CHECK(minimal_alpha(xi2, tgt, T, 4 * s2, 2 * m) == doctest::Approx(a).epsilon(1e-12));
    CHECK(minimal_alpha(xi, {0, 0, 0, 0}, T, s2, m) == 0.0);
    CHECK(std::isinf(minimal_alpha({0.1}, {2.0}, T, s2, m)));
}

TEST_CASE("gaussian absolute moments") {
    const double V = 0.0253;
    CHECK(gaussian_abs_moment(V, 2) == doctest::Approx(2 * V).epsilon(1e-14));
    CHECK(gaussian_abs_moment(V, 1) == doctest::Approx(std::sqrt(2 * V) * std::sqrt(2 / M_PI)).epsilon(1e-14));
    CHECK(gaussian_abs_moment(V, 4) == doctest::Approx(3 * 4 * V * V).epsilon(1e-14));
}

TEST_CASE("rate experiment: determinism, threads and the degenerate T list") {
    ExperimentConfig c;
    c.T_list = {4, 8, 16};
    c.replicas = 6;
    c.bootstrap = 50;
    c.p_list = {1.0, 2.0};
    c.threads = 1;
    const auto a = run_rate_experiment(c);
    c.threads = 3;
    const auto b = run_rate_experiment(c);
    CHECK(a.table.csv() == b.table.csv());
    REQUIRE(a.results.size() == 2);
    for (const auto& r : a.results) {
        CHECK(r.fitted);
        CHECK(r.slope.lo <= r.slope.hi);
        CHECK(r.reference_slope == doctest::Approx(-0.5).epsilon(1e-12));
        for (const auto& p : r.points) {
            CHECK(p.estimate.estimate > 0);
            CHECK(p.estimate.lo <= p.estimate.hi);
        }
    }
    // W_1 <= W_2 replica by replica carries over to the estimates.
    for (std::size_t t = 0; t < 3; ++t)
        CHECK(a.results[0].points[t].estimate.estimate <= a.results[1].points[t].estimate.estimate * (1 + 1e-12));

    c.T_list = {16};
    const auto one = run_rate_experiment(c);
    CHECK_FALSE(one.results[0].fitted);
    CHECK(one.results[0].points.size() == 1);
    CHECK(one.results[0].points[0].estimate.estimate == doctest::Approx(a.results[0].points[2].estimate.estimate).epsilon(0.5));
}

TEST_CASE("rate experiment recovers the d = 1 exponent") {
    ExperimentConfig c;
    c.T_list = {32, 64, 128, 256};
    c.replicas = 48;
    c.bootstrap = 400;
    const auto r = run_rate_experiment(c).results[0];
    CHECK(r.moment_slope.estimate == doctest::Approx(-1.0).epsilon(0.2));
    CHECK(r.slope.estimate == doctest::Approx(-0.5).epsilon(0.2));
    CHECK(r.max_ratio / r.min_ratio < 2.0);
}

TEST_CASE("binned distance on a 2D grid matches a direct solve") {
    ExperimentConfig c;
    c.dim = 2;
    c.grid_m = 8;
    const auto space = c.make_space();
    const auto traj = simulate(space, c.sim(2.0), ReplicaId{4, 0});
    const auto grid = Grid::for_space(space, 8);
    const auto w = trapezoid_weights(traj.count(), traj.dt());
    const auto a = GridMeasure::bin(grid, traj.points.data(), w.data(), traj.count());
    const double direct = w_p_grid_exact(a, GridMeasure::invariant(space, grid), 2.0).distance;
    CHECK(empirical_distance(traj, space, 2.0, c) == doctest::Approx(direct).epsilon(1e-14));
    c.solver = SolverChoice::sinkhorn;
    c.sinkhorn_eps_factor = 1e-3;
    CHECK(empirical_distance(traj, space, 2.0, c) == doctest::Approx(direct).epsilon(0.02));
}

TEST_CASE("limit experiment statistics match the functional routines") {
    ExperimentConfig c;
    c.T_list = {4, 8};
    c.replicas = 3;
    c.r_shift = 1.0;
    c.xi_draws = 2000;
    c.basis_modes = 64;
    const auto rep = run_limit_experiment(c);
    const auto space = c.make_space();
    const auto basis = SpectralBasis::build(space, 64);
    for (const auto& row : rep.table.rows) {
        if (row.replicate < 0 || row.T != 8) continue;
        const auto traj = simulate(space, c.sim(9.0), ReplicaId{c.seed, std::uint32_t(3 + row.replicate)});
        Trajectory head = traj;
        head.T = 8;
        head.points.resize(8001);
        if (row.statistic == "Xi") CHECK(row.value == doctest::Approx(xi(head, basis).xi.value).epsilon(1e-11));
        if (row.statistic == "Xi_bar")
            CHECK(row.value == doctest::Approx(xi_shifted(traj, basis, 1.0, ShiftMode::bar, 8)).epsilon(1e-11));
        if (row.statistic == "Xi_tilde")
            CHECK(row.value == doctest::Approx(xi_shifted(traj, basis, 1.0, ShiftMode::tilde, 8)).epsilon(1e-11));
        if (row.statistic == "Xi_eps") {
            CHECK(row.value == doctest::Approx(xi_smoothed(head, basis, 1.0 / 8)).epsilon(1e-11));
            CHECK(row.value <= xi(head, basis).xi.value);
        }
        if (row.statistic == "TW2") {
            const double W = w_p_to_invariant(space, Measure1D::empirical(head), 2.0);
            CHECK(row.value == doctest::Approx(8 * W * W).epsilon(1e-13));
        }
    }
    CHECK(rep.xi_inf_mean == doctest::Approx(1.0 / 360).epsilon(0.1));

    auto drift = c;
    drift.drift = {1.0};
    CHECK_THROWS_AS(run_limit_experiment(drift), ConfigError);
}

TEST_CASE("psi-moment experiment with drift") {
    ExperimentConfig c;
    c.drift = {1.0};
    c.T_list = {20};
    c.replicas = 300;
    c.bootstrap = 200;
    const auto rep = run_psi_moment_experiment(c);
    REQUIRE(rep.rows.size() == 1);
    const auto& row = rep.rows[0];
    CHECK(row.target == doctest::Approx(0.049408).epsilon(1e-4));
    CHECK(std::abs(row.second.mean - row.target) < 4 * row.second.stderr_);
    // The q = 2 Gaussian row is twice the long-run variance.
    CHECK(row.gaussian[1] == doctest::Approx(row.target).epsilon(1e-12));
    CHECK(row.acf_gap > 0);
    CHECK(row.acf_gap < 1e-3);

    auto point = c;
    point.init = InitialLaw::point({0.3});
    CHECK_THROWS_AS(run_psi_moment_experiment(point), ConfigError);
}

TEST_CASE("bernstein experiment is invariant under rescaling g") {
    ExperimentConfig c;
    c.T_list = {10};
    c.replicas = 400;
    const auto a = run_bernstein_experiment(c);
    c.g_scale = 2.0;
    const auto b = run_bernstein_experiment(c);
    CHECK(a.params.sigma_sq == doctest::Approx(2 / (4 * M_PI * M_PI)).epsilon(1e-9));
    CHECK(b.params.sigma_sq == doctest::Approx(4 * a.params.sigma_sq).epsilon(1e-12));
    CHECK(b.empirical == a.empirical);
    CHECK(b.alpha_hat == doctest::Approx(a.alpha_hat).epsilon(1e-9));
    CHECK(a.dominated_at_10);
    CHECK(a.empirical.size() == 8);
    for (std::size_t k = 1; k < a.empirical.size(); ++k) CHECK(a.empirical[k] <= a.empirical[k - 1]);
}

TEST_CASE("mixture scaling in one dimension") {
    ExperimentConfig c;
    c.theta_list = {0, 0.5, 0.25, 0.125, 0.0625, 0.03125};
    const auto rep = run_mixture_scaling_experiment(c);
    CHECK(rep.distance[0] == 0.0);
    CHECK(rep.theta[0] == 0.0);
    CHECK(rep.fit.slope == doctest::Approx(1.0).epsilon(0.1));
    CHECK(rep.predicted_case == "theta");
    CHECK(rep.monotone);
    // Point mass at 1/2: by symmetry the unrotated quantile coupling is optimal
    // and W_2^2 = theta^2 (1 - theta) / 12 + theta^3 / 12 = theta^2 / 12.
    for (std::size_t k = 0; k < rep.theta.size(); ++k)
        CHECK(rep.distance[k] == doctest::Approx(rep.theta[k] / std::sqrt(12.0)).epsilon(1e-10));
    c.nu = "box";
    const auto box = run_mixture_scaling_experiment(c);
    for (std::size_t k = 1; k < box.distance.size(); ++k) CHECK(box.distance[k] < rep.distance[k]);
}
