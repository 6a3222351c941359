#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "lab/functionals.hpp"
#include "lab/model_space.hpp"
#include "lab/sde.hpp"
#include "lab/stats.hpp"
#include "lab/wasserstein.hpp"

namespace lab {

/// gamma_d(T); T >= 2.
double gamma_rate(double d, double T);

/// Closed or half-open interval [lo, hi]; hi = +inf when unbounded.
struct Range {
    double lo = 1.0;
    double hi = std::numeric_limits<double>::infinity();
    bool hi_closed = false;
    bool contains(double p) const { return p >= lo && (hi_closed ? p <= hi : p < hi); }
};
/// Admissible exponents p for the rate statements.
Range admissible_p(double d);
/// Admissible q for the limit statements (d < 4).
Range admissible_q_limit(double d);

enum class SolverChoice { automatic, exact, sinkhorn };

struct ExperimentConfig {
    // [space]
    SpaceKind space = SpaceKind::torus;
    int dim = 1;
    std::vector<double> drift;
    PotentialSpec potential;
    // [sde]
    double h = 1e-3;
    std::size_t stride = 1;
    InitialLaw init;
    std::size_t substeps = 1;
    // [experiment]
    std::vector<double> T_list{32, 64, 128, 256, 512, 1024};
    std::size_t replicas = 64;
    std::uint64_t seed = 1;
    std::vector<double> p_list{2.0};
    double q = 2.0;
    double zeta = 1.0;
    std::size_t bootstrap = 2000;
    int threads = 0;
    std::vector<std::size_t> modes{0};  // 0-based mode indices
    double g_scale = 1.0;               // bernstein: g = g_scale * phi
    double r_shift = 1.0;               // limit: shift r for the Xi variants
    std::size_t xi_draws = 100000;
    std::size_t xi_points = 8;          // bernstein grid in x = xi sqrt(T) / sigma
    double x_lo = 0.5, x_hi = 3.5;
    std::vector<double> theta_list{0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625};
    std::string nu = "point";           // mixture: point | box
    // [spectral]
    std::size_t basis_modes = 0;        // 0: default truncation
    // [wasserstein]
    std::size_t grid_m = 0;             // 0: default resolution
    SolverChoice solver = SolverChoice::automatic;
    double sinkhorn_eps_factor = 1e-4;  // final eps = factor * median cost
    // [output]
    std::string out_dir = "out";

    ModelSpace make_space() const;
    SimulationParams sim(double T) const;
    std::size_t basis_size() const;
    std::size_t resolution() const;
    /// Throws ConfigError on inconsistent settings.
    void validate() const;
};

/// Long-format table: one row per (T, replicate, statistic). replicate = -1
/// marks summaries.
struct Table {
    struct Row {
        double T;
        long long replicate;
        std::string statistic;
        double value;
    };
    std::vector<Row> rows;
    void add(double T, long long replicate, std::string statistic, double value);
    void append(const Table& other);
    std::string csv() const;
    void write(const std::string& path) const;
};

/// Shortest round-trip decimal text of v, locale independent.
std::string format_double(double v);

/// W_p(mu_T, mu) for one trajectory: exact quantile integration in 1D,
/// binned grid transport otherwise.
double empirical_distance(const Trajectory& traj, const ModelSpace& space, double p, const ExperimentConfig& cfg);

struct RatePoint {
    double T = 0.0;
    Interval estimate;  // (E W^q)^{1/q}
    Interval moment;    // E W^q
};

struct RateResult {
    double p = 2.0, q = 2.0;
    std::vector<RatePoint> points;
    bool fitted = false;
    LinearFit fit;            // log estimate vs log T
    Interval slope;           // bootstrap slope of log estimate
    Interval moment_slope;    // bootstrap slope of log E W^q
    double reference_slope = 0.0;  // slope of log gamma_d over the T list
    double gamma_const = 0.0;      // c in estimate ~ c gamma_d(T) (geometric mean)
    double min_ratio = 0.0, max_ratio = 0.0;  // estimate / (c gamma_d)
    double loglog_coef = std::numeric_limits<double>::quiet_NaN();  // d = 4
    double log_corr = std::numeric_limits<double>::quiet_NaN();     // corr(T E W^2, log T)
};

struct RateReport {
    std::vector<RateResult> results;  // one per p in p_list
    Table table;
};
RateReport run_rate_experiment(const ExperimentConfig& cfg);

struct LimitPoint {
    double T = 0.0;
    Summary tw2;           // T W_2^2
    Summary xi;            // Xi(T)
    double abs_diff_q = 0.0;    // E |T W_2^2 - Xi(T)|^q
    double bar_diff = 0.0;      // E |Xi-bar_r - Xi|
    double tilde_diff = 0.0;    // E |Xi-tilde_r - Xi|
    double ks = 0.0;            // KS(T W_2^2, Xi(inf) draws)
    double ks_xi = 0.0;         // KS(Xi(T), Xi(inf) draws)
    double ratio_q1 = 0.0, ratio_q2 = 0.0;  // E (T W^2)^q / E Xi(inf)^q
};

struct LimitReport {
    double xi_inf_mean = 0.0;
    std::array<double, 2> xi_inf_moments{};  // E Xi(inf), E Xi(inf)^2 from the draws
    std::vector<LimitPoint> points;
    bool diff_decreasing = false;
    Table table;
};
LimitReport run_limit_experiment(const ExperimentConfig& cfg);

struct BernsteinReport {
    DeviationParams params;
    double T = 0.0;
    std::vector<double> xi, empirical, se, bound_alpha10;
    double alpha_hat = 0.0;
    bool dominated_at_10 = false;
    Table table;
};
/// Smallest alpha >= 0 with 2 exp(-T xi^2 / (2 sigma^2 + alpha m xi)) >= target
/// at every grid point; +inf if some target reaches 2.
double minimal_alpha(const std::vector<double>& xi, const std::vector<double>& target, double T, double sigma_sq,
                     double frak_m);
double bernstein_bound(double xi, double T, double sigma_sq, double frak_m, double alpha);
BernsteinReport run_bernstein_experiment(const ExperimentConfig& cfg);

struct PsiMomentRow {
    double T = 0.0;
    std::size_t mode = 0;
    double target = 0.0;  // 2/lambda - 2 V(Z phi)/lambda^2
    Summary second;       // psi^2
    double raw_gap = 0.0, raw_gap_se = 0.0;
    double acf_gap = 0.0;  // (2/T) int t C(t) dt + 2 int_T^inf C from the pooled autocovariance
    std::array<Interval, 3> abs_moments;  // q = 1, 2, 4
    std::array<double, 3> gaussian{};     // 2^q Gamma((q+1)/2)/sqrt(pi) V^{q/2}
};

struct PsiMomentReport {
    std::vector<PsiMomentRow> rows;
    Table table;
};
/// E|N(0, 2V)|^q = 2^q Gamma((q+1)/2) / sqrt(pi) V^{q/2}.
double gaussian_abs_moment(double V, double q);
PsiMomentReport run_psi_moment_experiment(const ExperimentConfig& cfg);

struct MixtureReport {
    double p = 2.0;
    std::vector<double> theta, distance;
    LinearFit fit;  // log W vs log theta
    double rss_theta = 0.0, rss_theta_log = 0.0, rss_power = 0.0;
    std::string best_model;
    std::string predicted_case;  // theta | theta_log | power
    double bound_const = 0.0;    // max W / g over the grid for the predicted g
    bool monotone = false;       // W nondecreasing in theta
    Table table;
};
MixtureReport run_mixture_scaling_experiment(const ExperimentConfig& cfg);

}  // namespace lab
