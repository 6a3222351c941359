#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace lab {

/// Pairwise summation; the result depends only on the order of v.
double pairwise_sum(const double* v, std::size_t n);
double mean(const std::vector<double>& v);

struct Summary {
    double mean = 0.0;
    double sd = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};
Summary summarize(const std::vector<double>& v);

struct Interval {
    double estimate = 0.0;
    double se = 0.0;  // bootstrap standard deviation
    double lo = 0.0;  // percentile bounds
    double hi = 0.0;
};

/// Percentile bootstrap over resampled index sets. `stat` receives the
/// resampled indices; index draws come from the bootstrap rng stream.
Interval bootstrap(std::size_t n, const std::function<double(const std::vector<std::size_t>&)>& stat,
                   std::size_t resamples, std::uint64_t seed, std::uint32_t stream = 0, double level = 0.95);
/// Bootstrap of the mean of f(x_i).
Interval bootstrap_mean(const std::vector<double>& x, std::size_t resamples, std::uint64_t seed,
                        std::uint32_t stream = 0);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;  // from the weighted normal equations
    double residual_ss = 0.0;
    std::size_t n = 0;
};
/// Weighted least squares y = intercept + slope x.
LinearFit wls(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w);
/// WLS on (log T, log v). Needs >= 3 points and positive values.
LinearFit fit_loglog(const std::vector<double>& T, const std::vector<double>& v, const std::vector<double>& w = {});

double pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Batch-means estimate of lim n Var(mean) for a stationary series.
double batch_means_variance(const std::vector<double>& series, std::size_t batches);

/// Autocovariance c(k), k = 0..max_lag, pooled over equally long series
/// (centered at the known mean `center`).
std::vector<double> autocovariance(const std::vector<std::vector<double>>& series, std::size_t max_lag,
                                   double center = 0.0);

/// Standard error of a binomial proportion.
double binomial_se(double phat, std::size_t n);

}  // namespace lab
