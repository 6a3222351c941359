#include "lab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "lab/error.hpp"
#include "lab/rng.hpp"

namespace lab {

double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 16) {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

double mean(const std::vector<double>& v) {
    if (v.empty()) throw InputError("mean of an empty sample");
    return pairwise_sum(v.data(), v.size()) / double(v.size());
}

Summary summarize(const std::vector<double>& v) {
    Summary s;
    s.n = v.size();
    if (v.empty()) return s;
    s.mean = mean(v);
    if (v.size() > 1) {
        std::vector<double> d(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) d[i] = (v[i] - s.mean) * (v[i] - s.mean);
        s.sd = std::sqrt(pairwise_sum(d.data(), d.size()) / double(v.size() - 1));
        s.stderr_ = s.sd / std::sqrt(double(v.size()));
    }
    return s;
}

Interval bootstrap(std::size_t n, const std::function<double(const std::vector<std::size_t>&)>& stat,
                   std::size_t resamples, std::uint64_t seed, std::uint32_t stream, double level) {
    if (n < 2) throw InputError("bootstrap needs at least two observations");
    if (resamples < 2) throw InputError("bootstrap needs at least two resamples");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Interval out;
    out.estimate = stat(idx);
    RngStream rng(seed, stream, RngTag::bootstrap);
    std::vector<double> reps(resamples);
    for (std::size_t b = 0; b < resamples; ++b) {
        for (auto& i : idx) i = rng.below(n);
        reps[b] = stat(idx);
    }
    const auto s = summarize(reps);
    out.se = s.sd;
    std::sort(reps.begin(), reps.end());
    const double a = 0.5 * (1 - level);
    const auto q = [&](double p) {
        const double pos = p * double(resamples - 1);
        const std::size_t k = std::size_t(pos);
        const double f = pos - double(k);
        return k + 1 < resamples ? reps[k] * (1 - f) + reps[k + 1] * f : reps[k];
    };
    out.lo = q(a);
    out.hi = q(1 - a);
    return out;
}

Interval bootstrap_mean(const std::vector<double>& x, std::size_t resamples, std::uint64_t seed, std::uint32_t stream) {
    std::vector<double> tmp(x.size());
    return bootstrap(
        x.size(),
        [&](const std::vector<std::size_t>& idx) {
            for (std::size_t i = 0; i < idx.size(); ++i) tmp[i] = x[idx[i]];
            return pairwise_sum(tmp.data(), tmp.size()) / double(tmp.size());
        },
        resamples, seed, stream);
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw InputError("KS statistic needs two nonempty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(double(i) / double(a.size()) - double(j) / double(b.size())));
    }
    return d;
}

LinearFit wls(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w) {
    const std::size_t n = x.size();
    if (y.size() != n || (!w.empty() && w.size() != n)) throw InputError("regression inputs differ in length");
    if (n < 2) throw InputError("regression needs at least two points");
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = w.empty() ? 1.0 : w[i];
        if (!(wi > 0)) throw InputError("regression weights must be positive");
        sw += wi;
        sx += wi * x[i];
        sy += wi * y[i];
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = w.empty() ? 1.0 : w[i];
        sxx += wi * (x[i] - mx) * (x[i] - mx);
        sxy += wi * (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0)) throw InputError("regression abscissae are all equal");
    LinearFit f;
    f.n = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = w.empty() ? 1.0 : w[i];
        const double r = y[i] - f.intercept - f.slope * x[i];
        f.residual_ss += wi * r * r;
    }
    f.slope_se = n > 2 ? std::sqrt(f.residual_ss / double(n - 2) / sxx) : 0.0;
    return f;
}

LinearFit fit_loglog(const std::vector<double>& T, const std::vector<double>& v, const std::vector<double>& w) {
    if (T.size() < 3) throw InputError("log-log fit needs at least three points");
    std::vector<double> lx(T.size()), ly(v.size());
    for (std::size_t i = 0; i < T.size(); ++i) {
        if (!(T[i] > 0) || !(i < v.size() && v[i] > 0)) throw InputError("log-log fit needs positive values");
        lx[i] = std::log(T[i]);
        ly[i] = std::log(v[i]);
    }
    return wls(lx, ly, w);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InputError("correlation needs two equal-length samples");
    const double mx = mean(x), my = mean(y);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

double batch_means_variance(const std::vector<double>& series, std::size_t batches) {
    if (batches < 2 || series.size() < 2 * batches) throw InputError("batch means needs >= 2 batches of >= 2 points");
    const std::size_t len = series.size() / batches;
    std::vector<double> means(batches);
    for (std::size_t b = 0; b < batches; ++b) means[b] = pairwise_sum(series.data() + b * len, len) / double(len);
    const auto s = summarize(means);
    return double(len) * s.sd * s.sd;
}

std::vector<double> autocovariance(const std::vector<std::vector<double>>& series, std::size_t max_lag, double center) {
    if (series.empty()) throw InputError("autocovariance needs at least one series");
    const std::size_t n = series.front().size();
    if (n <= max_lag) throw InputError("series shorter than the requested lag");
    std::vector<double> c(max_lag + 1, 0.0);
    for (const auto& s : series) {
        if (s.size() != n) throw InputError("autocovariance series differ in length");
        for (std::size_t k = 0; k <= max_lag; ++k) {
            double acc = 0;
            for (std::size_t t = 0; t + k < n; ++t) acc += (s[t] - center) * (s[t + k] - center);
            c[k] += acc / double(n - k);
        }
    }
    for (double& v : c) v /= double(series.size());
    return c;
}

double binomial_se(double phat, std::size_t n) {
    if (n == 0) throw InputError("binomial standard error needs n > 0");
    return std::sqrt(std::max(phat * (1 - phat), 0.0) / double(n));
}

}  // namespace lab
