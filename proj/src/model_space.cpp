#include "lab/model_space.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "lab/error.hpp"

namespace lab {

namespace {

constexpr std::size_t kQuantileNodes = 1u << 14;

// 5-point Gauss-Legendre on [0,1]
constexpr double kGLx[5] = {0.04691007703066800, 0.23076534494715845, 0.5, 0.76923465505284155,
                            0.95308992296933200};
constexpr double kGLw[5] = {0.11846344252809454, 0.23931433524968324, 0.28444444444444444,
                            0.23931433524968324, 0.11846344252809454};

template <class F>
double gauss5(F&& f, double a, double b) {
    double s = 0;
    for (int i = 0; i < 5; ++i) s += kGLw[i] * f(a + (b - a) * kGLx[i]);
    return s * (b - a);
}

// Fritsch-Carlson slopes for monotone cubic interpolation.
std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> delta(n - 1), m(n);
    for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0) {
            m[i] = 0;
        } else {
            const double w1 = 2 * (x[i + 1] - x[i]) + (x[i] - x[i - 1]);
            const double w2 = (x[i + 1] - x[i]) + 2 * (x[i] - x[i - 1]);
            m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    return m;
}

}  // namespace

double PotentialSpec::value(double x) const {
    switch (kind) {
        case PotentialKind::zero: return 0.0;
        case PotentialKind::cosine: return a * std::cos(2 * std::numbers::pi * x);
        case PotentialKind::quadratic: return a * x * (1 - x);
    }
    return 0.0;
}

double PotentialSpec::derivative(double x) const {
    switch (kind) {
        case PotentialKind::zero: return 0.0;
        case PotentialKind::cosine: return -2 * std::numbers::pi * a * std::sin(2 * std::numbers::pi * x);
        case PotentialKind::quadratic: return a * (1 - 2 * x);
    }
    return 0.0;
}

std::string PotentialSpec::describe() const {
    std::ostringstream os;
    switch (kind) {
        case PotentialKind::zero: os << "zero"; break;
        case PotentialKind::cosine: os << a << "*cos(2pi x)"; break;
        case PotentialKind::quadratic: os << a << "*x(1-x)"; break;
    }
    return os.str();
}

bool DriftSpec::is_zero() const {
    return std::all_of(z.begin(), z.end(), [](double v) { return v == 0.0; });
}

ModelSpace ModelSpace::torus(int d, DriftSpec drift) {
    LAB_REQUIRE(d >= 1, "torus dimension must be >= 1");
    if (!drift.z.empty()) {
        LAB_REQUIRE(int(drift.z.size()) == d, "drift vector length must equal the torus dimension");
        for (double v : drift.z) LAB_REQUIRE(std::isfinite(v), "drift must be finite");
    }
    ModelSpace s;
    s.kind_ = SpaceKind::torus;
    s.dim_ = d;
    s.drift_ = std::move(drift);
    s.norm_ = 1.0;
    s.mean_ = 0.5;
    return s;
}

ModelSpace ModelSpace::interval(PotentialSpec potential) {
    LAB_REQUIRE(std::isfinite(potential.a), "potential parameter must be finite");
    ModelSpace s;
    s.kind_ = SpaceKind::interval;
    s.dim_ = 1;
    s.potential_ = potential;
    s.build_tables();
    return s;
}

void ModelSpace::build_tables() {
    if (potential_.is_zero()) {
        norm_ = 1.0;
        mean_ = 0.5;
        return;
    }
    const auto ev = [this](double x) { return std::exp(potential_.value(x)); };
    const std::size_t n = kQuantileNodes;
    qx_.resize(n + 1);
    qf_.resize(n + 1);
    qf_[0] = 0;
    double mass = 0, first = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = double(i) / double(n), b = double(i + 1) / double(n);
        qx_[i] = a;
        mass += gauss5(ev, a, b);
        first += gauss5([&](double x) { return x * ev(x); }, a, b);
        qf_[i + 1] = mass;
    }
    qx_[n] = 1.0;
    norm_ = mass;
    mean_ = first / mass;
    for (double& f : qf_) f /= mass;
    qf_[n] = 1.0;
    qslope_ = pchip_slopes(qf_, qx_);
}

std::string ModelSpace::describe() const {
    std::ostringstream os;
    if (is_torus()) {
        os << "torus(d=" << dim_ << ")";
        if (!drift_.is_zero()) {
            os << " z=(";
            for (std::size_t i = 0; i < drift_.z.size(); ++i) os << (i ? "," : "") << drift_.z[i];
            os << ")";
        }
    } else {
        os << "interval(V=" << potential_.describe() << ")";
    }
    return os.str();
}

void ModelSpace::check_point(std::span<const double> x) const {
    if (int(x.size()) != dim_) throw InputError("point dimension does not match the space");
}

double ModelSpace::distance_sq(const double* x, const double* y) const {
    double s = 0;
    if (is_torus()) {
        for (int k = 0; k < dim_; ++k) {
            double t = std::abs(x[k] - y[k]);
            t = std::min(t, 1.0 - t);
            s += t * t;
        }
    } else {
        const double t = x[0] - y[0];
        s = t * t;
    }
    return s;
}

double ModelSpace::distance(std::span<const double> x, std::span<const double> y) const {
    check_point(x);
    check_point(y);
    return std::sqrt(distance_sq(x.data(), y.data()));
}

void ModelSpace::canonicalize_inplace(double* x) const {
    if (is_torus()) {
        for (int k = 0; k < dim_; ++k) {
            double v = x[k] - std::floor(x[k]);
            if (v >= 1.0) v = 0.0;
            x[k] = v;
        }
    } else {
        double y = x[0] - 2.0 * std::floor(x[0] * 0.5);
        if (y >= 2.0) y = 0.0;
        if (y > 1.0) y = 2.0 - y;
        x[0] = y;
    }
}

std::vector<double> ModelSpace::canonicalize(std::span<const double> x) const {
    check_point(x);
    for (double v : x)
        if (!std::isfinite(v)) throw InputError("canonicalize: non-finite coordinate");
    std::vector<double> out(x.begin(), x.end());
    canonicalize_inplace(out.data());
    return out;
}

double ModelSpace::invariant_density(double x) const {
    if (potential_.is_zero()) return 1.0;
    return std::exp(potential_.value(x)) / norm_;
}

double ModelSpace::invariant_density(std::span<const double> x) const {
    check_point(x);
    return is_torus() ? 1.0 : invariant_density(x[0]);
}

bool ModelSpace::has_drift() const { return !potential_.is_zero() || !drift_.is_zero(); }

void ModelSpace::drift_at(const double* x, double* b) const {
    if (is_torus()) {
        for (int k = 0; k < dim_; ++k) b[k] = drift_.z.empty() ? 0.0 : drift_.z[std::size_t(k)];
    } else {
        b[0] = potential_.derivative(x[0]);
    }
}

double ModelSpace::cdf(double x) const {
    if (potential_.is_zero()) return std::clamp(x, 0.0, 1.0);
    if (x <= 0) return 0;
    if (x >= 1) return 1;
    const std::size_t n = kQuantileNodes;
    const std::size_t i = std::min(n - 1, std::size_t(x * double(n)));
    return qf_[i] + gauss5([this](double t) { return std::exp(potential_.value(t)); }, qx_[i], x) / norm_;
}

double ModelSpace::quantile(double u) const {
    if (potential_.is_zero()) return std::clamp(u, 0.0, 1.0);
    if (u <= 0) return 0;
    if (u >= 1) return 1;
    const auto it = std::upper_bound(qf_.begin(), qf_.end(), u);
    const std::size_t i = std::size_t(it - qf_.begin()) - 1;
    const double h = qf_[i + 1] - qf_[i];
    const double t = (u - qf_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * qx_[i] + h10 * h * qslope_[i] + h01 * qx_[i + 1] + h11 * h * qslope_[i + 1];
}

void ModelSpace::sample_invariant(RngStream& rng, double* x) const {
    if (is_torus()) {
        for (int k = 0; k < dim_; ++k) x[k] = rng.uniform();
    } else {
        x[0] = quantile(rng.uniform());
    }
}

}  // namespace lab
