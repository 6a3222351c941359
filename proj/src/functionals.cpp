#include "lab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lab/error.hpp"
#include "lab/simd/kernels.hpp"

namespace lab {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kFloor = 1e-12;

std::size_t time_index(double t, double dt, const char* what) {
    const double q = t / dt;
    const double r = std::round(q);
    if (std::abs(q - r) > 1e-6 * std::max(1.0, r))
        throw InputError(std::string(what) + " must be a multiple of the observation spacing");
    return std::size_t(r);
}

// sum of weighted mode values over points [j0, j1] with trapezoid weights
std::vector<double> segment_integrals(const Trajectory& traj, const SpectralBasis& basis, std::size_t j0,
                                      std::size_t j1, std::size_t n) {
    if (j1 <= j0) throw InputError("integration range is empty");
    std::vector<double> w(j1 - j0 + 1, traj.dt());
    w.front() = w.back() = 0.5 * traj.dt();
    return mode_integrals(traj.point(j0), w.data(), j1 - j0 + 1, basis, n);
}

}  // namespace

std::vector<double> mode_integrals(const double* points, const double* weights, std::size_t count,
                                   const SpectralBasis& basis, std::size_t n) {
    if (n == 0 || n > basis.size()) n = basis.size();
    std::vector<double> out(n, 0.0);
    const auto& sp = basis.space();
    const auto& k = simd::kernels();
    if (sp.is_torus() && sp.dim() == 1) {
        const std::size_t K = (n + 1) / 2;
        std::vector<double> c(K, 0.0), s(K, 0.0);
        k.fourier_accumulate(points, weights, count, 1.0, K, c.data(), s.data());
        for (std::size_t i = 0; i < n; ++i) out[i] = kSqrt2 * (basis.is_sine(i) ? s[i / 2] : c[i / 2]);
        return out;
    }
    if (!sp.is_torus() && !basis.tabulated()) {
        std::vector<double> c(n, 0.0), s(n, 0.0);
        k.fourier_accumulate(points, weights, count, 0.5, n, c.data(), s.data());
        for (std::size_t i = 0; i < n; ++i) out[i] = kSqrt2 * c[i];
        return out;
    }
    std::vector<double> v(n);
    const std::size_t d = std::size_t(sp.dim());
    for (std::size_t j = 0; j < count; ++j) {
        basis.eval_all(points + j * d, v.data(), n);
        for (std::size_t i = 0; i < n; ++i) out[i] += weights[j] * v[i];
    }
    return out;
}

std::vector<double> psi_all(const Trajectory& traj, const SpectralBasis& basis, std::size_t n) {
    auto out = segment_integrals(traj, basis, 0, traj.count() - 1, n);
    const double s = 1.0 / std::sqrt(traj.horizon());
    for (double& v : out) v *= s;
    return out;
}

double psi(const Trajectory& traj, const SpectralBasis& basis, std::size_t i) {
    if (i >= basis.size()) throw InputError("mode index out of range");
    const auto w = trapezoid_weights(traj.count(), traj.dt());
    double s = 0;
    for (std::size_t j = 0; j < traj.count(); ++j) s += w[j] * basis.eval(i, traj.point(j));
    return s / std::sqrt(traj.horizon());
}

double xi_from_psi(const std::vector<double>& psi, const SpectralBasis& basis) {
    if (psi.size() > basis.size()) throw InputError("more coefficients than modes");
    double s = 0;
    for (std::size_t i = 0; i < psi.size(); ++i) s += psi[i] * psi[i] / basis.eigenvalue(i);
    return s;
}

double xi_tail_bound(const std::vector<double>& psi, const SpectralBasis& basis) {
    double c = 0;
    for (std::size_t i = psi.size() / 2; i < psi.size(); ++i) c = std::max(c, basis.eigenvalue(i) * psi[i] * psi[i]);
    try {
        return 2.0 * c * basis.tail_sum(2.0);
    } catch (const DomainError&) {
        return std::numeric_limits<double>::infinity();
    }
}

SpectralStatistics xi(const Trajectory& traj, const SpectralBasis& basis) {
    SpectralStatistics st;
    st.psi = psi_all(traj, basis);
    st.horizon = traj.horizon();
    st.xi = {xi_from_psi(st.psi, basis), xi_tail_bound(st.psi, basis)};
    return st;
}

double xi_smoothed(const std::vector<double>& psi, const SpectralBasis& basis, double eps) {
    if (!(eps >= 0)) throw InputError("smoothing time must be >= 0");
    double s = 0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
        const double l = basis.eigenvalue(i);
        s += std::exp(-2 * eps * l) * psi[i] * psi[i] / l;
    }
    return s;
}

double xi_smoothed(const Trajectory& traj, const SpectralBasis& basis, double eps) {
    return xi_smoothed(psi_all(traj, basis), basis, eps);
}

std::vector<double> psi_shifted(const Trajectory& traj, const SpectralBasis& basis, double r, ShiftMode mode,
                                double T) {
    if (!(r >= 0)) throw InputError("shift r must be >= 0");
    const double H = traj.horizon();
    const double dt = traj.dt();
    std::size_t j0, j1;
    double norm;
    if (mode == ShiftMode::bar) {
        if (T == 0) T = H;
        if (!(T > r)) throw InputError("bar shift requires T > r");
        if (T > H + 1e-9 * H) throw InputError("trajectory horizon shorter than T");
        j0 = time_index(r, dt, "shift r");
        j1 = time_index(T, dt, "horizon T");
        norm = T - r;
    } else {
        if (T == 0) T = H - r;
        if (!(T > 0) || T + r > H + 1e-9 * H) throw InputError("tilde shift requires horizon >= T + r");
        j0 = time_index(r, dt, "shift r");
        j1 = j0 + time_index(T, dt, "horizon T");
        norm = T;
    }
    auto out = segment_integrals(traj, basis, j0, j1, 0);
    const double s = 1.0 / std::sqrt(norm);
    for (double& v : out) v *= s;
    return out;
}

double xi_shifted(const Trajectory& traj, const SpectralBasis& basis, double r, ShiftMode mode, double T) {
    return xi_from_psi(psi_shifted(traj, basis, r, mode, T), basis);
}

GridMeasure SmoothedDensity::measure() const {
    GridMeasure gm{grid, std::vector<double>(f.size())};
    for (std::size_t c = 0; c < f.size(); ++c) gm.w[c] = std::max(f[c], kFloor) * cell[c];
    gm.normalize();
    return gm;
}

SmoothedDensity smoothed_density(const std::vector<double>& psi, double T, const SpectralBasis& basis, double eps,
                                 const Grid& grid) {
    if (!(eps > 0)) throw InputError("smoothing time must be positive");
    if (!(T > 0)) throw InputError("horizon must be positive");
    const auto& sp = basis.space();
    if (grid.dim != sp.dim()) throw InputError("grid dimension does not match the space");
    const std::size_t n = std::min(psi.size(), basis.size());
    std::vector<double> coef(n);
    for (std::size_t i = 0; i < n; ++i) coef[i] = std::exp(-eps * basis.eigenvalue(i)) * psi[i] / std::sqrt(T);
    SmoothedDensity out;
    out.grid = grid;
    out.f.resize(grid.size());
    out.cell = GridMeasure::invariant(sp, grid).w;
    std::vector<double> v(n), x(static_cast<std::size_t>(grid.dim));
    for (std::size_t c = 0; c < grid.size(); ++c) {
        grid.center(c, x.data());
        basis.eval_all(x.data(), v.data(), n);
        double f = 1.0;
        for (std::size_t i = 0; i < n; ++i) f += coef[i] * v[i];
        out.f[c] = f;
        out.quadrature_mass += f * out.cell[c];
        if (f < kFloor) out.floored_mass += (kFloor - f) * out.cell[c];
    }
    return out;
}

DeviationParams deviation_params(const SpectralBasis& basis, const std::vector<double>& coeffs, double d,
                                 std::size_t quad_m) {
    if (coeffs.empty()) throw InputError("deviation parameters need at least one coefficient");
    if (coeffs.size() > basis.size()) throw InputError("more coefficients than modes");
    DeviationParams out;
    double s = 0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) s += coeffs[i] * coeffs[i] / basis.eigenvalue(i);
    out.sigma_sq = 2 * s;
    if (d < 2) {
        out.rule = DimensionRule::below_two;
        out.frak_m = std::sqrt(s);
        return out;
    }
    // |grad (-L)^{-1} g| on a midpoint grid
    const auto& sp = basis.space();
    const int D = sp.dim();
    if (quad_m == 0) quad_m = D == 1 ? 4096 : D == 2 ? 256 : D == 3 ? 48 : 16;
    const Grid grid{D, quad_m, sp.is_torus()};
    const auto cell = GridMeasure::invariant(sp, grid).w;
    const std::size_t n = coeffs.size();
    std::vector<double> g(n * std::size_t(D)), x(static_cast<std::size_t>(D)), mag(grid.size());
    for (std::size_t c = 0; c < grid.size(); ++c) {
        grid.center(c, x.data());
        basis.gradient_all(x.data(), g.data(), n);
        double m2 = 0;
        for (int k = 0; k < D; ++k) {
            double v = 0;
            for (std::size_t i = 0; i < n; ++i) v += coeffs[i] / basis.eigenvalue(i) * g[i * std::size_t(D) + std::size_t(k)];
            m2 += v * v;
        }
        mag[c] = std::sqrt(m2);
    }
    const auto lp = [&](double p) {
        double acc = 0;
        for (std::size_t c = 0; c < mag.size(); ++c) acc += cell[c] * std::pow(mag[c], p);
        return std::pow(acc, 1.0 / p);
    };
    if (d == 2) {
        out.rule = DimensionRule::two;
        out.frak_m = std::numeric_limits<double>::infinity();
        for (int j = 21; j <= 100; ++j) {
            const double p = 0.1 * j;
            const double v = p / (p - 2) * lp(p);
            if (v < out.frak_m) {
                out.frak_m = v;
                out.p_star = p;
            }
        }
    } else {
        out.rule = DimensionRule::above_two;
        out.frak_m = lp(d);
    }
    return out;
}

namespace {
// a / (a^2 + omega^2) for mode i under constant drift z
double mode_variance(const SpectralBasis& basis, std::size_t i, const DriftSpec& drift) {
    const double a = basis.eigenvalue(i);
    if (drift.is_zero()) return 1.0 / a;
    const auto& sp = basis.space();
    if (!sp.is_torus()) throw InputError("constant drift closed form applies to the torus only");
    if (int(drift.z.size()) != sp.dim()) throw InputError("drift dimension mismatch");
    double w = 0;
    for (int k = 0; k < sp.dim(); ++k) w += double(basis.frequency(i)[k]) * drift.z[std::size_t(k)];
    w *= 2 * std::numbers::pi;
    return a / (a * a + w * w);
}
}  // namespace

double long_run_variance(const SpectralBasis& basis, const std::vector<double>& coeffs, const DriftSpec& drift) {
    if (coeffs.empty()) throw InputError("long-run variance needs at least one coefficient");
    if (coeffs.size() > basis.size()) throw InputError("more coefficients than modes");
    // cos/sin partners of one frequency share a/(a^2+omega^2) and their cross
    // terms cancel, so the mode sum is exact.
    double s = 0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) s += coeffs[i] * coeffs[i] * mode_variance(basis, i, drift);
    return s;
}

double long_run_variance_of_drift_derivative(const SpectralBasis& basis, std::size_t i, const DriftSpec& drift) {
    if (i >= basis.size()) throw InputError("mode index out of range");
    if (drift.is_zero()) return 0.0;
    const auto& sp = basis.space();
    double w = 0;
    for (int k = 0; k < sp.dim(); ++k) w += double(basis.frequency(i)[k]) * drift.z[std::size_t(k)];
    w *= 2 * std::numbers::pi;
    // Z phi = -+ omega * (partner mode)
    return w * w * mode_variance(basis, i, drift);
}

double xi_infinity_mean(const SpectralBasis& basis) {
    double s = 0;
    for (double l : basis.eigenvalues()) s += 2.0 / (l * l);
    return s + 2.0 * basis.tail_sum(2.0);
}

double sample_xi_infinity(const SpectralBasis& basis, RngStream& rng) {
    const std::size_t n = basis.size();
    const double tail = 2.0 * basis.tail_sum(2.0);
    std::vector<double> z(n);
    rng.normals(z.data(), n);
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double l = basis.eigenvalue(i);
        s += 2.0 * z[i] * z[i] / (l * l);
    }
    return s + tail;
}

double log_mean(double f) {
    if (!(f > 0)) return 0.0;
    const double u = f - 1.0;
    if (std::abs(u) < 1e-8) return 1.0 + 0.5 * u;
    return u / std::log1p(u);
}

}  // namespace lab
