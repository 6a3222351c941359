#include "lab/spectral.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "lab/error.hpp"

namespace lab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr std::size_t kFdNodes = 4096;

double unit_ball_volume(int d) {
    return std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

bool positive_halfspace(const std::vector<int>& k) {
    for (int v : k) {
        if (v > 0) return true;
        if (v < 0) return false;
    }
    return false;
}

// Lattice vectors with |k|^2 <= r2 in the half-space, in canonical order.
std::vector<std::vector<int>> halfspace_ball(int d, long r2) {
    const int r = int(std::floor(std::sqrt(double(r2)) + 1e-9));
    std::vector<std::vector<int>> out;
    std::vector<int> k(std::size_t(d), -r);
    while (true) {
        long n2 = 0;
        for (int v : k) n2 += long(v) * v;
        if (n2 <= r2 && positive_halfspace(k)) out.push_back(k);
        int j = d - 1;
        while (j >= 0 && k[std::size_t(j)] == r) {
            k[std::size_t(j)] = -r;
            --j;
        }
        if (j < 0) break;
        ++k[std::size_t(j)];
    }
    std::sort(out.begin(), out.end(), [](const std::vector<int>& a, const std::vector<int>& b) {
        long na = 0, nb = 0;
        for (int v : a) na += long(v) * v;
        for (int v : b) nb += long(v) * v;
        if (na != nb) return na < nb;
        return a < b;
    });
    return out;
}

}  // namespace

std::size_t default_truncation(int d) {
    if (d <= 1) return 512;
    if (d == 2) return 2048;
    return 4096;
}

SpectralBasis SpectralBasis::build(const ModelSpace& space, std::size_t N, std::size_t cap,
                                   std::size_t fd_nodes) {
    LAB_REQUIRE(N >= 1, "basis size must be >= 1");
    if (N > cap) throw ResourceError("basis size " + std::to_string(N) + " exceeds cap " + std::to_string(cap));
    SpectralBasis b;
    b.space_ = std::make_shared<const ModelSpace>(space);
    b.dim_ = space.dim();
    const int d = b.dim_;

    if (space.is_torus()) {
        // grow the radius until the half-space ball holds N/2 vectors
        long r2 = 1;
        std::vector<std::vector<int>> ks;
        while (true) {
            ks = halfspace_ball(d, r2);
            if (2 * ks.size() >= N) break;
            r2 = std::max(r2 + 1, long(double(r2) * 1.5));
        }
        b.lambda_.reserve(N);
        for (const auto& k : ks) {
            long n2 = 0;
            for (int v : k) n2 += long(v) * v;
            for (int parity = 0; parity < 2 && b.lambda_.size() < N; ++parity) {
                b.lambda_.push_back(4 * kPi * kPi * double(n2));
                b.freq_.insert(b.freq_.end(), k.begin(), k.end());
                b.sine_.push_back(static_cast<unsigned char>(parity));
                for (int v : k) b.max_freq_ = std::max(b.max_freq_, std::abs(v));
            }
            if (b.lambda_.size() >= N) break;
        }
        b.sup_sq_ = 2.0;
        return b;
    }

    if (space.uniform()) {
        for (std::size_t n = 1; n <= N; ++n) {
            b.lambda_.push_back(double(n * n) * kPi * kPi);
            b.freq_.push_back(int(n));
            b.sine_.push_back(0);
        }
        b.max_freq_ = int(N);
        b.sup_sq_ = 2.0;
        return b;
    }

    // Interval with potential: weighted Dirichlet form on a vertex grid,
    // lumped mass, reduced to a symmetric tridiagonal problem. The default
    // build solves on G and 2G-1 nodes and Richardson-extrapolates the
    // eigenvalues; the eigenvectors come from the finer grid.
    const auto& V = space.potential();
    const bool extrapolate = fd_nodes == 0;
    const std::size_t G0 = fd_nodes ? fd_nodes : std::max(kFdNodes, 16 * N);
    LAB_REQUIRE(G0 >= 16 * N && G0 >= 8, "finite-difference grid must have at least 16 nodes per mode");
    const auto solve = [&](std::size_t G, std::vector<double>& w, std::vector<double>& z, std::vector<double>& mass) {
        const double dx = 1.0 / double(G - 1);
        mass.assign(G, 0.0);
        std::vector<double> diag(G), off(G - 1), edge(G - 1);
        for (std::size_t j = 0; j < G; ++j) {
            const double wt = (j == 0 || j == G - 1) ? 0.5 : 1.0;
            mass[j] = wt * dx * std::exp(V.value(double(j) * dx)) / space.normalizer();
        }
        for (std::size_t j = 0; j + 1 < G; ++j)
            edge[j] = std::exp(V.value((double(j) + 0.5) * dx)) / space.normalizer() / dx;
        for (std::size_t j = 0; j < G; ++j) {
            double k = 0;
            if (j > 0) k += edge[j - 1];
            if (j + 1 < G) k += edge[j];
            diag[j] = k / mass[j];
        }
        for (std::size_t j = 0; j + 1 < G; ++j) off[j] = -edge[j] / std::sqrt(mass[j] * mass[j + 1]);
        const lapack_int n = lapack_int(G);
        lapack_int found = 0;
        w.assign(G, 0.0);
        z.assign(G * (N + 1), 0.0);
        std::vector<lapack_int> support(2 * (N + 1));
        const lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'I', n, diag.data(), off.data(), 0.0, 0.0, 1,
                                               lapack_int(N + 1), 0.0, &found, w.data(), z.data(), n, support.data());
        if (info != 0 || found != lapack_int(N + 1))
            throw NumericalError("tridiagonal eigensolver failed (info=" + std::to_string(info) + ")");
    };
    std::vector<double> w, z, mass;
    std::vector<double> lam_coarse;
    std::size_t G = G0;
    if (extrapolate) {
        std::vector<double> zc, mc;
        solve(G0, lam_coarse, zc, mc);
        G = 2 * G0 - 1;
    }
    solve(G, w, z, mass);
    const double dx = 1.0 / double(G - 1);
    b.grid_ = G;
    b.table_.resize(N * G);
    double vmin = V.value(0), vmax = vmin;
    for (std::size_t j = 0; j < G; ++j) {
        vmin = std::min(vmin, V.value(double(j) * dx));
        vmax = std::max(vmax, V.value(double(j) * dx));
    }
    b.lambda_scale_ = std::exp(-(vmax - vmin));
    b.sup_sq_ = 0;
    for (std::size_t i = 0; i < N; ++i) {
        const double* col = &z[(i + 1) * G];
        const double sign = col[0] >= 0 ? 1.0 : -1.0;
        for (std::size_t j = 0; j < G; ++j) {
            const double u = sign * col[j] / std::sqrt(mass[j]);
            b.table_[i * G + j] = u;
            b.sup_sq_ = std::max(b.sup_sq_, u * u);
        }
        b.lambda_.push_back(extrapolate ? (4.0 * w[i + 1] - lam_coarse[i + 1]) / 3.0 : w[i + 1]);
        b.freq_.push_back(int(i + 1));
        b.sine_.push_back(0);
    }
    return b;
}

std::string SpectralBasis::mode_descriptor(std::size_t i) const {
    std::ostringstream os;
    if (space_->is_torus()) {
        os << "k=(";
        for (int j = 0; j < dim_; ++j) os << (j ? " " : "") << frequency(i)[j];
        os << ") " << (is_sine(i) ? "sin" : "cos");
    } else {
        os << "n=" << freq_[i] << (tabulated() ? " fd" : " cos");
    }
    return os.str();
}

double SpectralBasis::eval_table(std::size_t i, double x) const {
    const double* u = &table_[i * grid_];
    const double s = std::clamp(x, 0.0, 1.0) * double(grid_ - 1);
    std::size_t j = std::size_t(std::floor(s));
    j = std::clamp<std::size_t>(j, 1, grid_ - 3);
    const double t = s - double(j);  // in [-1, 2] near the ends
    // cubic Lagrange through nodes j-1, j, j+1, j+2
    const double l0 = -t * (t - 1) * (t - 2) / 6.0;
    const double l1 = (t + 1) * (t - 1) * (t - 2) / 2.0;
    const double l2 = -(t + 1) * t * (t - 2) / 2.0;
    const double l3 = (t + 1) * t * (t - 1) / 6.0;
    return l0 * u[j - 1] + l1 * u[j] + l2 * u[j + 1] + l3 * u[j + 2];
}

double SpectralBasis::eval(std::size_t i, const double* x) const {
    if (i >= size()) throw InputError("mode index out of range");
    if (space_->is_torus()) {
        double phase = 0;
        for (int j = 0; j < dim_; ++j) phase += double(frequency(i)[j]) * x[j];
        return kSqrt2 * (is_sine(i) ? std::sin(2 * kPi * phase) : std::cos(2 * kPi * phase));
    }
    if (!tabulated()) return kSqrt2 * std::cos(double(freq_[i]) * kPi * x[0]);
    return eval_table(i, x[0]);
}

void SpectralBasis::gradient(std::size_t i, const double* x, double* g) const {
    if (i >= size()) throw InputError("mode index out of range");
    if (space_->is_torus()) {
        double phase = 0;
        for (int j = 0; j < dim_; ++j) phase += double(frequency(i)[j]) * x[j];
        const double c = std::cos(2 * kPi * phase), s = std::sin(2 * kPi * phase);
        const double amp = is_sine(i) ? kSqrt2 * 2 * kPi * c : -kSqrt2 * 2 * kPi * s;
        for (int j = 0; j < dim_; ++j) g[j] = amp * double(frequency(i)[j]);
        return;
    }
    if (!tabulated()) {
        const double n = double(freq_[i]);
        g[0] = -kSqrt2 * n * kPi * std::sin(n * kPi * x[0]);
        return;
    }
    constexpr double h = 1e-6;
    const double lo = std::max(0.0, x[0] - h), hi = std::min(1.0, x[0] + h);
    g[0] = (eval_table(i, hi) - eval_table(i, lo)) / (hi - lo);
}

void SpectralBasis::eval_all(const double* x, double* out, std::size_t n) const {
    if (n == 0) n = size();
    if (space_->is_torus()) {
        const std::size_t F = std::size_t(max_freq_) + 1;
        std::vector<double> cs(std::size_t(dim_) * F), sn(std::size_t(dim_) * F);
        for (int j = 0; j < dim_; ++j)
            for (std::size_t m = 0; m < F; ++m) {
                cs[std::size_t(j) * F + m] = std::cos(2 * kPi * double(m) * x[j]);
                sn[std::size_t(j) * F + m] = std::sin(2 * kPi * double(m) * x[j]);
            }
        for (std::size_t i = 0; i < n; ++i) {
            double re = 1, im = 0;
            for (int j = 0; j < dim_; ++j) {
                const int k = frequency(i)[j];
                const std::size_t a = std::size_t(std::abs(k));
                const double c = cs[std::size_t(j) * F + a];
                const double s = k < 0 ? -sn[std::size_t(j) * F + a] : sn[std::size_t(j) * F + a];
                const double r2 = re * c - im * s;
                im = re * s + im * c;
                re = r2;
            }
            out[i] = kSqrt2 * (is_sine(i) ? im : re);
        }
        return;
    }
    for (std::size_t i = 0; i < n; ++i) out[i] = eval(i, x);
}

void SpectralBasis::gradient_all(const double* x, double* out, std::size_t n) const {
    if (n == 0) n = size();
    if (space_->is_torus()) {
        const std::size_t F = std::size_t(max_freq_) + 1;
        std::vector<double> cs(std::size_t(dim_) * F), sn(std::size_t(dim_) * F);
        for (int j = 0; j < dim_; ++j)
            for (std::size_t m = 0; m < F; ++m) {
                cs[std::size_t(j) * F + m] = std::cos(2 * kPi * double(m) * x[j]);
                sn[std::size_t(j) * F + m] = std::sin(2 * kPi * double(m) * x[j]);
            }
        for (std::size_t i = 0; i < n; ++i) {
            double re = 1, im = 0;
            for (int j = 0; j < dim_; ++j) {
                const int k = frequency(i)[j];
                const std::size_t a = std::size_t(std::abs(k));
                const double c = cs[std::size_t(j) * F + a];
                const double s = k < 0 ? -sn[std::size_t(j) * F + a] : sn[std::size_t(j) * F + a];
                const double r2 = re * c - im * s;
                im = re * s + im * c;
                re = r2;
            }
            const double amp = is_sine(i) ? kSqrt2 * 2 * kPi * re : -kSqrt2 * 2 * kPi * im;
            for (int j = 0; j < dim_; ++j) out[i * std::size_t(dim_) + std::size_t(j)] = amp * double(frequency(i)[j]);
        }
        return;
    }
    for (std::size_t i = 0; i < n; ++i) gradient(i, x, out + i * std::size_t(dim_));
}

BoundedValue SpectralBasis::heat_kernel(double eps, const double* x, const double* y) const {
    if (!(eps > 0)) throw InputError("heat kernel time must be positive");
    std::vector<double> px(size()), py(size());
    eval_all(x, px.data());
    eval_all(y, py.data());
    double s = 1.0;
    for (std::size_t i = 0; i < size(); ++i) s += std::exp(-lambda_[i] * eps) * px[i] * py[i];
    return {s, sup_sq_ * tail_exp(eps)};
}

double SpectralBasis::tail_sum(double power) const {
    const int d = dim_;
    if (!(power > 0.5 * d)) throw DomainError("tail sum diverges unless power > d/2");
    const double lamN = lambda_.back();
    const double Nf = double(size());
    if (space_->is_torus()) {
        // Sum_{i>N} g(lambda_i) = int_{lambda_N}^inf -g'(l) (count(l) - N) dl with
        // count(l) <= w_d (s + sqrt(d)/2)^d - 1, s = sqrt(l)/(2 pi).
        const double wd = unit_ball_volume(d);
        const double c = 0.5 * std::sqrt(double(d));
        const double s0 = std::sqrt(lamN) / (2 * kPi);
        const double scale = std::pow(4 * kPi * kPi, -power);
        double total = -(1.0 + Nf) * std::pow(lamN, -power);
        double binom = 1.0;
        for (int j = 0; j <= d; ++j) {
            if (j > 0) binom = binom * double(d - j + 1) / double(j);
            const double coef = wd * binom * std::pow(c, d - j);
            total += coef * power * scale * 2.0 * std::pow(s0, double(j) - 2 * power) / (2 * power - double(j));
        }
        return std::max(total, 0.0);
    }
    // interval: lambda_n >= scale * n^2 pi^2; integral comparison
    const double a = lambda_scale_ * kPi * kPi;
    return std::pow(a, -power) * std::pow(Nf, 1 - 2 * power) / (2 * power - 1);
}

double SpectralBasis::tail_exp(double eps) const {
    if (!(eps > 0)) throw InputError("tail_exp requires eps > 0");
    const double lamN = lambda_.back();
    const double Nf = double(size());
    if (space_->is_torus()) {
        const int d = dim_;
        const double wd = unit_ball_volume(d);
        const double c = 0.5 * std::sqrt(double(d));
        const auto excess = [&](double l) {
            return std::max(0.0, wd * std::pow(std::sqrt(l) / (2 * kPi) + c, d) - 1.0 - Nf);
        };
        // int_{lamN}^inf eps e^{-eps l} excess(l) dl, substitute l = lamN + t/eps
        const std::size_t n = 4000;
        const double tmax = 60.0;
        const double h = tmax / double(n);
        double s = 0;
        for (std::size_t i = 0; i <= n; ++i) {
            const double t = double(i) * h;
            const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            s += w * std::exp(-t) * excess(lamN + t / eps);
        }
        return std::exp(-eps * lamN) * s * h / 3.0;
    }
    const double a = lambda_scale_ * kPi * kPi;
    // int_N^inf e^{-eps a x^2} dx
    const double r = std::sqrt(eps * a);
    return 0.5 * std::sqrt(kPi) / r * std::erfc(r * Nf);
}

}  // namespace lab
