#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "lab/error.hpp"
#include "lab/spectral.hpp"

using namespace lab;
using std::numbers::pi;

namespace {

// Eigenvalues of a symmetric tridiagonal matrix (ascending).
std::vector<double> tridiag_eigs(std::vector<double> d, std::vector<double> e) {
    const lapack_int info = LAPACKE_dstev(LAPACK_COL_MAJOR, 'N', lapack_int(d.size()), d.data(), e.data(), nullptr, 1);
    REQUIRE(info == 0);
    return d;
}

// Periodic second-difference Laplacian on n points, split into its even
// (cosine) and odd (sine) invariant subspaces, both tridiagonal.
std::vector<double> periodic_fd_spectrum(std::size_t n) {
    const double s = double(n) * double(n);
    const std::size_t h = n / 2;
    // even: u_0..u_h with reflections at both ends; symmetrized with weights
    std::vector<double> w(h + 1, 1.0);
    w[0] = w[h] = 0.5;
    std::vector<double> d(h + 1, 2 * s), e(h);
    for (std::size_t j = 0; j < h; ++j) e[j] = -s * std::sqrt((j == 0 || j + 1 == h + 1 - 0 ? 1.0 : 1.0));
    // weighted: A_sym = W^{1/2} A W^{-1/2}; A_{01} = -2s, A_{10} = -s -> sym -s*sqrt(2)
    e[0] = -s * std::sqrt(2.0);
    e[h - 1] = -s * std::sqrt(2.0);
    auto ev = tridiag_eigs(d, e);
    // odd: u_1..u_{h-1}, Dirichlet
    std::vector<double> d2(h - 1, 2 * s), e2(h - 2, -s);
    auto od = tridiag_eigs(d2, e2);
    ev.insert(ev.end(), od.begin(), od.end());
    std::sort(ev.begin(), ev.end());
    return ev;
}

// Neumann vertex-grid Laplacian on [0,1] with n nodes.
std::vector<double> neumann_fd_spectrum(std::size_t n) {
    const double s = double(n - 1) * double(n - 1);
    std::vector<double> d(n, 2 * s), e(n - 1, -s);
    // lumped half masses at the ends: row 0 is (u0 - u1) * s / 0.5
    e[0] = -s * std::sqrt(2.0);
    e[n - 2] = -s * std::sqrt(2.0);
    return tridiag_eigs(d, e);
}

}  // namespace

TEST_CASE("torus and interval spectra against finite-difference eigensolvers") {
    const auto t1 = SpectralBasis::build(ModelSpace::torus(1), 2);
    REQUIRE(t1.size() == 2);
    CHECK(t1.eigenvalue(0) == doctest::Approx(4 * pi * pi).epsilon(1e-15));
    CHECK(t1.eigenvalue(1) == doctest::Approx(39.4784176));
    CHECK(t1.mode_descriptor(0) == "k=(1) cos");
    CHECK(t1.mode_descriptor(1) == "k=(1) sin");
    const auto fd = periodic_fd_spectrum(4096);
    CHECK(std::abs(fd[0]) < 1e-6);
    CHECK(std::abs(fd[1] / t1.eigenvalue(0) - 1) < 1e-6);
    CHECK(std::abs(fd[2] / t1.eigenvalue(1) - 1) < 1e-6);

    const auto iv = SpectralBasis::build(ModelSpace::interval(), 1);
    CHECK(iv.eigenvalue(0) == doctest::Approx(9.8696044));
    const auto nfd = neumann_fd_spectrum(4096);
    CHECK(std::abs(nfd[1] / iv.eigenvalue(0) - 1) < 1e-6);
    const double x0 = 0.3;
    CHECK(iv.eval(0, &x0) == doctest::Approx(std::sqrt(2.0) * std::cos(pi * 0.3)));
    CHECK(simpson01([&](double x) { return std::pow(iv.eval(0, &x), 2); }, 4096) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ordering and half-space enumeration") {
    for (int d : {1, 2, 3, 5}) {
        const auto b = SpectralBasis::build(ModelSpace::torus(d), 600);
        REQUIRE(b.size() == 600);
        for (std::size_t i = 1; i < b.size(); ++i) REQUIRE(b.eigenvalue(i - 1) <= b.eigenvalue(i));
        // multiplicity of lambda = 4 pi^2 is 2d (k = +-e_j)
        std::size_t m = 0;
        for (double l : b.eigenvalues()) m += std::abs(l - 4 * pi * pi) < 1e-9;
        CHECK(m == std::size_t(2 * d));
        for (std::size_t i = 0; i < b.size(); ++i) {
            const int* k = b.frequency(i);
            int j = 0;
            while (k[j] == 0) ++j;
            REQUIRE(k[j] > 0);
        }
    }
    CHECK_THROWS_AS(SpectralBasis::build(ModelSpace::torus(1), 10, 5), ResourceError);
    CHECK_THROWS_AS(SpectralBasis::build(ModelSpace::torus(1), 0), InputError);
}

namespace {
void check_orthonormal(const SpectralBasis& b, std::size_t ngrid, double tol) {
    const std::size_t n = std::min<std::size_t>(b.size(), 50);
    const auto& sp = b.space();
    std::vector<double> G(n * n, 0.0), mean(n, 0.0), gradsq(n, 0.0);
    std::vector<double> v(b.size()), g(b.size() * std::size_t(sp.dim()));
    const int d = sp.dim();
    // tensor midpoint rule on the torus (exact for trig polynomials), Gauss
    // per cell on the interval
    const double gx[5] = {0.04691007703066800, 0.23076534494715845, 0.5, 0.76923465505284155, 0.95308992296933200};
    const double gw[5] = {0.11846344252809454, 0.23931433524968324, 0.28444444444444444, 0.23931433524968324,
                          0.11846344252809454};
    auto acc = [&](const double* x, double w) {
        b.eval_all(x, v.data(), n);
        b.gradient_all(x, g.data(), n);
        for (std::size_t i = 0; i < n; ++i) {
            mean[i] += w * v[i];
            for (int k = 0; k < d; ++k) gradsq[i] += w * g[i * std::size_t(d) + std::size_t(k)] * g[i * std::size_t(d) + std::size_t(k)];
            for (std::size_t j = 0; j < n; ++j) G[i * n + j] += w * v[i] * v[j];
        }
    };
    if (sp.is_torus()) {
        std::size_t total = 1;
        for (int k = 0; k < d; ++k) total *= ngrid;
        auto x = std::vector<double>(std::size_t(d));
        for (std::size_t idx = 0; idx < total; ++idx) {
            std::size_t r = idx;
            for (int k = 0; k < d; ++k) {
                x[std::size_t(k)] = (double(r % ngrid) + 0.5) / double(ngrid);
                r /= ngrid;
            }
            acc(x.data(), 1.0 / double(total));
        }
    } else {
        for (std::size_t c = 0; c < ngrid; ++c)
            for (int q = 0; q < 5; ++q) {
                const double x = (double(c) + gx[q]) / double(ngrid);
                acc(&x, gw[q] / double(ngrid) * sp.invariant_density(x));
            }
    }
    double worst_g = 0, worst_m = 0, worst_d = 0;
    for (std::size_t i = 0; i < n; ++i) {
        worst_m = std::max(worst_m, std::abs(mean[i]));
        worst_d = std::max(worst_d, std::abs(gradsq[i] / b.eigenvalue(i) - 1));
        for (std::size_t j = 0; j < n; ++j) worst_g = std::max(worst_g, std::abs(G[i * n + j] - (i == j)));
    }
    MESSAGE(sp.describe() << ": orthonormality " << worst_g << ", mean " << worst_m << ", Dirichlet " << worst_d);
    CHECK(worst_g < 1e-6);
    CHECK(worst_m < 1e-8);
    CHECK(worst_d < tol);
}
}  // namespace

TEST_CASE("orthonormality, mean zero and the integration by parts identity") {
    check_orthonormal(SpectralBasis::build(ModelSpace::torus(1), 200), 512, 1e-5);
    check_orthonormal(SpectralBasis::build(ModelSpace::torus(2), 200), 64, 1e-5);
    check_orthonormal(SpectralBasis::build(ModelSpace::interval(), 200), 512, 1e-5);
    check_orthonormal(SpectralBasis::build(ModelSpace::interval({PotentialKind::cosine, 1.0}), 60), 4096, 1e-5);
}

TEST_CASE("eigenfunction gradients") {
    const auto t1 = SpectralBasis::build(ModelSpace::torus(1), 4);
    double g;
    const double x0 = 0.0;
    t1.gradient(0, &x0, &g);
    CHECK(g == doctest::Approx(0.0));
    t1.gradient(1, &x0, &g);
    CHECK(g == doctest::Approx(2 * pi * std::sqrt(2.0)));
    CHECK(g == doctest::Approx(8.8858).epsilon(1e-4));
    const auto iv = SpectralBasis::build(ModelSpace::interval(), 3);
    iv.gradient(0, &x0, &g);
    CHECK(g == doctest::Approx(0.0));
    CHECK_THROWS_AS(t1.gradient(4, &x0, &g), InputError);
    // finite differences of the analytic modes
    const auto t2 = SpectralBasis::build(ModelSpace::torus(2), 30);
    const double x[2] = {0.31, 0.77};
    for (std::size_t i = 0; i < 30; ++i) {
        double gr[2];
        t2.gradient(i, x, gr);
        for (int k = 0; k < 2; ++k) {
            double xp[2] = {x[0], x[1]}, xm[2] = {x[0], x[1]};
            xp[k] += 1e-6;
            xm[k] -= 1e-6;
            CHECK(gr[k] == doctest::Approx((t2.eval(i, xp) - t2.eval(i, xm)) / 2e-6).epsilon(1e-6));
        }
    }
}

TEST_CASE("heat kernel") {
    const auto t1 = SpectralBasis::build(ModelSpace::torus(1), 512);
    const double o = 0.0;
    const double eps = 0.01;
    double image = 0;
    for (int m = -20; m <= 20; ++m) image += std::exp(-double(m * m) / (4 * eps));
    image /= std::sqrt(4 * pi * eps);
    const auto hk = t1.heat_kernel(eps, &o, &o);
    CHECK(std::abs(hk.value - image) < 1e-9);
    CHECK(hk.value == doctest::Approx(2.82095).epsilon(1e-5));
    CHECK(hk.tail_bound < 1e-8);
    CHECK_THROWS_AS(t1.heat_kernel(0.0, &o, &o), InputError);

    RngStream rs(4, 0, RngTag::test);
    for (int it = 0; it < 100; ++it) {
        const double x = rs.uniform(), y = rs.uniform();
        CHECK(std::abs(t1.heat_kernel(10.0, &x, &y).value - 1.0) < 1e-8);
        CHECK(std::abs(t1.heat_kernel(0.003, &x, &y).value - t1.heat_kernel(0.003, &y, &x).value) < 1e-12);
    }
    const auto iv = SpectralBasis::build(ModelSpace::interval({PotentialKind::quadratic, 2.0}), 40);
    const double a = 0.2, b = 0.9;
    CHECK(std::abs(iv.heat_kernel(10.0, &a, &b).value - 1.0) < 1e-8);

    // conservation on Torus(2)
    const auto t2 = SpectralBasis::build(ModelSpace::torus(2), 2048);
    const double x[2] = {0.13, 0.61};
    double total = 0;
    const int n = 64;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double y[2] = {(i + 0.5) / n, (j + 0.5) / n};
            total += t2.heat_kernel(0.01, x, y).value;
        }
    CHECK(std::abs(total / (n * n) - 1.0) < 1e-7);

    // semigroup property on Torus(1)
    const double s = 0.004, t = 0.007, xa = 0.2, ya = 0.45;
    double conv = 0;
    const int m = 2048;
    for (int j = 0; j < m; ++j) {
        const double z = (j + 0.5) / m;
        conv += t1.heat_kernel(s, &xa, &z).value * t1.heat_kernel(t, &z, &ya).value;
    }
    CHECK(std::abs(conv / m - t1.heat_kernel(s + t, &xa, &ya).value) < 1e-9);
}

TEST_CASE("spectral tail sums") {
    // series oracles
    double torus_full = 0, interval_full = 0;
    for (int k = 200000; k >= 1; --k) {
        torus_full += 2.0 / std::pow(4 * pi * pi * double(k) * k, 2);
        interval_full += 1.0 / std::pow(pi * pi * double(k) * k, 2);
    }
    CHECK(torus_full == doctest::Approx(1.0 / 720).epsilon(1e-12));
    CHECK(interval_full == doctest::Approx(1.0 / 90).epsilon(1e-12));
    for (std::size_t N : {8ul, 64ul, 512ul}) {
        const auto t1 = SpectralBasis::build(ModelSpace::torus(1), N);
        double part = 0;
        for (double l : t1.eigenvalues()) part += 1 / (l * l);
        const double tail = t1.tail_sum(2.0);
        CHECK(part <= 1.0 / 720);
        CHECK(part + tail >= 1.0 / 720);
        CHECK(part + tail <= 1.0 / 720 * (1 + 4.0 / double(N)));
        const auto iv = SpectralBasis::build(ModelSpace::interval(), N);
        part = 0;
        for (double l : iv.eigenvalues()) part += 1 / (l * l);
        CHECK(part + iv.tail_sum(2.0) >= 1.0 / 90);
        CHECK(part + iv.tail_sum(2.0) <= 1.0 / 90 * (1 + 4.0 / double(N)));
    }
    for (int d : {2, 3}) {
        double prev = INFINITY;
        for (std::size_t N : {100ul, 400ul, 1600ul}) {
            const auto b = SpectralBasis::build(ModelSpace::torus(d), N);
            const double t = b.tail_sum(2.0);
            CHECK(t < prev);
            prev = t;
        }
    }
    // brute-force tail on Torus(2)
    const auto b2 = SpectralBasis::build(ModelSpace::torus(2), 300);
    double exact = 0;
    const auto big = SpectralBasis::build(ModelSpace::torus(2), 200000);
    for (std::size_t i = 300; i < big.size(); ++i) exact += 1 / std::pow(big.eigenvalue(i), 2);
    CHECK(b2.tail_sum(2.0) >= exact);
    CHECK_THROWS_AS(b2.tail_sum(1.0), DomainError);
    CHECK_THROWS_AS(SpectralBasis::build(ModelSpace::torus(3), 10).tail_sum(1.5), DomainError);
}

TEST_CASE("Weyl growth on the torus") {
    for (int d : {1, 2, 3}) {
        const auto b = SpectralBasis::build(ModelSpace::torus(d), 4096);
        double lo = INFINITY, hi = 0;
        for (std::size_t i = 99; i < b.size(); ++i) {
            const double r = b.eigenvalue(i) / std::pow(double(i + 1), 2.0 / d);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        MESSAGE("d=" << d << " Weyl constants [" << lo << ", " << hi << "]");
        CHECK(lo > 0);
        CHECK(hi / lo < 2.0);
    }
}

TEST_CASE("finite-difference eigenvalues converge at second order") {
    const auto sp = ModelSpace::interval({PotentialKind::cosine, 1.0});
    const auto b1 = SpectralBasis::build(sp, 10, kDefaultModeCap, 257);
    const auto b2 = SpectralBasis::build(sp, 10, kDefaultModeCap, 513);
    const auto b3 = SpectralBasis::build(sp, 10, kDefaultModeCap, 1025);
    const auto b4 = SpectralBasis::build(sp, 10, kDefaultModeCap, 2049);
    for (std::size_t i = 0; i < 10; ++i) {
        const double e1 = b1.eigenvalue(i) - b2.eigenvalue(i);
        const double e2 = b2.eigenvalue(i) - b3.eigenvalue(i);
        const double e3 = b3.eigenvalue(i) - b4.eigenvalue(i);
        CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
        CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.05));
    }
    // flat potential through the same solver path reproduces n^2 pi^2
    const auto tiny = SpectralBasis::build(ModelSpace::interval({PotentialKind::quadratic, 1e-300}), 5);
    (void)tiny;
}
