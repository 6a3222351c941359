#include <cmath>
#include <limits>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "lab/rng.hpp"
#include "lab/simd/kernels.hpp"

using namespace lab;
using lab::simd::Isa;

TEST_CASE("philox4x32-10 known answers") {
    const PhiloxCtr z = philox4x32_10({0, 0, 0, 0}, {0, 0});
    CHECK(z == PhiloxCtr{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    const PhiloxCtr f = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                      {0xffffffffu, 0xffffffffu});
    CHECK(f == PhiloxCtr{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    const PhiloxCtr p = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                      {0xa4093822u, 0x299f31d0u});
    CHECK(p == PhiloxCtr{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("custom log and sincos track libm") {
    RngStream rs(11, 0, RngTag::test);
    double worst_log = 0, worst_trig = 0;
    for (int i = 0; i < 100000; ++i) {
        const double u = 1.0 - rs.uniform();
        worst_log = std::max(worst_log, std::abs(simd::scalar::log_pos(u) - std::log(u)));
        const double x = 4.0 * rs.uniform() - 2.0;
        double s, c;
        simd::scalar::sincos_2pi(x, &s, &c);
        worst_trig = std::max(worst_trig, std::abs(s - std::sin(2 * M_PI * x)));
        worst_trig = std::max(worst_trig, std::abs(c - std::cos(2 * M_PI * x)));
    }
    CHECK(worst_log < 1e-14);
    CHECK(worst_trig < 1e-14);
    CHECK(simd::scalar::log_pos(1.0) == 0.0);
}

TEST_CASE("normal generator moments") {
    std::vector<double> z(400000);
    simd::kernels().fill_normals(3, 1, 7, 0, z.size() / 2, z.data());
    double m1 = 0, m2 = 0, m4 = 0;
    for (double v : z) {
        m1 += v;
        m2 += v * v;
        m4 += v * v * v * v;
    }
    const double n = double(z.size());
    CHECK(std::abs(m1 / n) < 4.0 / std::sqrt(n));
    CHECK(std::abs(m2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(m4 / n - 3.0) < 4.0 * std::sqrt(96.0 / n));
}

TEST_CASE("stream normals agree with single draws") {
    RngStream a(5, 2, RngTag::path), b(5, 2, RngTag::path);
    std::vector<double> v(37);
    a.normals(v.data(), v.size());
    for (double x : v) CHECK(x == b.normal());
}

TEST_CASE("avx2 kernels reproduce the scalar reference") {
    if (!simd::cpu_supports(Isa::avx2)) return;
    const auto& s = simd::kernels_for(Isa::scalar);
    const auto& v = simd::kernels_for(Isa::avx2);
    REQUIRE(v.isa == Isa::avx2);

    SUBCASE("fill_normals bitwise") {
        for (std::uint64_t first : {0ull, 5ull, 0xfffffffcull}) {
            std::vector<double> a(2 * 131), b(2 * 131);
            s.fill_normals(0x1234567890abcdefull, 9, 3, first, 131, a.data());
            v.fill_normals(0x1234567890abcdefull, 9, 3, first, 131, b.data());
            for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
        }
    }
    SUBCASE("fourier_accumulate") {
        RngStream rs(1, 0, RngTag::test);
        const std::size_t n = 1001, K = 300;
        std::vector<double> x(n), w(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rs.uniform();
            w[i] = rs.uniform() / double(n);
        }
        for (double freq : {1.0, 0.5}) {
            std::vector<double> c1(K, 0), s1(K, 0), c2(K, 0), s2(K, 0);
            s.fourier_accumulate(x.data(), w.data(), n, freq, K, c1.data(), s1.data());
            v.fourier_accumulate(x.data(), w.data(), n, freq, K, c2.data(), s2.data());
            for (std::size_t k = 0; k < K; ++k) {
                CHECK(std::abs(c1[k] - c2[k]) < 1e-12);
                CHECK(std::abs(s1[k] - s2[k]) < 1e-12);
            }
            // direct evaluation oracle
            for (std::size_t k : {0ul, 17ul, K - 1}) {
                double cd = 0, sd = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    cd += w[i] * std::cos(2 * M_PI * double(k + 1) * freq * x[i]);
                    sd += w[i] * std::sin(2 * M_PI * double(k + 1) * freq * x[i]);
                }
                CHECK(std::abs(c1[k] - cd) < 1e-12);
                CHECK(std::abs(s1[k] - sd) < 1e-12);
            }
        }
    }
    SUBCASE("lse_axis") {
        RngStream rs(2, 0, RngTag::test);
        const double ninf = -std::numeric_limits<double>::infinity();
        using Shape = std::tuple<std::size_t, std::size_t, std::size_t>;
        for (auto [outer, m, inner] : {Shape{3, 7, 9}, Shape{1, 13, 1}, Shape{5, 6, 2}, Shape{2, 16, 16}}) {
            std::vector<double> in(outer * m * inner), cost(m * m), o1(in.size()), o2(in.size());
            for (auto& e : in) e = rs.uniform() < 0.1 ? ninf : 30 * (rs.uniform() - 0.5);
            for (std::size_t t = 0; t < inner; ++t) in[t] = ninf;  // some all -inf columns when m row 0 only
            for (auto& e : cost) e = 50 * rs.uniform();
            s.lse_axis(in.data(), o1.data(), outer, m, inner, cost.data());
            v.lse_axis(in.data(), o2.data(), outer, m, inner, cost.data());
            for (std::size_t i = 0; i < in.size(); ++i) {
                if (std::isinf(o1[i])) {
                    CHECK(o1[i] == o2[i]);
                } else {
                    CHECK(std::abs(o1[i] - o2[i]) <= 1e-12 * std::max(1.0, std::abs(o1[i])));
                }
            }
        }
    }
    SUBCASE("price_row bitwise with first-minimum ties") {
        RngStream rs(3, 0, RngTag::test);
        for (std::size_t m : {1ul, 4ul, 7ul, 64ul, 1003ul}) {
            std::vector<double> cost(m), pit(m);
            std::vector<std::int8_t> st(m);
            for (std::size_t j = 0; j < m; ++j) {
                cost[j] = double(rs.below(5));
                pit[j] = double(rs.below(7));
                st[j] = std::int8_t(int(rs.below(3)) - 1);
            }
            double b1, b2;
            std::size_t j1, j2;
            const std::size_t n1 = s.price_row(cost.data(), st.data(), 1.0, pit.data(), m, &b1, &j1);
            const std::size_t n2 = v.price_row(cost.data(), st.data(), 1.0, pit.data(), m, &b2, &j2);
            CHECK(n1 == n2);
            CHECK(b1 == b2);
            CHECK(j1 == j2);
        }
    }
}
