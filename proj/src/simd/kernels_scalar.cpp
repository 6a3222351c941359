// Reference kernels. Compiled with -ffp-contract=off; every fused
// multiply-add is explicit so the AVX2 variant can reproduce it bit for bit.
#include "lab/simd/kernels.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "lab/rng.hpp"
#include "normal_poly.hpp"

namespace lab::simd::scalar {

double log_pos(double x) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
    double e = double(std::int64_t(bits >> 52) - 1023);
    double m = std::bit_cast<double>((bits & 0x000FFFFFFFFFFFFFull) | 0x3FF0000000000000ull);
    if (m > poly::kSqrt2) {
        m = m * 0.5;
        e = e + 1.0;
    }
    const double s = (m - 1.0) / (m + 1.0);
    const double s2 = s * s;
    double p = poly::kAtanh[poly::kAtanhTerms - 1];
    for (int k = poly::kAtanhTerms - 2; k >= 0; --k) p = std::fma(p, s2, poly::kAtanh[k]);
    const double logm = (2.0 * s) * p;
    return std::fma(e, poly::kLn2, logm);
}

void sincos_2pi(double x, double* s_out, double* c_out) {
    const double r = x - std::nearbyint(x);
    const double q = std::nearbyint(4.0 * r);
    const double f = std::fma(-0.25, q, r);
    const double a = f * poly::kTwoPi;
    const double a2 = a * a;
    double ps = poly::kSin[poly::kSinTerms - 1];
    for (int k = poly::kSinTerms - 2; k >= 0; --k) ps = std::fma(ps, a2, poly::kSin[k]);
    double pc = poly::kCos[poly::kCosTerms - 1];
    for (int k = poly::kCosTerms - 2; k >= 0; --k) pc = std::fma(pc, a2, poly::kCos[k]);
    double s = a * ps;
    double c = pc;
    // quadrant = q mod 4 in {0,1,2,3}
    const double quad = q - 4.0 * std::floor(q * 0.25);
    if (quad == 1.0 || quad == 3.0) {
        const double t = s;
        s = c;
        c = t;
    }
    if (quad >= 2.0) s = -s;
    if (quad == 1.0 || quad == 2.0) c = -c;
    *s_out = s;
    *c_out = c;
}

namespace {

void fill_normals(std::uint64_t seed, std::uint32_t replica, std::uint32_t tag,
                  std::uint64_t first_call, std::size_t n_calls, double* out) {
    const PhiloxKey key = {std::uint32_t(seed), std::uint32_t(seed >> 32)};
    for (std::size_t j = 0; j < n_calls; ++j) {
        const std::uint64_t call = first_call + j;
        const PhiloxCtr r = philox4x32_10({std::uint32_t(call), std::uint32_t(call >> 32), replica, tag}, key);
        const double u1 = 1.0 - bits_to_unit((std::uint64_t(r[1]) << 32) | r[0]);
        const double u2 = bits_to_unit((std::uint64_t(r[3]) << 32) | r[2]);
        const double rad = std::sqrt(-2.0 * log_pos(u1));
        double s, c;
        sincos_2pi(u2, &s, &c);
        out[2 * j] = rad * c;
        out[2 * j + 1] = rad * s;
    }
}

void fourier_accumulate(const double* x, const double* w, std::size_t n, double freq,
                        std::size_t K, double* cos_out, double* sin_out) {
    for (std::size_t j = 0; j < n; ++j) {
        double s1, c1;
        sincos_2pi(freq * x[j], &s1, &c1);
        double c = c1, s = s1;
        const double wj = w[j];
        for (std::size_t k = 0; k < K; ++k) {
            cos_out[k] += wj * c;
            sin_out[k] += wj * s;
            const double cn = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = cn;
        }
    }
}

void lse_axis(const double* in, double* out, std::size_t outer, std::size_t m, std::size_t inner,
              const double* cost) {
    constexpr double ninf = -std::numeric_limits<double>::infinity();
    for (std::size_t o = 0; o < outer; ++o) {
        const double* src = in + o * m * inner;
        double* dst = out + o * m * inner;
        for (std::size_t jp = 0; jp < m; ++jp) {
            const double* crow = cost + jp * m;
            for (std::size_t t = 0; t < inner; ++t) {
                double mx = ninf;
                for (std::size_t j = 0; j < m; ++j) mx = std::fmax(mx, src[j * inner + t] - crow[j]);
                if (mx == ninf) {
                    dst[jp * inner + t] = ninf;
                    continue;
                }
                double sum = 0.0;
                for (std::size_t j = 0; j < m; ++j) sum += std::exp(src[j * inner + t] - crow[j] - mx);
                dst[jp * inner + t] = mx + std::log(sum);
            }
        }
    }
}

std::size_t price_row(const double* cost, const std::int8_t* state, double pi_i, const double* pi_t,
                      std::size_t m, double* best, std::size_t* best_j) {
    std::size_t cnt = 0;
    double mn = 0.0;
    std::size_t arg = m;
    for (std::size_t j = 0; j < m; ++j) {
        const double c = double(state[j]) * ((cost[j] + pi_i) - pi_t[j]);
        if (c < 0.0) {
            ++cnt;
            if (c < mn) {
                mn = c;
                arg = j;
            }
        }
    }
    *best = mn;
    *best_j = arg;
    return cnt;
}

}  // namespace

const KernelTable table = {Isa::scalar, fill_normals, fourier_accumulate, lse_axis, price_row};

}  // namespace lab::simd::scalar
