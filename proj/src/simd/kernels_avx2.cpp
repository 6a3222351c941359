// AVX2/FMA variants. Built with -mavx2 -mfma -ffp-contract=off and only
// reached after a runtime CPUID check.
#include "lab/simd/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "lab/rng.hpp"
#include "normal_poly.hpp"

namespace lab::simd::avx2 {
namespace {

struct Mulhilo {
    __m256i lo, hi;
};

inline Mulhilo mulhilo(__m256i a, __m256i m) {
    const __m256i even = _mm256_mul_epu32(a, m);
    const __m256i odd = _mm256_mul_epu32(_mm256_srli_epi64(a, 32), _mm256_srli_epi64(m, 32));
    Mulhilo r;
    r.lo = _mm256_blend_epi32(even, _mm256_slli_epi64(odd, 32), 0b10101010);
    r.hi = _mm256_blend_epi32(_mm256_srli_epi64(even, 32), odd, 0b10101010);
    return r;
}

// Eight Philox4x32-10 blocks, one per 32-bit lane.
inline void philox8(__m256i& x0, __m256i& x1, __m256i& x2, __m256i& x3, std::uint32_t k0,
                    std::uint32_t k1) {
    const __m256i m0 = _mm256_set1_epi32(int(kPhiloxM0));
    const __m256i m1 = _mm256_set1_epi32(int(kPhiloxM1));
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k0 += kPhiloxW0;
            k1 += kPhiloxW1;
        }
        const Mulhilo p0 = mulhilo(x0, m0);
        const Mulhilo p1 = mulhilo(x2, m1);
        const __m256i n0 = _mm256_xor_si256(_mm256_xor_si256(p1.hi, x1), _mm256_set1_epi32(int(k0)));
        const __m256i n2 = _mm256_xor_si256(_mm256_xor_si256(p0.hi, x3), _mm256_set1_epi32(int(k1)));
        x0 = n0;
        x1 = p1.lo;
        x2 = n2;
        x3 = p0.lo;
    }
}

inline __m256d to_unit(__m256i bits) {
    const __m256i mant = _mm256_or_si256(_mm256_srli_epi64(bits, 12),
                                         _mm256_set1_epi64x(0x3FF0000000000000ll));
    return _mm256_sub_pd(_mm256_castsi256_pd(mant), _mm256_set1_pd(1.0));
}

inline __m256d log_pos(__m256d x) {
    const __m256i bits = _mm256_castpd_si256(x);
    // exponent as double: ((bits >> 52) - 1023), exponents here are < 2^11
    const __m256i ebits = _mm256_srli_epi64(bits, 52);
    const __m256d magic = _mm256_set1_pd(4503599627370496.0);  // 2^52
    __m256d e = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(ebits, _mm256_castpd_si256(magic))), magic);
    e = _mm256_sub_pd(e, _mm256_set1_pd(1023.0));
    __m256d m = _mm256_castsi256_pd(_mm256_or_si256(
        _mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFll)),
        _mm256_set1_epi64x(0x3FF0000000000000ll)));
    const __m256d big = _mm256_cmp_pd(m, _mm256_set1_pd(poly::kSqrt2), _CMP_GT_OQ);
    m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);
    e = _mm256_blendv_pd(e, _mm256_add_pd(e, _mm256_set1_pd(1.0)), big);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
    const __m256d s2 = _mm256_mul_pd(s, s);
    __m256d p = _mm256_set1_pd(poly::kAtanh[poly::kAtanhTerms - 1]);
    for (int k = poly::kAtanhTerms - 2; k >= 0; --k) p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(poly::kAtanh[k]));
    const __m256d logm = _mm256_mul_pd(_mm256_mul_pd(_mm256_set1_pd(2.0), s), p);
    return _mm256_fmadd_pd(e, _mm256_set1_pd(poly::kLn2), logm);
}

inline void sincos_2pi(__m256d x, __m256d* s_out, __m256d* c_out) {
    constexpr int kRound = _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC;
    const __m256d r = _mm256_sub_pd(x, _mm256_round_pd(x, kRound));
    const __m256d q = _mm256_round_pd(_mm256_mul_pd(_mm256_set1_pd(4.0), r), kRound);
    const __m256d f = _mm256_fmadd_pd(_mm256_set1_pd(-0.25), q, r);
    const __m256d a = _mm256_mul_pd(f, _mm256_set1_pd(poly::kTwoPi));
    const __m256d a2 = _mm256_mul_pd(a, a);
    __m256d ps = _mm256_set1_pd(poly::kSin[poly::kSinTerms - 1]);
    for (int k = poly::kSinTerms - 2; k >= 0; --k) ps = _mm256_fmadd_pd(ps, a2, _mm256_set1_pd(poly::kSin[k]));
    __m256d pc = _mm256_set1_pd(poly::kCos[poly::kCosTerms - 1]);
    for (int k = poly::kCosTerms - 2; k >= 0; --k) pc = _mm256_fmadd_pd(pc, a2, _mm256_set1_pd(poly::kCos[k]));
    const __m256d s = _mm256_mul_pd(a, ps);
    const __m256d c = pc;
    const __m256d quad = _mm256_sub_pd(
        q, _mm256_mul_pd(_mm256_set1_pd(4.0), _mm256_floor_pd(_mm256_mul_pd(q, _mm256_set1_pd(0.25)))));
    const __m256d q1 = _mm256_cmp_pd(quad, _mm256_set1_pd(1.0), _CMP_EQ_OQ);
    const __m256d q2 = _mm256_cmp_pd(quad, _mm256_set1_pd(2.0), _CMP_EQ_OQ);
    const __m256d q3 = _mm256_cmp_pd(quad, _mm256_set1_pd(3.0), _CMP_EQ_OQ);
    const __m256d swap = _mm256_or_pd(q1, q3);
    const __m256d sw_s = _mm256_blendv_pd(s, c, swap);
    const __m256d sw_c = _mm256_blendv_pd(c, s, swap);
    const __m256d sign = _mm256_set1_pd(-0.0);
    *s_out = _mm256_xor_pd(sw_s, _mm256_and_pd(_mm256_or_pd(q2, q3), sign));
    *c_out = _mm256_xor_pd(sw_c, _mm256_and_pd(_mm256_or_pd(q1, q2), sign));
}

void fill_normals(std::uint64_t seed, std::uint32_t replica, std::uint32_t tag,
                  std::uint64_t first_call, std::size_t n_calls, double* out) {
    const std::uint32_t k0 = std::uint32_t(seed), k1 = std::uint32_t(seed >> 32);
    std::size_t j = 0;
    alignas(32) std::uint32_t lo[8], hi[8];
    for (; j + 8 <= n_calls; j += 8) {
        for (int l = 0; l < 8; ++l) {
            const std::uint64_t call = first_call + j + std::uint64_t(l);
            lo[l] = std::uint32_t(call);
            hi[l] = std::uint32_t(call >> 32);
        }
        __m256i x0 = _mm256_load_si256(reinterpret_cast<const __m256i*>(lo));
        __m256i x1 = _mm256_load_si256(reinterpret_cast<const __m256i*>(hi));
        __m256i x2 = _mm256_set1_epi32(int(replica));
        __m256i x3 = _mm256_set1_epi32(int(tag));
        philox8(x0, x1, x2, x3, k0, k1);
        // 64-bit words: a = x1:x0, b = x3:x2; lanes 0,1,4,5 then 2,3,6,7
        const __m256i a_lo = _mm256_unpacklo_epi32(x0, x1);
        const __m256i a_hi = _mm256_unpackhi_epi32(x0, x1);
        const __m256i b_lo = _mm256_unpacklo_epi32(x2, x3);
        const __m256i b_hi = _mm256_unpackhi_epi32(x2, x3);
        const __m256i a[2] = {_mm256_permute2x128_si256(a_lo, a_hi, 0x20),
                              _mm256_permute2x128_si256(a_lo, a_hi, 0x31)};
        const __m256i b[2] = {_mm256_permute2x128_si256(b_lo, b_hi, 0x20),
                              _mm256_permute2x128_si256(b_lo, b_hi, 0x31)};
        for (int h = 0; h < 2; ++h) {
            const __m256d u1 = _mm256_sub_pd(_mm256_set1_pd(1.0), to_unit(a[h]));
            const __m256d u2 = to_unit(b[h]);
            const __m256d rad = _mm256_sqrt_pd(_mm256_mul_pd(_mm256_set1_pd(-2.0), log_pos(u1)));
            __m256d s, c;
            sincos_2pi(u2, &s, &c);
            const __m256d z0 = _mm256_mul_pd(rad, c);
            const __m256d z1 = _mm256_mul_pd(rad, s);
            const __m256d il = _mm256_unpacklo_pd(z0, z1);
            const __m256d ih = _mm256_unpackhi_pd(z0, z1);
            double* dst = out + 2 * (j + 4 * std::size_t(h));
            _mm256_storeu_pd(dst, _mm256_permute2f128_pd(il, ih, 0x20));
            _mm256_storeu_pd(dst + 4, _mm256_permute2f128_pd(il, ih, 0x31));
        }
    }
    if (j < n_calls) scalar::table.fill_normals(seed, replica, tag, first_call + j, n_calls - j, out + 2 * j);
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void fourier_accumulate(const double* x, const double* w, std::size_t n, double freq,
                        std::size_t K, double* cos_out, double* sin_out) {
    // Blocks of 64 vectors; the rotation state of a block stays in L1 while
    // all K modes are swept.
    constexpr std::size_t kBlock = 64;
    __m256d c[kBlock], s[kBlock], c1[kBlock], s1[kBlock], wv[kBlock];
    const std::size_t n4 = n - n % 4;
    const __m256d fv = _mm256_set1_pd(freq);
    for (std::size_t j0 = 0; j0 < n4; j0 += 4 * kBlock) {
        const std::size_t nb = std::min(kBlock, (n4 - j0) / 4);
        for (std::size_t b = 0; b < nb; ++b) {
            sincos_2pi(_mm256_mul_pd(fv, _mm256_loadu_pd(x + j0 + 4 * b)), &s1[b], &c1[b]);
            c[b] = c1[b];
            s[b] = s1[b];
            wv[b] = _mm256_loadu_pd(w + j0 + 4 * b);
        }
        for (std::size_t k = 0; k < K; ++k) {
            __m256d ac = _mm256_setzero_pd(), as = _mm256_setzero_pd();
            for (std::size_t b = 0; b < nb; ++b) {
                ac = _mm256_add_pd(ac, _mm256_mul_pd(wv[b], c[b]));
                as = _mm256_add_pd(as, _mm256_mul_pd(wv[b], s[b]));
                const __m256d cn = _mm256_sub_pd(_mm256_mul_pd(c[b], c1[b]), _mm256_mul_pd(s[b], s1[b]));
                s[b] = _mm256_add_pd(_mm256_mul_pd(s[b], c1[b]), _mm256_mul_pd(c[b], s1[b]));
                c[b] = cn;
            }
            cos_out[k] += hsum(ac);
            sin_out[k] += hsum(as);
        }
    }
    if (n4 < n) scalar::table.fourier_accumulate(x + n4, w + n4, n - n4, freq, K, cos_out, sin_out);
}

// exp for x <= 0; returns 0 below -708 and for -inf.
inline __m256d exp_neg(__m256d x) {
    const __m256d tiny = _mm256_cmp_pd(x, _mm256_set1_pd(-708.0), _CMP_LT_OQ);
    x = _mm256_max_pd(x, _mm256_set1_pd(-708.0));
    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634074)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93147180369123816490e-01), x);
    r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.90821492927058770002e-10), r);
    // Taylor to r^13 on |r| <= ln2/2
    __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);
    const double inv_fact[13] = {1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0, 1.0 / 362880.0,
                                 1.0 / 40320.0,     1.0 / 5040.0,     1.0 / 720.0,     1.0 / 120.0,
                                 1.0 / 24.0,        1.0 / 6.0,        0.5,             1.0,
                                 1.0};
    for (double cf : inv_fact) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(cf));
    // scale by 2^n: n in [-1022, 0]
    const __m128i ni = _mm256_cvtpd_epi32(n);
    const __m256i n64 = _mm256_cvtepi32_epi64(ni);
    const __m256i scale = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
    const __m256d res = _mm256_mul_pd(p, _mm256_castsi256_pd(scale));
    return _mm256_andnot_pd(tiny, res);
}

void lse_axis(const double* in, double* out, std::size_t outer, std::size_t m, std::size_t inner,
              const double* cost) {
    constexpr double ninf = -std::numeric_limits<double>::infinity();
    if (inner < 4) {
        // contiguous reduction over j
        if (inner != 1) {
            scalar::table.lse_axis(in, out, outer, m, inner, cost);
            return;
        }
        const std::size_t m4 = m - m % 4;
        for (std::size_t o = 0; o < outer; ++o) {
            const double* src = in + o * m;
            double* dst = out + o * m;
            for (std::size_t jp = 0; jp < m; ++jp) {
                const double* crow = cost + jp * m;
                __m256d mxv = _mm256_set1_pd(ninf);
                for (std::size_t j = 0; j < m4; j += 4)
                    mxv = _mm256_max_pd(mxv, _mm256_sub_pd(_mm256_loadu_pd(src + j), _mm256_loadu_pd(crow + j)));
                alignas(32) double lanes[4];
                _mm256_store_pd(lanes, mxv);
                double mx = std::fmax(std::fmax(lanes[0], lanes[1]), std::fmax(lanes[2], lanes[3]));
                for (std::size_t j = m4; j < m; ++j) mx = std::fmax(mx, src[j] - crow[j]);
                if (mx == ninf) {
                    dst[jp] = ninf;
                    continue;
                }
                const __m256d mv = _mm256_set1_pd(mx);
                __m256d acc = _mm256_setzero_pd();
                for (std::size_t j = 0; j < m4; j += 4) {
                    const __m256d v = _mm256_sub_pd(_mm256_sub_pd(_mm256_loadu_pd(src + j), _mm256_loadu_pd(crow + j)), mv);
                    acc = _mm256_add_pd(acc, exp_neg(v));
                }
                double sum = hsum(acc);
                for (std::size_t j = m4; j < m; ++j) sum += std::exp(src[j] - crow[j] - mx);
                dst[jp] = mx + std::log(sum);
            }
        }
        return;
    }
    const std::size_t i4 = inner - inner % 4;
    for (std::size_t o = 0; o < outer; ++o) {
        const double* src = in + o * m * inner;
        double* dst = out + o * m * inner;
        for (std::size_t jp = 0; jp < m; ++jp) {
            const double* crow = cost + jp * m;
            for (std::size_t t = 0; t < i4; t += 4) {
                __m256d mx = _mm256_set1_pd(ninf);
                for (std::size_t j = 0; j < m; ++j)
                    mx = _mm256_max_pd(mx, _mm256_sub_pd(_mm256_loadu_pd(src + j * inner + t), _mm256_set1_pd(crow[j])));
                const __m256d dead = _mm256_cmp_pd(mx, _mm256_set1_pd(ninf), _CMP_EQ_OQ);
                const __m256d mxs = _mm256_blendv_pd(mx, _mm256_setzero_pd(), dead);
                __m256d acc = _mm256_setzero_pd();
                for (std::size_t j = 0; j < m; ++j) {
                    const __m256d v = _mm256_sub_pd(
                        _mm256_sub_pd(_mm256_loadu_pd(src + j * inner + t), _mm256_set1_pd(crow[j])), mxs);
                    acc = _mm256_add_pd(acc, exp_neg(v));
                }
                alignas(32) double a[4], mm[4];
                _mm256_store_pd(a, acc);
                _mm256_store_pd(mm, mx);
                for (int l = 0; l < 4; ++l) dst[jp * inner + t + l] = mm[l] == ninf ? ninf : mm[l] + std::log(a[l]);
            }
            for (std::size_t t = i4; t < inner; ++t) {
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
    const std::size_t m4 = m - m % 4;
    const __m256d piv = _mm256_set1_pd(pi_i);
    const __m256d zero = _mm256_setzero_pd();
    __m256d mn = zero;
    __m256d arg = _mm256_set1_pd(double(m));
    __m256d idx = _mm256_set_pd(3, 2, 1, 0);
    const __m256d four = _mm256_set1_pd(4.0);
    __m256i cnt = _mm256_setzero_si256();
    for (std::size_t j = 0; j < m4; j += 4) {
        std::int32_t s4;
        std::memcpy(&s4, state + j, 4);
        const __m256d st = _mm256_cvtepi32_pd(_mm_cvtepi8_epi32(_mm_cvtsi32_si128(s4)));
        const __m256d c = _mm256_mul_pd(st, _mm256_sub_pd(_mm256_add_pd(_mm256_loadu_pd(cost + j), piv),
                                                          _mm256_loadu_pd(pi_t + j)));
        const __m256d neg = _mm256_cmp_pd(c, zero, _CMP_LT_OQ);
        cnt = _mm256_sub_epi64(cnt, _mm256_castpd_si256(neg));
        const __m256d better = _mm256_cmp_pd(c, mn, _CMP_LT_OQ);
        mn = _mm256_blendv_pd(mn, c, better);
        arg = _mm256_blendv_pd(arg, idx, better);
        idx = _mm256_add_pd(idx, four);
    }
    alignas(32) double mv[4], av[4];
    alignas(32) std::int64_t cv[4];
    _mm256_store_pd(mv, mn);
    _mm256_store_pd(av, arg);
    _mm256_store_si256(reinterpret_cast<__m256i*>(cv), cnt);
    double bm = 0.0;
    std::size_t ba = m;
    std::size_t count = std::size_t(cv[0] + cv[1] + cv[2] + cv[3]);
    for (int l = 0; l < 4; ++l) {
        const std::size_t a = std::size_t(av[l]);
        if (mv[l] < bm || (mv[l] == bm && mv[l] < 0.0 && a < ba)) {
            bm = mv[l];
            ba = a;
        }
    }
    for (std::size_t j = m4; j < m; ++j) {
        const double c = double(state[j]) * ((cost[j] + pi_i) - pi_t[j]);
        if (c < 0.0) {
            ++count;
            if (c < bm) {
                bm = c;
                ba = j;
            }
        }
    }
    *best = bm;
    *best_j = ba;
    return count;
}

}  // namespace

const KernelTable table = {Isa::avx2, fill_normals, fourier_accumulate, lse_axis, price_row};

}  // namespace lab::simd::avx2

#else

namespace lab::simd::avx2 {
// Never selected: cpu_supports(Isa::avx2) is false in this build.
const KernelTable table = {Isa::avx2, nullptr, nullptr, nullptr, nullptr};
}

#endif
