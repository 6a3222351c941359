#pragma once

#include <cstddef>
#include <cstdint>

namespace lab::simd {

enum class Isa { scalar, avx2 };

const char* isa_name(Isa isa);

// Fills out[0 .. 2*n_calls) with standard normals. Call j of the
// (seed, replica, tag) stream yields out[2j] and out[2j+1] by Box-Muller.
using FillNormalsFn = void (*)(std::uint64_t seed, std::uint32_t replica, std::uint32_t tag,
                               std::uint64_t first_call, std::size_t n_calls, double* out);

// cos_out[k-1] += sum_j w[j] cos(2 pi k f x[j]), sin_out likewise, k = 1..K.
using FourierAccumulateFn = void (*)(const double* x, const double* w, std::size_t n,
                                     double freq, std::size_t K, double* cos_out,
                                     double* sin_out);

// One log-sum-exp pass of log-domain Sinkhorn along the middle axis of a
// (outer, m, inner) array:
//   out[o, j', t] = log sum_j exp(in[o, j, t] - cost[j' * m + j])
// `cost` is m x m. -inf entries of `in` are allowed.
using LseAxisFn = void (*)(const double* in, double* out, std::size_t outer, std::size_t m,
                           std::size_t inner, const double* cost);

// Network simplex pricing on one bipartite row: among j with state[j] != 0,
// minimize state[j] * (cost[j] + pi_i - pi_t[j]). Returns the number of
// candidates with negative value; best/best_j hold the first minimum.
using PriceRowFn = std::size_t (*)(const double* cost, const std::int8_t* state, double pi_i,
                                   const double* pi_t, std::size_t m, double* best,
                                   std::size_t* best_j);

struct KernelTable {
    Isa isa;
    FillNormalsFn fill_normals;
    FourierAccumulateFn fourier_accumulate;
    LseAxisFn lse_axis;
    PriceRowFn price_row;
};

bool cpu_supports(Isa isa);
/// Best kernel set for the running CPU. LAB_ISA=scalar forces the reference path.
const KernelTable& kernels();
const KernelTable& kernels_for(Isa isa);

namespace scalar {
extern const KernelTable table;
double log_pos(double x);
void sincos_2pi(double x, double* s, double* c);
}  // namespace scalar

namespace avx2 {
extern const KernelTable table;
}

}  // namespace lab::simd
