#pragma once

// Coefficients shared by the scalar and AVX2 Box-Muller paths.

namespace lab::simd::poly {

inline constexpr double kLn2 = 0.6931471805599453094;
inline constexpr double kSqrt2 = 1.4142135623730950488;
inline constexpr double kTwoPi = 6.2831853071795864769;

// log(m) = 2s * sum_k s^{2k} / (2k+1),  s = (m-1)/(m+1), |s| <= 0.1716
inline constexpr int kAtanhTerms = 11;
inline constexpr double kAtanh[kAtanhTerms] = {
    1.0,        1.0 / 3.0,  1.0 / 5.0,  1.0 / 7.0,  1.0 / 9.0,  1.0 / 11.0,
    1.0 / 13.0, 1.0 / 15.0, 1.0 / 17.0, 1.0 / 19.0, 1.0 / 21.0,
};

// Taylor series on |a| <= pi/4: sin to a^17, cos to a^18.
inline constexpr int kSinTerms = 9;
inline constexpr double kSin[kSinTerms] = {
    1.0,
    -1.0 / 6.0,
    1.0 / 120.0,
    -1.0 / 5040.0,
    1.0 / 362880.0,
    -1.0 / 39916800.0,
    1.0 / 6227020800.0,
    -1.0 / 1307674368000.0,
    1.0 / 355687428096000.0,
};
inline constexpr int kCosTerms = 10;
inline constexpr double kCos[kCosTerms] = {
    1.0,
    -1.0 / 2.0,
    1.0 / 24.0,
    -1.0 / 720.0,
    1.0 / 40320.0,
    -1.0 / 3628800.0,
    1.0 / 479001600.0,
    -1.0 / 87178291200.0,
    1.0 / 20922789888000.0,
    -1.0 / 6402373705728000.0,
};

}  // namespace lab::simd::poly
