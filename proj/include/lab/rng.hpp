#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace lab {

// Philox4x32-10 (Salmon et al., SC'11). Counter layout used throughout:
//   ctr = {call_lo, call_hi, replica, tag}, key = {seed_lo, seed_hi}
// so a stream is fully determined by (seed, replica, tag) and the call index.
using PhiloxCtr = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

constexpr PhiloxCtr philox4x32_10(PhiloxCtr c, PhiloxKey k) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k[0] += kPhiloxW0;
            k[1] += kPhiloxW1;
        }
        const std::uint64_t p0 = std::uint64_t(kPhiloxM0) * c[0];
        const std::uint64_t p1 = std::uint64_t(kPhiloxM1) * c[2];
        c = {std::uint32_t(p1 >> 32) ^ c[1] ^ k[0], std::uint32_t(p1),
             std::uint32_t(p0 >> 32) ^ c[3] ^ k[1], std::uint32_t(p0)};
    }
    return c;
}

/// Top 52 bits of `bits` mapped to [0, 1).
double bits_to_unit(std::uint64_t bits);

/// Stream tags. Every independent random input of an experiment owns a tag
/// so that adding a consumer never shifts another consumer's numbers.
enum class RngTag : std::uint32_t {
    path = 1,
    init = 2,
    xi_infinity = 3,
    bootstrap = 4,
    test = 5,
    sampling = 6,
};

/// Sequential view on the counter space of one (seed, replica, tag) triple.
/// Uniforms and normals each consume whole Philox calls.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint32_t replica, RngTag tag);
    RngStream(std::uint64_t seed, std::uint32_t replica, std::uint32_t tag);

    std::uint64_t seed() const { return seed_; }
    std::uint32_t replica() const { return replica_; }
    std::uint32_t tag() const { return tag_; }
    std::uint64_t position() const { return call_; }

    PhiloxCtr next_block();
    double uniform();
    double normal();
    /// Fills `out` with n normals; equal to n successive normal() draws when
    /// no normal is buffered.
    void normals(double* out, std::size_t n);
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

  private:
    std::uint64_t seed_;
    std::uint32_t replica_;
    std::uint32_t tag_;
    std::uint64_t call_ = 0;
    double ubuf_[2] = {0, 0};
    int ucount_ = 0;
    double nbuf_[2] = {0, 0};
    int ncount_ = 0;
};

}  // namespace lab
