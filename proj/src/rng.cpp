#include "lab/rng.hpp"

#include <bit>

#include "lab/simd/kernels.hpp"

namespace lab {

double bits_to_unit(std::uint64_t bits) {
    return std::bit_cast<double>((bits >> 12) | 0x3FF0000000000000ull) - 1.0;
}

RngStream::RngStream(std::uint64_t seed, std::uint32_t replica, RngTag tag)
    : RngStream(seed, replica, static_cast<std::uint32_t>(tag)) {}

RngStream::RngStream(std::uint64_t seed, std::uint32_t replica, std::uint32_t tag)
    : seed_(seed), replica_(replica), tag_(tag) {}

PhiloxCtr RngStream::next_block() {
    const std::uint64_t c = call_++;
    return philox4x32_10({std::uint32_t(c), std::uint32_t(c >> 32), replica_, tag_},
                         {std::uint32_t(seed_), std::uint32_t(seed_ >> 32)});
}

double RngStream::uniform() {
    if (ucount_ == 0) {
        const PhiloxCtr r = next_block();
        // served in order: a then b
        ubuf_[1] = bits_to_unit((std::uint64_t(r[1]) << 32) | r[0]);
        ubuf_[0] = bits_to_unit((std::uint64_t(r[3]) << 32) | r[2]);
        ucount_ = 2;
    }
    return ubuf_[--ucount_];
}

std::uint64_t RngStream::below(std::uint64_t n) {
    const double u = uniform();
    const std::uint64_t k = std::uint64_t(u * double(n));
    return k < n ? k : n - 1;
}

double RngStream::normal() {
    if (ncount_ == 0) {
        double z[2];
        simd::scalar::table.fill_normals(seed_, replica_, tag_, call_, 1, z);
        ++call_;
        nbuf_[1] = z[0];
        nbuf_[0] = z[1];
        ncount_ = 2;
    }
    return nbuf_[--ncount_];
}

void RngStream::normals(double* out, std::size_t n) {
    std::size_t i = 0;
    while (i < n && ncount_ > 0) out[i++] = nbuf_[--ncount_];
    const std::size_t calls = (n - i) / 2;
    if (calls > 0) {
        simd::kernels().fill_normals(seed_, replica_, tag_, call_, calls, out + i);
        call_ += calls;
        i += 2 * calls;
    }
    if (i < n) out[i] = normal();
}

}  // namespace lab
