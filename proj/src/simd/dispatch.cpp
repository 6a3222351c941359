#include <cstdlib>
#include <cstring>

#include "lab/simd/kernels.hpp"

namespace lab::simd {

const char* isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "?";
}

bool cpu_supports(Isa isa) {
    switch (isa) {
        case Isa::scalar: return true;
        case Isa::avx2:
#if defined(__x86_64__) && defined(LAB_HAVE_AVX2)
            __builtin_cpu_init();
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
    }
    return false;
}

const KernelTable& kernels_for(Isa isa) {
    if (isa == Isa::avx2 && cpu_supports(Isa::avx2)) return avx2::table;
    return scalar::table;
}

namespace {
const KernelTable& select() {
    const char* force = std::getenv("LAB_ISA");
    if (force && std::strcmp(force, "scalar") == 0) return scalar::table;
    return kernels_for(Isa::avx2);
}
}  // namespace

const KernelTable& kernels() {
    static const KernelTable& t = select();
    return t;
}

}  // namespace lab::simd
