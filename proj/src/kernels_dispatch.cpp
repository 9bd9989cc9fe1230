#include "ineat/kernels.hpp"

#include "ineat/error.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace ineat::simd {

namespace {

constexpr KernelTable kScalar{"scalar", &scalar::dot, &scalar::sum, &scalar::axpy, &scalar::descend,
                               &scalar::ray_sum, &scalar::ray_scatter};

#ifdef INEAT_HAVE_AVX2_KERNELS
constexpr KernelTable kAvx2{"avx2", &avx2::dot, &avx2::sum, &avx2::axpy, &avx2::descend,
                             &avx2::ray_sum, &avx2::ray_scatter};
#endif

Isa detect() {
    if (const char* env = std::getenv("INEAT_ISA"); env != nullptr && std::string(env) == "scalar") {
        return Isa::scalar;
    }
    return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{detect()};
    return isa;
}

} // namespace

bool isa_supported(Isa isa) {
    switch (isa) {
    case Isa::scalar:
        return true;
    case Isa::avx2:
#ifdef INEAT_HAVE_AVX2_KERNELS
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    }
    return false;
}

const KernelTable& kernels_for(Isa isa) {
    if (!isa_supported(isa)) fail(ErrorKind::invalid_argument, "requested SIMD variant is not supported on this CPU");
#ifdef INEAT_HAVE_AVX2_KERNELS
    if (isa == Isa::avx2) return kAvx2;
#endif
    return kScalar;
}

Isa active_isa() { return current().load(); }

void select_isa(Isa isa) {
    (void)kernels_for(isa);
    current().store(isa);
}

const KernelTable& active() { return kernels_for(active_isa()); }

} // namespace ineat::simd
