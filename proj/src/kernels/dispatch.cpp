#include "contourseg/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace contourseg::kernels {

#if defined(CONTOURSEG_HAVE_AVX2)
const KernelTable& avx2_table_unchecked();
#endif

const KernelTable* avx2_table() {
#if defined(CONTOURSEG_HAVE_AVX2)
    static const bool supported = [] {
        __builtin_cpu_init();
        return __builtin_cpu_supports("avx2") != 0;
    }();
    return supported ? &avx2_table_unchecked() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() {
    static const KernelTable& chosen = []() -> const KernelTable& {
        const char* env = std::getenv("CONTOURSEG_SIMD");
        if (env != nullptr && std::string_view(env) == "scalar") {
            return scalar_table();
        }
        if (const KernelTable* t = avx2_table()) {
            return *t;
        }
        return scalar_table();
    }();
    return chosen;
}

}  // namespace contourseg::kernels
