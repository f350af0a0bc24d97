#pragma once

// Data-parallel inner loops. Each kernel has a scalar reference and, where the
// CPU allows, an AVX2 variant; both must produce identical results.
//
// Mask buffers hold 0/1 bytes.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace contourseg::kernels {

struct AndOrCounts {
    std::uint64_t intersection = 0;
    std::uint64_t union_ = 0;
};

struct KernelTable {
    std::string_view name;
    AndOrCounts (*and_or_count)(const std::uint8_t* a, const std::uint8_t* b, std::size_t n);
    void (*xor_masks)(const std::uint8_t* a, const std::uint8_t* b, std::uint8_t* out, std::size_t n);
    std::size_t (*count_nonzero)(const std::uint8_t* a, std::size_t n);
    // out[u] = min_k (u - xs[k])^2 + (y - ys[k])^2 for u in [0, width); +inf when k is empty.
    void (*min_sq_distance_row)(float* out, int width, float y, const float* xs, const float* ys,
                                std::size_t k);
    // out[i] = in[i] >= t
    void (*threshold)(const float* in, std::uint8_t* out, std::size_t n, float t);
};

const KernelTable& scalar_table();

// nullptr when the AVX2 translation unit was not built or the CPU lacks AVX2.
const KernelTable* avx2_table();

// Selected once per process: AVX2 when available, unless CONTOURSEG_SIMD=scalar.
const KernelTable& active();

}  // namespace contourseg::kernels
