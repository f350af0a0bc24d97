// Built with -mavx2; only reached through avx2_table() after a CPU check.

#include "contourseg/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <array>
#include <cstring>
#include <limits>

namespace contourseg::kernels {

const KernelTable& avx2_table_unchecked();

namespace {

std::uint64_t horizontal_sum_epu64(__m256i v) {
    alignas(32) std::uint64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), v);
    return lanes[0] + lanes[1] + lanes[2] + lanes[3];
}

AndOrCounts and_or_count(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) {
    const __m256i zero = _mm256_setzero_si256();
    __m256i inter = zero;
    __m256i uni = zero;
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
        const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
        inter = _mm256_add_epi64(inter, _mm256_sad_epu8(_mm256_and_si256(va, vb), zero));
        uni = _mm256_add_epi64(uni, _mm256_sad_epu8(_mm256_or_si256(va, vb), zero));
    }
    AndOrCounts c{horizontal_sum_epu64(inter), horizontal_sum_epu64(uni)};
    for (; i < n; ++i) {
        c.intersection += a[i] & b[i];
        c.union_ += a[i] | b[i];
    }
    return c;
}

void xor_masks(const std::uint8_t* a, const std::uint8_t* b, std::uint8_t* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
        const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i), _mm256_xor_si256(va, vb));
    }
    for (; i < n; ++i) {
        out[i] = a[i] ^ b[i];
    }
}

std::size_t count_nonzero(const std::uint8_t* a, std::size_t n) {
    const __m256i zero = _mm256_setzero_si256();
    std::size_t c = 0;
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
        const auto is_zero = static_cast<std::uint32_t>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(v, zero)));
        c += 32 - static_cast<std::size_t>(__builtin_popcount(is_zero));
    }
    for (; i < n; ++i) {
        c += a[i] != 0;
    }
    return c;
}

void min_sq_distance_row(float* out, int width, float y, const float* xs, const float* ys,
                         std::size_t k) {
    const __m256 inf = _mm256_set1_ps(std::numeric_limits<float>::infinity());
    const __m256 lane = _mm256_setr_ps(0.f, 1.f, 2.f, 3.f, 4.f, 5.f, 6.f, 7.f);
    int u = 0;
    for (; u + 8 <= width; u += 8) {
        const __m256 fu = _mm256_add_ps(_mm256_set1_ps(static_cast<float>(u)), lane);
        __m256 best = inf;
        for (std::size_t j = 0; j < k; ++j) {
            const __m256 dx = _mm256_sub_ps(fu, _mm256_set1_ps(xs[j]));
            const float dys = y - ys[j];
            const __m256 dy = _mm256_set1_ps(dys);
            const __m256 d = _mm256_add_ps(_mm256_mul_ps(dx, dx), _mm256_mul_ps(dy, dy));
            best = _mm256_min_ps(best, d);
        }
        _mm256_storeu_ps(out + u, best);
    }
    for (; u < width; ++u) {
        float best = std::numeric_limits<float>::infinity();
        const float fu = static_cast<float>(u);
        for (std::size_t j = 0; j < k; ++j) {
            const float dx = fu - xs[j];
            const float dy = y - ys[j];
            best = std::min(best, dx * dx + dy * dy);
        }
        out[u] = best;
    }
}

constexpr std::array<std::uint64_t, 256> make_bit_spread() {
    std::array<std::uint64_t, 256> lut{};
    for (unsigned m = 0; m < 256; ++m) {
        std::uint64_t v = 0;
        for (unsigned b = 0; b < 8; ++b) {
            if (m & (1u << b)) {
                v |= std::uint64_t{1} << (8 * b);
            }
        }
        lut[m] = v;
    }
    return lut;
}

constexpr auto kBitSpread = make_bit_spread();

void threshold(const float* in, std::uint8_t* out, std::size_t n, float t) {
    const __m256 vt = _mm256_set1_ps(t);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 v = _mm256_loadu_ps(in + i);
        const int m = _mm256_movemask_ps(_mm256_cmp_ps(v, vt, _CMP_GE_OQ));
        std::memcpy(out + i, &kBitSpread[static_cast<unsigned>(m)], 8);
    }
    for (; i < n; ++i) {
        out[i] = in[i] >= t ? 1 : 0;
    }
}

}  // namespace

const KernelTable& avx2_table_unchecked() {
    static const KernelTable table{"avx2", and_or_count, xor_masks, count_nonzero,
                                   min_sq_distance_row, threshold};
    return table;
}

}  // namespace contourseg::kernels
