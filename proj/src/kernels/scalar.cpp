#include "contourseg/kernels.hpp"

#include <algorithm>
#include <limits>

namespace contourseg::kernels {

namespace {

AndOrCounts and_or_count(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) {
    AndOrCounts c;
    for (std::size_t i = 0; i < n; ++i) {
        c.intersection += a[i] & b[i];
        c.union_ += a[i] | b[i];
    }
    return c;
}

void xor_masks(const std::uint8_t* a, const std::uint8_t* b, std::uint8_t* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = a[i] ^ b[i];
    }
}

std::size_t count_nonzero(const std::uint8_t* a, std::size_t n) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i) {
        c += a[i] != 0;
    }
    return c;
}

void min_sq_distance_row(float* out, int width, float y, const float* xs, const float* ys,
                         std::size_t k) {
    for (int u = 0; u < width; ++u) {
        float best = std::numeric_limits<float>::infinity();
        const float fu = static_cast<float>(u);
        for (std::size_t j = 0; j < k; ++j) {
            const float dx = fu - xs[j];
            const float dy = y - ys[j];
            const float d = dx * dx + dy * dy;
            best = std::min(best, d);
        }
        out[u] = best;
    }
}

void threshold(const float* in, std::uint8_t* out, std::size_t n, float t) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = in[i] >= t ? 1 : 0;
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{"scalar", and_or_count, xor_masks, count_nonzero,
                                   min_sq_distance_row, threshold};
    return table;
}

}  // namespace contourseg::kernels
