#include "contourseg/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string_view>
#include <limits>
#include <random>
#include <vector>

using namespace contourseg::kernels;

namespace {

std::vector<std::uint8_t> bits(std::size_t n, std::mt19937_64& rng) {
    std::vector<std::uint8_t> v(n);
    for (auto& b : v) {
        b = static_cast<std::uint8_t>(rng() & 1);
    }
    return v;
}

// Odd lengths exercise the scalar tails of vector loops.
const std::size_t kLengths[] = {0, 1, 7, 31, 32, 33, 63, 100, 255, 1000, 4099};

}  // namespace

TEST_CASE("scalar kernels against direct loops") {
    const KernelTable& s = scalar_table();
    std::mt19937_64 rng(1);
    for (std::size_t n : kLengths) {
        const auto a = bits(n, rng), b = bits(n, rng);
        std::uint64_t inter = 0, uni = 0, nz = 0;
        for (std::size_t i = 0; i < n; ++i) {
            inter += a[i] & b[i];
            uni += a[i] | b[i];
            nz += a[i] != 0;
        }
        const AndOrCounts c = s.and_or_count(a.data(), b.data(), n);
        CHECK(c.intersection == inter);
        CHECK(c.union_ == uni);
        CHECK(s.count_nonzero(a.data(), n) == nz);
    }
    float out[4];
    const float xs[] = {1.0f}, ys[] = {2.0f};
    s.min_sq_distance_row(out, 4, 0.0f, xs, ys, 1);
    CHECK(out[0] == 5.0f);
    CHECK(out[3] == 8.0f);
    s.min_sq_distance_row(out, 4, 0.0f, xs, ys, 0);
    CHECK(std::isinf(out[0]));
}

TEST_CASE("dispatch honours the environment") {
    const KernelTable& k = active();
    if (const char* env = std::getenv("CONTOURSEG_SIMD"); env && std::string_view(env) == "scalar") {
        CHECK(k.name == scalar_table().name);
    } else if (avx2_table()) {
        CHECK(k.name == avx2_table()->name);
    }
}

TEST_CASE("AVX2 kernels are bit-identical to scalar") {
    const KernelTable* v = avx2_table();
    if (!v) {
        MESSAGE("AVX2 unavailable; equivalence not exercised");
        return;
    }
    const KernelTable& s = scalar_table();
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 20; ++rep) {
        for (std::size_t n : kLengths) {
            auto a = bits(n, rng), b = bits(n, rng);
            // Non-canonical bytes: any nonzero counts for count_nonzero.
            std::vector<std::uint8_t> raw(n);
            for (auto& r : raw) {
                r = static_cast<std::uint8_t>(rng() % 3 == 0 ? 0 : rng());
            }
            const AndOrCounts cs = s.and_or_count(a.data(), b.data(), n);
            const AndOrCounts cv = v->and_or_count(a.data(), b.data(), n);
            REQUIRE(cs.intersection == cv.intersection);
            REQUIRE(cs.union_ == cv.union_);
            REQUIRE(s.count_nonzero(raw.data(), n) == v->count_nonzero(raw.data(), n));

            std::vector<std::uint8_t> xs_out(n), xv_out(n);
            s.xor_masks(a.data(), b.data(), xs_out.data(), n);
            v->xor_masks(a.data(), b.data(), xv_out.data(), n);
            REQUIRE(xs_out == xv_out);

            std::vector<float> probs(n);
            std::uniform_real_distribution<float> u(0.0f, 1.0f);
            for (auto& p : probs) {
                p = rng() % 5 == 0 ? 0.5f : u(rng);
            }
            std::vector<std::uint8_t> ts(n), tv(n);
            s.threshold(probs.data(), ts.data(), n, 0.5f);
            v->threshold(probs.data(), tv.data(), n, 0.5f);
            REQUIRE(ts == tv);
        }
        for (int width : {1, 5, 8, 9, 17, 256, 257}) {
            const std::size_t k = rng() % 12;
            std::vector<float> xs(k), ys(k);
            std::uniform_real_distribution<float> u(-10.0f, 270.0f);
            for (std::size_t i = 0; i < k; ++i) {
                xs[i] = u(rng);
                ys[i] = u(rng);
            }
            const float y = u(rng);
            std::vector<float> rs(static_cast<std::size_t>(width)), rv(static_cast<std::size_t>(width));
            s.min_sq_distance_row(rs.data(), width, y, xs.data(), ys.data(), k);
            v->min_sq_distance_row(rv.data(), width, y, xs.data(), ys.data(), k);
            for (int i = 0; i < width; ++i) {
                REQUIRE(std::memcmp(&rs[static_cast<std::size_t>(i)], &rv[static_cast<std::size_t>(i)], sizeof(float)) == 0);
            }
        }
    }
}
