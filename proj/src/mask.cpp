#include "contourseg/mask.hpp"

#include "contourseg/errors.hpp"
#include "contourseg/kernels.hpp"

#include <algorithm>

namespace contourseg {

PixelMask::PixelMask(Dims dims) : dims_(dims) {
    if (dims.width < 1 || dims.height < 1) {
        throw Error(ErrorCode::InvalidArgument, "mask dimensions must be at least 1x1");
    }
    bits_.assign(dims.area(), 0);
}

PixelMask::PixelMask(Dims dims, std::span<const std::uint8_t> bytes) : PixelMask(dims) {
    if (bytes.size() != bits_.size()) {
        throw Error(ErrorCode::ShapeMismatch, "mask byte count does not match dimensions");
    }
    std::transform(bytes.begin(), bytes.end(), bits_.begin(),
                   [](std::uint8_t b) { return static_cast<std::uint8_t>(b != 0); });
}

std::size_t PixelMask::count() const {
    return kernels::active().count_nonzero(bits_.data(), bits_.size());
}

}  // namespace contourseg
