#pragma once

#include "contourseg/geometry.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace contourseg {

struct PixelPos {
    int x = 0;
    int y = 0;

    friend bool operator==(const PixelPos&, const PixelPos&) = default;
    Point to_point() const { return {static_cast<double>(x), static_cast<double>(y)}; }
};

// Binary raster, row-major, one byte per pixel holding 0 or 1.
class PixelMask {
public:
    PixelMask() = default;
    explicit PixelMask(Dims dims);
    PixelMask(int width, int height) : PixelMask(Dims{width, height}) {}
    // Any nonzero byte is foreground.
    PixelMask(Dims dims, std::span<const std::uint8_t> bytes);

    int width() const { return dims_.width; }
    int height() const { return dims_.height; }
    Dims dims() const { return dims_; }
    std::size_t size() const { return bits_.size(); }

    bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < dims_.width && y < dims_.height; }
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * dims_.width + x; }

    bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
    bool at(PixelPos p) const { return at(p.x, p.y); }
    void set(int x, int y, bool v = true) { bits_[index(x, y)] = v ? 1 : 0; }
    void set(PixelPos p, bool v = true) { set(p.x, p.y, v); }

    std::span<const std::uint8_t> bytes() const { return bits_; }
    std::span<std::uint8_t> bytes() { return bits_; }

    std::size_t count() const;
    bool empty() const { return count() == 0; }

    friend bool operator==(const PixelMask&, const PixelMask&) = default;

private:
    Dims dims_;
    std::vector<std::uint8_t> bits_;
};

}  // namespace contourseg
