#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace contourseg {

// Image-space point: origin top-left, y grows downward. Integer coordinates
// coincide with pixel indices.
struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

struct Circle {
    Point center;
    double radius = 0.0;

    bool contains(const Point& p, double slack) const;
};

struct Dims {
    int width = 0;
    int height = 0;

    friend bool operator==(const Dims&, const Dims&) = default;
    std::size_t area() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
};

// Axis-aligned region of interest in full-image pixels; covers columns
// [x0, x0 + side_w) and rows [y0, y0 + side_h).
struct CropRect {
    int x0 = 0;
    int y0 = 0;
    int side_w = 0;
    int side_h = 0;
    Dims source;

    friend bool operator==(const CropRect&, const CropRect&) = default;
    bool valid() const;
};

struct CropParams {
    double expansion_ratio = 1.4;
    double min_diameter = 16.0;
    int target_size = 256;

    void validate() const;
};

inline constexpr std::uint64_t kDefaultCircleSeed = 0x5eedc1c1eULL;

/// Minimal enclosing circle via Welzl's randomized incremental algorithm.
/// The input order is shuffled with `seed`, so repeated calls are reproducible.
/// Throws EmptyPointSet on empty input.
Circle smallest_enclosing_circle(std::span<const Point> points,
                                 std::uint64_t seed = kDefaultCircleSeed);

/// Exhaustive reference: every pair-diameter and triple circumcircle is tried.
/// Limited to 16 points (OracleSizeExceeded beyond).
Circle brute_force_sec(std::span<const Point> points);

/// Square of side round(ratio * max(2r, min_diameter)) centred on the circle,
/// clipped to the image. Throws DegenerateCrop when nothing of it remains.
CropRect expand_to_crop(const Circle& circle, const CropParams& params, Dims image);

enum class MapDirection { ToCrop, ToImage };

/// Affine mapping between full-image coordinates and a target_size x
/// target_size crop raster; axes scale independently for clipped crops.
Point map_point(const Point& p, const CropRect& crop, int target_size, MapDirection direction);

}  // namespace contourseg
