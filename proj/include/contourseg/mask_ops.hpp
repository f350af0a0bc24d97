#pragma once

#include "contourseg/geometry.hpp"
#include "contourseg/mask.hpp"

#include <optional>
#include <span>
#include <vector>

namespace contourseg {

// Connectivity convention: foreground is 8-connected everywhere (contours,
// components, polylines); background regions are 4-connected, which is the
// matching dual for hole detection.

enum class ContourKind { Exterior, Interior };

struct Contour {
    std::vector<PixelPos> pixels;  // row-major order
    ContourKind kind = ContourKind::Exterior;
    std::optional<std::size_t> parent;  // set for interior contours only
};

struct ContourSet {
    Dims dims;
    std::vector<Contour> contours;

    std::size_t pixel_count() const;
    // All contour pixels across contours, row-major and unique.
    std::vector<PixelPos> all_pixels() const;
};

// Per-pixel Euclidean distance (pixels) to the nearest seed.
struct DistanceField {
    Dims dims;
    std::vector<double> values;

    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * dims.width + x]; }
    double at(PixelPos p) const { return at(p.x, p.y); }
};

/// True for a foreground pixel with a 4-neighbour in the background or on the image border.
bool is_boundary_pixel(const PixelMask& mask, int x, int y);

/// Boundary pixels grouped per connected component into exterior contours and
/// per hole into interior contours. Interior contours point at the exterior
/// contour of the component that surrounds the hole. Throws EmptyMask.
ContourSet extract_contours(const PixelMask& mask);

/// Exact Euclidean distance transform (separable lower-envelope method).
/// Throws EmptySeedSet when `seeds` is empty, InvalidArgument for seeds outside dims.
DistanceField distance_transform(std::span<const PixelPos> seeds, Dims dims);

/// |a and b| / |a or b|; 1 when both are empty. Throws ShapeMismatch.
double iou(const PixelMask& a, const PixelMask& b);

PixelMask mask_xor(const PixelMask& a, const PixelMask& b);

/// 8-connected digital segments through consecutive points (rounded to the
/// nearest pixel), closing the loop when `closed` and there are >= 3 points.
/// Pixels outside dims are dropped. Result is row-major and unique.
std::vector<PixelPos> rasterize_polyline(std::span<const Point> points, bool closed, Dims dims);

/// Component label per pixel (0 = background, 1..n in order of first pixel).
struct ComponentLabels {
    Dims dims;
    std::vector<int> labels;
    int count = 0;
};

ComponentLabels label_components(const PixelMask& mask);

/// 8-connected components, each as a full-size mask, in row-major order of
/// their first pixel.
std::vector<PixelMask> connected_components(const PixelMask& mask);

/// Filled convex hull of the points: pixels whose centres are inside or on the
/// hull. Collinear input degrades to the digital segment, a single point to one pixel.
PixelMask fill_convex_hull(std::span<const Point> points, Dims dims);

/// Convex hull vertices in counter-clockwise order (image y-down), without
/// repeated or collinear vertices.
std::vector<Point> convex_hull(std::span<const Point> points);

/// Nearest-neighbour resample of the crop region into an `out` raster.
PixelMask crop_resize_mask(const PixelMask& mask, const CropRect& crop, Dims out);

/// Inverse of crop_resize_mask: nearest-neighbour paste into a zeroed full-size mask.
PixelMask paste_mask(const PixelMask& crop_mask, const CropRect& crop, Dims full);

}  // namespace contourseg
