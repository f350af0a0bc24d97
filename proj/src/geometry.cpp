#include "contourseg/geometry.hpp"

#include "contourseg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace contourseg {

namespace {

// Enclosure slack for the incremental tests. Far below the 1e-7 contract but
// well above rounding noise for coordinates in the thousands.
constexpr double kInsideEps = 1e-10;

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool finite(const Point& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

Circle circle_from_pair(const Point& a, const Point& b) {
    const Point c{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
    return {c, std::max(distance(c, a), distance(c, b))};
}

// Circumcircle, or nothing when the triple is (numerically) collinear.
bool circumcircle(const Point& a, const Point& b, const Point& c, Circle& out) {
    const double bx = b.x - a.x, by = b.y - a.y;
    const double cx = c.x - a.x, cy = c.y - a.y;
    const double d = 2.0 * (bx * cy - by * cx);
    const double scale = std::max({std::abs(bx), std::abs(by), std::abs(cx), std::abs(cy), 1.0});
    if (std::abs(d) <= 1e-12 * scale * scale) {
        return false;
    }
    const double b2 = bx * bx + by * by;
    const double c2 = cx * cx + cy * cy;
    const Point center{a.x + (cy * b2 - by * c2) / d, a.y + (bx * c2 - cx * b2) / d};
    out = {center, std::max({distance(center, a), distance(center, b), distance(center, c)})};
    return true;
}

// Smallest circle with a, b, c on or inside it, given that it must pass
// through a and b. Collinear triples fall back to the widest pair.
Circle circle_from_triple(const Point& a, const Point& b, const Point& c) {
    Circle out;
    if (circumcircle(a, b, c, out)) {
        return out;
    }
    Circle best = circle_from_pair(a, b);
    for (const Circle& cand : {circle_from_pair(a, c), circle_from_pair(b, c)}) {
        if (cand.radius > best.radius) {
            best = cand;
        }
    }
    return best;
}

}  // namespace

bool Circle::contains(const Point& p, double slack) const {
    return distance(center, p) <= radius + slack;
}

bool CropRect::valid() const {
    return x0 >= 0 && y0 >= 0 && side_w >= 1 && side_h >= 1 && x0 + side_w <= source.width &&
           y0 + side_h <= source.height;
}

void CropParams::validate() const {
    if (!(expansion_ratio >= 1.0) || !(min_diameter > 0.0) || target_size < 32) {
        throw Error(ErrorCode::InvalidArgument,
                    "crop params need expansion_ratio >= 1, min_diameter > 0, target_size >= 32");
    }
}

Circle smallest_enclosing_circle(std::span<const Point> points, std::uint64_t seed) {
    if (points.empty()) {
        throw Error(ErrorCode::EmptyPointSet, "smallest_enclosing_circle needs at least one point");
    }
    if (!std::all_of(points.begin(), points.end(), finite)) {
        throw Error(ErrorCode::InvalidArgument, "non-finite point");
    }

    std::vector<Point> pts(points.begin(), points.end());
    std::mt19937_64 rng(seed);
    std::shuffle(pts.begin(), pts.end(), rng);

    Circle c{pts[0], 0.0};
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (c.contains(pts[i], kInsideEps)) {
            continue;
        }
        c = {pts[i], 0.0};
        for (std::size_t j = 0; j < i; ++j) {
            if (c.contains(pts[j], kInsideEps)) {
                continue;
            }
            c = circle_from_pair(pts[i], pts[j]);
            for (std::size_t k = 0; k < j; ++k) {
                if (!c.contains(pts[k], kInsideEps)) {
                    c = circle_from_triple(pts[i], pts[j], pts[k]);
                }
            }
        }
    }
    return c;
}

Circle brute_force_sec(std::span<const Point> points) {
    if (points.empty()) {
        throw Error(ErrorCode::EmptyPointSet, "brute_force_sec needs at least one point");
    }
    if (points.size() > 16) {
        throw Error(ErrorCode::OracleSizeExceeded, "brute_force_sec accepts at most 16 points");
    }
    const auto encloses_all = [&](const Circle& c) {
        return std::all_of(points.begin(), points.end(),
                           [&](const Point& p) { return c.contains(p, kInsideEps); });
    };

    Circle best{points[0], 0.0};
    bool found = encloses_all(best);
    const auto consider = [&](const Circle& c) {
        if ((!found || c.radius < best.radius) && encloses_all(c)) {
            best = c;
            found = true;
        }
    };
    const std::size_t n = points.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            consider(circle_from_pair(points[i], points[j]));
            for (std::size_t k = j + 1; k < n; ++k) {
                Circle c;
                if (circumcircle(points[i], points[j], points[k], c)) {
                    consider(c);
                }
            }
        }
    }
    return best;
}

CropRect expand_to_crop(const Circle& circle, const CropParams& params, Dims image) {
    params.validate();
    if (image.width <= 0 || image.height <= 0) {
        throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
    }
    if (!std::isfinite(circle.radius) || !finite(circle.center)) {
        throw Error(ErrorCode::DegenerateCrop, "circle is not finite");
    }
    const double diameter = std::max(2.0 * circle.radius, params.min_diameter);
    const long side = std::lround(params.expansion_ratio * diameter);
    // floor(c - s/2 + 0.5) keeps crops of growing side nested.
    const long x0 = static_cast<long>(std::floor(circle.center.x - 0.5 * side + 0.5));
    const long y0 = static_cast<long>(std::floor(circle.center.y - 0.5 * side + 0.5));
    const long cx0 = std::max(0L, x0);
    const long cy0 = std::max(0L, y0);
    const long cx1 = std::min<long>(image.width, x0 + side);
    const long cy1 = std::min<long>(image.height, y0 + side);
    if (cx1 <= cx0 || cy1 <= cy0) {
        throw Error(ErrorCode::DegenerateCrop, "expanded circle lies outside the image");
    }
    return CropRect{static_cast<int>(cx0), static_cast<int>(cy0), static_cast<int>(cx1 - cx0),
                    static_cast<int>(cy1 - cy0), image};
}

Point map_point(const Point& p, const CropRect& crop, int target_size, MapDirection direction) {
    const double sx = static_cast<double>(target_size) / crop.side_w;
    const double sy = static_cast<double>(target_size) / crop.side_h;
    if (direction == MapDirection::ToCrop) {
        return {(p.x - crop.x0) * sx, (p.y - crop.y0) * sy};
    }
    return {p.x / sx + crop.x0, p.y / sy + crop.y0};
}

}  // namespace contourseg
