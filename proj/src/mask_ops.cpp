#include "contourseg/mask_ops.hpp"

#include "contourseg/errors.hpp"
#include "contourseg/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace contourseg {

namespace {

constexpr int kDx4[4] = {1, -1, 0, 0};
constexpr int kDy4[4] = {0, 0, 1, -1};

bool row_major_less(const PixelPos& a, const PixelPos& b) {
    return a.y != b.y ? a.y < b.y : a.x < b.x;
}

void require_same_dims(const PixelMask& a, const PixelMask& b) {
    if (a.dims() != b.dims()) {
        throw Error(ErrorCode::ShapeMismatch, "mask dimensions differ");
    }
}

// 4-connected background regions; regions that reach the image border get
// label kOutside.
constexpr int kOutside = -1;

std::vector<int> label_background(const PixelMask& mask) {
    const int w = mask.width();
    const int h = mask.height();
    std::vector<int> labels(mask.size(), 0);  // 0 = foreground / unvisited
    std::vector<PixelPos> stack;
    std::vector<std::size_t> members;
    int next = 1;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t start = mask.index(x, y);
            if (mask.at(x, y) || labels[start] != 0) {
                continue;
            }
            const int label = next++;
            bool touches_border = false;
            members.clear();
            stack.push_back({x, y});
            labels[start] = label;
            while (!stack.empty()) {
                const PixelPos p = stack.back();
                stack.pop_back();
                members.push_back(mask.index(p.x, p.y));
                if (p.x == 0 || p.y == 0 || p.x == w - 1 || p.y == h - 1) {
                    touches_border = true;
                }
                for (int k = 0; k < 4; ++k) {
                    const int nx = p.x + kDx4[k];
                    const int ny = p.y + kDy4[k];
                    if (!mask.in_bounds(nx, ny) || mask.at(nx, ny)) {
                        continue;
                    }
                    int& l = labels[mask.index(nx, ny)];
                    if (l == 0) {
                        l = label;
                        stack.push_back({nx, ny});
                    }
                }
            }
            if (touches_border) {
                for (std::size_t i : members) {
                    labels[i] = kOutside;
                }
            }
        }
    }
    return labels;
}

// One lower-envelope pass over a line of squared distances (in place).
void envelope_1d(std::vector<double>& f, std::vector<double>& out, std::vector<int>& v,
                 std::vector<double>& z) {
    const int n = static_cast<int>(f.size());
    constexpr double kInf = std::numeric_limits<double>::infinity();
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    const auto intersect = [&](int q, int p) {
        return ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) /
               (2.0 * (q - p));
    };
    for (int q = 1; q < n; ++q) {
        double s = intersect(q, v[k]);
        while (s <= z[k]) {
            --k;
            s = intersect(q, v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) {
            ++k;
        }
        const double d = q - v[k];
        out[q] = d * d + f[v[k]];
    }
}

}  // namespace

std::size_t ContourSet::pixel_count() const {
    std::size_t n = 0;
    for (const Contour& c : contours) {
        n += c.pixels.size();
    }
    return n;
}

std::vector<PixelPos> ContourSet::all_pixels() const {
    std::vector<PixelPos> out;
    out.reserve(pixel_count());
    for (const Contour& c : contours) {
        out.insert(out.end(), c.pixels.begin(), c.pixels.end());
    }
    std::sort(out.begin(), out.end(), row_major_less);
    return out;
}

bool is_boundary_pixel(const PixelMask& mask, int x, int y) {
    if (!mask.at(x, y)) {
        return false;
    }
    if (x == 0 || y == 0 || x == mask.width() - 1 || y == mask.height() - 1) {
        return true;
    }
    for (int k = 0; k < 4; ++k) {
        if (!mask.at(x + kDx4[k], y + kDy4[k])) {
            return true;
        }
    }
    return false;
}

ContourSet extract_contours(const PixelMask& mask) {
    const ComponentLabels fg = label_components(mask);
    if (fg.count == 0) {
        throw Error(ErrorCode::EmptyMask, "mask has no foreground pixels");
    }
    const std::vector<int> bg = label_background(mask);
    const int w = mask.width();

    // Region that surrounds each component: the background directly above its
    // first pixel in raster order (that pixel cannot be foreground).
    std::vector<int> outer(static_cast<std::size_t>(fg.count) + 1, kOutside);
    std::vector<bool> seen(outer.size(), false);
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < w; ++x) {
            const int l = fg.labels[mask.index(x, y)];
            if (l == 0 || seen[l]) {
                continue;
            }
            seen[l] = true;
            outer[l] = y == 0 ? kOutside : bg[mask.index(x, y - 1)];
        }
    }

    // Key: (component, 0) for the exterior contour, (component, hole label) for holes.
    std::map<std::pair<int, int>, std::vector<PixelPos>> groups;
    std::map<std::pair<int, int>, std::size_t> first_index;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < w; ++x) {
            if (!is_boundary_pixel(mask, x, y)) {
                continue;
            }
            const int comp = fg.labels[mask.index(x, y)];
            const bool on_border = x == 0 || y == 0 || x == w - 1 || y == mask.height() - 1;
            int hole = 0;
            bool exterior = on_border;
            for (int k = 0; k < 4 && !exterior; ++k) {
                const int nx = x + kDx4[k];
                const int ny = y + kDy4[k];
                if (mask.at(nx, ny)) {
                    continue;
                }
                const int region = bg[mask.index(nx, ny)];
                if (region == outer[comp]) {
                    exterior = true;
                } else if (hole == 0 || region < hole) {
                    hole = region;
                }
            }
            const std::pair<int, int> key{comp, exterior ? 0 : hole};
            auto& g = groups[key];
            if (g.empty()) {
                first_index[key] = mask.index(x, y);
            }
            g.push_back({x, y});
        }
    }

    std::vector<std::pair<int, int>> keys;
    keys.reserve(groups.size());
    for (const auto& [key, _] : groups) {
        keys.push_back(key);
    }
    std::sort(keys.begin(), keys.end(),
              [&](const auto& a, const auto& b) { return first_index[a] < first_index[b]; });

    ContourSet set;
    set.dims = mask.dims();
    std::map<int, std::size_t> exterior_of;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (keys[i].second == 0) {
            exterior_of[keys[i].first] = i;
        }
    }
    for (const auto& key : keys) {
        Contour c;
        c.pixels = std::move(groups[key]);
        if (key.second != 0) {
            c.kind = ContourKind::Interior;
            c.parent = exterior_of.at(key.first);
        }
        set.contours.push_back(std::move(c));
    }
    return set;
}

DistanceField distance_transform(std::span<const PixelPos> seeds, Dims dims) {
    if (seeds.empty()) {
        throw Error(ErrorCode::EmptySeedSet, "distance_transform needs at least one seed");
    }
    if (dims.width < 1 || dims.height < 1) {
        throw Error(ErrorCode::InvalidArgument, "distance_transform dims must be positive");
    }
    const int w = dims.width;
    const int h = dims.height;
    // Large finite sentinel keeps the envelope arithmetic free of inf - inf.
    constexpr double kFar = 1e20;
    std::vector<double> sq(dims.area(), kFar);
    for (const PixelPos& s : seeds) {
        if (s.x < 0 || s.y < 0 || s.x >= w || s.y >= h) {
            throw Error(ErrorCode::InvalidArgument, "seed outside distance_transform dims");
        }
        sq[static_cast<std::size_t>(s.y) * w + s.x] = 0.0;
    }

    const int longest = std::max(w, h);
    std::vector<double> f(longest), out(longest), z(longest + 1);
    std::vector<int> v(longest);

    f.resize(h);
    out.resize(h);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) {
            f[y] = sq[static_cast<std::size_t>(y) * w + x];
        }
        envelope_1d(f, out, v, z);
        for (int y = 0; y < h; ++y) {
            sq[static_cast<std::size_t>(y) * w + x] = out[y];
        }
    }
    f.resize(w);
    out.resize(w);
    for (int y = 0; y < h; ++y) {
        double* row = sq.data() + static_cast<std::size_t>(y) * w;
        std::copy(row, row + w, f.begin());
        envelope_1d(f, out, v, z);
        std::copy(out.begin(), out.end(), row);
    }

    DistanceField field{dims, std::move(sq)};
    for (double& d : field.values) {
        d = std::sqrt(d);
    }
    return field;
}

double iou(const PixelMask& a, const PixelMask& b) {
    require_same_dims(a, b);
    const auto c = kernels::active().and_or_count(a.bytes().data(), b.bytes().data(), a.size());
    if (c.union_ == 0) {
        return 1.0;
    }
    return static_cast<double>(c.intersection) / static_cast<double>(c.union_);
}

PixelMask mask_xor(const PixelMask& a, const PixelMask& b) {
    require_same_dims(a, b);
    PixelMask out(a.dims());
    kernels::active().xor_masks(a.bytes().data(), b.bytes().data(), out.bytes().data(), a.size());
    return out;
}

std::vector<PixelPos> rasterize_polyline(std::span<const Point> points, bool closed, Dims dims) {
    if (points.size() < 2) {
        throw Error(ErrorCode::TooFewPoints, "rasterize_polyline needs at least two points");
    }
    std::vector<PixelPos> out;
    const auto emit = [&](long x, long y) {
        if (x >= 0 && y >= 0 && x < dims.width && y < dims.height) {
            out.push_back({static_cast<int>(x), static_cast<int>(y)});
        }
    };
    const auto segment = [&](const Point& a, const Point& b) {
        long x0 = std::lround(a.x), y0 = std::lround(a.y);
        const long x1 = std::lround(b.x), y1 = std::lround(b.y);
        const long dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
        const long dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
        long err = dx + dy;
        while (true) {
            emit(x0, y0);
            if (x0 == x1 && y0 == y1) {
                break;
            }
            const long e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x0 += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y0 += sy;
            }
        }
    };
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        segment(points[i], points[i + 1]);
    }
    if (closed && points.size() >= 3) {
        segment(points.back(), points.front());
    }
    std::sort(out.begin(), out.end(), row_major_less);
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

ComponentLabels label_components(const PixelMask& mask) {
    ComponentLabels result{mask.dims(), std::vector<int>(mask.size(), 0), 0};
    std::vector<PixelPos> stack;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.at(x, y) || result.labels[mask.index(x, y)] != 0) {
                continue;
            }
            const int label = ++result.count;
            result.labels[mask.index(x, y)] = label;
            stack.push_back({x, y});
            while (!stack.empty()) {
                const PixelPos p = stack.back();
                stack.pop_back();
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = p.x + dx;
                        const int ny = p.y + dy;
                        if (!mask.in_bounds(nx, ny) || !mask.at(nx, ny)) {
                            continue;
                        }
                        int& l = result.labels[mask.index(nx, ny)];
                        if (l == 0) {
                            l = label;
                            stack.push_back({nx, ny});
                        }
                    }
                }
            }
        }
    }
    return result;
}

std::vector<PixelMask> connected_components(const PixelMask& mask) {
    const ComponentLabels labels = label_components(mask);
    std::vector<PixelMask> out(static_cast<std::size_t>(labels.count), PixelMask(mask.dims()));
    for (std::size_t i = 0; i < labels.labels.size(); ++i) {
        if (const int l = labels.labels[i]; l != 0) {
            out[static_cast<std::size_t>(l - 1)].bytes()[i] = 1;
        }
    }
    return out;
}

std::vector<Point> convex_hull(std::span<const Point> points) {
    std::vector<Point> pts(points.begin(), points.end());
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) {
        return pts;
    }
    const auto cross = [](const Point& o, const Point& a, const Point& b) {
        return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    };
    std::vector<Point> hull(2 * pts.size());
    std::size_t k = 0;
    for (const Point& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) {
            --k;
        }
        hull[k++] = p;
    }
    const std::size_t lower = k + 1;
    for (auto it = pts.rbegin() + 1; it != pts.rend(); ++it) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], *it) <= 0) {
            --k;
        }
        hull[k++] = *it;
    }
    hull.resize(k - 1);
    return hull;
}

PixelMask fill_convex_hull(std::span<const Point> points, Dims dims) {
    if (points.empty()) {
        throw Error(ErrorCode::TooFewPoints, "fill_convex_hull needs at least one point");
    }
    PixelMask out(dims);
    const std::vector<Point> hull = convex_hull(points);
    if (hull.size() < 3) {
        const Point a = hull.front();
        const Point b = hull.back();
        const Point seg[2] = {a, b};
        for (const PixelPos& p : rasterize_polyline(seg, false, dims)) {
            out.set(p);
        }
        return out;
    }

    constexpr double kEps = 1e-9;
    double min_y = hull[0].y, max_y = hull[0].y;
    for (const Point& p : hull) {
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    const int y_begin = std::max(0, static_cast<int>(std::ceil(min_y - kEps)));
    const int y_end = std::min(dims.height - 1, static_cast<int>(std::floor(max_y + kEps)));
    for (int y = y_begin; y <= y_end; ++y) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t i = 0; i < hull.size(); ++i) {
            const Point& a = hull[i];
            const Point& b = hull[(i + 1) % hull.size()];
            if (y < std::min(a.y, b.y) - kEps || y > std::max(a.y, b.y) + kEps) {
                continue;
            }
            if (std::abs(b.y - a.y) <= kEps) {
                lo = std::min({lo, a.x, b.x});
                hi = std::max({hi, a.x, b.x});
                continue;
            }
            const double t = std::clamp((y - a.y) / (b.y - a.y), 0.0, 1.0);
            const double x = a.x + t * (b.x - a.x);
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        if (lo > hi) {
            continue;
        }
        const int x_begin = std::max(0, static_cast<int>(std::ceil(lo - kEps)));
        const int x_end = std::min(dims.width - 1, static_cast<int>(std::floor(hi + kEps)));
        for (int x = x_begin; x <= x_end; ++x) {
            out.set(x, y);
        }
    }
    return out;
}

PixelMask crop_resize_mask(const PixelMask& mask, const CropRect& crop, Dims out) {
    if (!crop.valid() || crop.source != mask.dims()) {
        throw Error(ErrorCode::ShapeMismatch, "crop does not fit the mask");
    }
    PixelMask result(out);
    std::vector<int> src_x(static_cast<std::size_t>(out.width));
    for (int u = 0; u < out.width; ++u) {
        const long sx = std::lround(static_cast<double>(u) * crop.side_w / out.width);
        src_x[u] = crop.x0 + static_cast<int>(std::clamp<long>(sx, 0, crop.side_w - 1));
    }
    for (int v = 0; v < out.height; ++v) {
        const long sy = std::lround(static_cast<double>(v) * crop.side_h / out.height);
        const int y = crop.y0 + static_cast<int>(std::clamp<long>(sy, 0, crop.side_h - 1));
        for (int u = 0; u < out.width; ++u) {
            result.set(u, v, mask.at(src_x[u], y));
        }
    }
    return result;
}

PixelMask paste_mask(const PixelMask& crop_mask, const CropRect& crop, Dims full) {
    if (!crop.valid() || crop.source != full) {
        throw Error(ErrorCode::ShapeMismatch, "crop does not fit the target dimensions");
    }
    PixelMask result(full);
    const int cw = crop_mask.width();
    const int ch = crop_mask.height();
    std::vector<int> src_u(static_cast<std::size_t>(crop.side_w));
    for (int i = 0; i < crop.side_w; ++i) {
        const long u = std::lround(static_cast<double>(i) * cw / crop.side_w);
        src_u[i] = static_cast<int>(std::clamp<long>(u, 0, cw - 1));
    }
    for (int j = 0; j < crop.side_h; ++j) {
        const long v = std::lround(static_cast<double>(j) * ch / crop.side_h);
        const int sv = static_cast<int>(std::clamp<long>(v, 0, ch - 1));
        for (int i = 0; i < crop.side_w; ++i) {
            result.set(crop.x0 + i, crop.y0 + j, crop_mask.at(src_u[i], sv));
        }
    }
    return result;
}

}  // namespace contourseg
