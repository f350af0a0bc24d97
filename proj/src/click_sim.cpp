#include "contourseg/click_sim.hpp"

#include "contourseg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>

namespace contourseg {

namespace {

std::int64_t sq_dist(const PixelPos& a, const PixelPos& b) {
    const std::int64_t dx = a.x - b.x;
    const std::int64_t dy = a.y - b.y;
    return dx * dx + dy * dy;
}

std::optional<PixelPos> to_pixel(const Point& p, Dims dims) {
    const long x = std::lround(p.x);
    const long y = std::lround(p.y);
    if (x < 0 || y < 0 || x >= dims.width || y >= dims.height) {
        return std::nullopt;
    }
    return PixelPos{static_cast<int>(x), static_cast<int>(y)};
}

std::size_t linear_index(const PixelPos& p, Dims dims) {
    return static_cast<std::size_t>(p.y) * dims.width + p.x;
}

// Nearest pixel of `candidates` (row-major sorted) to `target`, lowest index on ties.
PixelPos nearest_of(std::span<const PixelPos> candidates, const Point& target) {
    PixelPos best = candidates.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (const PixelPos& c : candidates) {
        const double dx = c.x - target.x;
        const double dy = c.y - target.y;
        const double d = dx * dx + dy * dy;
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

}  // namespace

std::string_view to_string(ClickSource source) {
    switch (source) {
    case ClickSource::Initial: return "initial";
    case ClickSource::Geometric: return "geometric";
    case ClickSource::Corrective: return "corrective";
    case ClickSource::Human: return "human";
    }
    return "unknown";
}

const Click& ClickSet::append(Point p, ClickSource source) {
    clicks_.push_back({p, source, static_cast<int>(clicks_.size()) + 1});
    return clicks_.back();
}

std::vector<Point> ClickSet::points() const {
    std::vector<Point> out;
    out.reserve(clicks_.size());
    for (const Click& c : clicks_) {
        out.push_back(c.point);
    }
    return out;
}

void PairSamplingParams::validate() const {
    if (!(ratio_low > 0.0 && ratio_low <= ratio_high && ratio_high <= 1.0) || !(ratio_std >= 0.0) ||
        contour_subsample < 2) {
        throw Error(ErrorCode::InvalidArgument,
                    "pair sampling needs 0 < low <= high <= 1, std >= 0, subsample >= 2");
    }
}

void SimulationParams::validate() const {
    if (n_add_min < 0 || n_add_max < n_add_min || n_add_max > 32 || !(noise_std >= 0.0) ||
        corrective_batch < 1) {
        throw Error(ErrorCode::InvalidArgument,
                    "simulation needs 0 <= n_add_min <= n_add_max <= 32, noise_std >= 0, batch >= 1");
    }
}

ClickSet sample_initial_pair(const PixelMask& gt, const PairSamplingParams& params, std::uint64_t seed) {
    if (gt.empty()) {
        throw Error(ErrorCode::TooSmallTarget, "target mask is empty");
    }
    return sample_initial_pair(extract_contours(gt), params, seed);
}

ClickSet sample_initial_pair(const ContourSet& gt_contours, const PairSamplingParams& params,
                             std::uint64_t seed) {
    params.validate();
    const std::vector<PixelPos> contour = gt_contours.all_pixels();
    if (contour.size() < 2) {
        throw Error(ErrorCode::TooSmallTarget, "target needs at least two contour pixels");
    }
    const std::size_t n = contour.size();
    const std::size_t m = std::min<std::size_t>(n, static_cast<std::size_t>(params.contour_subsample));
    std::vector<PixelPos> pts(m);
    for (std::size_t i = 0; i < m; ++i) {
        pts[i] = contour[i * n / m];
    }

    std::int64_t max_sq = 0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            max_sq = std::max(max_sq, sq_dist(pts[i], pts[j]));
        }
    }
    const double max_d = std::sqrt(static_cast<double>(max_sq));

    std::mt19937_64 rng(seed);
    double ratio = params.ratio_mean;
    if (params.ratio_std > 0.0) {
        ratio = std::normal_distribution<double>(params.ratio_mean, params.ratio_std)(rng);
    }
    ratio = std::clamp(ratio, params.ratio_low, params.ratio_high);

    std::size_t best_i = 0, best_j = 1;
    double best_err = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const double r = std::sqrt(static_cast<double>(sq_dist(pts[i], pts[j]))) / max_d;
            const double err = std::abs(r - ratio);
            if (err < best_err) {
                best_err = err;
                best_i = i;
                best_j = j;
            }
        }
    }

    ClickSet clicks;
    clicks.append(pts[best_i].to_point(), ClickSource::Initial);
    clicks.append(pts[best_j].to_point(), ClickSource::Initial);
    return clicks;
}

std::vector<Point> order_for_polygon(std::span<const Point> clicks) {
    if (clicks.empty()) {
        return {};
    }
    Point centroid;
    for (const Point& p : clicks) {
        centroid.x += p.x;
        centroid.y += p.y;
    }
    centroid.x /= static_cast<double>(clicks.size());
    centroid.y /= static_cast<double>(clicks.size());

    std::vector<std::size_t> idx(clicks.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> angle(clicks.size());
    for (std::size_t i = 0; i < clicks.size(); ++i) {
        angle[i] = std::atan2(clicks[i].y - centroid.y, clicks[i].x - centroid.x);
    }
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return angle[a] < angle[b]; });
    std::vector<Point> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) {
        out.push_back(clicks[i]);
    }
    return out;
}

std::vector<PixelPos> click_polygon_pixels(const ClickSet& clicks, Dims dims) {
    const std::vector<Point> pts = clicks.points();
    if (pts.size() < 2) {
        throw Error(ErrorCode::TooFewClicks, "the click polygon needs at least two clicks");
    }
    const std::vector<Point> ordered = order_for_polygon(pts);
    return rasterize_polyline(ordered, ordered.size() >= 3, dims);
}

Click next_click_geometric(const ContourSet& gt_contours, const ClickSet& clicks, Dims dims) {
    if (gt_contours.contours.empty() || gt_contours.pixel_count() == 0) {
        throw Error(ErrorCode::EmptyMask, "ground truth has no contour");
    }
    if (clicks.size() < 2) {
        throw Error(ErrorCode::TooFewClicks, "geometric strategy needs at least two clicks");
    }
    const std::vector<PixelPos> polygon = click_polygon_pixels(clicks, dims);
    if (polygon.empty()) {
        throw Error(ErrorCode::InvalidArgument, "click polygon lies outside the image");
    }
    const DistanceField field = distance_transform(polygon, dims);

    const std::size_t nc = gt_contours.contours.size();
    std::unordered_map<std::size_t, std::size_t> owner;
    for (std::size_t c = 0; c < nc; ++c) {
        for (const PixelPos& p : gt_contours.contours[c].pixels) {
            owner.emplace(linear_index(p, dims), c);
        }
    }
    std::vector<int> clicks_on(nc, 0);
    for (const Click& click : clicks) {
        if (auto px = to_pixel(click.point, dims)) {
            if (auto it = owner.find(linear_index(*px, dims)); it != owner.end()) {
                ++clicks_on[it->second];
            }
        }
    }

    // Per-contour farthest pixel; contour pixels are row-major so the first
    // strict maximum is the lowest index.
    std::vector<double> best_d(nc, -1.0);
    std::vector<PixelPos> best_p(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        for (const PixelPos& p : gt_contours.contours[c].pixels) {
            const double d = field.at(p);
            if (d > best_d[c]) {
                best_d[c] = d;
                best_p[c] = p;
            }
        }
    }

    double interior_max = -1.0;
    bool has_interior = false;
    for (std::size_t c = 0; c < nc; ++c) {
        if (gt_contours.contours[c].kind == ContourKind::Interior) {
            has_interior = true;
            interior_max = std::max(interior_max, best_d[c]);
        }
    }
    bool interiors_open = has_interior;
    for (std::size_t c = 0; c < nc && interiors_open; ++c) {
        if (gt_contours.contours[c].kind == ContourKind::Exterior && clicks_on[c] < 3 &&
            !(best_d[c] < interior_max)) {
            interiors_open = false;
        }
    }

    std::optional<std::size_t> chosen;
    for (std::size_t c = 0; c < nc; ++c) {
        if (gt_contours.contours[c].kind == ContourKind::Interior && !interiors_open) {
            continue;
        }
        if (!chosen || best_d[c] > best_d[*chosen] ||
            (best_d[c] == best_d[*chosen] &&
             linear_index(best_p[c], dims) < linear_index(best_p[*chosen], dims))) {
            chosen = c;
        }
    }
    return Click{best_p[*chosen].to_point(), ClickSource::Geometric, static_cast<int>(clicks.size()) + 1};
}

std::vector<Click> next_clicks_corrective(const PixelMask& gt, const PixelMask& pred, int delta_n,
                                          const ClickSet& existing) {
    if (gt.dims() != pred.dims()) {
        throw Error(ErrorCode::ShapeMismatch, "ground truth and prediction dimensions differ");
    }
    if (delta_n < 1) {
        throw Error(ErrorCode::InvalidArgument, "delta_n must be at least 1");
    }
    const Dims dims = gt.dims();
    const PixelMask error = mask_xor(gt, pred);
    const ComponentLabels blobs = label_components(error);
    if (blobs.count == 0) {
        return {};
    }
    const ContourSet gt_contours = extract_contours(gt);
    const std::vector<PixelPos> contour = gt_contours.all_pixels();

    struct Blob {
        int label = 0;
        std::size_t area = 0;
        std::size_t first = std::numeric_limits<std::size_t>::max();
        double sx = 0.0, sy = 0.0;
    };
    std::vector<Blob> stats(static_cast<std::size_t>(blobs.count));
    for (std::size_t i = 0; i < blobs.labels.size(); ++i) {
        if (const int l = blobs.labels[i]; l != 0) {
            Blob& b = stats[static_cast<std::size_t>(l - 1)];
            b.label = l;
            ++b.area;
            b.first = std::min(b.first, i);
            b.sx += static_cast<double>(i % dims.width);
            b.sy += static_cast<double>(i / dims.width);
        }
    }
    std::sort(stats.begin(), stats.end(), [](const Blob& a, const Blob& b) {
        return a.area != b.area ? a.area > b.area : a.first < b.first;
    });
    stats.resize(std::min(stats.size(), static_cast<std::size_t>(delta_n)));

    std::optional<DistanceField> field;
    if (!pred.empty()) {
        field = distance_transform(extract_contours(pred).all_pixels(), dims);
    } else {
        std::vector<PixelPos> seeds;
        for (const Click& c : existing) {
            if (auto px = to_pixel(c.point, dims)) {
                seeds.push_back(*px);
            }
        }
        if (!seeds.empty()) {
            field = distance_transform(seeds, dims);
        }
    }

    std::vector<Click> out;
    int order = static_cast<int>(existing.size());
    for (const Blob& blob : stats) {
        const Point centroid{blob.sx / blob.area, blob.sy / blob.area};
        std::optional<PixelPos> pick;
        double pick_d = -1.0;
        for (const PixelPos& p : contour) {
            if (blobs.labels[linear_index(p, dims)] != blob.label) {
                continue;
            }
            double d = 0.0;
            if (field) {
                d = field->at(p);
            } else {
                d = std::hypot(p.x - centroid.x, p.y - centroid.y);
            }
            if (d > pick_d) {
                pick_d = d;
                pick = p;
            }
        }
        if (!pick) {
            pick = nearest_of(contour, centroid);
        }
        const Point pt = pick->to_point();
        const bool duplicate = std::any_of(out.begin(), out.end(), [&](const Click& c) { return c.point == pt; });
        if (!duplicate) {
            out.push_back({pt, ClickSource::Corrective, ++order});
        }
    }
    return out;
}

Point sample_click_offset(double noise_std, std::uint64_t seed) {
    if (!(noise_std > 0.0)) {
        return {};
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, noise_std);
    const double dx = normal(rng);
    const double dy = normal(rng);
    return {dx, dy};
}

Click perturb_click(const Click& click, double noise_std, const ContourSet& gt_contours,
                    std::uint64_t seed) {
    if (noise_std < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "noise_std must be non-negative");
    }
    if (noise_std == 0.0) {
        return click;
    }
    const std::vector<PixelPos> contour = gt_contours.all_pixels();
    if (contour.empty()) {
        throw Error(ErrorCode::EmptyMask, "ground truth has no contour");
    }
    const Point offset = sample_click_offset(noise_std, seed);
    const Point target{click.point.x + offset.x, click.point.y + offset.y};
    Click out = click;
    out.point = nearest_of(contour, target).to_point();
    return out;
}

ClickSet simulate_training_sequence(const PixelMask& gt, const SimulationParams& params,
                                    const PairSamplingParams& pair, std::uint64_t seed) {
    params.validate();
    const ContourSet contours = extract_contours(gt);
    std::mt19937_64 rng(seed);
    ClickSet clicks = sample_initial_pair(contours, pair, rng());
    const int n_add = std::uniform_int_distribution<int>(params.n_add_min, params.n_add_max)(rng);
    for (int i = 0; i < n_add; ++i) {
        const Click next = next_click_geometric(contours, clicks, gt.dims());
        const Click noisy = perturb_click(next, params.noise_std, contours, rng());
        clicks.append(noisy.point, ClickSource::Geometric);
    }
    return clicks;
}

}  // namespace contourseg
