#pragma once

#include "contourseg/geometry.hpp"
#include "contourseg/mask.hpp"
#include "contourseg/mask_ops.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace contourseg {

enum class ClickSource { Initial, Geometric, Corrective, Human };

std::string_view to_string(ClickSource source);

struct Click {
    Point point;
    ClickSource source = ClickSource::Human;
    int order = 1;  // 1-based position in its ClickSet

    friend bool operator==(const Click&, const Click&) = default;
};

class ClickSet {
public:
    ClickSet() = default;

    const Click& append(Point p, ClickSource source);
    void pop_back() { clicks_.pop_back(); }

    std::size_t size() const { return clicks_.size(); }
    bool empty() const { return clicks_.empty(); }
    const Click& operator[](std::size_t i) const { return clicks_[i]; }
    const Click& back() const { return clicks_.back(); }
    auto begin() const { return clicks_.begin(); }
    auto end() const { return clicks_.end(); }

    std::vector<Point> points() const;

    friend bool operator==(const ClickSet&, const ClickSet&) = default;

private:
    std::vector<Click> clicks_;
};

struct PairSamplingParams {
    double ratio_mean = 1.0;
    double ratio_std = 0.03;
    double ratio_low = 0.85;
    double ratio_high = 1.0;
    int contour_subsample = 512;

    void validate() const;
};

struct SimulationParams {
    int n_add_min = 0;
    int n_add_max = 8;
    double noise_std = 3.0;  // full-image pixels
    int corrective_batch = 1;

    void validate() const;
};

/// Two contour clicks whose separation, relative to the widest contour pair,
/// is closest to a ratio drawn from N(mean, std) clamped to [low, high].
/// Throws TooSmallTarget when the mask has fewer than two contour pixels.
ClickSet sample_initial_pair(const PixelMask& gt, const PairSamplingParams& params, std::uint64_t seed);
ClickSet sample_initial_pair(const ContourSet& gt_contours, const PairSamplingParams& params,
                             std::uint64_t seed);

/// Clicks sorted by angle around their centroid, giving a simple polygon for
/// star-shaped layouts. Ties keep the input order.
std::vector<Point> order_for_polygon(std::span<const Point> clicks);

/// The click polygon's pixels: ordered clicks joined by digital segments,
/// closed once there are three or more clicks.
std::vector<PixelPos> click_polygon_pixels(const ClickSet& clicks, Dims dims);

/// Geometric strategy: the ground-truth contour pixel farthest from the click
/// polygon. Exterior contours are served first; interior contours become
/// eligible once every exterior contour holds three clicks or is already
/// closer to the polygon than the farthest interior pixel.
/// Ties go to the lowest row-major index.
Click next_click_geometric(const ContourSet& gt_contours, const ClickSet& clicks, Dims dims);

/// Corrective strategy: the error (gt xor pred) is split into 8-connected
/// blobs; each of the `delta_n` largest contributes the ground-truth contour
/// pixel inside it that is farthest from the prediction's contour.
/// Blobs without ground-truth contour pixels use the contour pixel nearest
/// their centroid. With an empty prediction, distances are measured from the
/// existing clicks (or the blob centroid when there are none).
/// Returns an empty list when pred == gt.
std::vector<Click> next_clicks_corrective(const PixelMask& gt, const PixelMask& pred, int delta_n,
                                          const ClickSet& existing = {});

/// Isotropic Gaussian offset drawn for `seed`.
Point sample_click_offset(double noise_std, std::uint64_t seed);

/// Offsets the click by sample_click_offset and snaps it back to the nearest
/// ground-truth contour pixel. noise_std == 0 returns the click unchanged.
Click perturb_click(const Click& click, double noise_std, const ContourSet& gt_contours,
                    std::uint64_t seed);

/// Initial pair plus n_add ~ U[n_add_min, n_add_max] perturbed geometric clicks.
ClickSet simulate_training_sequence(const PixelMask& gt, const SimulationParams& params,
                                    const PairSamplingParams& pair, std::uint64_t seed);

}  // namespace contourseg
