#pragma once

// Slow, obviously-correct reference implementations used to check the
// library. Nothing here calls the code under test except where a definition
// is shared (noted inline).

#include "contourseg/mask.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <vector>

namespace oracle {

using contourseg::Dims;
using contourseg::PixelMask;
using contourseg::PixelPos;

inline std::int64_t sq(const PixelPos& a, const PixelPos& b) {
    const std::int64_t dx = a.x - b.x, dy = a.y - b.y;
    return dx * dx + dy * dy;
}

inline std::size_t index_of(const PixelPos& p, Dims d) { return static_cast<std::size_t>(p.y) * d.width + p.x; }

// Squared distance from every pixel to its nearest seed by direct scan.
inline std::vector<std::int64_t> nearest_sq(const std::vector<PixelPos>& seeds, Dims d) {
    std::vector<std::int64_t> out(d.area(), std::numeric_limits<std::int64_t>::max());
    for (int y = 0; y < d.height; ++y) {
        for (int x = 0; x < d.width; ++x) {
            for (const PixelPos& s : seeds) {
                out[static_cast<std::size_t>(y) * d.width + x] =
                    std::min(out[static_cast<std::size_t>(y) * d.width + x], sq({x, y}, s));
            }
        }
    }
    return out;
}

inline std::int64_t min_sq_to(const PixelPos& p, const std::vector<PixelPos>& seeds) {
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (const PixelPos& s : seeds) {
        best = std::min(best, sq(p, s));
    }
    return best;
}

// Foreground with a 4-neighbour outside the mask or in the background.
inline bool boundary(const PixelMask& m, int x, int y) {
    if (!m.at(x, y)) {
        return false;
    }
    const int dx[] = {1, -1, 0, 0};
    const int dy[] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
        const int nx = x + dx[k], ny = y + dy[k];
        if (!m.in_bounds(nx, ny) || !m.at(nx, ny)) {
            return true;
        }
    }
    return false;
}

inline std::vector<PixelPos> boundary_pixels(const PixelMask& m) {
    std::vector<PixelPos> out;
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (boundary(m, x, y)) {
                out.push_back({x, y});
            }
        }
    }
    return out;
}

// BFS labelling; 8-connected when `eight`, else 4-connected. Labels follow
// raster order of each component's first pixel.
inline std::vector<int> flood_labels(const PixelMask& m, bool value, bool eight, int* count) {
    const Dims d = m.dims();
    std::vector<int> label(d.area(), 0);
    int next = 0;
    for (int y = 0; y < d.height; ++y) {
        for (int x = 0; x < d.width; ++x) {
            if (m.at(x, y) != value || label[index_of({x, y}, d)] != 0) {
                continue;
            }
            ++next;
            std::queue<PixelPos> q;
            q.push({x, y});
            label[index_of({x, y}, d)] = next;
            while (!q.empty()) {
                const PixelPos p = q.front();
                q.pop();
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if ((dx == 0 && dy == 0) || (!eight && dx != 0 && dy != 0)) {
                            continue;
                        }
                        const int nx = p.x + dx, ny = p.y + dy;
                        if (m.in_bounds(nx, ny) && m.at(nx, ny) == value && label[index_of({nx, ny}, d)] == 0) {
                            label[index_of({nx, ny}, d)] = next;
                            q.push({nx, ny});
                        }
                    }
                }
            }
        }
    }
    if (count) {
        *count = next;
    }
    return label;
}

inline PixelMask random_mask(Dims d, double density, std::mt19937_64& rng) {
    PixelMask m(d);
    std::bernoulli_distribution fg(density);
    for (int y = 0; y < d.height; ++y) {
        for (int x = 0; x < d.width; ++x) {
            m.set(x, y, fg(rng));
        }
    }
    return m;
}

inline PixelMask rect_mask(Dims d, int x0, int y0, int x1, int y1) {
    PixelMask m(d);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            m.set(x, y);
        }
    }
    return m;
}

}  // namespace oracle

namespace oracle {

// Geometric argmax over every boundary pixel of a hole-free mask: the pixel
// farthest from `geo`, lowest raster index on ties.
inline PixelPos geometric_argmax(const PixelMask& gt, const std::vector<PixelPos>& geo) {
    PixelPos best{-1, -1};
    std::int64_t best_d = -1;
    for (const PixelPos& p : boundary_pixels(gt)) {
        const std::int64_t d = min_sq_to(p, geo);
        if (d > best_d) {
            best_d = d;
            best = p;
        }
    }
    return best;
}

// Corrective picks by direct enumeration of blobs and candidates.
inline std::vector<PixelPos> corrective_picks(const PixelMask& gt, const PixelMask& pred, int delta_n,
                                              const std::vector<PixelPos>& clicks) {
    const Dims d = gt.dims();
    PixelMask err(d);
    for (int y = 0; y < d.height; ++y) {
        for (int x = 0; x < d.width; ++x) {
            err.set(x, y, gt.at(x, y) != pred.at(x, y));
        }
    }
    int n_blobs = 0;
    const std::vector<int> label = flood_labels(err, true, true, &n_blobs);
    struct Blob {
        int label;
        std::size_t area = 0, first = 0;
        double sx = 0, sy = 0;
    };
    std::vector<Blob> blobs;
    for (int l = 1; l <= n_blobs; ++l) {
        Blob b{l};
        bool seen = false;
        for (std::size_t i = 0; i < label.size(); ++i) {
            if (label[i] == l) {
                if (!seen) {
                    b.first = i;
                    seen = true;
                }
                ++b.area;
                b.sx += static_cast<double>(i % d.width);
                b.sy += static_cast<double>(i / d.width);
            }
        }
        blobs.push_back(b);
    }
    std::stable_sort(blobs.begin(), blobs.end(), [](const Blob& a, const Blob& b) { return a.area > b.area; });
    if (blobs.size() > static_cast<std::size_t>(delta_n)) {
        blobs.resize(static_cast<std::size_t>(delta_n));
    }

    const std::vector<PixelPos> gt_contour = boundary_pixels(gt);
    std::vector<PixelPos> seeds = pred.empty() ? clicks : boundary_pixels(pred);
    std::vector<PixelPos> out;
    for (const Blob& b : blobs) {
        const double cx = b.sx / static_cast<double>(b.area), cy = b.sy / static_cast<double>(b.area);
        std::optional<PixelPos> pick;
        double best = -1;
        for (const PixelPos& p : gt_contour) {
            if (label[index_of(p, d)] != b.label) {
                continue;
            }
            const double v = seeds.empty() ? (p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy)
                                           : static_cast<double>(min_sq_to(p, seeds));
            if (v > best) {
                best = v;
                pick = p;
            }
        }
        if (!pick) {
            double near = std::numeric_limits<double>::infinity();
            for (const PixelPos& p : gt_contour) {
                const double v = (p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy);
                if (v < near) {
                    near = v;
                    pick = p;
                }
            }
        }
        if (std::find(out.begin(), out.end(), *pick) == out.end()) {
            out.push_back(*pick);
        }
    }
    return out;
}

}  // namespace oracle
