#include "contourseg/fixtures.hpp"

#include "contourseg/errors.hpp"
#include "contourseg/mask_ops.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace contourseg {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

void fill_ellipse(PixelMask& mask, Point c, double a, double b, double theta, bool value = true) {
    const double ct = std::cos(theta), st = std::sin(theta);
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            const double dx = x - c.x, dy = y - c.y;
            const double u = (dx * ct + dy * st) / a;
            const double v = (-dx * st + dy * ct) / b;
            if (u * u + v * v <= 1.0) {
                mask.set(x, y, value);
            }
        }
    }
}

// Even-odd fill at pixel lattice points.
void fill_polygon(PixelMask& mask, const std::vector<Point>& poly) {
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            bool inside = false;
            for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
                const Point& a = poly[i];
                const Point& b = poly[j];
                if ((a.y > y) != (b.y > y) && x < (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x) {
                    inside = !inside;
                }
            }
            if (inside) {
                mask.set(x, y);
            }
        }
    }
}

PixelMask ellipse_mask(Rng& rng, Dims dims) {
    PixelMask m(dims);
    const Point c{dims.width / 2.0 + uniform(rng, -20, 20), dims.height / 2.0 + uniform(rng, -20, 20)};
    fill_ellipse(m, c, uniform(rng, 25, 90), uniform(rng, 25, 90), uniform(rng, 0, std::numbers::pi));
    return m;
}

PixelMask convex_polygon_mask(Rng& rng, Dims dims) {
    const Point c{dims.width / 2.0 + uniform(rng, -20, 20), dims.height / 2.0 + uniform(rng, -20, 20)};
    const double a = uniform(rng, 30, 90), b = uniform(rng, 30, 90);
    const int k = std::uniform_int_distribution<int>(3, 8)(rng);
    std::vector<Point> pts;
    for (int i = 0; i < k; ++i) {
        const double t = uniform(rng, 0, 2 * std::numbers::pi);
        pts.push_back({c.x + a * std::cos(t), c.y + b * std::sin(t)});
    }
    // Keep degenerate draws from collapsing to slivers.
    pts.push_back({c.x - a, c.y});
    pts.push_back({c.x + a, c.y});
    pts.push_back({c.x, c.y + b});
    return fill_convex_hull(pts, dims);
}

PixelMask star_mask(Rng& rng, Dims dims) {
    PixelMask m(dims);
    const Point c{dims.width / 2.0 + uniform(rng, -15, 15), dims.height / 2.0 + uniform(rng, -15, 15)};
    const int k = std::uniform_int_distribution<int>(5, 8)(rng);
    const double outer = uniform(rng, 50, 90);
    const double inner = outer * uniform(rng, 0.45, 0.7);
    const double phase = uniform(rng, 0, std::numbers::pi);
    std::vector<Point> poly;
    for (int i = 0; i < 2 * k; ++i) {
        const double r = i % 2 == 0 ? outer : inner;
        const double t = phase + i * std::numbers::pi / k;
        poly.push_back({c.x + r * std::cos(t), c.y + r * std::sin(t)});
    }
    fill_polygon(m, poly);
    return m;
}

PixelMask multi_blob_mask(Rng& rng, Dims dims) {
    PixelMask m(dims);
    const int blobs = std::uniform_int_distribution<int>(2, 3)(rng);
    const double cx = dims.width / 2.0, cy = dims.height / 2.0;
    const double spread = uniform(rng, 35, 60);
    const double phase = uniform(rng, 0, 2 * std::numbers::pi);
    for (int i = 0; i < blobs; ++i) {
        const double t = phase + 2 * std::numbers::pi * i / blobs;
        const Point c{cx + spread * std::cos(t), cy + spread * std::sin(t)};
        fill_ellipse(m, c, uniform(rng, 12, 30), uniform(rng, 12, 30), uniform(rng, 0, std::numbers::pi));
    }
    return m;
}

PixelMask holed_mask(Rng& rng, Dims dims) {
    PixelMask m(dims);
    const Point c{dims.width / 2.0 + uniform(rng, -15, 15), dims.height / 2.0 + uniform(rng, -15, 15)};
    const double a = uniform(rng, 45, 90), b = uniform(rng, 45, 90);
    const double theta = uniform(rng, 0, std::numbers::pi);
    fill_ellipse(m, c, a, b, theta);
    const double s = uniform(rng, 0.3, 0.5);
    fill_ellipse(m, c, a * s, b * s, theta, false);
    return m;
}

PixelMask disk_fixture(Rng& rng) {
    const Dims dims{320, 320};
    const double r = uniform(rng, 80, 120);
    return make_disk_mask(dims, {160.0 + uniform(rng, -10, 10), 160.0 + uniform(rng, -10, 10)}, r);
}

}  // namespace

std::string_view to_string(FixtureKind kind) {
    switch (kind) {
    case FixtureKind::Ellipse: return "ellipse";
    case FixtureKind::ConvexPolygon: return "convex_polygon";
    case FixtureKind::Star: return "star";
    case FixtureKind::MultiBlob: return "multi_blob";
    case FixtureKind::Holed: return "holed";
    case FixtureKind::Disk: return "disk";
    }
    return "unknown";
}

PixelMask make_disk_mask(Dims dims, Point center, double radius) {
    PixelMask m(dims);
    for (int y = 0; y < dims.height; ++y) {
        for (int x = 0; x < dims.width; ++x) {
            const double dx = x - center.x, dy = y - center.y;
            if (dx * dx + dy * dy <= radius * radius) {
                m.set(x, y);
            }
        }
    }
    return m;
}

RgbImage render_fixture_image(const PixelMask& mask, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_int_distribution<int> channel(30, 225);
    int bg[3], fg[3];
    for (int c = 0; c < 3; ++c) {
        bg[c] = channel(rng);
        fg[c] = (bg[c] + 60 + channel(rng) / 2) % 256;
    }
    std::uniform_int_distribution<int> noise(-10, 10);
    RgbImage img{mask.dims(), std::vector<std::uint8_t>(mask.size() * 3)};
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const int* base = mask.bytes()[i] ? fg : bg;
        for (int c = 0; c < 3; ++c) {
            img.rgb[i * 3 + c] = static_cast<std::uint8_t>(std::clamp(base[c] + noise(rng), 0, 255));
        }
    }
    return img;
}

Fixture make_fixture(FixtureKind kind, std::uint64_t seed, std::string id) {
    Rng rng(seed);
    const Dims dims{256, 256};
    Fixture f;
    f.id = std::move(id);
    f.kind = kind;
    switch (kind) {
    case FixtureKind::Ellipse: f.mask = ellipse_mask(rng, dims); break;
    case FixtureKind::ConvexPolygon: f.mask = convex_polygon_mask(rng, dims); break;
    case FixtureKind::Star: f.mask = star_mask(rng, dims); break;
    case FixtureKind::MultiBlob: f.mask = multi_blob_mask(rng, dims); break;
    case FixtureKind::Holed: f.mask = holed_mask(rng, dims); break;
    case FixtureKind::Disk: f.mask = disk_fixture(rng); break;
    }
    f.image = render_fixture_image(f.mask, rng());
    return f;
}

std::vector<Fixture> generate_fixtures(int count, std::uint64_t seed, FixtureSuite suite) {
    static constexpr FixtureKind kMixed[] = {FixtureKind::Ellipse, FixtureKind::ConvexPolygon, FixtureKind::Star,
                                             FixtureKind::MultiBlob, FixtureKind::Holed};
    static constexpr FixtureKind kConvex[] = {FixtureKind::Ellipse, FixtureKind::ConvexPolygon};
    const std::span<const FixtureKind> kinds =
        suite == FixtureSuite::Mixed ? std::span<const FixtureKind>(kMixed) : std::span<const FixtureKind>(kConvex);
    Rng rng(seed);
    std::vector<Fixture> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const FixtureKind kind = kinds[static_cast<std::size_t>(i) % kinds.size()];
        char id[64];
        std::snprintf(id, sizeof id, "%04d_%s", i, std::string(to_string(kind)).c_str());
        out.push_back(make_fixture(kind, rng(), id));
    }
    return out;
}

void write_fixtures(std::span<const Fixture> fixtures, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "masks");
    nlohmann::json instances = nlohmann::json::array();
    for (const Fixture& f : fixtures) {
        const std::string image_rel = "images/" + f.id + ".png";
        const std::string mask_rel = "masks/" + f.id + ".png";
        write_file(dir / image_rel, encode_rgb_png(f.image));
        write_file(dir / mask_rel, encode_mask_png(f.mask));
        instances.push_back(
            {{"id", f.id}, {"image", image_rel}, {"mask", mask_rel}, {"category", std::string(to_string(f.kind))}});
    }
    const nlohmann::json index{{"instances", std::move(instances)}};
    write_file(dir / "index.json", index.dump(2) + "\n");
}

}  // namespace contourseg
