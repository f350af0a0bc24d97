#pragma once

#include "contourseg/geometry.hpp"
#include "contourseg/image_io.hpp"
#include "contourseg/mask.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace contourseg {

// Synthetic ground-truth suite so evaluation runs need no external dataset.

enum class FixtureKind { Ellipse, ConvexPolygon, Star, MultiBlob, Holed, Disk };

std::string_view to_string(FixtureKind kind);

enum class FixtureSuite {
    Mixed,   // ellipses, convex polygons, stars, multi-blob, masks with holes
    Convex,  // ellipses and convex polygons only
};

struct Fixture {
    std::string id;
    FixtureKind kind = FixtureKind::Ellipse;
    RgbImage image;
    PixelMask mask;
};

PixelMask make_disk_mask(Dims dims, Point center, double radius);

/// Foreground/background colours with mild noise, deterministic per seed.
RgbImage render_fixture_image(const PixelMask& mask, std::uint64_t seed);

Fixture make_fixture(FixtureKind kind, std::uint64_t seed, std::string id);

std::vector<Fixture> generate_fixtures(int count, std::uint64_t seed, FixtureSuite suite = FixtureSuite::Mixed);

/// Writes images/, masks/ and index.json under `dir` in the dataset layout.
void write_fixtures(std::span<const Fixture> fixtures, const std::filesystem::path& dir);

}  // namespace contourseg
