#include "contourseg/errors.hpp"
#include "contourseg/geometry.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace contourseg;

namespace {

std::vector<Point> random_points(std::mt19937_64& rng, int n, double extent) {
    std::uniform_real_distribution<double> u(0.0, extent);
    std::vector<Point> pts(static_cast<std::size_t>(n));
    for (Point& p : pts) {
        p = {u(rng), u(rng)};
    }
    return pts;
}

}  // namespace

TEST_CASE("smallest circle of a pair and a right triangle") {
    const std::vector<Point> pair{{0, 0}, {2, 0}};
    Circle c = smallest_enclosing_circle(pair);
    CHECK(c.center.x == doctest::Approx(1.0));
    CHECK(c.center.y == doctest::Approx(0.0));
    CHECK(c.radius == doctest::Approx(1.0));

    const std::vector<Point> tri{{0, 0}, {4, 0}, {0, 3}};
    c = smallest_enclosing_circle(tri);
    CHECK(c.center.x == doctest::Approx(2.0));
    CHECK(c.center.y == doctest::Approx(1.5));
    CHECK(c.radius == doctest::Approx(2.5));
}

TEST_CASE("empty input is rejected") {
    const std::vector<Point> none;
    CHECK_THROWS_AS(smallest_enclosing_circle(none), Error);
    try {
        smallest_enclosing_circle(none);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyPointSet);
    }
}

TEST_CASE("brute force examples and size limit") {
    const std::vector<Point> one{{5, 5}};
    Circle c = brute_force_sec(one);
    CHECK(c.center == Point{5, 5});
    CHECK(c.radius == 0.0);

    const double h = std::sqrt(3.0);
    const std::vector<Point> equilateral{{-1, -h / 3}, {1, -h / 3}, {0, 2 * h / 3}};
    c = brute_force_sec(equilateral);
    CHECK(c.radius == doctest::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-12));
    CHECK(std::abs(c.center.x) < 1e-12);
    CHECK(std::abs(c.center.y) < 1e-12);

    std::mt19937_64 rng(1);
    const auto many = random_points(rng, 17, 10.0);
    try {
        brute_force_sec(many);
        FAIL("expected OracleSizeExceeded");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::OracleSizeExceeded);
    }
}

TEST_CASE("Welzl matches brute force and encloses every point") {
    std::mt19937_64 rng(20240611);
    std::uniform_int_distribution<int> size(1, 12);
    for (int trial = 0; trial < 2000; ++trial) {
        auto pts = random_points(rng, size(rng), 1000.0);
        const Circle fast = smallest_enclosing_circle(pts, rng());
        const Circle ref = brute_force_sec(pts);
        REQUIRE(std::abs(fast.radius - ref.radius) <= 1e-9);
        for (const Point& p : pts) {
            REQUIRE(fast.contains(p, 1e-7));
        }
    }
}

TEST_CASE("Welzl handles collinear and duplicate points") {
    const std::vector<Point> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}, {1.5, 1.5}};
    Circle c = smallest_enclosing_circle(line);
    CHECK(c.radius == doctest::Approx(std::sqrt(18.0) / 2));
    CHECK(c.center.x == doctest::Approx(1.5));

    const std::vector<Point> dup{{4, 4}, {4, 4}, {4, 4}};
    c = smallest_enclosing_circle(dup);
    CHECK(c.radius == 0.0);
    CHECK(c.center == Point{4, 4});

    // Integer grid points produce many exactly cocircular quadruples.
    std::vector<Point> grid;
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            grid.push_back({static_cast<double>(x), static_cast<double>(y)});
        }
    }
    c = smallest_enclosing_circle(grid);
    CHECK(std::abs(c.radius - brute_force_sec(grid).radius) <= 1e-9);
}

TEST_CASE("circle is invariant under permutation and seed") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        auto pts = random_points(rng, 12, 500.0);
        const Circle a = smallest_enclosing_circle(pts, 1);
        std::shuffle(pts.begin(), pts.end(), rng);
        const Circle b = smallest_enclosing_circle(pts, 2);
        CHECK(std::abs(a.radius - b.radius) <= 1e-9);
    }
}

TEST_CASE("same seed gives the same circle bit for bit") {
    std::mt19937_64 rng(3);
    const auto pts = random_points(rng, 40, 100.0);
    const Circle a = smallest_enclosing_circle(pts, 77);
    const Circle b = smallest_enclosing_circle(pts, 77);
    CHECK(a.center == b.center);
    CHECK(a.radius == b.radius);
}

TEST_CASE("expand_to_crop examples") {
    const Dims img{200, 200};
    CropRect r = expand_to_crop({{50, 50}, 20}, CropParams{}, img);
    CHECK(r.x0 == 22);
    CHECK(r.y0 == 22);
    CHECK(r.side_w == 56);
    CHECK(r.side_h == 56);
    CHECK(r.source == img);

    r = expand_to_crop({{5, 5}, 20}, CropParams{}, img);
    CHECK(r.x0 == 0);
    CHECK(r.y0 == 0);
    CHECK(r.side_w < 56);
    CHECK(r.valid());

    r = expand_to_crop({{100, 100}, 2}, CropParams{}, img);
    CHECK(r.side_w == 22);
    CHECK(r.side_h == 22);
}

TEST_CASE("expand_to_crop rejects circles off the image and bad params") {
    try {
        expand_to_crop({{-500, -500}, 10}, CropParams{}, {100, 100});
        FAIL("expected DegenerateCrop");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateCrop);
    }
    CropParams bad;
    bad.expansion_ratio = 0.9;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = CropParams{};
    bad.target_size = 16;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("crop contains the circle's bounding box clipped to the image") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> pos(-50.0, 350.0), rad(0.0, 120.0);
    const Dims img{300, 240};
    int checked = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        const Circle c{{pos(rng), pos(rng)}, rad(rng)};
        CropRect r;
        try {
            r = expand_to_crop(c, CropParams{}, img);
        } catch (const Error&) {
            continue;
        }
        ++checked;
        REQUIRE(r.valid());
        const double bx0 = std::max(0.0, c.center.x - c.radius);
        const double by0 = std::max(0.0, c.center.y - c.radius);
        const double bx1 = std::min<double>(img.width - 1, c.center.x + c.radius);
        const double by1 = std::min<double>(img.height - 1, c.center.y + c.radius);
        if (bx0 > bx1 || by0 > by1) {
            continue;
        }
        CHECK(r.x0 <= std::floor(bx0));
        CHECK(r.y0 <= std::floor(by0));
        CHECK(r.x0 + r.side_w - 1 >= std::ceil(bx1));
        CHECK(r.y0 + r.side_h - 1 >= std::ceil(by1));
    }
    CHECK(checked > 1000);
}

TEST_CASE("map_point corners and round trip") {
    const CropRect crop{22, 22, 56, 56, {200, 200}};
    Point p = map_point({22, 22}, crop, 256, MapDirection::ToCrop);
    CHECK(p.x == doctest::Approx(0.0));
    CHECK(p.y == doctest::Approx(0.0));
    p = map_point({78, 78}, crop, 256, MapDirection::ToCrop);
    CHECK(p.x == doctest::Approx(256.0));
    CHECK(p.y == doctest::Approx(256.0));

    const CropRect clipped{0, 10, 40, 90, {100, 100}};
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-20.0, 120.0);
    for (int i = 0; i < 100; ++i) {
        const Point q{u(rng), u(rng)};
        for (const CropRect& c : {crop, clipped}) {
            const Point back = map_point(map_point(q, c, 256, MapDirection::ToCrop), c, 256, MapDirection::ToImage);
            CHECK(std::abs(back.x - q.x) <= 1e-9);
            CHECK(std::abs(back.y - q.y) <= 1e-9);
        }
    }
}
