#include <doctest.h>

#include <algorithm>
#include <random>

#include "expect.hpp"
#include "support.hpp"
#include "veilmod/blur/blur.hpp"
#include "veilmod/blur/reveal.hpp"
#include "veilmod/error.hpp"

using namespace veilmod;
using namespace veilmod::blur;

namespace {

using vt::kind_of;

void check_selection(const RasterImage& out, const RasterImage& original, const RasterImage& blurred,
                     const std::vector<std::uint8_t>& mask) {
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            const auto& src = mask[static_cast<std::size_t>(y) * out.width + x] ? original : blurred;
            for (int c = 0; c < out.channels; ++c)
                REQUIRE(out.at(x, y, c) == src.at(x, y, c));
        }
}

} // namespace

TEST_CASE("composite: empty union and full cover") {
    std::mt19937_64 rng(11);
    const auto original = vt::random_image(rng, 12, 9, 3);
    const auto blurred = blur_image(original, 7);
    CHECK(composite_reveal(original, blurred, {}) == blurred);
    const std::vector<RevealRegion> full{RectRegion{0, 0, 12, 9}};
    CHECK(composite_reveal(original, blurred, full) == original);
}

TEST_CASE("composite: circle r=2 at (4,4) on 9x9") {
    std::mt19937_64 rng(12);
    const auto original = vt::random_image(rng, 9, 9, 3);
    const auto blurred = blur_image(original, 14);
    const std::vector<RevealRegion> regions{CircleRegion{4, 4, 2}};
    const auto out = composite_reveal(original, blurred, regions);
    check_selection(out, original, blurred, vt::mask_oracle({{4, 4, 2}}, {}, 9, 9));
    // 13 pixels: the 3x3 block plus the 4 axis tips at distance 2
    const auto mask = rasterize_union(regions, 9, 9);
    CHECK(std::count(mask.begin(), mask.end(), 1) == 13);
}

TEST_CASE("composite: dimension mismatch") {
    const auto a = RasterImage::filled(4, 4, 3, 1);
    const auto b = RasterImage::filled(4, 5, 3, 1);
    CHECK(kind_of([&] { composite_reveal(a, b, {}); }) == ErrorKind::invalid_pair);
    const auto c = RasterImage::filled(4, 4, 4, 1);
    CHECK(kind_of([&] { composite_reveal(a, c, {}); }) == ErrorKind::invalid_pair);
}

TEST_CASE("composite property: matches independent mask, idempotent in regions") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> dim(1, 24), count(0, 5), shape(0, 1);
    for (int trial = 0; trial < 150; ++trial) {
        const int w = dim(rng), h = dim(rng);
        const auto original = vt::random_image(rng, w, h, trial % 3 ? 3 : 4);
        const auto blurred = vt::random_image(rng, w, h, original.channels);
        std::uniform_int_distribution<int> px(-6, w + 6), py(-6, h + 6), ext(1, 12);
        std::vector<RevealRegion> regions;
        std::vector<vt::Circle> circles;
        std::vector<vt::Rect> rects;
        for (int k = count(rng); k > 0; --k) {
            if (shape(rng)) {
                vt::Circle c{px(rng), py(rng), ext(rng)};
                circles.push_back(c);
                regions.push_back(CircleRegion{c.cx, c.cy, c.r});
            } else {
                vt::Rect r{px(rng), py(rng), ext(rng), ext(rng)};
                rects.push_back(r);
                regions.push_back(RectRegion{r.x, r.y, r.w, r.h});
            }
        }
        const auto out = composite_reveal(original, blurred, regions);
        check_selection(out, original, blurred, vt::mask_oracle(circles, rects, w, h));
        auto doubled = regions;
        doubled.insert(doubled.end(), regions.begin(), regions.end());
        CHECK(composite_reveal(original, blurred, doubled) == out);
    }
}

TEST_CASE("region_tile: crops") {
    std::mt19937_64 rng(13);
    const auto img = vt::random_image(rng, 32, 32, 3);
    CHECK(region_tile(img, RectRegion{0, 0, 32, 32}) == img);
    CHECK(region_tile(img, RectRegion{3, 5, 10, 10}) == vt::crop_oracle(img, 3, 5, 10, 10));
    const auto clipped = region_tile(img, RectRegion{28, 2, 10, 4});
    CHECK(clipped.width == 4);
    CHECK(clipped == vt::crop_oracle(img, 28, 2, 4, 4));
    // circle tiles are the clipped bounding box
    CHECK(region_tile(img, CircleRegion{1, 30, 3}) == vt::crop_oracle(img, 0, 27, 5, 5));
}

TEST_CASE("region_tile: outside the image") {
    const auto img = RasterImage::filled(8, 8, 3, 0);
    CHECK(kind_of([&] { region_tile(img, RectRegion{8, 0, 3, 3}); }) == ErrorKind::out_of_bounds);
    CHECK(kind_of([&] { region_tile(img, CircleRegion{-5, -5, 2}); }) == ErrorKind::out_of_bounds);
}

TEST_CASE("region validation") {
    CHECK(kind_of([] { check_region(CircleRegion{0, 0, 0}); }) == ErrorKind::invalid_parameter);
    CHECK(kind_of([] { check_region(RectRegion{0, 0, 3, -1}); }) == ErrorKind::invalid_parameter);
    CHECK_NOTHROW(check_region(CircleRegion{-3, 9, 1}));
}

TEST_CASE("region bounds and containment") {
    const RevealRegion c = CircleRegion{5, 5, 3};
    const auto b = region_bounds(c);
    CHECK(b.x0 == 2);
    CHECK(b.x1 == 9);
    CHECK(region_contains(c, 8, 5));
    CHECK_FALSE(region_contains(c, 8, 6));
    const RevealRegion r = RectRegion{1, 1, 2, 2};
    CHECK(region_contains(r, 2, 2));
    CHECK_FALSE(region_contains(r, 3, 2));
}
