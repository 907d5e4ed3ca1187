#pragma once

#include <span>
#include <variant>
#include <vector>

#include "veilmod/blur/raster.hpp"

namespace veilmod::blur {

// Pixel (x, y) belongs to the circle when (x - cx)^2 + (y - cy)^2 <= r^2,
// i.e. pixel centers sit on integer coordinates.
struct CircleRegion {
    int center_x = 0;
    int center_y = 0;
    int radius = 1;

    friend bool operator==(const CircleRegion&, const CircleRegion&) = default;
};

// Half-open: origin_x <= x < origin_x + width.
struct RectRegion {
    int origin_x = 0;
    int origin_y = 0;
    int width = 1;
    int height = 1;

    friend bool operator==(const RectRegion&, const RectRegion&) = default;
};

using RevealRegion = std::variant<CircleRegion, RectRegion>;

struct PixelBox {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0; // half-open

    bool empty() const { return x1 <= x0 || y1 <= y0; }
    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
};

bool region_contains(const RevealRegion& region, int x, int y);

// Axis-aligned bounding box of the region, unclipped.
PixelBox region_bounds(const RevealRegion& region);

PixelBox clip_to_image(const PixelBox& box, int width, int height);

// Throws invalid_parameter for non-positive radius/extent.
void check_region(const RevealRegion& region);

// Row-major 0/1 mask of pixels covered by the union of regions.
std::vector<std::uint8_t> rasterize_union(std::span<const RevealRegion> regions, int width, int height);

// Pixels under the union of regions come from original, all others from blurred.
RasterImage composite_reveal(const RasterImage& original, const RasterImage& blurred,
                             std::span<const RevealRegion> regions);

// Unblurred crop of the region's bounding box clipped to the image.
RasterImage region_tile(const RasterImage& original, const RevealRegion& region);

} // namespace veilmod::blur
