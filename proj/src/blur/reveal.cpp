#include "veilmod/blur/reveal.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "veilmod/error.hpp"

namespace veilmod::blur {

namespace {

template <class... Ts> struct overloaded : Ts... { using Ts::operator()...; };
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;

} // namespace

bool region_contains(const RevealRegion& region, int x, int y) {
    return std::visit(overloaded{
                          [&](const CircleRegion& c) {
                              const long long dx = x - c.center_x;
                              const long long dy = y - c.center_y;
                              return dx * dx + dy * dy <= static_cast<long long>(c.radius) * c.radius;
                          },
                          [&](const RectRegion& r) {
                              return x >= r.origin_x && x < r.origin_x + r.width &&
                                     y >= r.origin_y && y < r.origin_y + r.height;
                          },
                      },
                      region);
}

PixelBox region_bounds(const RevealRegion& region) {
    return std::visit(overloaded{
                          [](const CircleRegion& c) {
                              return PixelBox{c.center_x - c.radius, c.center_y - c.radius,
                                              c.center_x + c.radius + 1, c.center_y + c.radius + 1};
                          },
                          [](const RectRegion& r) {
                              return PixelBox{r.origin_x, r.origin_y, r.origin_x + r.width, r.origin_y + r.height};
                          },
                      },
                      region);
}

PixelBox clip_to_image(const PixelBox& box, int width, int height) {
    return {std::max(box.x0, 0), std::max(box.y0, 0), std::min(box.x1, width), std::min(box.y1, height)};
}

void check_region(const RevealRegion& region) {
    std::visit(overloaded{
                   [](const CircleRegion& c) {
                       if (c.radius <= 0)
                           throw Error(ErrorKind::invalid_parameter,
                                       fmt::format("circle radius must be positive, got {}", c.radius));
                   },
                   [](const RectRegion& r) {
                       if (r.width <= 0 || r.height <= 0)
                           throw Error(ErrorKind::invalid_parameter,
                                       fmt::format("rectangle extent must be positive, got {}x{}", r.width, r.height));
                   },
               },
               region);
}

std::vector<std::uint8_t> rasterize_union(std::span<const RevealRegion> regions, int width, int height) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(width) * height, 0);
    for (const auto& region : regions) {
        check_region(region);
        const PixelBox box = clip_to_image(region_bounds(region), width, height);
        for (int y = box.y0; y < box.y1; ++y)
            for (int x = box.x0; x < box.x1; ++x)
                if (region_contains(region, x, y))
                    mask[static_cast<std::size_t>(y) * width + x] = 1;
    }
    return mask;
}

RasterImage composite_reveal(const RasterImage& original, const RasterImage& blurred,
                             std::span<const RevealRegion> regions) {
    check_raster(original);
    check_raster(blurred);
    if (original.width != blurred.width || original.height != blurred.height ||
        original.channels != blurred.channels)
        throw Error(ErrorKind::invalid_pair,
                    fmt::format("original is {}x{}x{} but blurred is {}x{}x{}", original.width, original.height,
                                original.channels, blurred.width, blurred.height, blurred.channels));

    const auto mask = rasterize_union(regions, original.width, original.height);
    RasterImage out = blurred;
    const auto ch = static_cast<std::size_t>(original.channels);
    for (std::size_t p = 0; p < mask.size(); ++p)
        if (mask[p])
            std::copy_n(original.pixels.begin() + p * ch, ch, out.pixels.begin() + p * ch);
    return out;
}

RasterImage region_tile(const RasterImage& original, const RevealRegion& region) {
    check_raster(original);
    check_region(region);
    const PixelBox box = clip_to_image(region_bounds(region), original.width, original.height);
    if (box.empty())
        throw Error(ErrorKind::out_of_bounds, "reveal region lies entirely outside the image");

    RasterImage tile{box.width(), box.height(), original.channels, {}};
    tile.pixels.resize(static_cast<std::size_t>(tile.width) * tile.height * tile.channels);
    const auto row_bytes = static_cast<std::size_t>(tile.width) * tile.channels;
    for (int y = 0; y < tile.height; ++y)
        std::copy_n(original.pixels.begin() + original.index(box.x0, box.y0 + y), row_bytes,
                    tile.pixels.begin() + tile.index(0, y));
    return tile;
}

} // namespace veilmod::blur
