#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace veilmod::blur {

// Interleaved 8-bit raster, row-major, 3 (RGB) or 4 (RGBA) channels.
struct RasterImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;

    static RasterImage filled(int width, int height, int channels, std::uint8_t value);

    std::size_t index(int x, int y, int c = 0) const {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }
    std::uint8_t at(int x, int y, int c) const { return pixels[index(x, y, c)]; }
    std::uint8_t& at(int x, int y, int c) { return pixels[index(x, y, c)]; }

    bool has_alpha() const { return channels == 4; }

    friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

// Throws ErrorKind::invalid_image when dimensions, channel count or the
// pixel buffer length are inconsistent.
void check_raster(const RasterImage& image);

} // namespace veilmod::blur
