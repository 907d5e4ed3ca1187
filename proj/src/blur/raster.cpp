#include "veilmod/blur/raster.hpp"

#include <fmt/format.h>

#include "veilmod/error.hpp"

namespace veilmod::blur {

RasterImage RasterImage::filled(int width, int height, int channels, std::uint8_t value) {
    if (width < 1 || height < 1 || (channels != 3 && channels != 4))
        throw Error(ErrorKind::invalid_image,
                    fmt::format("cannot allocate a {}x{}x{} raster", width, height, channels));
    return {width, height, channels,
            std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height * channels, value)};
}

void check_raster(const RasterImage& image) {
    if (image.width < 1 || image.height < 1)
        throw Error(ErrorKind::invalid_image,
                    fmt::format("raster dimensions must be positive, got {}x{}", image.width, image.height));
    if (image.channels != 3 && image.channels != 4)
        throw Error(ErrorKind::invalid_image,
                    fmt::format("raster must have 3 or 4 channels, got {}", image.channels));
    const auto expected = static_cast<std::size_t>(image.width) * image.height * image.channels;
    if (image.pixels.size() != expected)
        throw Error(ErrorKind::invalid_image,
                    fmt::format("pixel buffer holds {} samples, expected {}", image.pixels.size(), expected));
}

} // namespace veilmod::blur
