#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "veilmod/blur/raster.hpp"

namespace veilmod::corpus {

using Bytes = std::vector<std::uint8_t>;

enum class ImageFormat { png, jpeg };

// Sniffs the magic number; throws schema error for anything else.
ImageFormat detect_format(std::span<const std::uint8_t> data);

// PNGs with transparency decode to RGBA, everything else to RGB.
blur::RasterImage decode_image(std::span<const std::uint8_t> data);
blur::RasterImage decode_image_file(const std::filesystem::path& path);

Bytes encode_png(const blur::RasterImage& image);
// Alpha is dropped; JPEG carries no transparency.
Bytes encode_jpeg(const blur::RasterImage& image, int quality);

Bytes read_file(const std::filesystem::path& path);
// Writes via a temporary sibling and rename so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> data);

} // namespace veilmod::corpus
