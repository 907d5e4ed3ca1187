#pragma once

#include <span>
#include <vector>

#include "veilmod/blur/raster.hpp"

namespace veilmod::blur {

// Maps an out-of-range coordinate into [0, n) by mirroring about the edge
// samples without repeating them (dcb|abcd|cba). Handles offsets wider than n.
int reflect101(int i, int n);

// Separable Gaussian blur: horizontal then vertical pass in double
// precision with reflect-101 borders, rounded to 8 bits once at the end.
// The alpha channel is copied through untouched.
RasterImage blur_image(const RasterImage& image, double sigma);

// One rendition per sigma; sigmas must be non-empty and strictly decreasing.
std::vector<RasterImage> blur_ladder(const RasterImage& image, std::span<const double> sigmas);

} // namespace veilmod::blur
