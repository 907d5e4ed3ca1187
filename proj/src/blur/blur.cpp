#include "veilmod/blur/blur.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "veilmod/blur/kernel.hpp"
#include "veilmod/error.hpp"

namespace veilmod::blur {

int reflect101(int i, int n) {
    if (n == 1)
        return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0)
        i += period;
    return i < n ? i : period - i;
}

namespace {

// offsets[j] is the source coordinate for padded position j - radius.
std::vector<int> reflected_offsets(int n, int radius) {
    std::vector<int> offsets(static_cast<std::size_t>(n) + 2 * radius);
    for (int j = 0; j < static_cast<int>(offsets.size()); ++j)
        offsets[j] = reflect101(j - radius, n);
    return offsets;
}

} // namespace

RasterImage blur_image(const RasterImage& image, double sigma) {
    check_raster(image);
    const Kernel1D kernel = build_gaussian_kernel(sigma);
    if (kernel.radius == 0)
        return image;

    const int w = image.width;
    const int h = image.height;
    const int ch = image.channels;
    const int color = image.has_alpha() ? 3 : ch;
    const int r = kernel.radius;
    const auto& k = kernel.weights;

    const std::vector<int> xs = reflected_offsets(w, r);
    const std::vector<int> ys = reflected_offsets(h, r);

    // horizontal pass
    std::vector<double> tmp(static_cast<std::size_t>(w) * h * color);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* row = image.pixels.data() + image.index(0, y);
        double* out = tmp.data() + static_cast<std::size_t>(y) * w * color;
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < color; ++c) {
                double acc = 0.0;
                for (int t = 0; t <= 2 * r; ++t)
                    acc += k[t] * row[xs[x + t] * ch + c];
                out[x * color + c] = acc;
            }
        }
    }

    // vertical pass, row-at-a-time
    RasterImage result = image;
    std::vector<double> acc(static_cast<std::size_t>(w) * color);
    for (int y = 0; y < h; ++y) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int t = 0; t <= 2 * r; ++t) {
            const double* src = tmp.data() + static_cast<std::size_t>(ys[y + t]) * w * color;
            const double wt = k[t];
            for (std::size_t i = 0; i < acc.size(); ++i)
                acc[i] += wt * src[i];
        }
        std::uint8_t* dst = result.pixels.data() + result.index(0, y);
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < color; ++c)
                dst[x * ch + c] = static_cast<std::uint8_t>(std::clamp(std::lround(acc[x * color + c]), 0L, 255L));
    }
    return result;
}

std::vector<RasterImage> blur_ladder(const RasterImage& image, std::span<const double> sigmas) {
    if (sigmas.empty())
        throw Error(ErrorKind::invalid_parameter, "blur ladder needs at least one sigma");
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
        if (!std::isfinite(sigmas[i]) || sigmas[i] < 0.0)
            throw Error(ErrorKind::invalid_parameter, fmt::format("ladder sigma {} is not >= 0", sigmas[i]));
        if (i > 0 && !(sigmas[i] < sigmas[i - 1]))
            throw Error(ErrorKind::invalid_parameter,
                        fmt::format("ladder sigmas must strictly decrease ({} follows {})", sigmas[i], sigmas[i - 1]));
    }
    check_raster(image);

    std::vector<RasterImage> ladder;
    ladder.reserve(sigmas.size());
    for (double s : sigmas)
        ladder.push_back(blur_image(image, s));
    return ladder;
}

} // namespace veilmod::blur
