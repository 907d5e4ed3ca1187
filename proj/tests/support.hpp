#pragma once

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "veilmod/blur/raster.hpp"

namespace vt {

namespace fs = std::filesystem;
using veilmod::blur::RasterImage;

inline fs::path fixtures_dir() { return VEILMOD_FIXTURES_DIR; }
inline fs::path fixture_manifest() { return fixtures_dir() / "corpus" / "manifest.tsv"; }

// Scratch directory removed on destruction.
struct TempDir {
    fs::path path;
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "veilmod-test-XXXXXX").string();
        path = ::mkdtemp(tmpl.data());
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline RasterImage random_image(std::mt19937_64& rng, int w, int h, int channels) {
    RasterImage img = RasterImage::filled(w, h, channels, 0);
    std::uniform_int_distribution<int> d(0, 255);
    for (auto& p : img.pixels)
        p = static_cast<std::uint8_t>(d(rng));
    return img;
}

// Mirror without repeating the edge sample, by walking rather than by formula.
inline int mirror_walk(int i, int n) {
    if (n == 1)
        return 0;
    while (i < 0 || i >= n) {
        if (i < 0)
            i = -i;
        if (i >= n)
            i = 2 * (n - 1) - i;
    }
    return i;
}

// Direct 2-D Gaussian convolution in double precision, one rounding at the end.
inline RasterImage brute_force_blur(const RasterImage& src, double sigma) {
    if (sigma == 0.0)
        return src;
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> w2;
    double total = 0.0;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            w2.push_back(v);
            total += v;
        }
    RasterImage out = src;
    const int colour = src.channels == 4 ? 3 : src.channels;
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x)
            for (int c = 0; c < colour; ++c) {
                double acc = 0.0;
                std::size_t k = 0;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx, ++k)
                        acc += w2[k] / total *
                               src.at(mirror_walk(x + dx, src.width), mirror_walk(y + dy, src.height), c);
                out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
            }
    return out;
}

inline int max_abs_diff(const RasterImage& a, const RasterImage& b) {
    int worst = 0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i)
        worst = std::max(worst, std::abs(int(a.pixels[i]) - int(b.pixels[i])));
    return worst;
}

struct Circle {
    int cx, cy, r;
};
struct Rect {
    int x, y, w, h;
};

// Per-pixel membership test written independently of the library.
inline std::vector<std::uint8_t> mask_oracle(const std::vector<Circle>& circles, const std::vector<Rect>& rects, int w,
                                             int h) {
    std::vector<std::uint8_t> m(static_cast<std::size_t>(w) * h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool in = false;
            for (const auto& c : circles)
                in = in || (long(x - c.cx) * (x - c.cx) + long(y - c.cy) * (y - c.cy) <= long(c.r) * c.r);
            for (const auto& r : rects)
                in = in || (x >= r.x && x < r.x + r.w && y >= r.y && y < r.y + r.h);
            m[static_cast<std::size_t>(y) * w + x] = in;
        }
    return m;
}

inline RasterImage crop_oracle(const RasterImage& src, int x0, int y0, int w, int h) {
    RasterImage out = RasterImage::filled(w, h, src.channels, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < src.channels; ++c)
                out.pixels[(static_cast<std::size_t>(y) * w + x) * src.channels + c] =
                    src.pixels[(static_cast<std::size_t>(y + y0) * src.width + (x + x0)) * src.channels + c];
    return out;
}

template <class T>
int sum_of(const std::vector<T>& v) {
    int s = 0;
    for (T x : v)
        s += int(x);
    return s;
}

} // namespace vt
