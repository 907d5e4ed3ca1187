#include "veilmod/corpus/placeholder.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "veilmod/corpus/codec.hpp"

namespace veilmod::corpus {

namespace fs = std::filesystem;

CountTable reference_distribution() {
    CountTable t;
    t.cells[index_of(Category::sex_nudity)] = {152, 148};
    t.cells[index_of(Category::graphic)] = {123, 116};
    t.cells[index_of(Category::safe)] = {108, 138};
    return t;
}

namespace {

struct Rgb {
    double r, g, b;
};

Rgb random_color(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(30.0, 225.0);
    return {u(rng), u(rng), u(rng)};
}

Rgb mix(const Rgb& a, const Rgb& b, double t) {
    return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

blur::RasterImage pattern_image(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> wdist(48, 96), hdist(40, 80), kind_dist(0, 3), period_dist(4, 16);
    const int w = wdist(rng);
    const int h = hdist(rng);
    const int kind = kind_dist(rng);
    const int period = period_dist(rng);
    const Rgb a = random_color(rng);
    const Rgb b = random_color(rng);
    const double cx = std::uniform_real_distribution<double>(0.2, 0.8)(rng) * w;
    const double cy = std::uniform_real_distribution<double>(0.2, 0.8)(rng) * h;

    blur::RasterImage img = blur::RasterImage::filled(w, h, 3, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double t = 0.0;
            switch (kind) {
            case 0: t = (static_cast<double>(x) / w + static_cast<double>(y) / h) / 2.0; break; // gradient
            case 1: t = 0.5 + 0.5 * std::sin(std::hypot(x - cx, y - cy) * 6.2831853 / period); break; // rings
            case 2: t = ((x / period) + (y / period)) % 2 ? 1.0 : 0.0; break; // checkerboard
            default: t = 0.5 + 0.5 * std::sin((x + y) * 6.2831853 / period); break; // diagonal stripes
            }
            const Rgb c = mix(a, b, t);
            img.at(x, y, 0) = static_cast<std::uint8_t>(std::lround(c.r));
            img.at(x, y, 1) = static_cast<std::uint8_t>(std::lround(c.g));
            img.at(x, y, 2) = static_cast<std::uint8_t>(std::lround(c.b));
        }
    }
    return img;
}

} // namespace

Corpus write_placeholder_corpus(const fs::path& dir, const CountTable& counts, std::uint64_t seed) {
    std::mt19937_64 rng(seed);

    std::vector<std::pair<Category, Realism>> labels;
    for (Category c : all_categories)
        for (Realism r : all_realisms)
            labels.insert(labels.end(), counts.at(c, r), {c, r});
    std::shuffle(labels.begin(), labels.end(), rng);

    fs::create_directories(dir / "images");
    std::vector<ImageRecord> records;
    records.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto img = pattern_image(rng);
        const bool jpeg = std::uniform_int_distribution<int>(0, 4)(rng) == 0;
        const std::string id = fmt::format("img{:04}", i + 1);
        const std::string rel = fmt::format("images/{}.{}", id, jpeg ? "jpg" : "png");
        const Bytes data = jpeg ? encode_jpeg(img, 85) : encode_png(img);
        write_file_atomic(dir / rel, data);
        records.push_back({id, rel, labels[i].first, labels[i].second, img.width, img.height});
    }
    Corpus corpus(dir, std::move(records));
    export_manifest(corpus, dir / "manifest.tsv");
    return corpus;
}

} // namespace veilmod::corpus
