#include "veilmod/server/render_cache.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "veilmod/blur/blur.hpp"
#include "veilmod/error.hpp"

namespace veilmod::server {

namespace fs = std::filesystem;

std::string sigma_label(double sigma) { return fmt::format("{:g}", sigma); }

RenderCache::RenderCache(const corpus::Corpus& corpus, fs::path cache_dir, int jpeg_quality)
    : corpus_(corpus), dir_(std::move(cache_dir)), quality_(jpeg_quality) {}

fs::path RenderCache::path_for(std::string_view image_id, double sigma) const {
    return dir_ / std::string(image_id) / fmt::format("sigma-{}.jpg", sigma_label(sigma));
}

blur::RasterImage RenderCache::original(const corpus::ImageRecord& record) const {
    return corpus::decode_image_file(corpus_.image_path(record));
}

corpus::Bytes RenderCache::rendition(const corpus::ImageRecord& record, double sigma) const {
    const fs::path file = path_for(record.id, sigma);
    if (fs::exists(file))
        return corpus::read_file(file);
    const corpus::Bytes data = corpus::encode_jpeg(blur::blur_image(original(record), sigma), quality_);
    fs::create_directories(file.parent_path());
    corpus::write_file_atomic(file, data);
    return data;
}

RenderCache::PrewarmResult RenderCache::prewarm(std::span<const double> sigmas) const {
    for (double s : sigmas)
        if (!(s >= 0.0) || s > 1000.0)
            throw Error(ErrorKind::invalid_parameter, fmt::format("sigma {} must be in [0, 1000]", s));
    std::vector<double> ladder(sigmas.begin(), sigmas.end());
    std::sort(ladder.begin(), ladder.end(), std::greater<>());
    ladder.erase(std::unique(ladder.begin(), ladder.end()), ladder.end());

    PrewarmResult result;
    for (const auto& record : corpus_.records()) {
        ++result.images;
        std::vector<double> missing;
        for (double s : ladder)
            if (!fs::exists(path_for(record.id, s)))
                missing.push_back(s);
        if (missing.empty())
            continue;
        try {
            const auto renditions = blur::blur_ladder(original(record), missing);
            fs::create_directories(dir_ / record.id);
            for (std::size_t i = 0; i < missing.size(); ++i) {
                corpus::write_file_atomic(path_for(record.id, missing[i]), corpus::encode_jpeg(renditions[i], quality_));
                ++result.new_files;
            }
        } catch (const std::exception& e) {
            result.failures.push_back(fmt::format("{}: {}", record.id, e.what()));
        }
    }
    return result;
}

} // namespace veilmod::server
