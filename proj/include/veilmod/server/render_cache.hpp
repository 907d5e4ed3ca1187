#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "veilmod/blur/raster.hpp"
#include "veilmod/corpus/codec.hpp"
#include "veilmod/corpus/corpus.hpp"

namespace veilmod::server {

// Blurred JPEG renditions on disk at <cache>/<image id>/sigma-<S>.jpg,
// computed on first use. Fills are atomic renames, so two threads racing on
// the same key both end up with identical files.
class RenderCache {
public:
    RenderCache(const corpus::Corpus& corpus, std::filesystem::path cache_dir, int jpeg_quality);

    std::filesystem::path path_for(std::string_view image_id, double sigma) const;

    corpus::Bytes rendition(const corpus::ImageRecord& record, double sigma) const;
    blur::RasterImage original(const corpus::ImageRecord& record) const;

    struct PrewarmResult {
        std::size_t images = 0;
        std::size_t new_files = 0;
        std::vector<std::string> failures; // "<id>: <message>"
    };
    // Existing files are left alone, so a second run creates nothing.
    PrewarmResult prewarm(std::span<const double> sigmas) const;

private:
    const corpus::Corpus& corpus_;
    std::filesystem::path dir_;
    int quality_;
};

std::string sigma_label(double sigma);

} // namespace veilmod::server
