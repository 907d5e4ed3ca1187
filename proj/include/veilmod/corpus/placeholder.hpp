#pragma once

#include <cstdint>
#include <filesystem>

#include "veilmod/corpus/corpus.hpp"

namespace veilmod::corpus {

// The distribution of the reference moderation dataset (785 images).
CountTable reference_distribution();

// Writes <dir>/manifest.tsv plus procedurally generated pattern images under
// <dir>/images/, one per cell count. Ids (img0001, ...) are assigned in a
// seeded random order so they carry no hint of the label. Roughly one image
// in five is JPEG, the rest PNG. Returns the ingested corpus.
Corpus write_placeholder_corpus(const std::filesystem::path& dir, const CountTable& counts, std::uint64_t seed);

} // namespace veilmod::corpus
