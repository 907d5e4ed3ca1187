#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "veilmod/corpus/corpus.hpp"
#include "veilmod/experiment/session.hpp"

namespace veilmod::experiment {

// How much unobfuscated content a worker saw for one image, over the window
// from the first time the task was served to response submission.
struct ExposureReport {
    std::string image_id;
    double permanent_area_fraction = 0.0; // rasterized union of click reveals / image area
    double hover_area_seconds = 0.0;      // sum of area fraction x hover duration
    double min_sigma_reached = 0.0;
    double clarity_time_integral = 0.0; // integral of (1 - sigma/stage_sigma) dt, slider stage only

    friend bool operator==(const ExposureReport&, const ExposureReport&) = default;
};

// Hover intervals close at the matching hover_end, at the next hover_start on
// the same image, or at the end of the window, whichever comes first.
// Throws state error when the image has no response yet.
ExposureReport compute_exposure(const Session& session, std::string_view image_id, int width, int height);
ExposureReport compute_exposure(const Session& session, std::string_view image_id);

struct GoldLabel {
    corpus::Category category = corpus::Category::safe;
    corpus::Realism realism = corpus::Realism::realistic;
};

using GoldTable = std::map<std::string, GoldLabel, std::less<>>;

GoldTable gold_table(const corpus::Corpus& corpus);

struct StagedResponse {
    int stage_id = 0;
    ModerationResponse response;
};

struct CellStats {
    std::size_t n = 0;
    std::size_t q1_correct = 0;
    std::size_t q2_correct = 0;
    std::size_t q3_approved = 0;
    std::int64_t latency_sum_ms = 0;
    std::array<std::size_t, 4> answered{}; // indexed by Q1Answer

    double q1_accuracy() const { return n ? static_cast<double>(q1_correct) / n : 0.0; }
    double q2_accuracy() const { return n ? static_cast<double>(q2_correct) / n : 0.0; }
    double q3_approval_rate() const { return n ? static_cast<double>(q3_approved) / n : 0.0; }
    double mean_latency_ms() const { return n ? static_cast<double>(latency_sum_ms) / n : 0.0; }

    CellStats& operator+=(const CellStats& o);
};

struct StageAccuracy {
    int stage_id = 0;
    std::array<CellStats, 3> by_category{}; // gold category rows of the 3x4 confusion matrix

    CellStats overall() const;
};

struct AccuracyReport {
    std::vector<StageAccuracy> stages;

    std::size_t responses() const;
    double overall_q1_accuracy() const;
    const StageAccuracy* stage(int stage_id) const;
};

// One section per requested stage, in the given order. q1 = other is always
// scored incorrect. Throws state error ("no data") on an empty response set,
// not_found for an image without a gold label and invalid_parameter for a
// response whose stage was not requested.
AccuracyReport accuracy_report(std::span<const StagedResponse> responses, const GoldTable& gold,
                               std::span<const int> stages);

} // namespace veilmod::experiment
