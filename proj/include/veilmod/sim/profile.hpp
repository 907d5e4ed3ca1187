#pragma once

#include <array>
#include <filesystem>
#include <map>

#include <json.hpp>

#include "veilmod/corpus/corpus.hpp"

namespace veilmod::sim {

struct IntRange {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
};

// Behaviour of scripted workers in one stage.
struct StageBehaviour {
    // q1[gold category][answer]: probabilities over sex_nudity, graphic, safe, other
    std::array<std::array<double, 4>, 3> q1{};
    double q2_accuracy = 1.0;
    std::array<double, 3> approve{}; // P(q3 = approve) by gold category
    IntRange think_ms{2000, 6000};
    IntRange clicks{1, 3};       // stage 4
    IntRange hovers{1, 3};       // stage 5
    IntRange hover_ms{300, 1500};
    IntRange slider_step_ms{200, 800};
    std::array<double, 2> slider_stop{0.0, 14.0}; // stage 6 stops at a level inside this band
    double rationale_rate = 0.0;
};

// {"default": {...}, "stages": {"4": {...}}}. Stage entries are JSON merge
// patches over the default.
struct AccuracyProfile {
    nlohmann::json document;
    StageBehaviour for_stage(int stage_id) const;
};

AccuracyProfile profile_from_json(const nlohmann::json& j);
AccuracyProfile load_profile(const std::filesystem::path& path);

// Always-correct workers with the default reveal habits.
AccuracyProfile identity_profile();

StageBehaviour behaviour_from_json(const nlohmann::json& j);

} // namespace veilmod::sim
