#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "veilmod/survey/instrument.hpp"

namespace veilmod::survey {

struct SpaneScores {
    int positive = 0; // 6..30
    int negative = 0; // 6..30
    int balance = 0;  // positive - negative, -24..24

    friend bool operator==(const SpaneScores&, const SpaneScores&) = default;
};

struct PanasScores {
    int positive_affect = 0; // 5..35
    int negative_affect = 0; // 5..35

    friend bool operator==(const PanasScores&, const PanasScores&) = default;
};

struct TamScores {
    double peou = 0.0;
    double pu = 0.0;

    friend bool operator==(const TamScores&, const TamScores&) = default;
};

// All scorers reject wrong arity and out-of-range items with a validation
// error; nothing is clamped.
SpaneScores score_spane(std::span<const int> items, const Instrument& spane = default_instruments().spane);
PanasScores score_panas(std::span<const int> items, const Instrument& panas = default_instruments().panas);
double score_exhaustion(std::span<const int> items, const Instrument& exhaustion = default_instruments().exhaustion);
TamScores score_tam(std::span<const int> peou_items, std::span<const int> pu_items,
                    const Instrument& peou = default_instruments().tam_peou,
                    const Instrument& pu = default_instruments().tam_pu);

struct SurveyResponse {
    std::string session_id;
    std::map<std::string, std::string> demographics;
    std::vector<int> spane_items;
    std::vector<int> panas_items;
    std::vector<int> exhaustion_items;
    std::vector<int> tam_peou_items;
    std::vector<int> tam_pu_items;

    friend bool operator==(const SurveyResponse&, const SurveyResponse&) = default;
};

struct SurveyScores {
    SpaneScores spane;
    PanasScores panas;
    double exhaustion_mean = 0.0;
    TamScores tam;

    friend bool operator==(const SurveyScores&, const SurveyScores&) = default;
};

// Validates demographics (every field answered, options respected) and scores
// all scales.
SurveyScores score_survey(const SurveyResponse& response, const InstrumentSet& instruments = default_instruments());

nlohmann::json to_json(const SurveyResponse& r);
// Missing or mistyped fields raise a validation error; session_id is not read.
SurveyResponse survey_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SurveyScores& s);

} // namespace veilmod::survey
