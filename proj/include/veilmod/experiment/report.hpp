#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "veilmod/experiment/analytics.hpp"
#include "veilmod/experiment/session.hpp"

namespace veilmod::experiment {

// Experiment-level settings persisted next to the event log
// (experiment.json) so reports need nothing but the log directory.
struct ExperimentMeta {
    std::string experiment_id;
    std::vector<int> stages{1, 2, 3, 4, 5, 6};
    std::size_t tasks_per_session = 6;
    std::uint64_t seed = 0;
    int region_radius = 40;
    std::vector<double> slider_levels = default_slider_levels();

    friend bool operator==(const ExperimentMeta&, const ExperimentMeta&) = default;
};

nlohmann::json meta_to_json(const ExperimentMeta& m);
ExperimentMeta meta_from_json(const nlohmann::json& j);

struct ExposureSummary {
    std::size_t images = 0;
    double permanent_area_fraction = 0.0; // means over images
    double hover_area_seconds = 0.0;
    double min_sigma_reached = 0.0;
    double clarity_time_integral = 0.0;

    void add(const ExposureReport& e);
    void finish();
};

struct SurveySummary {
    std::size_t n = 0;
    double spane_p = 0, spane_n = 0, spane_balance = 0;
    double panas_pa = 0, panas_na = 0;
    double exhaustion = 0, peou = 0, pu = 0;
};

struct StageReport {
    StageConfig stage;
    std::size_t sessions = 0;
    std::size_t completed = 0;
    StageAccuracy accuracy;
    std::array<ExposureSummary, 3> exposure_by_category{};
    ExposureSummary exposure;
    SurveySummary survey;
};

struct ExperimentReport {
    std::string experiment_id;
    std::size_t sessions = 0;
    std::size_t responses = 0;
    std::size_t surveys = 0;
    std::vector<StageReport> stages;
};

// Aggregates accuracy (gold labels come from the logged task lists), exposure
// and survey scores per stage. Throws state error "no data" without responses.
ExperimentReport build_report(const SessionBook& book, const ExperimentMeta& meta);

std::string render_table(const ExperimentReport& report);

// Header of the CSV export, one row per (stage, category).
inline constexpr const char* csv_header =
    "stage,sigma,reveal_tool,category,n,q1_correct,q1_accuracy,q2_accuracy,q3_approval_rate,mean_latency_ms,"
    "answered_sex_nudity,answered_graphic,answered_safe,answered_other,mean_permanent_area_fraction,"
    "mean_hover_area_seconds,mean_min_sigma_reached,mean_clarity_time_integral";

std::string render_csv(const ExperimentReport& report);

} // namespace veilmod::experiment
