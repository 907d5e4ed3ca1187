#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace veilmod::experiment {

enum class RevealTool { none, click, hover, slider };

std::string_view to_string(RevealTool tool);
std::optional<RevealTool> parse_reveal_tool(std::string_view s);

// Blur strength used for every obfuscated stage.
inline constexpr double heavy_sigma = 14.0;

const std::vector<double>& default_slider_levels();

struct StageConfig {
    int stage_id = 1;
    double sigma = 0.0;
    RevealTool reveal_tool = RevealTool::none;
    std::vector<double> slider_levels; // stage 6 only, strictly decreasing

    friend bool operator==(const StageConfig&, const StageConfig&) = default;
};

// Stages: 1 sigma 0 no tool (baseline); 2 sigma 7; 3 sigma 14; 4 sigma 14 +
// click reveal; 5 sigma 14 + hover reveal; 6 sigma 14 + blur slider.
StageConfig make_stage_config(int stage_id);
StageConfig make_stage_config(int stage_id, std::span<const double> slider_levels);

// Slider levels must be strictly decreasing, start at the stage sigma and stay >= 0.
void check_slider_levels(std::span<const double> levels, double stage_sigma);

// Throws validation error if the config breaks the stage table.
void check_stage_config(const StageConfig& stage);

// Sigmas a client may request a full rendition at: the stage sigma, plus
// every slider level in stage 6.
bool sigma_allowed(const StageConfig& stage, double sigma);

// Nearest slider level; ties resolve toward the stronger blur.
double snap_to_level(const StageConfig& stage, double sigma);

} // namespace veilmod::experiment
