#include "veilmod/experiment/stage.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "veilmod/error.hpp"

namespace veilmod::experiment {

std::string_view to_string(RevealTool tool) {
    switch (tool) {
    case RevealTool::none: return "none";
    case RevealTool::click: return "click";
    case RevealTool::hover: return "hover";
    case RevealTool::slider: return "slider";
    }
    return "?";
}

std::optional<RevealTool> parse_reveal_tool(std::string_view s) {
    for (auto t : {RevealTool::none, RevealTool::click, RevealTool::hover, RevealTool::slider})
        if (s == to_string(t))
            return t;
    return std::nullopt;
}

const std::vector<double>& default_slider_levels() {
    static const std::vector<double> levels{14, 12, 10, 8, 6, 4, 2, 0};
    return levels;
}

StageConfig make_stage_config(int stage_id) {
    return make_stage_config(stage_id, default_slider_levels());
}

StageConfig make_stage_config(int stage_id, std::span<const double> slider_levels) {
    switch (stage_id) {
    case 1: return {1, 0.0, RevealTool::none, {}};
    case 2: return {2, 7.0, RevealTool::none, {}};
    case 3: return {3, heavy_sigma, RevealTool::none, {}};
    case 4: return {4, heavy_sigma, RevealTool::click, {}};
    case 5: return {5, heavy_sigma, RevealTool::hover, {}};
    case 6:
        check_slider_levels(slider_levels, heavy_sigma);
        return {6, heavy_sigma, RevealTool::slider, {slider_levels.begin(), slider_levels.end()}};
    default:
        throw Error(ErrorKind::invalid_parameter, fmt::format("stage must be 1..6, got {}", stage_id));
    }
}

void check_slider_levels(std::span<const double> levels, double stage_sigma) {
    if (levels.empty())
        throw Error(ErrorKind::invalid_parameter, "slider needs at least one level");
    if (levels.front() != stage_sigma)
        throw Error(ErrorKind::invalid_parameter,
                    fmt::format("first slider level must equal the stage sigma {}, got {}", stage_sigma, levels.front()));
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!std::isfinite(levels[i]) || levels[i] < 0.0)
            throw Error(ErrorKind::invalid_parameter, fmt::format("slider level {} is not >= 0", levels[i]));
        if (i > 0 && !(levels[i] < levels[i - 1]))
            throw Error(ErrorKind::invalid_parameter, "slider levels must strictly decrease");
    }
}

void check_stage_config(const StageConfig& stage) {
    StageConfig canonical;
    try {
        canonical = stage.stage_id == 6 ? make_stage_config(6, stage.slider_levels) : make_stage_config(stage.stage_id);
    } catch (const Error& e) {
        throw Error(ErrorKind::validation, e.what());
    }
    if (!(canonical == stage))
        throw Error(ErrorKind::validation,
                    fmt::format("stage {} must use sigma {} with tool {}", stage.stage_id, canonical.sigma,
                                to_string(canonical.reveal_tool)));
}

bool sigma_allowed(const StageConfig& stage, double sigma) {
    if (sigma == stage.sigma)
        return true;
    if (stage.reveal_tool != RevealTool::slider)
        return false;
    return std::find(stage.slider_levels.begin(), stage.slider_levels.end(), sigma) != stage.slider_levels.end();
}

double snap_to_level(const StageConfig& stage, double sigma) {
    if (stage.slider_levels.empty())
        return stage.sigma;
    double best = stage.slider_levels.front();
    for (double level : stage.slider_levels)
        if (std::abs(level - sigma) < std::abs(best - sigma))
            best = level;
    return best;
}

} // namespace veilmod::experiment
