#include "veilmod/experiment/analytics.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "veilmod/error.hpp"

namespace veilmod::experiment {

namespace {

double area_fraction(std::span<const blur::RevealRegion> regions, int width, int height) {
    const auto mask = blur::rasterize_union(regions, width, height);
    const auto covered = std::count(mask.begin(), mask.end(), std::uint8_t{1});
    return static_cast<double>(covered) / (static_cast<double>(width) * height);
}

} // namespace

ExposureReport compute_exposure(const Session& session, std::string_view image_id) {
    const TaskItem* task = session.find_task(image_id);
    if (!task)
        throw Error(ErrorKind::not_found, fmt::format("image '{}' is not in session {}", image_id, session.session_id));
    return compute_exposure(session, image_id, task->width, task->height);
}

ExposureReport compute_exposure(const Session& session, std::string_view image_id, int width, int height) {
    const ModerationResponse* response = session.find_response(image_id);
    if (!response)
        throw Error(ErrorKind::state, fmt::format("no response recorded for image '{}'", image_id));
    if (width < 1 || height < 1)
        throw Error(ErrorKind::invalid_parameter, fmt::format("image dimensions {}x{} are not positive", width, height));

    auto served = session.first_served_ms.find(std::string(image_id));
    const std::int64_t window_start = served != session.first_served_ms.end() ? served->second : session.started_at_ms;
    const std::int64_t window_end = window_start + response->latency_ms;
    auto clamp_t = [&](std::int64_t t) { return std::clamp(t, window_start, window_end); };

    const double stage_sigma = session.stage.sigma;
    ExposureReport rep;
    rep.image_id = std::string(image_id);
    rep.min_sigma_reached = stage_sigma;

    std::vector<blur::RevealRegion> clicks;
    std::optional<std::pair<std::int64_t, blur::RevealRegion>> open_hover;
    auto close_hover = [&](std::int64_t at) {
        if (!open_hover)
            return;
        const auto span_ms = clamp_t(at) - clamp_t(open_hover->first);
        if (span_ms > 0)
            rep.hover_area_seconds +=
                area_fraction(std::span(&open_hover->second, 1), width, height) * static_cast<double>(span_ms) / 1000.0;
        open_hover.reset();
    };

    const bool slider = session.stage.reveal_tool == RevealTool::slider && stage_sigma > 0.0;
    double current_sigma = stage_sigma;
    std::int64_t cursor = window_start;

    for (const auto& e : session.reveals) {
        if (e.image_id != image_id || e.at_ms > window_end)
            continue;
        switch (e.kind) {
        case RevealKind::click_reveal:
            clicks.push_back(*e.region);
            break;
        case RevealKind::hover_start:
            close_hover(e.at_ms);
            open_hover.emplace(e.at_ms, *e.region);
            break;
        case RevealKind::hover_end:
            close_hover(e.at_ms);
            break;
        case RevealKind::slider_set: {
            const double v = *e.sigma_value;
            rep.min_sigma_reached = std::min(rep.min_sigma_reached, v);
            if (slider) {
                const auto t = clamp_t(e.at_ms);
                rep.clarity_time_integral += (1.0 - current_sigma / stage_sigma) * static_cast<double>(t - cursor) / 1000.0;
                cursor = t;
            }
            current_sigma = v;
            break;
        }
        }
    }
    close_hover(window_end);
    if (slider)
        rep.clarity_time_integral +=
            (1.0 - current_sigma / stage_sigma) * static_cast<double>(window_end - cursor) / 1000.0;
    if (!clicks.empty())
        rep.permanent_area_fraction = area_fraction(clicks, width, height);
    return rep;
}

GoldTable gold_table(const corpus::Corpus& corpus) {
    GoldTable g;
    for (const auto& r : corpus.records())
        g.emplace(r.id, GoldLabel{r.category, r.realism});
    return g;
}

CellStats& CellStats::operator+=(const CellStats& o) {
    n += o.n;
    q1_correct += o.q1_correct;
    q2_correct += o.q2_correct;
    q3_approved += o.q3_approved;
    latency_sum_ms += o.latency_sum_ms;
    for (std::size_t i = 0; i < answered.size(); ++i)
        answered[i] += o.answered[i];
    return *this;
}

CellStats StageAccuracy::overall() const {
    CellStats total;
    for (const auto& c : by_category)
        total += c;
    return total;
}

std::size_t AccuracyReport::responses() const {
    std::size_t n = 0;
    for (const auto& s : stages)
        n += s.overall().n;
    return n;
}

double AccuracyReport::overall_q1_accuracy() const {
    CellStats total;
    for (const auto& s : stages)
        total += s.overall();
    return total.q1_accuracy();
}

const StageAccuracy* AccuracyReport::stage(int stage_id) const {
    auto it = std::find_if(stages.begin(), stages.end(), [&](const StageAccuracy& s) { return s.stage_id == stage_id; });
    return it == stages.end() ? nullptr : &*it;
}

AccuracyReport accuracy_report(std::span<const StagedResponse> responses, const GoldTable& gold,
                               std::span<const int> stages) {
    if (responses.empty())
        throw Error(ErrorKind::state, "no data");

    AccuracyReport rep;
    for (int s : stages)
        rep.stages.push_back({s, {}});

    for (const auto& sr : responses) {
        const auto& r = sr.response;
        auto g = gold.find(r.image_id);
        if (g == gold.end())
            throw Error(ErrorKind::not_found, fmt::format("response references unknown image '{}'", r.image_id));
        auto st = std::find_if(rep.stages.begin(), rep.stages.end(),
                               [&](const StageAccuracy& a) { return a.stage_id == sr.stage_id; });
        if (st == rep.stages.end())
            throw Error(ErrorKind::invalid_parameter,
                        fmt::format("response for '{}' belongs to unreported stage {}", r.image_id, sr.stage_id));

        CellStats& cell = st->by_category[corpus::index_of(g->second.category)];
        ++cell.n;
        if (r.q1_category == answer_for(g->second.category))
            ++cell.q1_correct;
        if (r.q2_realistic == (g->second.realism == corpus::Realism::realistic))
            ++cell.q2_correct;
        if (r.q3_approve)
            ++cell.q3_approved;
        cell.latency_sum_ms += r.latency_ms;
        ++cell.answered[static_cast<std::size_t>(r.q1_category)];
    }
    return rep;
}

} // namespace veilmod::experiment
