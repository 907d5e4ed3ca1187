#include "veilmod/experiment/report.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "veilmod/error.hpp"

namespace veilmod::experiment {

using nlohmann::json;

json meta_to_json(const ExperimentMeta& m) {
    return {{"experiment_id", m.experiment_id}, {"stages", m.stages},
            {"tasks_per_session", m.tasks_per_session}, {"seed", m.seed},
            {"region_radius", m.region_radius},   {"slider_levels", m.slider_levels}};
}

ExperimentMeta meta_from_json(const json& j) {
    try {
        ExperimentMeta m;
        m.experiment_id = j.at("experiment_id").get<std::string>();
        m.stages = j.at("stages").get<std::vector<int>>();
        m.tasks_per_session = j.at("tasks_per_session").get<std::size_t>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.region_radius = j.at("region_radius").get<int>();
        m.slider_levels = j.at("slider_levels").get<std::vector<double>>();
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::schema, fmt::format("experiment metadata: {}", e.what()));
    }
}

void ExposureSummary::add(const ExposureReport& e) {
    ++images;
    permanent_area_fraction += e.permanent_area_fraction;
    hover_area_seconds += e.hover_area_seconds;
    min_sigma_reached += e.min_sigma_reached;
    clarity_time_integral += e.clarity_time_integral;
}

void ExposureSummary::finish() {
    if (images == 0)
        return;
    const auto n = static_cast<double>(images);
    permanent_area_fraction /= n;
    hover_area_seconds /= n;
    min_sigma_reached /= n;
    clarity_time_integral /= n;
}

ExperimentReport build_report(const SessionBook& book, const ExperimentMeta& meta) {
    std::vector<StagedResponse> responses;
    GoldTable gold;
    std::vector<int> stages = meta.stages;
    for (const auto& s : book.sessions()) {
        if (std::find(stages.begin(), stages.end(), s.stage.stage_id) == stages.end())
            stages.push_back(s.stage.stage_id);
        for (const auto& t : s.tasks)
            gold.emplace(t.image_id, GoldLabel{t.category, t.realism});
        for (const auto& r : s.responses)
            responses.push_back({s.stage.stage_id, r});
    }
    std::sort(stages.begin(), stages.end());

    const AccuracyReport accuracy = accuracy_report(responses, gold, stages);

    ExperimentReport rep;
    rep.experiment_id = meta.experiment_id;
    rep.sessions = book.size();
    rep.responses = responses.size();
    for (int id : stages) {
        StageReport sr;
        sr.stage = make_stage_config(id, meta.slider_levels);
        sr.accuracy = *accuracy.stage(id);
        rep.stages.push_back(std::move(sr));
    }

    for (const auto& s : book.sessions()) {
        auto& sr = *std::find_if(rep.stages.begin(), rep.stages.end(),
                                 [&](const StageReport& r) { return r.stage.stage_id == s.stage.stage_id; });
        sr.stage = s.stage;
        ++sr.sessions;
        if (s.completed_at_ms)
            ++sr.completed;
        for (const auto& r : s.responses) {
            const TaskItem* t = s.find_task(r.image_id);
            const ExposureReport e = compute_exposure(s, r.image_id, t->width, t->height);
            sr.exposure.add(e);
            sr.exposure_by_category[corpus::index_of(t->category)].add(e);
        }
        if (s.survey_scores) {
            const auto& sc = *s.survey_scores;
            auto& sv = sr.survey;
            ++sv.n;
            ++rep.surveys;
            sv.spane_p += sc.spane.positive;
            sv.spane_n += sc.spane.negative;
            sv.spane_balance += sc.spane.balance;
            sv.panas_pa += sc.panas.positive_affect;
            sv.panas_na += sc.panas.negative_affect;
            sv.exhaustion += sc.exhaustion_mean;
            sv.peou += sc.tam.peou;
            sv.pu += sc.tam.pu;
        }
    }
    for (auto& sr : rep.stages) {
        sr.exposure.finish();
        for (auto& e : sr.exposure_by_category)
            e.finish();
        if (auto& sv = sr.survey; sv.n) {
            const auto n = static_cast<double>(sv.n);
            for (double* v : {&sv.spane_p, &sv.spane_n, &sv.spane_balance, &sv.panas_pa, &sv.panas_na, &sv.exhaustion,
                              &sv.peou, &sv.pu})
                *v /= n;
        }
    }
    return rep;
}

namespace {

void append_cell_row(std::string& out, std::string_view label, const CellStats& c) {
    out += fmt::format("{:<14}{:>6}{:>9.4f}{:>9.4f}{:>9.4f}{:>13.1f}\n", label, c.n, c.q1_accuracy(), c.q2_accuracy(),
                       c.q3_approval_rate(), c.mean_latency_ms());
}

void append_exposure_row(std::string& out, std::string_view label, const ExposureSummary& e) {
    out += fmt::format("{:<14}{:>7}{:>11.4f}{:>14.4f}{:>11.3f}{:>11.4f}\n", label, e.images, e.permanent_area_fraction,
                       e.hover_area_seconds, e.min_sigma_reached, e.clarity_time_integral);
}

} // namespace

std::string render_table(const ExperimentReport& rep) {
    std::string out;
    out += fmt::format("experiment  {}\n", rep.experiment_id);
    out += fmt::format("sessions    {}\n", rep.sessions);
    out += fmt::format("responses   {}\n", rep.responses);
    out += fmt::format("surveys     {}\n", rep.surveys);

    for (const auto& sr : rep.stages) {
        out += fmt::format("\n== stage {}: sigma {}, tool {} ==\n", sr.stage.stage_id, sr.stage.sigma,
                           to_string(sr.stage.reveal_tool));
        const CellStats all = sr.accuracy.overall();
        out += fmt::format("sessions {} ({} completed), responses {}\n", sr.sessions, sr.completed, all.n);
        if (all.n == 0) {
            out += "no responses\n";
            continue;
        }

        out += fmt::format("{:<14}{:>6}{:>9}{:>9}{:>9}{:>13}\n", "category", "n", "q1_acc", "q2_acc", "q3_appr",
                           "latency_ms");
        for (auto c : corpus::all_categories)
            append_cell_row(out, corpus::to_string(c), sr.accuracy.by_category[corpus::index_of(c)]);
        append_cell_row(out, "all", all);

        out += "confusion (rows: gold, columns: q1 answer)\n";
        out += fmt::format("{:<14}{:>11}{:>11}{:>11}{:>11}\n", "", "sex_nudity", "graphic", "safe", "other");
        for (auto c : corpus::all_categories) {
            const auto& a = sr.accuracy.by_category[corpus::index_of(c)].answered;
            out += fmt::format("{:<14}{:>11}{:>11}{:>11}{:>11}\n", corpus::to_string(c), a[0], a[1], a[2], a[3]);
        }

        out += fmt::format("{:<14}{:>7}{:>11}{:>14}{:>11}{:>11}\n", "exposure", "images", "perm_area",
                           "hover_area_s", "min_sigma", "clarity_s");
        for (auto c : corpus::all_categories)
            append_exposure_row(out, corpus::to_string(c), sr.exposure_by_category[corpus::index_of(c)]);
        append_exposure_row(out, "all", sr.exposure);

        const auto& sv = sr.survey;
        out += fmt::format("{:<14}{:>4}{:>9}{:>9}{:>9}{:>10}{:>10}{:>9}{:>8}{:>8}\n", "survey", "n", "spane_p",
                           "spane_n", "balance", "panas_pa", "panas_na", "exhaust", "peou", "pu");
        out += fmt::format("{:<14}{:>4}{:>9.2f}{:>9.2f}{:>9.2f}{:>10.2f}{:>10.2f}{:>9.3f}{:>8.3f}{:>8.3f}\n", "", sv.n,
                           sv.spane_p, sv.spane_n, sv.spane_balance, sv.panas_pa, sv.panas_na, sv.exhaustion, sv.peou,
                           sv.pu);
    }
    return out;
}

std::string render_csv(const ExperimentReport& rep) {
    std::string out = csv_header;
    out += '\n';
    for (const auto& sr : rep.stages) {
        for (auto c : corpus::all_categories) {
            const auto& cell = sr.accuracy.by_category[corpus::index_of(c)];
            const auto& e = sr.exposure_by_category[corpus::index_of(c)];
            out += fmt::format("{},{},{},{},{},{}", sr.stage.stage_id, sr.stage.sigma, to_string(sr.stage.reveal_tool),
                               corpus::to_string(c), cell.n, cell.q1_correct);
            if (cell.n == 0) {
                out += ",,,,,0,0,0,0,,,,\n";
                continue;
            }
            out += fmt::format(",{:.6f},{:.6f},{:.6f},{:.3f},{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n",
                               cell.q1_accuracy(), cell.q2_accuracy(), cell.q3_approval_rate(), cell.mean_latency_ms(),
                               cell.answered[0], cell.answered[1], cell.answered[2], cell.answered[3],
                               e.permanent_area_fraction, e.hover_area_seconds, e.min_sigma_reached,
                               e.clarity_time_integral);
        }
    }
    return out;
}

} // namespace veilmod::experiment
