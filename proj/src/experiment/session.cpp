#include "veilmod/experiment/session.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "veilmod/error.hpp"

namespace veilmod::experiment {

std::string_view to_string(Q1Answer a) {
    switch (a) {
    case Q1Answer::sex_nudity: return "sex_nudity";
    case Q1Answer::graphic: return "graphic";
    case Q1Answer::safe: return "safe";
    case Q1Answer::other: return "other";
    }
    return "?";
}

std::optional<Q1Answer> parse_q1(std::string_view s) {
    for (auto a : {Q1Answer::sex_nudity, Q1Answer::graphic, Q1Answer::safe, Q1Answer::other})
        if (s == to_string(a))
            return a;
    return std::nullopt;
}

Q1Answer answer_for(corpus::Category c) {
    switch (c) {
    case corpus::Category::sex_nudity: return Q1Answer::sex_nudity;
    case corpus::Category::graphic: return Q1Answer::graphic;
    case corpus::Category::safe: return Q1Answer::safe;
    }
    return Q1Answer::other;
}

std::string_view to_string(RevealKind k) {
    switch (k) {
    case RevealKind::click_reveal: return "click_reveal";
    case RevealKind::hover_start: return "hover_start";
    case RevealKind::hover_end: return "hover_end";
    case RevealKind::slider_set: return "slider_set";
    }
    return "?";
}

std::optional<RevealKind> parse_reveal_kind(std::string_view s) {
    for (auto k : {RevealKind::click_reveal, RevealKind::hover_start, RevealKind::hover_end, RevealKind::slider_set})
        if (s == to_string(k))
            return k;
    return std::nullopt;
}

std::string_view to_string(RevealSource s) {
    return s == RevealSource::server ? "server" : "client";
}

bool reveal_permitted(RevealTool tool, RevealKind kind) {
    switch (kind) {
    case RevealKind::click_reveal: return tool == RevealTool::click;
    case RevealKind::hover_start:
    case RevealKind::hover_end: return tool == RevealTool::hover;
    case RevealKind::slider_set: return tool == RevealTool::slider;
    }
    return false;
}

const TaskItem* Session::find_task(std::string_view image_id) const {
    auto it = std::find_if(tasks.begin(), tasks.end(), [&](const TaskItem& t) { return t.image_id == image_id; });
    return it == tasks.end() ? nullptr : &*it;
}

const ModerationResponse* Session::find_response(std::string_view image_id) const {
    auto it = std::find_if(responses.begin(), responses.end(),
                           [&](const ModerationResponse& r) { return r.image_id == image_id; });
    return it == responses.end() ? nullptr : &*it;
}

const TaskItem* Session::next_unanswered() const {
    for (const auto& t : tasks)
        if (!find_response(t.image_id))
            return &t;
    return nullptr;
}

bool Session::hover_open(std::string_view image_id) const {
    for (auto it = reveals.rbegin(); it != reveals.rend(); ++it) {
        if (it->image_id != image_id)
            continue;
        if (it->kind == RevealKind::hover_start)
            return true;
        if (it->kind == RevealKind::hover_end)
            return false;
    }
    return false;
}

std::vector<TaskItem> to_tasks(std::span<const corpus::ImageRecord> records) {
    std::vector<TaskItem> tasks;
    tasks.reserve(records.size());
    for (const auto& r : records)
        tasks.push_back({r.id, r.category, r.realism, r.width, r.height});
    return tasks;
}

Session start_session(std::string session_id, std::string worker_id, int stage_id, const corpus::Corpus& corpus,
                      std::size_t n, std::uint64_t seed, std::int64_t now_ms, std::span<const double> slider_levels) {
    StageConfig stage = make_stage_config(stage_id, slider_levels);
    if (corpus.empty())
        throw Error(ErrorKind::state, "cannot start a session on an empty corpus");
    const auto records = corpus::sample_task_set(corpus, n, seed, true);

    Session s;
    s.session_id = std::move(session_id);
    s.worker_id = std::move(worker_id);
    s.stage = std::move(stage);
    s.seed = seed;
    s.tasks = to_tasks(records);
    s.started_at_ms = now_ms;
    return s;
}

namespace {

const TaskItem& require_open_task(const Session& session, const std::string& image_id) {
    const TaskItem* task = session.find_task(image_id);
    if (!task)
        throw Error(ErrorKind::not_found,
                    fmt::format("image '{}' is not in session {}", image_id, session.session_id));
    if (session.find_response(image_id))
        throw Error(ErrorKind::conflict, fmt::format("image '{}' already answered", image_id));
    return *task;
}

} // namespace

void validate_response(const Session& session, const ModerationResponse& r) {
    require_open_task(session, r.image_id);
    if (r.q1_category == Q1Answer::other && r.q1_other_text.empty())
        throw Error(ErrorKind::validation, "q1 'other' requires q1_other_text");
    if (r.q1_category != Q1Answer::other && !r.q1_other_text.empty())
        throw Error(ErrorKind::validation, "q1_other_text is only allowed when q1 is 'other'");
    if (r.latency_ms < 0)
        throw Error(ErrorKind::validation, "latency must be >= 0");
}

void record_response(Session& session, ModerationResponse response) {
    validate_response(session, response);
    session.responses.push_back(std::move(response));
}

RevealEvent validate_reveal_event(const Session& session, RevealEvent e) {
    const TaskItem& task = require_open_task(session, e.image_id);
    const StageConfig& stage = session.stage;

    if (!reveal_permitted(stage.reveal_tool, e.kind))
        throw Error(ErrorKind::validation, fmt::format("{} is not allowed in stage {} (tool {})", to_string(e.kind),
                                                       stage.stage_id, to_string(stage.reveal_tool)));

    const bool wants_region = e.kind == RevealKind::click_reveal || e.kind == RevealKind::hover_start;
    if (wants_region != e.region.has_value())
        throw Error(ErrorKind::validation, fmt::format("{} {} a region", to_string(e.kind),
                                                       wants_region ? "requires" : "must not carry"));
    if (e.region) {
        try {
            blur::check_region(*e.region);
        } catch (const Error& err) {
            throw Error(ErrorKind::validation, err.what());
        }
        if (blur::clip_to_image(blur::region_bounds(*e.region), task.width, task.height).empty())
            throw Error(ErrorKind::validation, "reveal region lies outside the image");
    }

    const bool wants_sigma = e.kind == RevealKind::slider_set;
    if (wants_sigma != e.sigma_value.has_value())
        throw Error(ErrorKind::validation, fmt::format("{} {} a sigma value", to_string(e.kind),
                                                       wants_sigma ? "requires" : "must not carry"));
    if (e.sigma_value) {
        const double v = *e.sigma_value;
        if (!std::isfinite(v) || v < 0.0 || v > stage.sigma)
            throw Error(ErrorKind::validation,
                        fmt::format("slider sigma {} outside [0, {}]", v, stage.sigma));
        e.sigma_value = snap_to_level(stage, v);
    }

    if (e.kind == RevealKind::hover_end && !session.hover_open(e.image_id))
        throw Error(ErrorKind::validation, fmt::format("hover_end on '{}' without an open hover_start", e.image_id));
    return e;
}

void record_reveal_event(Session& session, RevealEvent event) {
    session.reveals.push_back(validate_reveal_event(session, std::move(event)));
}

void mark_served(Session& session, std::string_view image_id, std::int64_t at_ms) {
    if (!session.find_task(image_id))
        throw Error(ErrorKind::not_found, fmt::format("image '{}' is not in session {}", image_id, session.session_id));
    session.first_served_ms.try_emplace(std::string(image_id), at_ms);
}

survey::SurveyScores validate_survey(const Session& session, const survey::SurveyResponse& response,
                                     const survey::InstrumentSet& instruments) {
    if (session.survey)
        throw Error(ErrorKind::conflict, fmt::format("session {} already submitted its survey", session.session_id));
    if (!session.all_answered())
        throw Error(ErrorKind::state, fmt::format("session {} has {} of {} responses; survey comes after moderation",
                                                  session.session_id, session.responses.size(), session.tasks.size()));
    return survey::score_survey(response, instruments);
}

void record_survey(Session& session, survey::SurveyResponse response, survey::SurveyScores scores) {
    response.session_id = session.session_id;
    session.survey = std::move(response);
    session.survey_scores = scores;
}

void SessionBook::check_can_start(std::string_view worker_id, int stage_id) const {
    if (auto held = stage_of_worker(worker_id); held && *held != stage_id)
        throw Error(ErrorKind::conflict,
                    fmt::format("worker '{}' is assigned to stage {}; cannot join stage {}", worker_id, *held, stage_id));
}

Session& SessionBook::add(Session session) {
    check_can_start(session.worker_id, session.stage.stage_id);
    if (by_id_.count(session.session_id))
        throw Error(ErrorKind::conflict, fmt::format("session id {} already exists", session.session_id));
    by_id_.emplace(session.session_id, sessions_.size());
    worker_stage_.emplace(session.worker_id, session.stage.stage_id);
    sessions_.push_back(std::move(session));
    return sessions_.back();
}

Session* SessionBook::find(std::string_view session_id) {
    auto it = by_id_.find(std::string(session_id));
    return it == by_id_.end() ? nullptr : &sessions_[it->second];
}

const Session* SessionBook::find(std::string_view session_id) const {
    auto it = by_id_.find(std::string(session_id));
    return it == by_id_.end() ? nullptr : &sessions_[it->second];
}

Session& SessionBook::at(std::string_view session_id) {
    Session* s = find(session_id);
    if (!s)
        throw Error(ErrorKind::not_found, fmt::format("unknown session {}", session_id));
    return *s;
}

std::optional<int> SessionBook::stage_of_worker(std::string_view worker_id) const {
    auto it = worker_stage_.find(std::string(worker_id));
    if (it == worker_stage_.end())
        return std::nullopt;
    return it->second;
}

} // namespace veilmod::experiment
