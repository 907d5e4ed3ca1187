#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "veilmod/blur/reveal.hpp"
#include "veilmod/corpus/corpus.hpp"
#include "veilmod/experiment/stage.hpp"
#include "veilmod/survey/scoring.hpp"

namespace veilmod::experiment {

// Q1 choices: the three corpus categories plus "other".
enum class Q1Answer { sex_nudity, graphic, safe, other };

std::string_view to_string(Q1Answer a);
std::optional<Q1Answer> parse_q1(std::string_view s);
Q1Answer answer_for(corpus::Category c);

struct ModerationResponse {
    std::string image_id;
    Q1Answer q1_category = Q1Answer::other;
    std::string q1_other_text; // required (non-empty) iff q1_category == other
    bool q2_realistic = false;
    bool q3_approve = false;
    std::string q4_rationale; // optional
    std::int64_t latency_ms = 0;

    friend bool operator==(const ModerationResponse&, const ModerationResponse&) = default;
};

enum class RevealKind { click_reveal, hover_start, hover_end, slider_set };
enum class RevealSource { server, client };

std::string_view to_string(RevealKind k);
std::optional<RevealKind> parse_reveal_kind(std::string_view s);
std::string_view to_string(RevealSource s);

struct RevealEvent {
    std::string image_id;
    RevealKind kind = RevealKind::click_reveal;
    std::optional<blur::RevealRegion> region; // click_reveal, hover_start
    std::optional<double> sigma_value;        // slider_set
    std::int64_t at_ms = 0;
    RevealSource source = RevealSource::client;

    friend bool operator==(const RevealEvent&, const RevealEvent&) = default;
};

// click_reveal needs the click tool, hover_start/hover_end the hover tool,
// slider_set the slider.
bool reveal_permitted(RevealTool tool, RevealKind kind);

struct TaskItem {
    std::string image_id;
    corpus::Category category = corpus::Category::safe;
    corpus::Realism realism = corpus::Realism::realistic;
    int width = 0;
    int height = 0;

    friend bool operator==(const TaskItem&, const TaskItem&) = default;
};

struct Session {
    std::string session_id;
    std::string worker_id;
    StageConfig stage;
    std::uint64_t seed = 0;
    std::vector<TaskItem> tasks;
    std::int64_t started_at_ms = 0;
    std::optional<std::int64_t> completed_at_ms;

    std::map<std::string, std::int64_t> first_served_ms;
    std::vector<ModerationResponse> responses; // in receipt order
    std::vector<RevealEvent> reveals;          // in receipt order
    std::optional<survey::SurveyResponse> survey;
    std::optional<survey::SurveyScores> survey_scores;

    const TaskItem* find_task(std::string_view image_id) const;
    const ModerationResponse* find_response(std::string_view image_id) const;
    bool all_answered() const { return responses.size() == tasks.size(); }
    // Next task in list order without a response.
    const TaskItem* next_unanswered() const;
    // A hover is open when the latest hover event for the image is a start.
    bool hover_open(std::string_view image_id) const;
};

// Balanced task list drawn with sample_task_set. Throws invalid_parameter for
// a bad stage or n, state error for an empty corpus.
Session start_session(std::string session_id, std::string worker_id, int stage_id, const corpus::Corpus& corpus,
                      std::size_t n, std::uint64_t seed, std::int64_t now_ms,
                      std::span<const double> slider_levels = default_slider_levels());

std::vector<TaskItem> to_tasks(std::span<const corpus::ImageRecord> records);

// Throws not_found (image not in task list), conflict (already answered) or
// validation (Q1/other-text invariant, negative latency).
void validate_response(const Session& session, const ModerationResponse& response);
void record_response(Session& session, ModerationResponse response);

// Returns the event as it should be stored: slider values are snapped to the
// nearest configured level. Throws not_found, conflict (image already
// answered) or validation (tool gating, missing/extra region or sigma,
// slider out of [0, stage sigma], hover_end without an open hover_start).
RevealEvent validate_reveal_event(const Session& session, RevealEvent event);
void record_reveal_event(Session& session, RevealEvent event);

void mark_served(Session& session, std::string_view image_id, std::int64_t at_ms);

// Survey may be submitted once, after every task has a response.
survey::SurveyScores validate_survey(const Session& session, const survey::SurveyResponse& response,
                                     const survey::InstrumentSet& instruments);
void record_survey(Session& session, survey::SurveyResponse response, survey::SurveyScores scores);

// All sessions of one experiment. Enforces between-subjects assignment: a
// worker keeps the stage of their first session.
class SessionBook {
public:
    void check_can_start(std::string_view worker_id, int stage_id) const;
    Session& add(Session session);

    Session* find(std::string_view session_id);
    const Session* find(std::string_view session_id) const;
    Session& at(std::string_view session_id);

    std::optional<int> stage_of_worker(std::string_view worker_id) const;
    const std::deque<Session>& sessions() const { return sessions_; }
    std::size_t size() const { return sessions_.size(); }

private:
    std::deque<Session> sessions_; // stable references
    std::unordered_map<std::string, std::size_t> by_id_;
    std::unordered_map<std::string, int> worker_stage_;
};

} // namespace veilmod::experiment
