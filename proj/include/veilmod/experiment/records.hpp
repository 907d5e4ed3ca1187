#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "veilmod/experiment/session.hpp"

namespace veilmod::experiment {

enum class RecordKind { session_started, task_served, reveal, response, survey, session_completed };

std::string_view to_string(RecordKind k);
std::optional<RecordKind> parse_record_kind(std::string_view s);

// One line of the event log:
// {"seq":N,"kind":"...","session_id":"...","at_ms":T,"payload":{...}}
struct LogRecord {
    std::uint64_t seq = 0;
    RecordKind kind = RecordKind::session_started;
    std::string session_id;
    std::int64_t at_ms = 0;
    nlohmann::json payload = nlohmann::json::object();
};

// Compact single-line JSON without the trailing newline.
std::string serialize_record(const LogRecord& record);
// Throws schema error for malformed lines.
LogRecord parse_record(std::string_view line);

nlohmann::json region_to_json(const blur::RevealRegion& region);
// Throws validation error.
blur::RevealRegion region_from_json(const nlohmann::json& j);

nlohmann::json stage_to_json(const StageConfig& stage);
StageConfig stage_from_json(const nlohmann::json& j);

nlohmann::json session_started_payload(const Session& session);

nlohmann::json response_to_json(const ModerationResponse& r);
// Wire/payload parser; throws validation error on missing or mistyped fields.
// latency_ms is read only when present.
ModerationResponse response_from_json(const nlohmann::json& j);

nlohmann::json reveal_to_json(const RevealEvent& e);
// at_ms is not part of the payload; the caller assigns it.
RevealEvent reveal_from_json(const nlohmann::json& j);

nlohmann::json survey_payload(const survey::SurveyResponse& r, const survey::SurveyScores& s);

// Replays one record into the book, re-validating it. Survey scores are taken
// from the payload so replay does not depend on the current instrument file.
void apply_record(SessionBook& book, const LogRecord& record);

} // namespace veilmod::experiment
