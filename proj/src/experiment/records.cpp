#include "veilmod/experiment/records.hpp"

#include <cmath>

#include <fmt/format.h>

#include "veilmod/error.hpp"

namespace veilmod::experiment {

using nlohmann::json;

std::string_view to_string(RecordKind k) {
    switch (k) {
    case RecordKind::session_started: return "session_started";
    case RecordKind::task_served: return "task_served";
    case RecordKind::reveal: return "reveal";
    case RecordKind::response: return "response";
    case RecordKind::survey: return "survey";
    case RecordKind::session_completed: return "session_completed";
    }
    return "?";
}

std::optional<RecordKind> parse_record_kind(std::string_view s) {
    for (auto k : {RecordKind::session_started, RecordKind::task_served, RecordKind::reveal, RecordKind::response,
                   RecordKind::survey, RecordKind::session_completed})
        if (s == to_string(k))
            return k;
    return std::nullopt;
}

namespace {

[[noreturn]] void invalid(const std::string& msg) {
    throw Error(ErrorKind::validation, msg);
}

const json& field(const json& j, const char* name) {
    if (!j.is_object() || !j.contains(name))
        invalid(fmt::format("missing field '{}'", name));
    return j.at(name);
}

std::string string_field(const json& j, const char* name) {
    const auto& v = field(j, name);
    if (!v.is_string())
        invalid(fmt::format("field '{}' must be a string", name));
    return v.get<std::string>();
}

std::string optional_string(const json& j, const char* name) {
    if (!j.contains(name) || j.at(name).is_null())
        return {};
    const auto& v = j.at(name);
    if (!v.is_string())
        invalid(fmt::format("field '{}' must be a string", name));
    return v.get<std::string>();
}

bool bool_field(const json& j, const char* name) {
    const auto& v = field(j, name);
    if (!v.is_boolean())
        invalid(fmt::format("field '{}' must be a boolean", name));
    return v.get<bool>();
}

int coord_field(const json& j, const char* name) {
    const auto& v = field(j, name);
    if (!v.is_number_integer())
        invalid(fmt::format("field '{}' must be an integer", name));
    const auto x = v.get<std::int64_t>();
    if (x < -1'000'000 || x > 1'000'000)
        invalid(fmt::format("field '{}' out of range", name));
    return static_cast<int>(x);
}

std::int64_t int64_field(const json& j, const char* name) {
    const auto& v = field(j, name);
    if (!v.is_number_integer())
        invalid(fmt::format("field '{}' must be an integer", name));
    return v.get<std::int64_t>();
}

double number_field(const json& j, const char* name) {
    const auto& v = field(j, name);
    if (!v.is_number())
        invalid(fmt::format("field '{}' must be a number", name));
    return v.get<double>();
}

} // namespace

std::string serialize_record(const LogRecord& r) {
    // nlohmann::json objects keep keys sorted, so the line layout is stable
    json j = {{"seq", r.seq},
              {"kind", to_string(r.kind)},
              {"session_id", r.session_id},
              {"at_ms", r.at_ms},
              {"payload", r.payload}};
    return j.dump();
}

LogRecord parse_record(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::schema, fmt::format("unparsable log line: {}", e.what()));
    }
    try {
        LogRecord r;
        const auto& seq = field(j, "seq");
        if (!seq.is_number_unsigned())
            invalid("seq must be a non-negative integer");
        r.seq = seq.get<std::uint64_t>();
        const auto kind = parse_record_kind(string_field(j, "kind"));
        if (!kind)
            invalid(fmt::format("unknown record kind '{}'", j.at("kind").get<std::string>()));
        r.kind = *kind;
        r.session_id = string_field(j, "session_id");
        r.at_ms = int64_field(j, "at_ms");
        r.payload = field(j, "payload");
        if (!r.payload.is_object())
            invalid("payload must be an object");
        return r;
    } catch (const Error& e) {
        throw Error(ErrorKind::schema, fmt::format("malformed log record: {}", e.what()));
    }
}

json region_to_json(const blur::RevealRegion& region) {
    if (const auto* c = std::get_if<blur::CircleRegion>(&region))
        return {{"shape", "circle"}, {"cx", c->center_x}, {"cy", c->center_y}, {"r", c->radius}};
    const auto& r = std::get<blur::RectRegion>(region);
    return {{"shape", "rectangle"}, {"x", r.origin_x}, {"y", r.origin_y}, {"w", r.width}, {"h", r.height}};
}

blur::RevealRegion region_from_json(const json& j) {
    const std::string shape = string_field(j, "shape");
    blur::RevealRegion region;
    if (shape == "circle")
        region = blur::CircleRegion{coord_field(j, "cx"), coord_field(j, "cy"), coord_field(j, "r")};
    else if (shape == "rectangle")
        region = blur::RectRegion{coord_field(j, "x"), coord_field(j, "y"), coord_field(j, "w"), coord_field(j, "h")};
    else
        invalid(fmt::format("unknown region shape '{}'", shape));
    try {
        blur::check_region(region);
    } catch (const Error& e) {
        invalid(e.what());
    }
    return region;
}

json stage_to_json(const StageConfig& s) {
    return {{"stage_id", s.stage_id},
            {"sigma", s.sigma},
            {"reveal_tool", to_string(s.reveal_tool)},
            {"slider_levels", s.slider_levels}};
}

StageConfig stage_from_json(const json& j) {
    StageConfig s;
    s.stage_id = static_cast<int>(int64_field(j, "stage_id"));
    s.sigma = number_field(j, "sigma");
    const auto tool = parse_reveal_tool(string_field(j, "reveal_tool"));
    if (!tool)
        invalid("unknown reveal tool");
    s.reveal_tool = *tool;
    for (const auto& v : field(j, "slider_levels")) {
        if (!v.is_number())
            invalid("slider levels must be numbers");
        s.slider_levels.push_back(v.get<double>());
    }
    check_stage_config(s);
    return s;
}

json session_started_payload(const Session& s) {
    json tasks = json::array();
    for (const auto& t : s.tasks)
        tasks.push_back({{"image_id", t.image_id},
                         {"category", corpus::to_string(t.category)},
                         {"realism", corpus::to_string(t.realism)},
                         {"width", t.width},
                         {"height", t.height}});
    return {{"worker_id", s.worker_id}, {"stage", stage_to_json(s.stage)}, {"seed", s.seed}, {"tasks", tasks}};
}

json response_to_json(const ModerationResponse& r) {
    json j = {{"image_id", r.image_id},
              {"q1_category", to_string(r.q1_category)},
              {"q2_realistic", r.q2_realistic},
              {"q3_approve", r.q3_approve},
              {"q4_rationale", r.q4_rationale},
              {"latency_ms", r.latency_ms}};
    if (r.q1_category == Q1Answer::other)
        j["q1_other_text"] = r.q1_other_text;
    return j;
}

ModerationResponse response_from_json(const json& j) {
    ModerationResponse r;
    r.image_id = string_field(j, "image_id");
    const std::string q1 = string_field(j, "q1_category");
    const auto answer = parse_q1(q1);
    if (!answer)
        invalid(fmt::format("q1_category '{}' must be one of sex_nudity|graphic|safe|other", q1));
    r.q1_category = *answer;
    r.q1_other_text = optional_string(j, "q1_other_text");
    r.q2_realistic = bool_field(j, "q2_realistic");
    r.q3_approve = bool_field(j, "q3_approve");
    r.q4_rationale = optional_string(j, "q4_rationale");
    if (j.contains("latency_ms"))
        r.latency_ms = int64_field(j, "latency_ms");
    return r;
}

json reveal_to_json(const RevealEvent& e) {
    json j = {{"image_id", e.image_id}, {"kind", to_string(e.kind)}, {"source", to_string(e.source)}};
    if (e.region)
        j["region"] = region_to_json(*e.region);
    if (e.sigma_value)
        j["sigma_value"] = *e.sigma_value;
    return j;
}

RevealEvent reveal_from_json(const json& j) {
    RevealEvent e;
    e.image_id = string_field(j, "image_id");
    const std::string kind = string_field(j, "kind");
    const auto k = parse_reveal_kind(kind);
    if (!k)
        invalid(fmt::format("unknown reveal kind '{}'", kind));
    e.kind = *k;
    if (j.contains("region") && !j.at("region").is_null())
        e.region = region_from_json(j.at("region"));
    if (j.contains("sigma_value") && !j.at("sigma_value").is_null())
        e.sigma_value = number_field(j, "sigma_value");
    const std::string source = optional_string(j, "source");
    e.source = source == "server" ? RevealSource::server : RevealSource::client;
    return e;
}

json survey_payload(const survey::SurveyResponse& r, const survey::SurveyScores& s) {
    return {{"items", survey::to_json(r)}, {"scores", survey::to_json(s)}};
}

namespace {

survey::SurveyScores scores_from_json(const json& j) {
    survey::SurveyScores s;
    s.spane = {static_cast<int>(int64_field(j, "spane_p")), static_cast<int>(int64_field(j, "spane_n")),
               static_cast<int>(int64_field(j, "spane_balance"))};
    s.panas = {static_cast<int>(int64_field(j, "panas_pa")), static_cast<int>(int64_field(j, "panas_na"))};
    s.exhaustion_mean = number_field(j, "exhaustion_mean");
    s.tam = {number_field(j, "peou_mean"), number_field(j, "pu_mean")};
    return s;
}

Session session_from_payload(const LogRecord& rec) {
    const json& p = rec.payload;
    Session s;
    s.session_id = rec.session_id;
    s.worker_id = string_field(p, "worker_id");
    s.stage = stage_from_json(field(p, "stage"));
    const auto& seed = field(p, "seed");
    if (!seed.is_number_unsigned())
        invalid("seed must be a non-negative integer");
    s.seed = seed.get<std::uint64_t>();
    s.started_at_ms = rec.at_ms;
    for (const auto& t : field(p, "tasks")) {
        TaskItem item;
        item.image_id = string_field(t, "image_id");
        const auto cat = corpus::parse_category(string_field(t, "category"));
        const auto real = corpus::parse_realism(string_field(t, "realism"));
        if (!cat || !real)
            invalid("task with unknown category or realism");
        item.category = *cat;
        item.realism = *real;
        item.width = coord_field(t, "width");
        item.height = coord_field(t, "height");
        s.tasks.push_back(std::move(item));
    }
    if (s.tasks.empty())
        invalid("session without tasks");
    return s;
}

} // namespace

void apply_record(SessionBook& book, const LogRecord& rec) {
    if (rec.kind == RecordKind::session_started) {
        book.add(session_from_payload(rec));
        return;
    }
    Session& s = book.at(rec.session_id);
    switch (rec.kind) {
    case RecordKind::task_served:
        mark_served(s, string_field(rec.payload, "image_id"), rec.at_ms);
        break;
    case RecordKind::reveal: {
        RevealEvent e = reveal_from_json(rec.payload);
        e.at_ms = rec.at_ms;
        record_reveal_event(s, std::move(e));
        break;
    }
    case RecordKind::response:
        record_response(s, response_from_json(rec.payload));
        break;
    case RecordKind::survey: {
        auto items = survey::survey_from_json(field(rec.payload, "items"));
        if (s.survey)
            throw Error(ErrorKind::conflict, fmt::format("second survey for session {}", s.session_id));
        record_survey(s, std::move(items), scores_from_json(field(rec.payload, "scores")));
        break;
    }
    case RecordKind::session_completed:
        if (rec.at_ms < s.started_at_ms)
            invalid("session completed before it started");
        s.completed_at_ms = rec.at_ms;
        break;
    case RecordKind::session_started:
        break;
    }
}

} // namespace veilmod::experiment
