#include <doctest.h>

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "expect.hpp"
#include "support.hpp"
#include "veilmod/server/event_log.hpp"

using namespace veilmod;
namespace fs = std::filesystem;
using namespace veilmod::experiment;
using namespace veilmod::server;
using vt::kind_of;
using json = nlohmann::json;

namespace {

const corpus::Corpus& fixture() {
    static const corpus::Corpus c = corpus::ingest_manifest(vt::fixture_manifest());
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

ExperimentMeta small_meta() {
    ExperimentMeta m;
    m.experiment_id = "unit";
    m.stages = {1, 4};
    m.tasks_per_session = 3;
    m.seed = 9;
    return m;
}

// Two sessions, every task answered, one click reveal; the second session
// also completes its survey.
void write_small_log(const fs::path& dir) {
    fs::create_directories(dir);
    write_meta(dir, small_meta());
    EventLog log(dir / event_log_name, false);
    std::int64_t now = 10'000;
    int n = 0;
    for (int stage : {1, 4}) {
        ++n;
        auto s = start_session(fmt::format("s{:06}", n), fmt::format("w{}", n), stage, fixture(), 3, 9 + n, now);
        log.append(RecordKind::session_started, s.session_id, now, session_started_payload(s));
        for (const auto& t : s.tasks) {
            now += 100;
            log.append(RecordKind::task_served, s.session_id, now, {{"image_id", t.image_id}});
            if (stage == 4) {
                RevealEvent e;
                e.image_id = t.image_id;
                e.kind = RevealKind::click_reveal;
                e.region = blur::CircleRegion{4, 4, 3};
                e.source = RevealSource::server;
                log.append(RecordKind::reveal, s.session_id, now + 50, reveal_to_json(e));
            }
            ModerationResponse r;
            r.image_id = t.image_id;
            r.q1_category = answer_for(t.category);
            r.q2_realistic = t.realism == corpus::Realism::realistic;
            r.latency_ms = 700;
            now += 700;
            log.append(RecordKind::response, s.session_id, now, response_to_json(r));
        }
        if (stage == 4) {
            survey::SurveyResponse sr;
            for (const auto& f : survey::default_instruments().demographics)
                sr.demographics[f.name] = f.options.front();
            sr.spane_items.assign(12, 2);
            sr.panas_items.assign(10, 2);
            sr.exhaustion_items.assign(6, 2);
            sr.tam_peou_items.assign(6, 2);
            sr.tam_pu_items.assign(6, 2);
            log.append(RecordKind::survey, s.session_id, now, survey_payload(sr, survey::score_survey(sr)));
            log.append(RecordKind::session_completed, s.session_id, now, json::object());
        }
    }
}

} // namespace

TEST_CASE("record serialization round trip") {
    LogRecord r;
    r.seq = 7;
    r.kind = RecordKind::reveal;
    r.session_id = "s000003";
    r.at_ms = 1700000000123;
    r.payload = {{"image_id", "x"}, {"kind", "click_reveal"}};
    const auto line = serialize_record(r);
    CHECK(line.find('\n') == std::string::npos);
    const auto back = parse_record(line);
    CHECK(back.seq == 7);
    CHECK(back.kind == RecordKind::reveal);
    CHECK(back.session_id == r.session_id);
    CHECK(back.at_ms == r.at_ms);
    CHECK(back.payload == r.payload);
    CHECK(serialize_record(back) == line);

    CHECK(kind_of([] { parse_record("{\"seq\":1"); }) == ErrorKind::schema);
    CHECK(kind_of([] { parse_record(R"({"seq":1,"kind":"party","session_id":"s","at_ms":0,"payload":{}})"); }) ==
          ErrorKind::schema);
    CHECK(kind_of([] { parse_record(R"({"seq":-1,"kind":"survey","session_id":"s","at_ms":0,"payload":{}})"); }) ==
          ErrorKind::schema);
}

TEST_CASE("region and response payloads round trip") {
    for (const blur::RevealRegion& r : {blur::RevealRegion{blur::CircleRegion{1, 2, 3}},
                                        blur::RevealRegion{blur::RectRegion{-1, 0, 5, 6}}})
        CHECK(region_from_json(region_to_json(r)) == r);
    CHECK(kind_of([] { region_from_json(json{{"shape", "star"}}); }) == ErrorKind::validation);

    ModerationResponse m;
    m.image_id = "img";
    m.q1_category = Q1Answer::other;
    m.q1_other_text = "drawing";
    m.q3_approve = true;
    m.q4_rationale = "fine";
    m.latency_ms = 42;
    CHECK(response_from_json(response_to_json(m)) == m);
    auto j = response_to_json(m);
    j["q1_category"] = "nsfw";
    CHECK(kind_of([&] { response_from_json(j); }) == ErrorKind::validation);
}

TEST_CASE("event log: append, reopen, continue the sequence") {
    vt::TempDir tmp;
    write_small_log(tmp.path);
    const auto first = read_event_log(tmp.path / event_log_name);
    CHECK(first.partial_skipped == 0);
    REQUIRE(first.records.size() > 10);
    for (std::size_t i = 0; i < first.records.size(); ++i)
        CHECK(first.records[i].seq == i + 1);

    EventLog reopened(tmp.path / event_log_name, true);
    CHECK(reopened.last_seq() == first.records.size());
    const auto rec = reopened.append(RecordKind::session_completed, "s000001", 99'999, json::object());
    CHECK(rec.seq == first.records.size() + 1);
    CHECK(read_event_log(tmp.path / event_log_name).records.size() == first.records.size() + 1);
}

TEST_CASE("event log: truncated final line is skipped and repaired") {
    vt::TempDir tmp;
    write_small_log(tmp.path);
    const auto file = tmp.path / event_log_name;
    const auto intact = slurp(file);
    const auto count = read_event_log(file).records.size();

    // cut the last line in half, as if the process died mid-append
    const auto last_start = intact.rfind('\n', intact.size() - 2) + 1;
    spit(file, intact.substr(0, last_start + (intact.size() - last_start) / 2));
    const auto damaged = read_event_log(file);
    CHECK(damaged.partial_skipped == 1);
    CHECK(damaged.records.size() == count - 1);

    const auto rep = report_from_log_dir(tmp.path, "table");
    CHECK(rep.partial_skipped == 1);
    CHECK_FALSE(rep.text.empty());

    {
        EventLog writer(file, false);
        CHECK(writer.last_seq() == count - 1);
        CHECK(writer.recovered().partial_skipped == 1);
        writer.append(RecordKind::session_completed, "s000001", 50'000, json::object());
    }
    const auto repaired = read_event_log(file);
    CHECK(repaired.partial_skipped == 0);
    CHECK(repaired.records.size() == count);
}

TEST_CASE("event log: damage before the final line is an error") {
    vt::TempDir tmp;
    write_small_log(tmp.path);
    const auto file = tmp.path / event_log_name;
    const auto intact = slurp(file);

    auto corrupt = intact;
    corrupt.replace(corrupt.find("\"seq\":3"), 1, "#");
    spit(file, corrupt);
    CHECK(kind_of([&] { read_event_log(file); }) == ErrorKind::schema);

    // drop line 4 so the sequence jumps from 3 to 5
    std::istringstream in(intact);
    std::string line, gapped;
    for (int i = 1; std::getline(in, line); ++i)
        if (i != 4)
            gapped += line + "\n";
    spit(file, gapped);
    CHECK(kind_of([&] { read_event_log(file); }) == ErrorKind::schema);
    CHECK(kind_of([&] { EventLog(file, false); }) == ErrorKind::schema);
}

TEST_CASE("replay validates records and rebuilds the same report") {
    vt::TempDir tmp;
    write_small_log(tmp.path);
    const auto records = read_event_log(tmp.path / event_log_name).records;
    const auto book = replay(records);
    CHECK(book.size() == 2);
    CHECK(book.find("s000002")->survey.has_value());
    CHECK(book.find("s000002")->completed_at_ms.has_value());
    CHECK(book.find("s000002")->reveals.size() == 3);

    const auto a = report_from_log_dir(tmp.path, "csv").text;
    const auto b = report_from_log_dir(tmp.path, "csv").text;
    CHECK(a == b);
    CHECK(a.rfind(csv_header, 0) == 0);
    const auto rep = build_report(book, small_meta());
    CHECK(rep.responses == 6);
    CHECK(rep.surveys == 1);
    CHECK(render_csv(rep) == a);
    CHECK(render_table(rep) == report_from_log_dir(tmp.path, "table").text);
    CHECK(kind_of([&] { report_from_log_dir(tmp.path, "xml"); }) == ErrorKind::invalid_parameter);

    // a response to an image outside the session is refused during replay
    auto bad = records;
    for (auto& r : bad)
        if (r.kind == RecordKind::response) {
            r.payload["image_id"] = "not-in-session";
            break;
        }
    CHECK(kind_of([&] { replay(bad); }) == ErrorKind::schema);
}

TEST_CASE("report on an empty log is 'no data'") {
    vt::TempDir tmp;
    write_meta(tmp.path, small_meta());
    spit(tmp.path / event_log_name, "");
    try {
        report_from_log_dir(tmp.path, "table");
        FAIL("empty log produced a report");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::state);
        CHECK(std::string(e.what()).find("no data") != std::string::npos);
    }
}

TEST_CASE("experiment metadata") {
    vt::TempDir tmp;
    write_meta(tmp.path, small_meta());
    CHECK(read_meta(tmp.path) == small_meta());
    CHECK(meta_from_json(meta_to_json(small_meta())) == small_meta());
    CHECK(kind_of([&] { read_meta(tmp.path / "absent"); }) == ErrorKind::io);
}
