#include "veilmod/sim/simulate.hpp"

#include <map>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <httplib.h>

#include "veilmod/error.hpp"
#include "veilmod/server/api_server.hpp"
#include "veilmod/server/clock.hpp"
#include "veilmod/server/event_log.hpp"
#include "veilmod/server/render_cache.hpp"
#include "veilmod/server/tokens.hpp"
#include "veilmod/survey/instrument.hpp"

namespace veilmod::sim {

namespace fs = std::filesystem;
using nlohmann::json;

json to_json(const TraceEntry& e) {
    return {{"worker_id", e.worker_id}, {"session_id", e.session_id}, {"stage", e.stage},
            {"method", e.method},       {"target", e.target},         {"status", e.status},
            {"content_type", e.content_type}, {"size", e.size},       {"sha256", e.sha256},
            {"at_ms", e.at_ms}};
}

TraceEntry trace_from_json(const json& j) {
    try {
        return {j.at("worker_id").get<std::string>(), j.at("session_id").get<std::string>(), j.at("stage").get<int>(),
                j.at("method").get<std::string>(),    j.at("target").get<std::string>(),     j.at("status").get<int>(),
                j.at("content_type").get<std::string>(), j.at("size").get<std::size_t>(),
                j.at("sha256").get<std::string>(),    j.at("at_ms").get<std::int64_t>()};
    } catch (const json::exception& e) {
        throw Error(ErrorKind::schema, fmt::format("trace entry: {}", e.what()));
    }
}

namespace {

std::uint64_t stable_hash(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct Reply {
    int status = 0;
    std::string body;
    std::string content_type;
};

// HTTP client that records every exchange.
class Wire {
public:
    Wire(int port, server::ManualClock& clock, std::vector<TraceEntry>& trace)
        : client_("127.0.0.1", port), clock_(clock), trace_(trace) {
        client_.set_keep_alive(true);
        client_.set_tcp_nodelay(true);
    }

    std::string worker_id, session_id, token;
    int stage = 0;

    Reply get(const std::string& target) { return send("GET", target, nullptr); }
    Reply post(const std::string& target, const json& body) {
        const std::string text = body.dump();
        return send("POST", target, &text);
    }

    // Fails the run unless the status matches.
    Reply expect(int status, Reply reply, const std::string& what) const {
        if (reply.status != status)
            throw Error(ErrorKind::validation, fmt::format("worker {}: {} answered {} (expected {}): {}", worker_id,
                                                           what, reply.status, status, reply.body));
        return reply;
    }

private:
    Reply send(const char* method, const std::string& target, const std::string* body) {
        httplib::Headers headers;
        if (!token.empty())
            headers.emplace("Authorization", "Bearer " + token);
        auto res = body ? client_.Post(target, headers, *body, "application/json") : client_.Get(target, headers);
        if (!res)
            throw Error(ErrorKind::io, fmt::format("worker {}: {} {} failed: {}", worker_id, method, target,
                                                   httplib::to_string(res.error())));
        Reply reply{res->status, res->body, res->get_header_value("Content-Type")};
        trace_.push_back({worker_id, session_id, stage, method, target, reply.status, reply.content_type,
                          reply.body.size(), server::sha256_hex(reply.body), clock_.now_ms()});
        return reply;
    }

    httplib::Client client_;
    server::ManualClock& clock_;
    std::vector<TraceEntry>& trace_;
};

std::int64_t draw(std::mt19937_64& rng, const IntRange& r) {
    return std::uniform_int_distribution<std::int64_t>(r.lo, r.hi)(rng);
}

bool chance(std::mt19937_64& rng, double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

std::vector<int> random_items(std::mt19937_64& rng, const survey::Instrument& inst) {
    std::uniform_int_distribution<int> d(inst.scale_min, inst.scale_max);
    std::vector<int> items(inst.items.size());
    for (auto& v : items)
        v = d(rng);
    return items;
}

class Worker {
public:
    Worker(Wire& wire, server::ManualClock& clock, const StageBehaviour& behaviour,
           const experiment::GoldTable& gold, const survey::InstrumentSet& instruments, std::uint64_t seed)
        : wire_(wire), clock_(clock), b_(behaviour), gold_(gold), instruments_(instruments), rng_(seed) {}

    std::size_t run() {
        const auto started = json::parse(wire_.expect(201, wire_.post("/api/sessions", {{"worker_id", wire_.worker_id},
                                                                                        {"stage_id", wire_.stage}}),
                                                      "POST /api/sessions")
                                             .body);
        wire_.token = started.at("token").get<std::string>();
        wire_.session_id = started.at("session_id").get<std::string>();
        clock_.advance(500);

        std::size_t answered = 0;
        for (;;) {
            const Reply next = wire_.get("/api/tasks/next");
            if (next.status == 204)
                break;
            wire_.expect(200, next, "GET /api/tasks/next");
            moderate(json::parse(next.body));
            ++answered;
        }
        clock_.advance(1000);
        submit_survey();
        return answered;
    }

private:
    void moderate(const json& task) {
        const std::string image_id = task.at("image_id").get<std::string>();
        const json& display = task.at("display");
        const int width = display.at("width").get<int>();
        const int height = display.at("height").get<int>();
        const int radius = display.at("region_radius").get<int>();
        clock_.advance(150);
        wire_.expect(200, wire_.get(display.at("image_url").get<std::string>()), "initial image");

        std::uniform_int_distribution<int> px(0, width - 1), py(0, height - 1);
        const auto tile = [&] {
            const int cx = px(rng_);
            const int cy = py(rng_);
            return fmt::format("/api/images/{}/tile?cx={}&cy={}&r={}", image_id, cx, cy, radius);
        };
        switch (wire_.stage) {
        case 4:
            for (auto k = draw(rng_, b_.clicks); k > 0; --k) {
                clock_.advance(draw(rng_, b_.think_ms) / 4);
                wire_.expect(200, wire_.get(tile()), "click reveal");
            }
            break;
        case 5:
            for (auto k = draw(rng_, b_.hovers); k > 0; --k) {
                clock_.advance(draw(rng_, b_.think_ms) / 4);
                wire_.expect(200, wire_.get(tile()), "hover reveal");
                clock_.advance(draw(rng_, b_.hover_ms));
                wire_.expect(201, wire_.post("/api/reveals", {{"image_id", image_id}, {"kind", "hover_end"}}),
                             "hover_end");
            }
            break;
        case 6: {
            const auto levels = display.at("slider_levels").get<std::vector<double>>();
            std::vector<std::size_t> stops;
            for (std::size_t i = 0; i < levels.size(); ++i)
                if (levels[i] >= b_.slider_stop[0] && levels[i] <= b_.slider_stop[1])
                    stops.push_back(i);
            const std::size_t stop =
                stops.empty() ? 0 : stops[std::uniform_int_distribution<std::size_t>(0, stops.size() - 1)(rng_)];
            for (std::size_t i = 1; i <= stop; ++i) {
                clock_.advance(draw(rng_, b_.slider_step_ms));
                wire_.expect(200,
                             wire_.get(fmt::format("/api/images/{}?sigma={}", image_id, server::sigma_label(levels[i]))),
                             "slider move");
            }
            break;
        }
        default:
            break;
        }
        clock_.advance(draw(rng_, b_.think_ms));
        wire_.expect(201, wire_.post("/api/responses", answer(image_id)), "POST /api/responses");
        clock_.advance(300);
    }

    json answer(const std::string& image_id) {
        const auto it = gold_.find(image_id);
        if (it == gold_.end())
            throw Error(ErrorKind::not_found, fmt::format("simulator has no label for '{}'", image_id));
        const auto& row = b_.q1[corpus::index_of(it->second.category)];
        std::discrete_distribution<int> pick(row.begin(), row.end());
        const auto q1 = static_cast<experiment::Q1Answer>(pick(rng_));
        const bool realistic = it->second.realism == corpus::Realism::realistic;
        const bool q2 = chance(rng_, b_.q2_accuracy) ? realistic : !realistic;
        const bool q3 = chance(rng_, b_.approve[corpus::index_of(it->second.category)]);
        json j = {{"image_id", image_id},
                  {"q1_category", experiment::to_string(q1)},
                  {"q2_realistic", q2},
                  {"q3_approve", q3}};
        if (q1 == experiment::Q1Answer::other)
            j["q1_other_text"] = "could not tell";
        if (chance(rng_, b_.rationale_rate))
            j["q4_rationale"] = q3 ? "nothing objectionable" : "violates the content policy";
        return j;
    }

    void submit_survey() {
        json demographics = json::object();
        for (const auto& f : instruments_.demographics) {
            if (f.options.empty())
                demographics[f.name] = "n/a";
            else
                demographics[f.name] =
                    f.options[std::uniform_int_distribution<std::size_t>(0, f.options.size() - 1)(rng_)];
        }
        survey::SurveyResponse r;
        r.spane_items = random_items(rng_, instruments_.spane);
        r.panas_items = random_items(rng_, instruments_.panas);
        r.exhaustion_items = random_items(rng_, instruments_.exhaustion);
        r.tam_peou_items = random_items(rng_, instruments_.tam_peou);
        r.tam_pu_items = random_items(rng_, instruments_.tam_pu);
        json body = survey::to_json(r);
        body["demographics"] = demographics;
        body.erase("session_id");
        wire_.expect(201, wire_.post("/api/surveys", body), "POST /api/surveys");
    }

    Wire& wire_;
    server::ManualClock& clock_;
    StageBehaviour b_;
    const experiment::GoldTable& gold_;
    const survey::InstrumentSet& instruments_;
    std::mt19937_64 rng_;
};

} // namespace

SimResult run_simulation(const SimOptions& options) {
    server::ServerConfig config = options.config;
    config.host = "127.0.0.1";
    config.port = 0;
    if (config.admin_token.empty())
        config.admin_token = server::random_token();
    server::check_config(config);

    const fs::path events = config.experiment_log_dir() / server::event_log_name;
    if (fs::exists(events) && fs::file_size(events) > 0)
        throw Error(ErrorKind::conflict,
                    fmt::format("{} already holds an event log; simulate needs a fresh log directory", events.string()));
    if (options.workers == 0)
        throw Error(ErrorKind::validation, "workers must be >= 1");

    const experiment::GoldTable gold = experiment::gold_table(corpus::parse_manifest(config.manifest_path()));
    server::ManualClock clock(options.start_ms);
    server::ApiServer api(config, clock);
    const int port = api.start();

    SimResult result;
    std::vector<TraceEntry> scratch;
    Wire meta_wire(port, clock, scratch);
    const Reply inst = meta_wire.expect(200, meta_wire.get("/api/instruments"), "GET /api/instruments");
    const survey::InstrumentSet instruments = survey::instruments_from_json(json::parse(inst.body));

    const auto& stages = config.experiment.stages;
    for (std::size_t i = 0; i < options.workers; ++i) {
        Wire wire(port, clock, result.trace);
        wire.worker_id = fmt::format("w{:03}", i + 1);
        wire.stage = stages[i % stages.size()];
        const auto seed = stable_hash(fmt::format("{}:{}", config.experiment.seed, wire.worker_id));
        Worker worker(wire, clock, options.profile.for_stage(wire.stage), gold, instruments, seed);
        result.responses += worker.run();
        ++result.sessions;
        clock.advance(60'000);
    }

    meta_wire.token = config.admin_token;
    const auto report = [&](const char* format) {
        return meta_wire
            .expect(200,
                    meta_wire.get(fmt::format("/api/admin/report?experiment={}&format={}",
                                              config.experiment.experiment_id, format)),
                    "GET /api/admin/report")
            .body;
    };
    result.live_report_table = report("table");
    result.live_report_csv = report("csv");
    api.stop();
    return result;
}

namespace {

std::map<std::string, std::string> query_params(const std::string& target) {
    std::map<std::string, std::string> out;
    const auto q = target.find('?');
    if (q == std::string::npos)
        return out;
    std::stringstream in(target.substr(q + 1));
    std::string part;
    while (std::getline(in, part, '&')) {
        const auto eq = part.find('=');
        if (eq != std::string::npos)
            out[part.substr(0, eq)] = part.substr(eq + 1);
    }
    return out;
}

std::optional<blur::RevealRegion> region_from_query(const std::map<std::string, std::string>& q) {
    try {
        if (q.count("cx"))
            return blur::CircleRegion{std::stoi(q.at("cx")), std::stoi(q.at("cy")), std::stoi(q.at("r"))};
        return blur::RectRegion{std::stoi(q.at("x")), std::stoi(q.at("y")), std::stoi(q.at("w")), std::stoi(q.at("h"))};
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

} // namespace

std::vector<std::string> privacy_violations(const std::vector<TraceEntry>& trace,
                                            const std::vector<experiment::LogRecord>& records) {
    std::map<std::string, int> logged; // server reveal records by session|image|region
    for (const auto& rec : records) {
        if (rec.kind != experiment::RecordKind::reveal || rec.payload.value("source", "") != "server" ||
            !rec.payload.contains("region"))
            continue;
        ++logged[fmt::format("{}|{}|{}", rec.session_id, rec.payload.value("image_id", ""),
                             rec.payload["region"].dump())];
    }

    std::vector<std::string> out;
    constexpr std::string_view prefix = "/api/images/";
    for (const auto& e : trace) {
        if (e.method != "GET" || e.status != 200 || e.target.rfind(prefix, 0) != 0)
            continue;
        const auto qpos = e.target.find('?');
        const std::string path = e.target.substr(prefix.size(), qpos == std::string::npos ? std::string::npos
                                                                                          : qpos - prefix.size());
        const auto query = query_params(e.target);
        const double stage_sigma = experiment::make_stage_config(e.stage).sigma;

        const auto slash = path.find('/');
        if (slash == std::string::npos) {
            double sigma = stage_sigma;
            if (query.count("sigma"))
                sigma = std::stod(query.at("sigma"));
            if (e.stage >= 2 && e.stage <= 5 && sigma < stage_sigma)
                out.push_back(fmt::format("{} {}: full image at sigma {} in stage {}", e.session_id, e.target, sigma,
                                          e.stage));
            continue;
        }
        const std::string image_id = path.substr(0, slash);
        const auto region = region_from_query(query);
        if (!region) {
            out.push_back(fmt::format("{} {}: tile without a readable region", e.session_id, e.target));
            continue;
        }
        const auto key =
            fmt::format("{}|{}|{}", e.session_id, image_id, experiment::region_to_json(*region).dump());
        auto it = logged.find(key);
        if (it == logged.end() || it->second == 0)
            out.push_back(fmt::format("{} {}: tile served without a logged reveal", e.session_id, e.target));
        else
            --it->second;
    }
    return out;
}

} // namespace veilmod::sim
