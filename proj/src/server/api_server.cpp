#include "veilmod/server/api_server.hpp"

#include <charconv>
#include <cmath>
#include <mutex>
#include <optional>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "veilmod/blur/reveal.hpp"
#include "veilmod/corpus/codec.hpp"
#include "veilmod/error.hpp"
#include "veilmod/experiment/records.hpp"
#include "veilmod/server/event_log.hpp"
#include "veilmod/server/render_cache.hpp"
#include "veilmod/server/tokens.hpp"
#include "veilmod/survey/instrument.hpp"

namespace veilmod::server {

namespace fs = std::filesystem;
using nlohmann::json;
using experiment::RecordKind;
using experiment::RevealEvent;
using experiment::RevealKind;
using experiment::Session;

int http_status(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::invalid_parameter:
    case ErrorKind::invalid_pair:
    case ErrorKind::out_of_bounds:
    case ErrorKind::schema:
    case ErrorKind::validation: return 400;
    case ErrorKind::unauthorized: return 401;
    case ErrorKind::forbidden: return 403;
    case ErrorKind::not_found: return 404;
    case ErrorKind::conflict:
    case ErrorKind::state: return 409;
    case ErrorKind::expired: return 410;
    case ErrorKind::too_large: return 413;
    case ErrorKind::invalid_image:
    case ErrorKind::io: return 500;
    }
    return 500;
}

namespace {

constexpr const char* id_pattern = "([A-Za-z0-9._-]+)";

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t session_seed(std::uint64_t experiment_seed, std::string_view worker_id, int stage, std::size_t ordinal) {
    return fnv1a(fmt::format("{}:{}:{}:{}", experiment_seed, worker_id, stage, ordinal));
}

json parse_body(const httplib::Request& req) {
    json j = json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw Error(ErrorKind::validation, "request body must be a JSON object");
    return j;
}

template <class T>
std::optional<T> parse_number(const std::string& s) {
    T value{};
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc{} || ptr != end)
        return std::nullopt;
    return value;
}

int int_param(const httplib::Request& req, const char* name) {
    const auto v = parse_number<int>(req.get_param_value(name));
    if (!v)
        throw Error(ErrorKind::validation, fmt::format("query parameter '{}' must be an integer", name));
    return *v;
}

std::string bearer_token(const httplib::Request& req) {
    const std::string h = req.get_header_value("Authorization");
    constexpr std::string_view prefix = "Bearer ";
    if (h.size() <= prefix.size() || h.compare(0, prefix.size(), prefix) != 0)
        return {};
    return h.substr(prefix.size());
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_bytes(httplib::Response& res, const corpus::Bytes& data, const char* type) {
    res.status = 200;
    res.set_header("Cache-Control", "no-store");
    res.set_content(reinterpret_cast<const char*>(data.data()), data.size(), type);
}

} // namespace

struct ApiServer::Impl {
    ServerConfig config;
    Clock& clock;
    corpus::Corpus corpus;
    survey::InstrumentSet instruments;
    RenderCache cache;
    fs::path log_dir;
    EventLog log;
    TokenStore tokens;
    experiment::SessionBook book;
    std::map<std::string, std::size_t, std::less<>> sessions_per_worker;

    mutable std::mutex mutex; // guards book, log appends and sessions_per_worker
    httplib::Server http;
    std::thread thread;
    int port = -1;

    Impl(ServerConfig cfg, Clock& clk)
        : config((check_config(cfg), std::move(cfg))),
          clock(clk),
          corpus(corpus::ingest_manifest(config.manifest_path())),
          instruments(config.instruments.empty() ? survey::default_instruments()
                                                 : survey::load_instruments(config.instruments)),
          cache(corpus, config.cache_dir, config.jpeg_quality),
          log_dir(prepare_log_dir(config)),
          log(log_dir / event_log_name, config.fsync),
          tokens(log_dir / TokenStore::file_name, config.fsync),
          book(replay(log.recovered().records)) {
        survey::check_instruments(instruments);
        for (const auto& s : book.sessions())
            ++sessions_per_worker[s.worker_id];
        routes();
    }

    static fs::path prepare_log_dir(const ServerConfig& config) {
        const fs::path dir = config.experiment_log_dir();
        fs::create_directories(dir);
        if (fs::exists(dir / meta_file_name)) {
            if (read_meta(dir) != config.experiment)
                throw Error(ErrorKind::conflict,
                            fmt::format("{} was written by a different experiment configuration",
                                        (dir / meta_file_name).string()));
        } else {
            write_meta(dir, config.experiment);
        }
        return dir;
    }

    template <class F>
    httplib::Server::Handler guard(F f) {
        return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            } catch (const Error& e) {
                send_json(res, http_status(e.kind()), {{"error", to_string(e.kind())}, {"message", e.what()}});
            } catch (const std::exception& e) {
                send_json(res, 500, {{"error", "internal"}, {"message", e.what()}});
            }
        };
    }

    // Caller holds the mutex.
    Session& authorize(const httplib::Request& req) {
        const std::string token = bearer_token(req);
        if (token.empty())
            throw Error(ErrorKind::unauthorized, "missing bearer token");
        const auto entry = tokens.lookup(token);
        if (!entry)
            throw Error(ErrorKind::unauthorized, "unknown token");
        if (clock.now_ms() >= entry->expires_at_ms)
            throw Error(ErrorKind::expired, fmt::format("session {} has expired", entry->session_id));
        Session* s = book.find(entry->session_id);
        if (!s)
            throw Error(ErrorKind::unauthorized, "token refers to no session");
        return *s;
    }

    void authorize_admin(const httplib::Request& req) const {
        const std::string token = bearer_token(req);
        if (token.empty())
            throw Error(ErrorKind::unauthorized, "missing bearer token");
        if (!config.admin_token.empty() && secret_equal(token, config.admin_token))
            return;
        if (tokens.lookup(token))
            throw Error(ErrorKind::forbidden, "admin route needs the admin token");
        throw Error(ErrorKind::unauthorized, "unknown token");
    }

    const experiment::TaskItem& require_task(const Session& s, const std::string& image_id) const {
        const auto* task = s.find_task(image_id);
        if (!task || !corpus.find(image_id))
            throw Error(ErrorKind::not_found, fmt::format("image '{}' is not part of this session", image_id));
        return *task;
    }

    static void require_served(const Session& s, const std::string& image_id) {
        if (!s.first_served_ms.count(image_id))
            throw Error(ErrorKind::state, fmt::format("image '{}' has not been served yet", image_id));
    }

    // Validates, appends durably, then applies to memory. Caller holds the mutex.
    RevealEvent log_reveal(Session& s, RevealEvent e) {
        if (s.find_response(e.image_id))
            throw Error(ErrorKind::conflict, fmt::format("image '{}' already answered", e.image_id));
        require_served(s, e.image_id);
        e.at_ms = clock.now_ms();
        RevealEvent stored = experiment::validate_reveal_event(s, std::move(e));
        log.append(RecordKind::reveal, s.session_id, stored.at_ms, experiment::reveal_to_json(stored));
        s.reveals.push_back(stored);
        return stored;
    }

    void post_session(const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        if (!body.contains("worker_id") || !body["worker_id"].is_string())
            throw Error(ErrorKind::validation, "worker_id must be a string");
        if (!body.contains("stage_id") || !body["stage_id"].is_number_integer())
            throw Error(ErrorKind::validation, "stage_id must be an integer");
        const std::string worker = body["worker_id"].get<std::string>();
        const auto stage_id = body["stage_id"].get<std::int64_t>();
        if (worker.empty() || !corpus::is_valid_image_id(worker))
            throw Error(ErrorKind::validation, "worker_id must match [A-Za-z0-9._-]{1,128}");
        if (stage_id < 1 || stage_id > 6)
            throw Error(ErrorKind::invalid_parameter, fmt::format("stage {} does not exist (1..6)", stage_id));
        const auto& stages = config.experiment.stages;
        if (std::find(stages.begin(), stages.end(), stage_id) == stages.end())
            throw Error(ErrorKind::invalid_parameter, fmt::format("stage {} is not part of this experiment", stage_id));
        const int stage = static_cast<int>(stage_id);

        std::lock_guard lock(mutex);
        book.check_can_start(worker, stage);
        const std::int64_t now = clock.now_ms();
        const std::size_t ordinal = sessions_per_worker[worker];
        Session s = experiment::start_session(fmt::format("s{:06}", book.size() + 1), worker, stage, corpus,
                                              config.experiment.tasks_per_session,
                                              session_seed(config.experiment.seed, worker, stage, ordinal), now,
                                              config.experiment.slider_levels);
        log.append(RecordKind::session_started, s.session_id, now, experiment::session_started_payload(s));
        Session& added = book.add(std::move(s));
        ++sessions_per_worker[worker];

        const std::string token = random_token();
        const std::int64_t expires = now + config.session_ttl_ms;
        tokens.add(token, {added.session_id, expires});
        send_json(res, 201,
                  {{"token", token},
                   {"session_id", added.session_id},
                   {"task_count", added.tasks.size()},
                   {"expires_at_ms", expires},
                   {"stage", experiment::stage_to_json(added.stage)}});
    }

    void next_task(const httplib::Request& req, httplib::Response& res) {
        std::lock_guard lock(mutex);
        Session& s = authorize(req);
        const auto* task = s.next_unanswered();
        if (!task) {
            res.status = 204;
            return;
        }
        if (!s.first_served_ms.count(task->image_id)) {
            const std::int64_t now = clock.now_ms();
            log.append(RecordKind::task_served, s.session_id, now, {{"image_id", task->image_id}});
            experiment::mark_served(s, task->image_id, now);
        }
        const auto index = static_cast<std::size_t>(task - s.tasks.data());
        json display = {{"sigma", s.stage.sigma},
                        {"width", task->width},
                        {"height", task->height},
                        {"image_url", fmt::format("/api/images/{}?sigma={}", task->image_id, sigma_label(s.stage.sigma))},
                        {"region_radius", config.experiment.region_radius},
                        {"max_region_radius", config.max_region_radius}};
        if (s.stage.reveal_tool == experiment::RevealTool::slider)
            display["slider_levels"] = s.stage.slider_levels;
        send_json(res, 200,
                  {{"session_id", s.session_id},
                   {"image_id", task->image_id},
                   {"task_index", index},
                   {"task_count", s.tasks.size()},
                   {"served_at_ms", s.first_served_ms.at(task->image_id)},
                   {"stage", experiment::stage_to_json(s.stage)},
                   {"display", display}});
    }

    void get_image(const httplib::Request& req, httplib::Response& res) {
        const std::string image_id = req.matches[1];
        const corpus::ImageRecord* record = nullptr;
        double sigma = 0.0;
        {
            std::lock_guard lock(mutex);
            Session& s = authorize(req);
            require_task(s, image_id);
            record = corpus.find(image_id);
            sigma = s.stage.sigma;
            if (req.has_param("sigma")) {
                const auto v = parse_number<double>(req.get_param_value("sigma"));
                if (!v || !std::isfinite(*v))
                    throw Error(ErrorKind::validation, "sigma must be a number");
                sigma = *v;
            }
            if (!experiment::sigma_allowed(s.stage, sigma))
                throw Error(ErrorKind::forbidden,
                            fmt::format("sigma {} is not available in stage {}", sigma, s.stage.stage_id));
            if (s.stage.reveal_tool == experiment::RevealTool::slider) {
                const bool moved = std::any_of(s.reveals.begin(), s.reveals.end(), [&](const RevealEvent& e) {
                    return e.image_id == image_id && e.kind == RevealKind::slider_set;
                });
                if (sigma != s.stage.sigma || moved)
                    log_reveal(s, {image_id, RevealKind::slider_set, std::nullopt, sigma, 0,
                                   experiment::RevealSource::server});
            }
        }
        send_bytes(res, cache.rendition(*record, sigma), "image/jpeg");
    }

    static blur::RevealRegion parse_region(const httplib::Request& req, int max_radius) {
        const bool any_rect = req.has_param("x") || req.has_param("y") || req.has_param("w") || req.has_param("h");
        const bool any_circle = req.has_param("cx") || req.has_param("cy") || req.has_param("r");
        if (any_rect == any_circle)
            throw Error(ErrorKind::validation, "give either x,y,w,h or cx,cy,r");
        if (any_circle) {
            const blur::CircleRegion c{int_param(req, "cx"), int_param(req, "cy"), int_param(req, "r")};
            if (c.radius > max_radius)
                throw Error(ErrorKind::too_large, fmt::format("radius {} exceeds the maximum {}", c.radius, max_radius));
            return c;
        }
        const blur::RectRegion r{int_param(req, "x"), int_param(req, "y"), int_param(req, "w"), int_param(req, "h")};
        if (r.width > 2 * max_radius || r.height > 2 * max_radius)
            throw Error(ErrorKind::too_large,
                        fmt::format("{}x{} region exceeds the maximum extent {}", r.width, r.height, 2 * max_radius));
        return r;
    }

    void get_tile(const httplib::Request& req, httplib::Response& res) {
        const std::string image_id = req.matches[1];
        const corpus::ImageRecord* record = nullptr;
        blur::RevealRegion region;
        {
            std::lock_guard lock(mutex);
            Session& s = authorize(req);
            require_task(s, image_id);
            record = corpus.find(image_id);
            RevealKind kind;
            switch (s.stage.reveal_tool) {
            case experiment::RevealTool::click: kind = RevealKind::click_reveal; break;
            case experiment::RevealTool::hover: kind = RevealKind::hover_start; break;
            default:
                throw Error(ErrorKind::forbidden,
                            fmt::format("stage {} has no region reveal tool", s.stage.stage_id));
            }
            region = parse_region(req, config.max_region_radius);
            try {
                blur::check_region(region);
            } catch (const Error& e) {
                throw Error(ErrorKind::validation, e.what());
            }
            log_reveal(s, {image_id, kind, region, std::nullopt, 0, experiment::RevealSource::server});
        }
        const auto original = cache.original(*record);
        const auto box = blur::clip_to_image(blur::region_bounds(region), original.width, original.height);
        res.set_header("X-Tile-Box", fmt::format("{},{},{},{}", box.x0, box.y0, box.x1, box.y1));
        send_bytes(res, corpus::encode_png(blur::region_tile(original, region)), "image/png");
    }

    void post_reveal(const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        RevealEvent e = experiment::reveal_from_json(body);
        e.source = experiment::RevealSource::client;
        std::lock_guard lock(mutex);
        Session& s = authorize(req);
        require_task(s, e.image_id);
        const RevealEvent stored = log_reveal(s, std::move(e));
        json out = experiment::reveal_to_json(stored);
        out["at_ms"] = stored.at_ms;
        send_json(res, 201, out);
    }

    void post_response(const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        experiment::ModerationResponse r = experiment::response_from_json(body);
        std::lock_guard lock(mutex);
        Session& s = authorize(req);
        require_task(s, r.image_id);
        if (s.find_response(r.image_id))
            throw Error(ErrorKind::conflict, fmt::format("image '{}' already answered", r.image_id));
        require_served(s, r.image_id);
        const std::int64_t now = clock.now_ms();
        r.latency_ms = now - s.first_served_ms.at(r.image_id);
        experiment::validate_response(s, r);
        log.append(RecordKind::response, s.session_id, now, experiment::response_to_json(r));
        experiment::record_response(s, r);
        send_json(res, 201,
                  {{"image_id", r.image_id},
                   {"latency_ms", r.latency_ms},
                   {"remaining", s.tasks.size() - s.responses.size()}});
    }

    void post_survey(const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        survey::SurveyResponse r = survey::survey_from_json(body);
        std::lock_guard lock(mutex);
        Session& s = authorize(req);
        const auto scores = experiment::validate_survey(s, r, instruments);
        r.session_id = s.session_id;
        const std::int64_t now = clock.now_ms();
        log.append(RecordKind::survey, s.session_id, now, experiment::survey_payload(r, scores));
        experiment::record_survey(s, std::move(r), scores);
        log.append(RecordKind::session_completed, s.session_id, now, json::object());
        s.completed_at_ms = now;
        send_json(res, 201, {{"session_id", s.session_id}, {"scores", survey::to_json(scores)}});
    }

    std::string report_text(const std::string& format) const {
        std::lock_guard lock(mutex);
        return render_report(book, config.experiment, format);
    }

    void get_report(const httplib::Request& req, httplib::Response& res) {
        authorize_admin(req);
        const std::string experiment_id = req.get_param_value("experiment");
        const std::string format = req.has_param("format") ? req.get_param_value("format") : "table";
        if (experiment_id.empty())
            throw Error(ErrorKind::validation, "experiment parameter is required");
        if (format != "table" && format != "csv")
            throw Error(ErrorKind::validation, fmt::format("unknown format '{}' (table|csv)", format));

        std::string text;
        try {
            if (experiment_id == config.experiment.experiment_id) {
                text = report_text(format);
            } else {
                const fs::path dir = config.log_dir / experiment_id;
                if (!corpus::is_valid_image_id(experiment_id) || !fs::exists(dir / event_log_name) ||
                    !fs::exists(dir / meta_file_name))
                    throw Error(ErrorKind::not_found, fmt::format("unknown experiment '{}'", experiment_id));
                text = report_from_log_dir(dir, format).text;
            }
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::state)
                throw Error(ErrorKind::not_found, fmt::format("experiment '{}': {}", experiment_id, e.what()));
            throw;
        }
        res.status = 200;
        res.set_content(text, format == "csv" ? "text/csv" : "text/plain; charset=utf-8");
    }

    void routes() {
        http.set_payload_max_length(1 << 20);
        http.set_tcp_nodelay(true);
        http.Post("/api/sessions", guard([this](auto& req, auto& res) { post_session(req, res); }));
        http.Get("/api/tasks/next", guard([this](auto& req, auto& res) { next_task(req, res); }));
        http.Get(fmt::format("/api/images/{}/tile", id_pattern),
                 guard([this](auto& req, auto& res) { get_tile(req, res); }));
        http.Get(fmt::format("/api/images/{}", id_pattern),
                 guard([this](auto& req, auto& res) { get_image(req, res); }));
        http.Post("/api/reveals", guard([this](auto& req, auto& res) { post_reveal(req, res); }));
        http.Post("/api/responses", guard([this](auto& req, auto& res) { post_response(req, res); }));
        http.Post("/api/surveys", guard([this](auto& req, auto& res) { post_survey(req, res); }));
        http.Get("/api/instruments", guard([this](auto&, auto& res) {
                     send_json(res, 200, survey::instruments_to_json(instruments));
                 }));
        http.Get("/api/admin/report", guard([this](auto& req, auto& res) { get_report(req, res); }));
        if (!config.static_dir.empty() && !http.set_mount_point("/", config.static_dir.string()))
            throw Error(ErrorKind::io, fmt::format("static_dir {} is not a directory", config.static_dir.string()));
    }
};

ApiServer::ApiServer(ServerConfig config, Clock& clock) : impl_(std::make_unique<Impl>(std::move(config), clock)) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind() {
    auto& i = *impl_;
    if (i.config.port == 0) {
        i.port = i.http.bind_to_any_port(i.config.host);
    } else {
        i.port = i.http.bind_to_port(i.config.host, i.config.port) ? i.config.port : -1;
    }
    if (i.port < 0)
        throw Error(ErrorKind::io, fmt::format("cannot listen on {}:{}", i.config.host, i.config.port));
    return i.port;
}

void ApiServer::listen() { impl_->http.listen_after_bind(); }

int ApiServer::start() {
    const int p = bind();
    impl_->thread = std::thread([this] { listen(); });
    impl_->http.wait_until_ready();
    return p;
}

void ApiServer::stop() {
    if (!impl_)
        return;
    impl_->http.stop();
    if (impl_->thread.joinable())
        impl_->thread.join();
}

int ApiServer::port() const { return impl_->port; }
const ServerConfig& ApiServer::config() const { return impl_->config; }

std::string ApiServer::live_report(const std::string& format) const { return impl_->report_text(format); }

} // namespace veilmod::server
