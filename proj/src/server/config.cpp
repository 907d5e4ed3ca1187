#include "veilmod/server/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "veilmod/error.hpp"

namespace veilmod::server {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path ServerConfig::manifest_path() const {
    return fs::is_directory(corpus) ? corpus / "manifest.tsv" : corpus;
}

void check_config(const ServerConfig& c) {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::validation, "config: " + msg); };
    const auto& e = c.experiment;
    if (e.experiment_id.empty() || !corpus::is_valid_image_id(e.experiment_id))
        fail(fmt::format("experiment_id '{}' must match [A-Za-z0-9._-]+", e.experiment_id));
    if (e.stages.empty())
        fail("stages must not be empty");
    std::set<int> seen;
    for (int s : e.stages) {
        if (s < 1 || s > 6)
            fail(fmt::format("stage {} is outside 1..6", s));
        if (!seen.insert(s).second)
            fail(fmt::format("stage {} listed twice", s));
    }
    if (e.tasks_per_session < 1)
        fail("tasks_per_session must be >= 1");
    try {
        experiment::check_slider_levels(e.slider_levels, experiment::heavy_sigma);
    } catch (const Error& err) {
        fail(err.what());
    }
    if (c.max_region_radius < 1)
        fail("max_region_radius must be >= 1");
    if (e.region_radius < 1 || e.region_radius > c.max_region_radius)
        fail(fmt::format("region_radius must be in 1..{}", c.max_region_radius));
    if (c.port < 0 || c.port > 65535)
        fail("port out of range");
    if (c.session_ttl_ms < 1)
        fail("session_ttl_ms must be positive");
    if (c.jpeg_quality < 1 || c.jpeg_quality > 100)
        fail("jpeg_quality must be 1..100");
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty())
        return {};
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

void parse_listen(ServerConfig& c, const std::string& listen) {
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos)
        throw Error(ErrorKind::validation, fmt::format("config: listen '{}' must be host:port", listen));
    c.host = listen.substr(0, colon);
    try {
        c.port = std::stoi(listen.substr(colon + 1));
    } catch (const std::exception&) {
        throw Error(ErrorKind::validation, fmt::format("config: bad port in '{}'", listen));
    }
}

std::vector<double> parse_levels(const std::string& s) {
    std::vector<double> levels;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            levels.push_back(std::stod(item, &used));
            if (used != item.size())
                throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(ErrorKind::validation, fmt::format("config: bad slider level '{}'", item));
        }
    }
    return levels;
}

} // namespace

ServerConfig config_from_json(const json& j, const fs::path& base) {
    ServerConfig c;
    try {
        auto& e = c.experiment;
        e.experiment_id = j.at("experiment_id").get<std::string>();
        e.stages = j.value("stages", e.stages);
        e.tasks_per_session = j.value("tasks_per_session", e.tasks_per_session);
        e.seed = j.value("seed", e.seed);
        e.region_radius = j.value("region_radius", e.region_radius);
        e.slider_levels = j.value("slider_levels", e.slider_levels);

        c.corpus = resolve(base, j.at("corpus").get<std::string>());
        c.log_dir = resolve(base, j.value("log_dir", std::string("var/log")));
        c.cache_dir = resolve(base, j.value("cache_dir", std::string("var/cache")));
        c.instruments = resolve(base, j.value("instruments", std::string()));
        c.static_dir = resolve(base, j.value("static_dir", std::string()));
        if (j.contains("listen"))
            parse_listen(c, j.at("listen").get<std::string>());
        c.max_region_radius = j.value("max_region_radius", c.max_region_radius);
        c.admin_token = j.value("admin_token", c.admin_token);
        c.session_ttl_ms = j.value("session_ttl_ms", c.session_ttl_ms);
        c.jpeg_quality = j.value("jpeg_quality", c.jpeg_quality);
        c.fsync = j.value("fsync", c.fsync);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::validation, fmt::format("config: {}", e.what()));
    }
    return c;
}

ServerConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::io, fmt::format("cannot open config {}", path.string()));
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::validation, fmt::format("{}: {}", path.string(), e.what()));
    }
    return config_from_json(j, fs::absolute(path).parent_path());
}

std::optional<std::string> process_env(const char* name) {
    if (const char* v = std::getenv(name))
        return std::string(v);
    return std::nullopt;
}

void apply_env_overrides(ServerConfig& c, const EnvLookup& env) {
    if (auto v = env("VEILMOD_LISTEN"))
        parse_listen(c, *v);
    if (auto v = env("VEILMOD_CORPUS"))
        c.corpus = *v;
    if (auto v = env("VEILMOD_LOG_DIR"))
        c.log_dir = *v;
    if (auto v = env("VEILMOD_CACHE_DIR"))
        c.cache_dir = *v;
    if (auto v = env("VEILMOD_MAX_REGION_RADIUS")) {
        try {
            c.max_region_radius = std::stoi(*v);
        } catch (const std::exception&) {
            throw Error(ErrorKind::validation, fmt::format("VEILMOD_MAX_REGION_RADIUS '{}' is not an integer", *v));
        }
    }
    if (auto v = env("VEILMOD_SLIDER_LEVELS"))
        c.experiment.slider_levels = parse_levels(*v);
    if (auto v = env("VEILMOD_ADMIN_TOKEN"))
        c.admin_token = *v;
}

} // namespace veilmod::server
