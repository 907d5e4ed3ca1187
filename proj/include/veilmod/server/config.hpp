#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "veilmod/experiment/report.hpp"

namespace veilmod::server {

// Shared by the server and every admin-cli command. Relative paths in the
// file are resolved against the file's directory.
struct ServerConfig {
    experiment::ExperimentMeta experiment;
    std::filesystem::path corpus;      // manifest file or a corpus directory holding manifest.tsv
    std::filesystem::path log_dir;     // event logs live in <log_dir>/<experiment_id>/
    std::filesystem::path cache_dir;   // blur renditions
    std::filesystem::path instruments; // empty = built-in battery
    std::filesystem::path static_dir;  // optional UI assets
    std::string host = "127.0.0.1";
    int port = 8080;
    int max_region_radius = 200;
    std::string admin_token;
    std::int64_t session_ttl_ms = 4LL * 60 * 60 * 1000;
    int jpeg_quality = 90;
    bool fsync = true;

    std::filesystem::path experiment_log_dir() const { return log_dir / experiment.experiment_id; }
    std::filesystem::path manifest_path() const;
};

// Throws validation error describing the first bad setting.
void check_config(const ServerConfig& config);

ServerConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
ServerConfig load_config(const std::filesystem::path& path);

using EnvLookup = std::function<std::optional<std::string>(const char*)>;
std::optional<std::string> process_env(const char* name);

// VEILMOD_LISTEN (host:port), VEILMOD_CORPUS, VEILMOD_LOG_DIR, VEILMOD_CACHE_DIR,
// VEILMOD_MAX_REGION_RADIUS, VEILMOD_SLIDER_LEVELS (comma list), VEILMOD_ADMIN_TOKEN.
void apply_env_overrides(ServerConfig& config, const EnvLookup& env = process_env);

} // namespace veilmod::server
