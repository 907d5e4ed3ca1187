#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "veilmod/experiment/records.hpp"
#include "veilmod/server/config.hpp"
#include "veilmod/sim/profile.hpp"

namespace veilmod::sim {

// One HTTP exchange as the simulated client saw it.
struct TraceEntry {
    std::string worker_id;
    std::string session_id;
    int stage = 0;
    std::string method;
    std::string target; // path plus query
    int status = 0;
    std::string content_type;
    std::size_t size = 0;
    std::string sha256;
    std::int64_t at_ms = 0;
};

nlohmann::json to_json(const TraceEntry& e);
TraceEntry trace_from_json(const nlohmann::json& j);

struct SimOptions {
    server::ServerConfig config; // port is ignored; an ephemeral port is used
    std::size_t workers = 12;
    AccuracyProfile profile = identity_profile();
    std::int64_t start_ms = 1'700'000'000'000;
};

struct SimResult {
    std::vector<TraceEntry> trace;
    std::string live_report_table; // fetched over HTTP from the admin route
    std::string live_report_csv;
    std::size_t sessions = 0;
    std::size_t responses = 0;
};

// Starts an embedded server on a manual clock and drives the workers one
// after another: worker i (w001, w002, ...) takes stage stages[i % n]. The
// event log must not exist yet. Deterministic in (config, workers, profile).
SimResult run_simulation(const SimOptions& options);

// Privacy gate over a trace: full renditions for stage 2-5 sessions are never
// below the stage sigma, and every served tile matches a server-side reveal
// record with the same session, image and region. Returns one line per breach.
std::vector<std::string> privacy_violations(const std::vector<TraceEntry>& trace,
                                            const std::vector<experiment::LogRecord>& records);

} // namespace veilmod::sim
