#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "veilmod/experiment/records.hpp"
#include "veilmod/experiment/report.hpp"

namespace veilmod::server {

inline constexpr const char* event_log_name = "events.jsonl";
inline constexpr const char* meta_file_name = "experiment.json";

struct ReplayResult {
    std::vector<experiment::LogRecord> records;
    std::size_t partial_skipped = 0; // 0 or 1: an unparsable final line
    bool missing_final_newline = false;
};

// Reads a line-delimited log. Only the final line may be damaged (a crash
// mid-append); it is skipped and counted. Damage anywhere else, or a seq
// that does not continue 1, 2, 3, ..., throws schema error.
ReplayResult read_event_log(const std::filesystem::path& file);

// Append-only writer. Opening replays the existing file, cuts off a damaged
// tail, and continues the sequence. append() returns only after the line is
// written (and fsync'd when durable).
class EventLog {
public:
    EventLog(const std::filesystem::path& file, bool durable);
    ~EventLog();
    EventLog(const EventLog&) = delete;
    EventLog& operator=(const EventLog&) = delete;

    // Records present at open time.
    const ReplayResult& recovered() const { return recovered_; }

    experiment::LogRecord append(experiment::RecordKind kind, const std::string& session_id, std::int64_t at_ms,
                                 nlohmann::json payload);

    std::uint64_t last_seq() const;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    bool durable_;
    int fd_ = -1;
    std::uint64_t next_seq_ = 1;
    ReplayResult recovered_;
    mutable std::mutex mutex_;
};

// Rebuilds session state from records (throws schema error naming the seq of
// the first record that fails validation).
experiment::SessionBook replay(const std::vector<experiment::LogRecord>& records);

void write_meta(const std::filesystem::path& dir, const experiment::ExperimentMeta& meta);
experiment::ExperimentMeta read_meta(const std::filesystem::path& dir);

struct LogReport {
    std::string text;
    std::size_t partial_skipped = 0;
};

// The report a log directory produces; identical directories give
// byte-identical text. format is "table" or "csv".
LogReport report_from_log_dir(const std::filesystem::path& dir, const std::string& format);

std::string render_report(const experiment::SessionBook& book, const experiment::ExperimentMeta& meta,
                          const std::string& format);

} // namespace veilmod::server
