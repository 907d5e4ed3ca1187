#include "veilmod/server/event_log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "veilmod/corpus/codec.hpp"
#include "veilmod/error.hpp"

namespace veilmod::server {

namespace fs = std::filesystem;
using experiment::LogRecord;

namespace {

struct ScanResult {
    ReplayResult replay;
    std::size_t valid_bytes = 0; // offset just past the last intact record's content
};

ScanResult scan_log(const fs::path& file) {
    ScanResult out;
    if (!fs::exists(file))
        return out;
    const auto bytes = corpus::read_file(file);
    const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());

    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        const bool final_segment = nl == std::string_view::npos;
        const auto end = final_segment ? text.size() : nl;
        const std::string_view line = text.substr(pos, end - pos);
        const bool last = final_segment || text.find_first_not_of("\n", nl) == std::string_view::npos;

        if (!line.empty()) {
            try {
                LogRecord rec = experiment::parse_record(line);
                const auto expected = out.replay.records.size() + 1;
                if (rec.seq != expected)
                    throw Error(ErrorKind::schema, fmt::format("seq {} where {} was expected", rec.seq, expected));
                out.replay.records.push_back(std::move(rec));
                out.valid_bytes = end;
                out.replay.missing_final_newline = final_segment;
            } catch (const Error& e) {
                if (!last)
                    throw Error(ErrorKind::schema,
                                fmt::format("{}: corrupt record at byte {}: {}", file.string(), pos, e.what()));
                out.replay.partial_skipped = 1;
            }
        }
        if (final_segment)
            break;
        pos = nl + 1;
    }
    return out;
}

void write_all(int fd, std::string_view data, const fs::path& path) {
    while (!data.empty()) {
        const ssize_t n = ::write(fd, data.data(), data.size());
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw Error(ErrorKind::io, fmt::format("write to {} failed: {}", path.string(), std::strerror(errno)));
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

void fsync_dir(const fs::path& dir) {
    const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
    if (fd >= 0) {
        ::fsync(fd);
        ::close(fd);
    }
}

} // namespace

ReplayResult read_event_log(const fs::path& file) {
    if (!fs::exists(file))
        throw Error(ErrorKind::io, fmt::format("event log {} not found", file.string()));
    return scan_log(file).replay;
}

EventLog::EventLog(const fs::path& file, bool durable) : path_(file), durable_(durable) {
    std::error_code ec;
    fs::create_directories(file.parent_path(), ec);
    const bool existed = fs::exists(file);

    ScanResult scan = scan_log(file);
    if (existed && (scan.replay.partial_skipped || scan.replay.missing_final_newline)) {
        // drop the damaged tail, then make sure the last intact record ends in '\n'
        if (::truncate(file.c_str(), static_cast<off_t>(scan.valid_bytes)) != 0)
            throw Error(ErrorKind::io, fmt::format("cannot truncate {}: {}", file.string(), std::strerror(errno)));
    }

    fd_ = ::open(file.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0)
        throw Error(ErrorKind::io, fmt::format("cannot open {}: {}", file.string(), std::strerror(errno)));
    if (scan.valid_bytes > 0 && (scan.replay.partial_skipped || scan.replay.missing_final_newline))
        write_all(fd_, "\n", path_);
    if (durable_) {
        ::fsync(fd_);
        if (!existed)
            fsync_dir(file.parent_path());
    }
    next_seq_ = scan.replay.records.size() + 1;
    recovered_ = std::move(scan.replay);
}

EventLog::~EventLog() {
    if (fd_ >= 0)
        ::close(fd_);
}

LogRecord EventLog::append(experiment::RecordKind kind, const std::string& session_id, std::int64_t at_ms,
                           nlohmann::json payload) {
    std::lock_guard lock(mutex_);
    LogRecord rec{next_seq_, kind, session_id, at_ms, std::move(payload)};
    std::string line = experiment::serialize_record(rec);
    line += '\n';
    write_all(fd_, line, path_);
    if (durable_ && ::fsync(fd_) != 0)
        throw Error(ErrorKind::io, fmt::format("fsync {} failed: {}", path_.string(), std::strerror(errno)));
    ++next_seq_;
    // hand back exactly what a replay of the line would produce
    return experiment::parse_record(std::string_view(line).substr(0, line.size() - 1));
}

std::uint64_t EventLog::last_seq() const {
    std::lock_guard lock(mutex_);
    return next_seq_ - 1;
}

experiment::SessionBook replay(const std::vector<LogRecord>& records) {
    experiment::SessionBook book;
    for (const auto& rec : records) {
        try {
            experiment::apply_record(book, rec);
        } catch (const Error& e) {
            throw Error(ErrorKind::schema, fmt::format("log record seq {} ({}) is inconsistent: {}", rec.seq,
                                                       experiment::to_string(rec.kind), e.what()));
        }
    }
    return book;
}

void write_meta(const fs::path& dir, const experiment::ExperimentMeta& meta) {
    const std::string text = experiment::meta_to_json(meta).dump(2) + "\n";
    corpus::write_file_atomic(dir / meta_file_name,
                              std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

experiment::ExperimentMeta read_meta(const fs::path& dir) {
    const fs::path file = dir / meta_file_name;
    std::ifstream in(file);
    if (!in)
        throw Error(ErrorKind::io, fmt::format("cannot open {}", file.string()));
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::schema, fmt::format("{}: {}", file.string(), e.what()));
    }
    return experiment::meta_from_json(j);
}

std::string render_report(const experiment::SessionBook& book, const experiment::ExperimentMeta& meta,
                          const std::string& format) {
    const auto report = experiment::build_report(book, meta);
    if (format == "csv")
        return experiment::render_csv(report);
    if (format == "table")
        return experiment::render_table(report);
    throw Error(ErrorKind::invalid_parameter, fmt::format("unknown report format '{}' (table|csv)", format));
}

LogReport report_from_log_dir(const fs::path& dir, const std::string& format) {
    const ReplayResult log = read_event_log(dir / event_log_name);
    if (log.records.empty())
        throw Error(ErrorKind::state, fmt::format("no data: {} holds no records", (dir / event_log_name).string()));
    const auto meta = read_meta(dir);
    const auto book = replay(log.records);
    return {render_report(book, meta, format), log.partial_skipped};
}

} // namespace veilmod::server
