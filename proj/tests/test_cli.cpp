#include <doctest.h>

#include <sys/wait.h>

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "support.hpp"
#include "veilmod/corpus/corpus.hpp"
#include "veilmod/corpus/placeholder.hpp"
#include "veilmod/server/event_log.hpp"

using namespace veilmod;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

Run cli(const vt::TempDir& tmp, const std::string& args) {
    const auto out = tmp.path / "stdout.txt", err = tmp.path / "stderr.txt";
    const auto cmd = fmt::format("'{}' {} >'{}' 2>'{}'", VEILMOD_CLI, args, out.string(), err.string());
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

corpus::CountTable tiny_counts() {
    corpus::CountTable t;
    t.cells = {{{1, 0}, {0, 1}, {1, 0}}};
    return t;
}

} // namespace

TEST_CASE("cli: ingest prints the count table") {
    vt::TempDir tmp;
    const auto r = cli(tmp, fmt::format("ingest --manifest {} --out {}", q(vt::fixture_manifest()), q(tmp.path / "c")));
    REQUIRE(r.code == 0);
    CHECK(r.out == corpus::format_count_table(corpus::reference_distribution()));
    CHECK(r.out.find("785") != std::string::npos);
    CHECK(corpus::ingest_manifest(tmp.path / "c" / "manifest.tsv").size() == 785);
}

TEST_CASE("cli: ingest failures map to exit codes") {
    vt::TempDir tmp;
    const std::string header = "id\tpath\tcategory\trealism\n";
    spit(tmp.path / "bad.tsv", header + "a1\ta.png\tnsfw\trealistic\n");
    auto r = cli(tmp, fmt::format("ingest --manifest {} --out {}", q(tmp.path / "bad.tsv"), q(tmp.path / "o")));
    CHECK(r.code == 2);
    CHECK(r.err.find("a1") != std::string::npos);

    spit(tmp.path / "missing.tsv", header + "a1\tnope.png\tsafe\trealistic\n");
    r = cli(tmp, fmt::format("ingest --manifest {} --out {}", q(tmp.path / "missing.tsv"), q(tmp.path / "o")));
    CHECK(r.code == 1);

    spit(tmp.path / "empty.tsv", header);
    r = cli(tmp, fmt::format("ingest --manifest {} --out {}", q(tmp.path / "empty.tsv"), q(tmp.path / "o")));
    CHECK(r.code == 2);
    CHECK(r.err.find("empty corpus") != std::string::npos);

    CHECK(cli(tmp, "ingest").code == 2);
    CHECK(cli(tmp, "frobnicate").code == 2);
}

TEST_CASE("cli: prewarm is idempotent") {
    vt::TempDir tmp;
    corpus::write_placeholder_corpus(tmp.path / "corpus", tiny_counts(), 2);
    const auto args = fmt::format("prewarm --corpus {} --sigmas 7,14", q(tmp.path / "corpus"));
    auto r = cli(tmp, args);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("3 images, 6 new renditions") != std::string::npos);

    std::vector<fs::file_time_type> stamps;
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(tmp.path / "corpus" / "cache"))
        if (e.is_regular_file()) {
            ++files;
            stamps.push_back(e.last_write_time());
        }
    CHECK(files == 6);

    r = cli(tmp, args);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("3 images, 0 new renditions") != std::string::npos);
    std::vector<fs::file_time_type> again;
    for (const auto& e : fs::recursive_directory_iterator(tmp.path / "corpus" / "cache"))
        if (e.is_regular_file())
            again.push_back(e.last_write_time());
    CHECK(again == stamps);

    r = cli(tmp, fmt::format("prewarm --corpus {} --sigmas -1", q(tmp.path / "corpus")));
    CHECK(r.code == 2);
    CHECK(r.err.find("usage") != std::string::npos);
}

TEST_CASE("cli: report exit codes and partial tail warning") {
    vt::TempDir tmp;
    const auto dir = tmp.path / "log";
    experiment::ExperimentMeta meta;
    meta.experiment_id = "cli";
    server::write_meta(dir, meta);
    spit(dir / server::event_log_name, "");
    auto r = cli(tmp, fmt::format("report --log {}", q(dir)));
    CHECK(r.code == 3);
    CHECK(r.err.find("no data") != std::string::npos);

    CHECK(cli(tmp, fmt::format("report --log {}", q(tmp.path / "absent"))).code == 1);
    CHECK(cli(tmp, fmt::format("report --log {} --format xml", q(dir))).code == 2);
}

TEST_CASE("cli: simulate then report") {
    vt::TempDir tmp;
    corpus::CountTable t;
    t.cells = {{{2, 2}, {2, 2}, {2, 2}}};
    corpus::write_placeholder_corpus(tmp.path / "corpus", t, 4);
    const nlohmann::json config = {{"experiment_id", "clisim"}, {"corpus", "corpus"},  {"stages", {2, 5}},
                                   {"tasks_per_session", 3},    {"log_dir", "log"},   {"cache_dir", "cache"},
                                   {"admin_token", "x"},        {"fsync", false}};
    spit(tmp.path / "exp.json", config.dump());
    auto r = cli(tmp, fmt::format("simulate --experiment {} --workers 2 --trace {}", q(tmp.path / "exp.json"),
                                  q(tmp.path / "trace.jsonl")));
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("2 sessions, 6 responses logged to", 0) == 0);
    CHECK(fs::file_size(tmp.path / "trace.jsonl") > 0);
    const auto live = r.out.substr(r.out.find("\n\n") + 2);

    const auto log_dir = tmp.path / "log" / "clisim";
    r = cli(tmp, fmt::format("report --log {}", q(log_dir)));
    REQUIRE(r.code == 0);
    CHECK(r.out == live);
    CHECK(r.err.empty());

    // simulate a crash mid-append
    const auto file = log_dir / server::event_log_name;
    auto text = slurp(file);
    text.resize(text.size() - 9);
    spit(file, text);
    r = cli(tmp, fmt::format("report --log {} --format csv", q(file)));
    CHECK(r.code == 0);
    CHECK(r.err.find("warning: 1 partial record skipped") != std::string::npos);
}
