#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "veilmod/corpus/codec.hpp"
#include "veilmod/corpus/corpus.hpp"
#include "veilmod/corpus/placeholder.hpp"
#include "veilmod/error.hpp"
#include "veilmod/server/api_server.hpp"
#include "veilmod/server/config.hpp"
#include "veilmod/server/event_log.hpp"
#include "veilmod/server/render_cache.hpp"
#include "veilmod/sim/simulate.hpp"

namespace fs = std::filesystem;
using namespace veilmod;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_io = 1;
constexpr int exit_validation = 2;
constexpr int exit_no_data = 3;

int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::io: return exit_io;
    case ErrorKind::state: return exit_no_data;
    default: return exit_validation;
    }
}

server::ServerConfig load_server_config(const fs::path& path) {
    auto config = server::load_config(path);
    server::apply_env_overrides(config);
    server::check_config(config);
    return config;
}

fs::path safe_relative(const std::string& p) {
    const fs::path rel = fs::path(p).lexically_normal();
    if (rel.is_absolute() || rel.empty() || *rel.begin() == "..")
        throw Error(ErrorKind::schema, fmt::format("image path '{}' must stay inside the corpus directory", p));
    return rel;
}

int cmd_ingest(const fs::path& manifest, const fs::path& out) {
    const corpus::Corpus src = corpus::ingest_manifest(manifest);
    fs::create_directories(out);
    const bool in_place = fs::equivalent(fs::absolute(manifest).parent_path(), out);
    if (!in_place) {
        for (const auto& r : src.records()) {
            const fs::path dest = out / safe_relative(r.file_path);
            fs::create_directories(dest.parent_path());
            fs::copy_file(src.image_path(r), dest, fs::copy_options::overwrite_existing);
        }
    }
    corpus::export_manifest(corpus::Corpus(out, src.records()), out / "manifest.tsv");
    std::cout << corpus::format_count_table(src.counts());
    return exit_ok;
}

int cmd_prewarm(const fs::path& corpus_path, const fs::path& cache, std::vector<double> sigmas,
                const std::vector<double>& levels, int quality) {
    sigmas.insert(sigmas.end(), levels.begin(), levels.end());
    for (double s : sigmas)
        if (!(s >= 0.0))
            throw Error(ErrorKind::invalid_parameter, fmt::format("usage: sigma {} must be >= 0", s));
    const fs::path manifest = fs::is_directory(corpus_path) ? corpus_path / "manifest.tsv" : corpus_path;
    const corpus::Corpus c = corpus::parse_manifest(manifest);
    const server::RenderCache rc(c, cache, quality);
    const auto result = rc.prewarm(sigmas);
    for (const auto& f : result.failures)
        std::cerr << "error: " << f << "\n";
    fmt::print("{} images, {} new renditions in {}\n", result.images, result.new_files, cache.string());
    return result.failures.empty() ? exit_ok : exit_io;
}

int cmd_serve(const fs::path& config_path) {
    const auto config = load_server_config(config_path);
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    server::SystemClock clock;
    server::ApiServer api(config, clock);
    const int port = api.bind();
    fmt::print("veilmod: experiment {} listening on {}:{}\n", config.experiment.experiment_id, config.host, port);
    std::fflush(stdout);
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        api.stop();
    });
    api.listen();
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return exit_ok;
}

int cmd_simulate(const fs::path& config_path, std::size_t workers, const std::string& profile_path,
                 const std::string& log_dir, const std::string& trace_path) {
    sim::SimOptions options;
    options.config = load_server_config(config_path);
    if (!log_dir.empty())
        options.config.log_dir = log_dir;
    options.workers = workers;
    if (!profile_path.empty())
        options.profile = sim::load_profile(profile_path);
    const auto result = sim::run_simulation(options);
    if (!trace_path.empty()) {
        std::ofstream out(trace_path);
        for (const auto& e : result.trace)
            out << sim::to_json(e).dump() << '\n';
        if (!out)
            throw Error(ErrorKind::io, fmt::format("cannot write trace {}", trace_path));
    }
    fmt::print("{} sessions, {} responses logged to {}\n\n", result.sessions, result.responses,
               options.config.experiment_log_dir().string());
    std::cout << result.live_report_table;
    return exit_ok;
}

int cmd_report(fs::path log, const std::string& format) {
    if (fs::is_regular_file(log))
        log = log.parent_path();
    if (!fs::exists(log / server::event_log_name))
        throw Error(ErrorKind::io, fmt::format("no {} in {}", server::event_log_name, log.string()));
    const auto report = server::report_from_log_dir(log, format);
    if (report.partial_skipped)
        std::cerr << fmt::format("warning: {} partial record skipped\n", report.partial_skipped);
    std::cout << report.text;
    return exit_ok;
}

int cmd_fixture(const fs::path& out, std::uint64_t seed) {
    const auto c = corpus::write_placeholder_corpus(out, corpus::reference_distribution(), seed);
    std::cout << corpus::format_count_table(c.counts());
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"veilmod: obfuscated image moderation experiments"};
    app.require_subcommand(1);
    int code = exit_ok;

    auto* ingest = app.add_subcommand("ingest", "Validate a manifest and write a corpus directory");
    std::string manifest, out;
    ingest->add_option("--manifest", manifest, "TSV manifest (id, path, category, realism)")->required();
    ingest->add_option("--out", out, "Corpus directory to write")->required();

    auto* prewarm = app.add_subcommand("prewarm", "Precompute blurred renditions");
    std::string corpus_dir, cache_dir, prewarm_config;
    std::vector<double> sigmas, levels;
    int quality = 90;
    prewarm->add_option("--corpus", corpus_dir, "Corpus directory or manifest");
    prewarm->add_option("--cache", cache_dir, "Cache directory (default <corpus>/cache)");
    prewarm->add_option("--config", prewarm_config, "Take corpus, cache and levels from a server config");
    prewarm->add_option("--sigmas", sigmas, "Comma-separated sigmas")->delimiter(',');
    prewarm->add_option("--levels", levels, "Slider levels to add")->delimiter(',');
    prewarm->add_option("--quality", quality, "JPEG quality")->check(CLI::Range(1, 100));

    auto* serve = app.add_subcommand("serve", "Run the HTTP server");
    std::string serve_config;
    serve->add_option("--config", serve_config, "Server config (JSON)")->required();

    auto* simulate = app.add_subcommand("simulate", "Drive scripted workers through an embedded server");
    std::string sim_config, profile, sim_log, trace;
    std::size_t workers = 12;
    simulate->add_option("--experiment,--config", sim_config, "Experiment/server config (JSON)")->required();
    simulate->add_option("--workers", workers, "Number of workers")->check(CLI::PositiveNumber);
    simulate->add_option("--accuracy-profile", profile, "Worker behaviour profile (JSON)");
    simulate->add_option("--log-dir", sim_log, "Override the config's log_dir");
    simulate->add_option("--trace", trace, "Write the HTTP trace as JSON lines");

    auto* report = app.add_subcommand("report", "Report from an experiment log directory");
    std::string log_dir, format = "table";
    report->add_option("--log", log_dir, "Experiment log directory")->required();
    report->add_option("--format", format, "table or csv")->check(CLI::IsMember({"table", "csv"}));

    auto* fixture = app.add_subcommand("fixture", "Write the placeholder 785-image corpus");
    std::string fixture_out;
    std::uint64_t fixture_seed = 20220101;
    fixture->add_option("--out", fixture_out, "Corpus directory")->required();
    fixture->add_option("--seed", fixture_seed, "Generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_validation;
    }

    try {
        if (*ingest) {
            code = cmd_ingest(manifest, out);
        } else if (*prewarm) {
            std::vector<double> lv = levels;
            fs::path corpus_path = corpus_dir, cache = cache_dir;
            if (!prewarm_config.empty()) {
                const auto config = load_server_config(prewarm_config);
                if (corpus_path.empty())
                    corpus_path = config.manifest_path();
                if (cache.empty())
                    cache = config.cache_dir;
                if (lv.empty() && std::count(config.experiment.stages.begin(), config.experiment.stages.end(), 6))
                    lv = config.experiment.slider_levels;
                quality = config.jpeg_quality;
            }
            if (corpus_path.empty())
                throw Error(ErrorKind::invalid_parameter, "usage: --corpus or --config is required");
            if (sigmas.empty() && lv.empty())
                throw Error(ErrorKind::invalid_parameter, "usage: give --sigmas and/or --levels");
            if (cache.empty())
                cache = (fs::is_directory(corpus_path) ? corpus_path : corpus_path.parent_path()) / "cache";
            code = cmd_prewarm(corpus_path, cache, sigmas, lv, quality);
        } else if (*serve) {
            code = cmd_serve(serve_config);
        } else if (*simulate) {
            code = cmd_simulate(sim_config, workers, profile, sim_log, trace);
        } else if (*report) {
            code = cmd_report(log_dir, format);
        } else if (*fixture) {
            code = cmd_fixture(fixture_out, fixture_seed);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_io;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_io;
    }
    return code;
}
