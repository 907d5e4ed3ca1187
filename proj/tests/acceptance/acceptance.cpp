// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "support.hpp"
#include "veilmod/blur/blur.hpp"
#include "veilmod/blur/kernel.hpp"
#include "veilmod/blur/reveal.hpp"
#include "veilmod/corpus/corpus.hpp"
#include "veilmod/error.hpp"
#include "veilmod/experiment/session.hpp"
#include "veilmod/server/event_log.hpp"
#include "veilmod/sim/simulate.hpp"
#include "veilmod/survey/scoring.hpp"

using namespace veilmod;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void fail(const std::string& why) {
        if (pass)
            detail = why;
        pass = false;
    }
    void expect(bool ok, const std::string& why) {
        if (!ok)
            fail(why);
    }
};

struct Criterion {
    std::string name;
    double limit_s; // 0 = no runtime bound
    std::function<Outcome()> run;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

// ---- corpus ---------------------------------------------------------------

Outcome corpus_fidelity() {
    Outcome o;
    const auto c = corpus::ingest_manifest(vt::fixture_manifest());
    const auto t = corpus::category_counts(c);
    using corpus::Category;
    using corpus::Realism;
    const std::size_t rows[3] = {300, 239, 246};
    for (auto cat : corpus::all_categories)
        o.expect(t.row_total(cat) == rows[corpus::index_of(cat)],
                 fmt::format("{} has {} images", corpus::to_string(cat), t.row_total(cat)));
    o.expect(t.column_total(Realism::realistic) == 383, "realistic total");
    o.expect(t.column_total(Realism::synthetic) == 402, "synthetic total");
    o.expect(t.total() == 785, fmt::format("total {}", t.total()));
    if (o.pass)
        o.detail = "300/239/246, 383/402, 785";
    return o;
}

// ---- blur -----------------------------------------------------------------

Outcome blur_oracle() {
    Outcome o;
    std::mt19937_64 rng(20240501);
    std::uniform_int_distribution<int> dim(1, 16), ch(0, 1);
    int worst = 0;
    for (int i = 0; i < 50; ++i) {
        const int w = dim(rng), h = dim(rng);
        const auto img = vt::random_image(rng, w, h, ch(rng) ? 4 : 3);
        for (double s : {1.0, 7.0, 14.0}) {
            const int d = vt::max_abs_diff(blur::blur_image(img, s), vt::brute_force_blur(img, s));
            worst = std::max(worst, d);
            o.expect(d <= 1, fmt::format("image {} ({}x{}) sigma {}: max abs error {}", i, w, h, s, d));
        }
    }
    if (o.pass)
        o.detail = fmt::format("50 images x 3 sigmas, max abs error {}", worst);
    return o;
}

Outcome identity_and_constancy() {
    Outcome o;
    std::mt19937_64 rng(7);
    for (int i = 0; i < 20; ++i) {
        const auto img = vt::random_image(rng, 1 + i, 17 - i % 9, i % 2 ? 4 : 3);
        o.expect(blur::blur_image(img, 0.0) == img, fmt::format("sigma 0 altered image {}", i));
    }
    double worst_sum = 0.0;
    for (int k = 1; k <= 40; ++k) {
        const double s = 0.5 * k;
        const auto kernel = blur::build_gaussian_kernel(s);
        double sum = 0.0;
        for (double v : kernel.weights)
            sum += v;
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
        o.expect(std::abs(sum - 1.0) <= 1e-9, fmt::format("kernel sigma {} sums to {:.17g}", s, sum));
        for (int value : {0, 1, 128, 254, 255}) {
            const auto flat = blur::RasterImage::filled(9 + k % 5, 7, k % 2 ? 4 : 3, std::uint8_t(value));
            o.expect(blur::blur_image(flat, s) == flat, fmt::format("constant {} moved at sigma {}", value, s));
        }
    }
    if (o.pass)
        o.detail = fmt::format("kernel sums within {:.1e} of 1 for sigma 0.5..20", worst_sum);
    return o;
}

Outcome compositing() {
    Outcome o;
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> dim(1, 32), count(0, 6), shape(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        const int w = dim(rng), h = dim(rng);
        const auto original = vt::random_image(rng, w, h, trial % 2 ? 4 : 3);
        const auto blurred = blur::blur_image(original, 14.0);
        std::uniform_int_distribution<int> px(-8, w + 8), py(-8, h + 8), ext(1, 14);
        std::vector<blur::RevealRegion> regions;
        std::vector<vt::Circle> circles;
        std::vector<vt::Rect> rects;
        for (int k = count(rng); k > 0; --k) {
            if (shape(rng)) {
                const int cx = px(rng), cy = py(rng), r = ext(rng);
                circles.push_back({cx, cy, r});
                regions.push_back(blur::CircleRegion{cx, cy, r});
            } else {
                const int x = px(rng), y = py(rng), rw = ext(rng), rh = ext(rng);
                rects.push_back({x, y, rw, rh});
                regions.push_back(blur::RectRegion{x, y, rw, rh});
            }
        }
        const auto out = blur::composite_reveal(original, blurred, regions);
        const auto mask = vt::mask_oracle(circles, rects, w, h);
        for (int y = 0; y < h && o.pass; ++y)
            for (int x = 0; x < w; ++x) {
                const auto& src = mask[std::size_t(y) * w + x] ? original : blurred;
                for (int c = 0; c < out.channels; ++c)
                    if (out.at(x, y, c) != src.at(x, y, c)) {
                        o.fail(fmt::format("pair {}: pixel ({},{}) channel {} differs", trial, x, y, c));
                        break;
                    }
            }
    }
    if (o.pass)
        o.detail = "100 pairs bit-exact";
    return o;
}

// ---- stages ---------------------------------------------------------------

Outcome stage_semantics() {
    using experiment::RevealKind;
    using experiment::RevealTool;
    Outcome o;
    const struct {
        double sigma;
        RevealTool tool;
    } table[6] = {{0, RevealTool::none},   {7, RevealTool::none},   {14, RevealTool::none},
                  {14, RevealTool::click}, {14, RevealTool::hover}, {14, RevealTool::slider}};
    for (int id = 1; id <= 6; ++id) {
        const auto s = experiment::make_stage_config(id);
        o.expect(s.sigma == table[id - 1].sigma && s.reveal_tool == table[id - 1].tool,
                 fmt::format("stage {} is sigma {} tool {}", id, s.sigma, experiment::to_string(s.reveal_tool)));
    }

    const auto c = corpus::ingest_manifest(vt::fixture_manifest());
    std::mt19937_64 rng(606);
    std::uniform_int_distribution<int> stage_d(1, 6), kind_d(0, 3), coord(0, 40), rad(1, 30);
    std::uniform_real_distribution<double> sig(0.0, 14.0);
    std::size_t disallowed = 0, rejected = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        const int stage = stage_d(rng);
        const auto s = experiment::start_session("s", "w", stage, c, 3, rng(), 0);
        experiment::RevealEvent e;
        e.image_id = s.tasks[0].image_id;
        e.kind = static_cast<RevealKind>(kind_d(rng));
        if (e.kind == RevealKind::click_reveal || e.kind == RevealKind::hover_start)
            e.region = blur::CircleRegion{coord(rng), coord(rng), rad(rng)};
        if (e.kind == RevealKind::slider_set)
            e.sigma_value = sig(rng);
        if (experiment::reveal_permitted(s.stage.reveal_tool, e.kind))
            continue;
        ++disallowed;
        try {
            experiment::validate_reveal_event(s, e);
        } catch (const Error& err) {
            if (err.kind() == ErrorKind::validation)
                ++rejected;
        }
    }
    o.expect(disallowed > 0 && rejected == disallowed,
             fmt::format("{} of {} disallowed reveals rejected", rejected, disallowed));
    if (o.pass)
        o.detail = fmt::format("matrix exact; {}/{} disallowed reveals rejected", rejected, disallowed);
    return o;
}

// ---- survey ---------------------------------------------------------------

std::vector<int> draw(std::mt19937_64& rng, std::size_t n, int lo, int hi) {
    std::uniform_int_distribution<int> d(lo, hi);
    std::vector<int> v(n);
    for (auto& x : v)
        x = d(rng);
    return v;
}

// Subscale sums by keying, written without the library scorer.
std::pair<int, int> keyed_sums(const survey::Instrument& ins, const std::vector<int>& items) {
    int pos = 0, neg = 0;
    for (std::size_t i = 0; i < items.size(); ++i)
        (ins.items[i].key == survey::Keying::positive ? pos : neg) += items[i];
    return {pos, neg};
}

std::vector<int> place(const survey::Instrument& ins, const std::vector<int>& pos, const std::vector<int>& neg) {
    std::vector<int> out;
    std::size_t p = 0, n = 0;
    for (const auto& item : ins.items)
        out.push_back(item.key == survey::Keying::positive ? pos.at(p++) : neg.at(n++));
    return out;
}

double mean(const std::vector<int>& v) { return double(vt::sum_of(v)) / double(v.size()); }

Outcome survey_bounds() {
    Outcome o;
    const auto& inst = survey::default_instruments();
    std::mt19937_64 rng(10000);
    for (int i = 0; i < 10000; ++i) {
        const auto sp = draw(rng, 12, 1, 5);
        const auto a = survey::score_spane(sp);
        const auto [p, n] = keyed_sums(inst.spane, sp);
        o.expect(a.positive >= 6 && a.positive <= 30 && a.negative >= 6 && a.negative <= 30,
                 fmt::format("SPANE out of range: {} {}", a.positive, a.negative));
        o.expect(a.balance == a.positive - a.negative, "SPANE balance != P - N");
        o.expect(a.positive == p && a.negative == n, "SPANE disagrees with keyed sums");
    }
    for (int i = 0; i < 10000; ++i) {
        const auto pn = draw(rng, 10, 1, 7);
        const auto b = survey::score_panas(pn);
        const auto [pa, na] = keyed_sums(inst.panas, pn);
        o.expect(b.positive_affect >= 5 && b.positive_affect <= 35 && b.negative_affect >= 5 &&
                     b.negative_affect <= 35,
                 "PANAS out of range");
        o.expect(b.positive_affect == pa && b.negative_affect == na, "PANAS disagrees with keyed sums");
    }
    for (int i = 0; i < 10000; ++i) {
        const auto ex = draw(rng, 6, 1, 7);
        const double e = survey::score_exhaustion(ex);
        o.expect(e >= 1.0 && e <= 7.0, fmt::format("exhaustion {} out of range", e));
        o.expect(std::abs(e - mean(ex)) < 1e-12, "exhaustion is not the item mean");
    }
    for (int i = 0; i < 10000; ++i) {
        const auto pe = draw(rng, 6, 1, 7), pu = draw(rng, 6, 1, 7);
        const auto t = survey::score_tam(pe, pu);
        o.expect(t.peou >= 1.0 && t.peou <= 7.0 && t.pu >= 1.0 && t.pu <= 7.0, "TAM out of range");
    }

    // worked examples, checked against the summation oracle
    const std::vector<int> sp_pos{3, 4, 2, 5, 1, 3}, sp_neg{2, 2, 1, 3, 1, 1};
    const auto spane = survey::score_spane(place(inst.spane, sp_pos, sp_neg));
    o.expect(spane.positive == vt::sum_of(sp_pos) && spane.negative == vt::sum_of(sp_neg) &&
                 spane.balance == vt::sum_of(sp_pos) - vt::sum_of(sp_neg) && spane.balance == 8,
             fmt::format("SPANE example gave {}/{}/{}", spane.positive, spane.negative, spane.balance));
    const std::vector<int> pa{4, 2, 6, 1, 7}, na{1, 1, 2, 3, 1};
    const auto panas = survey::score_panas(place(inst.panas, pa, na));
    o.expect(panas.positive_affect == vt::sum_of(pa) && panas.negative_affect == vt::sum_of(na) &&
                 panas.positive_affect == 20 && panas.negative_affect == 8,
             fmt::format("PANAS example gave {}/{}", panas.positive_affect, panas.negative_affect));
    const std::vector<int> peou{2, 3, 4, 5, 6, 7}, pu{1, 2, 3, 4, 5, 6};
    const auto tam = survey::score_tam(peou, pu);
    o.expect(tam.peou == mean(peou) && tam.pu == mean(pu) && tam.peou == 4.5 && tam.pu == 3.5,
             fmt::format("TAM example gave {}/{}", tam.peou, tam.pu));
    if (o.pass)
        o.detail = "4 x 10000 vectors in range; SPANE 18/10/8, PANAS 20/8, TAM 4.5/3.5";
    return o;
}

// ---- end to end -----------------------------------------------------------

struct SimRun {
    sim::SimResult result;
    fs::path log_dir;
    std::vector<experiment::LogRecord> records;
};

class EndToEnd {
public:
    EndToEnd() {
        base_ = server::load_config(vt::fixtures_dir() / ".." / "config" / "example.json");
        base_.cache_dir = tmp_.path / "cache";
        base_.admin_token = "acceptance-admin";
    }

    SimRun run(const std::string& name, std::size_t workers, const sim::AccuracyProfile& profile, bool fsync) {
        sim::SimOptions opt;
        opt.config = base_;
        opt.config.log_dir = tmp_.path / name;
        opt.config.fsync = fsync;
        opt.workers = workers;
        opt.profile = profile;
        SimRun r;
        r.result = sim::run_simulation(opt);
        r.log_dir = opt.config.experiment_log_dir();
        r.records = server::read_event_log(r.log_dir / server::event_log_name).records;
        return r;
    }

    const fs::path& scratch() const { return tmp_.path; }
    const server::ServerConfig& config() const { return base_; }

    // Runs the admin CLI; returns the exit status and fills out/err.
    int cli(const std::string& args, std::string& out, std::string& err) const {
        const auto o = tmp_.path / "cli.out", e = tmp_.path / "cli.err";
        const auto cmd = fmt::format("'{}' {} >'{}' 2>'{}'", VEILMOD_CLI, args, o.string(), e.string());
        const int status = std::system(cmd.c_str());
        out = slurp(o);
        err = slurp(e);
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    // First 12-worker run, shared by the privacy and crash criteria.
    const SimRun& baseline() {
        if (!baseline_)
            baseline_ = run("baseline", 12, sim::identity_profile(), true);
        return *baseline_;
    }

private:
    vt::TempDir tmp_;
    server::ServerConfig base_;
    std::optional<SimRun> baseline_;
};

std::map<int, experiment::StageAccuracy> stage_accuracy(const SimRun& r, const experiment::ExperimentMeta& meta) {
    const auto report = experiment::build_report(server::replay(r.records), meta);
    std::map<int, experiment::StageAccuracy> out;
    for (const auto& s : report.stages)
        out[s.stage.stage_id] = s.accuracy;
    return out;
}

Outcome end_to_end(EndToEnd& e2e) {
    Outcome o;
    const auto& meta = e2e.config().experiment;
    const auto& first = e2e.baseline();
    const auto second = e2e.run("repeat", 12, sim::identity_profile(), true);

    o.expect(first.result.sessions == 12 && first.result.responses == 72,
             fmt::format("{} sessions / {} responses instead of 12 / 72", first.result.sessions,
                         first.result.responses));
    std::map<int, int> per_stage;
    for (const auto& rec : first.records)
        if (rec.kind == experiment::RecordKind::session_started) {
            ++per_stage[rec.payload.at("stage").at("stage_id").get<int>()];
            o.expect(rec.payload.at("tasks").size() == 6, "session without 6 tasks");
        }
    for (int s = 1; s <= 6; ++s)
        o.expect(per_stage[s] == 2, fmt::format("stage {} has {} workers", s, per_stage[s]));

    const auto log_a = slurp(first.log_dir / server::event_log_name);
    const auto log_b = slurp(second.log_dir / server::event_log_name);
    o.expect(!log_a.empty() && log_a == log_b, "event logs differ between runs");

    std::string out, err;
    const int code = e2e.cli(fmt::format("report --log '{}'", first.log_dir.string()), out, err);
    o.expect(code == 0, fmt::format("report exited {}: {}", code, err));
    o.expect(out == first.result.live_report_table, "report from the log differs from the live report");
    const int csv_code = e2e.cli(fmt::format("report --log '{}' --format csv", first.log_dir.string()), out, err);
    o.expect(csv_code == 0 && out == first.result.live_report_csv, "csv report differs from the live csv");

    for (const auto& [stage, acc] : stage_accuracy(first, meta))
        o.expect(acc.overall().q1_accuracy() == 1.0,
                 fmt::format("identity profile: stage {} accuracy {}", stage, acc.overall().q1_accuracy()));

    const auto uniform = sim::load_profile(vt::fixtures_dir() / "profiles" / "uniform_q1.json");
    std::string spread;
    // the 12-worker setup, then 50 workers per stage for a tighter band
    for (const std::size_t workers : {std::size_t(12), std::size_t(300)}) {
        const auto run = e2e.run(fmt::format("uniform{}", workers), workers, uniform, false);
        for (const auto& [stage, acc] : stage_accuracy(run, meta)) {
            const auto all = acc.overall();
            const double p = 1.0 / 3.0, sd = std::sqrt(p * (1 - p) / double(all.n));
            const double z = (all.q1_accuracy() - p) / sd;
            o.expect(std::abs(z) <= 3.0, fmt::format("uniform profile ({} workers): stage {} accuracy {:.3f} (n={}, "
                                                     "z={:.2f})",
                                                     workers, stage, all.q1_accuracy(), all.n, z));
            if (workers == 300)
                spread += fmt::format("{}{:.3f}", spread.empty() ? "" : " ", all.q1_accuracy());
        }
    }
    if (o.pass)
        o.detail = fmt::format("logs identical ({} bytes), report == live, identity 1.0, uniform n=300/stage: {}",
                               log_a.size(), spread);
    return o;
}

Outcome privacy_gate(EndToEnd& e2e) {
    Outcome o;
    const auto& run = e2e.baseline();
    const auto& trace = run.result.trace;
    std::size_t tiles = 0, obfuscated = 0;
    for (const auto& t : trace) {
        if (t.method != "GET" || t.status != 200 || t.target.rfind("/api/images/", 0) != 0)
            continue;
        if (t.target.find("/tile?") != std::string::npos)
            ++tiles;
        else if (t.stage >= 2 && t.stage <= 5)
            ++obfuscated;
    }
    o.expect(tiles > 0 && obfuscated > 0, fmt::format("trace is vacuous: {} tiles, {} stage 2-5 images", tiles,
                                                      obfuscated));
    const auto breaches = sim::privacy_violations(trace, run.records);
    for (const auto& b : breaches)
        o.fail(b);
    if (o.pass)
        o.detail = fmt::format("{} exchanges checked: {} stage 2-5 renditions, {} tiles, 0 breaches", trace.size(),
                               obfuscated, tiles);
    return o;
}

Outcome crash_tolerance(EndToEnd& e2e) {
    Outcome o;
    const auto& run = e2e.baseline();
    const auto intact = slurp(run.log_dir / server::event_log_name);
    const auto last_start = intact.rfind('\n', intact.size() - 2) + 1;
    const std::size_t last_len = intact.size() - last_start;
    int cases = 0;
    for (const double cut : {0.1, 0.5, 0.9}) {
        const fs::path dir = e2e.scratch() / fmt::format("crash{}", cases++);
        fs::create_directories(dir);
        fs::copy_file(run.log_dir / server::meta_file_name, dir / server::meta_file_name);
        spit(dir / server::event_log_name,
             intact.substr(0, last_start + std::max<std::size_t>(1, std::size_t(double(last_len) * cut))));

        const auto read = server::read_event_log(dir / server::event_log_name);
        o.expect(read.partial_skipped == 1, "damaged tail not detected");
        o.expect(read.records.size() + 1 == run.records.size(), "more than the final record was lost");
        for (std::size_t i = 0; i < read.records.size() && o.pass; ++i)
            o.expect(experiment::serialize_record(read.records[i]) == experiment::serialize_record(run.records[i]),
                     fmt::format("record {} changed", i + 1));

        std::string out, err;
        const int code = e2e.cli(fmt::format("report --log '{}'", dir.string()), out, err);
        o.expect(code == 0, fmt::format("report exited {} on a truncated log", code));
        o.expect(!out.empty(), "report printed nothing");
        o.expect(err.find("warning: 1 partial record skipped") != std::string::npos, "no warning printed");
    }
    if (o.pass)
        o.detail = fmt::format("{} cut points: 1 record lost, report exit 0 with warning", cases);
    return o;
}

} // namespace

int main() {
    EndToEnd e2e;
    const std::vector<Criterion> criteria{
        {"corpus fidelity", 5, corpus_fidelity},
        {"blur oracle equivalence", 30, blur_oracle},
        {"identity and constancy", 0, identity_and_constancy},
        {"compositing exactness", 0, compositing},
        {"stage semantics", 0, stage_semantics},
        {"survey score bounds", 0, survey_bounds},
        {"end-to-end determinism", 60, [&] { return end_to_end(e2e); }},
        {"privacy gate", 0, [&] { return privacy_gate(e2e); }},
        {"crash tolerance", 0, [&] { return crash_tolerance(e2e); }},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.fail(fmt::format("threw: {}", e.what()));
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_s > 0 && secs >= c.limit_s)
            o.fail(fmt::format("took {:.1f} s, limit {:.0f} s", secs, c.limit_s));
        failed += !o.pass;
        std::cout << fmt::format("{} {:<26} {:6.2f}s  {}\n", o.pass ? "PASS" : "FAIL", c.name, secs, o.detail);
    }
    std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
    return failed ? 1 : 0;
}
