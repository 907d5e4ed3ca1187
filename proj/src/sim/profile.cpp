#include "veilmod/sim/profile.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "veilmod/error.hpp"
#include "veilmod/experiment/session.hpp"

namespace veilmod::sim {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorKind::validation, "accuracy profile: " + msg); }

double probability(const json& j, const std::string& where) {
    if (!j.is_number())
        invalid(fmt::format("{} must be a number", where));
    const double p = j.get<double>();
    if (!(p >= 0.0 && p <= 1.0))
        invalid(fmt::format("{} = {} is not a probability", where, p));
    return p;
}

IntRange range(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
        invalid(fmt::format("{} must be [lo, hi] integers", where));
    IntRange r{j[0].get<std::int64_t>(), j[1].get<std::int64_t>()};
    if (r.lo < 0 || r.hi < r.lo)
        invalid(fmt::format("{} needs 0 <= lo <= hi", where));
    return r;
}

template <class F>
void for_categories(const json& obj, const std::string& where, F f) {
    if (!obj.is_object())
        invalid(fmt::format("{} must be an object keyed by category", where));
    for (const auto& [key, value] : obj.items()) {
        const auto c = corpus::parse_category(key);
        if (!c)
            invalid(fmt::format("{}: unknown category '{}'", where, key));
        f(*c, value);
    }
}

} // namespace

StageBehaviour behaviour_from_json(const json& j) {
    StageBehaviour b;
    for (auto c : corpus::all_categories)
        b.q1[corpus::index_of(c)][static_cast<std::size_t>(experiment::answer_for(c))] = 1.0;
    b.approve = {0.0, 0.0, 1.0};
    if (!j.is_object())
        invalid("stage behaviour must be an object");

    if (j.contains("q1")) {
        for_categories(j["q1"], "q1", [&](corpus::Category gold, const json& row) {
            if (!row.is_object())
                invalid("q1 rows must map answers to probabilities");
            std::array<double, 4> probs{};
            for (const auto& [answer, p] : row.items()) {
                const auto a = experiment::parse_q1(answer);
                if (!a)
                    invalid(fmt::format("q1.{}: unknown answer '{}'", corpus::to_string(gold), answer));
                probs[static_cast<std::size_t>(*a)] = probability(p, fmt::format("q1.{}.{}", corpus::to_string(gold), answer));
            }
            const double sum = probs[0] + probs[1] + probs[2] + probs[3];
            if (std::abs(sum - 1.0) > 1e-9)
                invalid(fmt::format("q1.{} sums to {}, not 1", corpus::to_string(gold), sum));
            b.q1[corpus::index_of(gold)] = probs;
        });
    }
    if (j.contains("q2_accuracy"))
        b.q2_accuracy = probability(j["q2_accuracy"], "q2_accuracy");
    if (j.contains("approve"))
        for_categories(j["approve"], "approve", [&](corpus::Category c, const json& p) {
            b.approve[corpus::index_of(c)] = probability(p, fmt::format("approve.{}", corpus::to_string(c)));
        });
    if (j.contains("think_ms"))
        b.think_ms = range(j["think_ms"], "think_ms");
    if (j.contains("clicks"))
        b.clicks = range(j["clicks"], "clicks");
    if (j.contains("hovers"))
        b.hovers = range(j["hovers"], "hovers");
    if (j.contains("hover_ms"))
        b.hover_ms = range(j["hover_ms"], "hover_ms");
    if (j.contains("slider_step_ms"))
        b.slider_step_ms = range(j["slider_step_ms"], "slider_step_ms");
    if (j.contains("slider_stop")) {
        const auto& s = j["slider_stop"];
        if (!s.is_array() || s.size() != 2 || !s[0].is_number() || !s[1].is_number() ||
            s[0].get<double>() > s[1].get<double>())
            invalid("slider_stop must be [lo, hi] sigmas with lo <= hi");
        b.slider_stop = {s[0].get<double>(), s[1].get<double>()};
    }
    if (j.contains("rationale_rate"))
        b.rationale_rate = probability(j["rationale_rate"], "rationale_rate");
    return b;
}

StageBehaviour AccuracyProfile::for_stage(int stage_id) const {
    json merged = document.value("default", json::object());
    const auto key = std::to_string(stage_id);
    if (document.contains("stages") && document["stages"].contains(key))
        merged.merge_patch(document["stages"][key]);
    return behaviour_from_json(merged);
}

AccuracyProfile profile_from_json(const json& j) {
    if (!j.is_object())
        invalid("top level must be an object");
    for (const auto& [key, value] : j.items())
        if (key != "default" && key != "stages" && key != "description")
            invalid(fmt::format("unknown key '{}'", key));
    if (j.contains("stages")) {
        if (!j["stages"].is_object())
            invalid("stages must be an object keyed by stage id");
        for (const auto& [key, value] : j["stages"].items())
            if (key.size() != 1 || key[0] < '1' || key[0] > '6')
                invalid(fmt::format("stage key '{}' is not 1..6", key));
    }
    AccuracyProfile p{j};
    for (int s = 1; s <= 6; ++s)
        p.for_stage(s); // validate every stage up front
    return p;
}

AccuracyProfile load_profile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::io, fmt::format("cannot open profile {}", path.string()));
    const json j = json::parse(in, nullptr, false);
    if (j.is_discarded())
        invalid(fmt::format("{} is not valid JSON", path.string()));
    return profile_from_json(j);
}

AccuracyProfile identity_profile() { return profile_from_json(json::object()); }

} // namespace veilmod::sim
