#include "veilmod/survey/scoring.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "veilmod/error.hpp"

namespace veilmod::survey {

using nlohmann::json;

namespace {

void check_items(std::span<const int> items, const Instrument& ins) {
    if (items.size() != ins.items.size())
        throw Error(ErrorKind::validation, fmt::format("{}: expected {} items, got {}", ins.name, ins.items.size(),
                                                       items.size()));
    for (std::size_t i = 0; i < items.size(); ++i)
        if (items[i] < ins.scale_min || items[i] > ins.scale_max)
            throw Error(ErrorKind::validation, fmt::format("{}: item {} is {}, outside {}..{}", ins.name, i + 1,
                                                           items[i], ins.scale_min, ins.scale_max));
}

int keyed_sum(std::span<const int> items, const Instrument& ins, Keying key) {
    int sum = 0;
    for (std::size_t i = 0; i < items.size(); ++i)
        if (ins.items[i].key == key)
            sum += items[i];
    return sum;
}

double mean_score(std::span<const int> items, const Instrument& ins) {
    check_items(items, ins);
    return static_cast<double>(std::accumulate(items.begin(), items.end(), 0)) / static_cast<double>(items.size());
}

std::vector<int> int_list(const json& j, const char* field) {
    if (!j.contains(field))
        throw Error(ErrorKind::validation, fmt::format("survey: missing '{}'", field));
    const auto& v = j.at(field);
    if (!v.is_array())
        throw Error(ErrorKind::validation, fmt::format("survey: '{}' must be an array", field));
    std::vector<int> out;
    for (const auto& x : v) {
        if (!x.is_number_integer() || x.get<long long>() < -1000 || x.get<long long>() > 1000)
            throw Error(ErrorKind::validation, fmt::format("survey: '{}' must hold small integers", field));
        out.push_back(static_cast<int>(x.get<long long>()));
    }
    return out;
}

} // namespace

SpaneScores score_spane(std::span<const int> items, const Instrument& spane) {
    check_items(items, spane);
    SpaneScores s;
    s.positive = keyed_sum(items, spane, Keying::positive);
    s.negative = keyed_sum(items, spane, Keying::negative);
    s.balance = s.positive - s.negative;
    return s;
}

PanasScores score_panas(std::span<const int> items, const Instrument& panas) {
    check_items(items, panas);
    return {keyed_sum(items, panas, Keying::positive), keyed_sum(items, panas, Keying::negative)};
}

double score_exhaustion(std::span<const int> items, const Instrument& exhaustion) {
    return mean_score(items, exhaustion);
}

TamScores score_tam(std::span<const int> peou_items, std::span<const int> pu_items, const Instrument& peou,
                    const Instrument& pu) {
    return {mean_score(peou_items, peou), mean_score(pu_items, pu)};
}

SurveyScores score_survey(const SurveyResponse& r, const InstrumentSet& ins) {
    for (const auto& field : ins.demographics) {
        auto it = r.demographics.find(field.name);
        if (it == r.demographics.end() || it->second.empty())
            throw Error(ErrorKind::validation, fmt::format("demographics: '{}' not answered", field.name));
        if (!field.options.empty() &&
            std::find(field.options.begin(), field.options.end(), it->second) == field.options.end())
            throw Error(ErrorKind::validation,
                        fmt::format("demographics: '{}' is not an option for '{}'", it->second, field.name));
    }
    for (const auto& [name, value] : r.demographics) {
        const bool known = std::any_of(ins.demographics.begin(), ins.demographics.end(),
                                       [&](const DemographicField& f) { return f.name == name; });
        if (!known)
            throw Error(ErrorKind::validation, fmt::format("demographics: unknown field '{}'", name));
    }

    SurveyScores s;
    s.spane = score_spane(r.spane_items, ins.spane);
    s.panas = score_panas(r.panas_items, ins.panas);
    s.exhaustion_mean = score_exhaustion(r.exhaustion_items, ins.exhaustion);
    s.tam = score_tam(r.tam_peou_items, r.tam_pu_items, ins.tam_peou, ins.tam_pu);
    return s;
}

json to_json(const SurveyResponse& r) {
    return {{"demographics", r.demographics},     {"spane_items", r.spane_items},
            {"panas_items", r.panas_items},       {"exhaustion_items", r.exhaustion_items},
            {"tam_peou_items", r.tam_peou_items}, {"tam_pu_items", r.tam_pu_items}};
}

SurveyResponse survey_from_json(const json& j) {
    if (!j.is_object())
        throw Error(ErrorKind::validation, "survey: body must be an object");
    SurveyResponse r;
    if (j.contains("demographics")) {
        const auto& d = j.at("demographics");
        if (!d.is_object())
            throw Error(ErrorKind::validation, "survey: 'demographics' must be an object");
        for (const auto& [k, v] : d.items()) {
            if (!v.is_string())
                throw Error(ErrorKind::validation, fmt::format("survey: demographic '{}' must be a string", k));
            r.demographics[k] = v.get<std::string>();
        }
    }
    r.spane_items = int_list(j, "spane_items");
    r.panas_items = int_list(j, "panas_items");
    r.exhaustion_items = int_list(j, "exhaustion_items");
    r.tam_peou_items = int_list(j, "tam_peou_items");
    r.tam_pu_items = int_list(j, "tam_pu_items");
    return r;
}

json to_json(const SurveyScores& s) {
    return {{"spane_p", s.spane.positive},
            {"spane_n", s.spane.negative},
            {"spane_balance", s.spane.balance},
            {"panas_pa", s.panas.positive_affect},
            {"panas_na", s.panas.negative_affect},
            {"exhaustion_mean", s.exhaustion_mean},
            {"peou_mean", s.tam.peou},
            {"pu_mean", s.tam.pu}};
}

} // namespace veilmod::survey
