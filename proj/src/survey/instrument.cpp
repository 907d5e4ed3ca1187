#include "veilmod/survey/instrument.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "veilmod/error.hpp"

namespace veilmod::survey {

namespace {

using nlohmann::json;

Instrument make(std::string name, std::string framing, int lo, int hi,
                std::initializer_list<std::pair<const char*, Keying>> items) {
    Instrument ins{std::move(name), std::move(framing), lo, hi, {}};
    for (const auto& [text, key] : items)
        ins.items.push_back({text, key});
    return ins;
}

InstrumentSet build_defaults() {
    constexpr auto P = Keying::positive;
    constexpr auto N = Keying::negative;
    constexpr auto U = Keying::none;

    InstrumentSet s;
    s.demographics = {
        {"age_band", "What is your age?",
         {"18-24", "25-34", "35-44", "45-54", "55-64", "65+", "prefer not to say"}},
        {"gender", "What is your gender?", {"female", "male", "non-binary", "self-describe", "prefer not to say"}},
        {"race_ethnicity", "Which best describes your race or ethnicity?",
         {"american indian or alaska native", "asian", "black or african american", "hispanic or latino",
          "native hawaiian or other pacific islander", "white", "multiple", "other", "prefer not to say"}},
    };
    s.spane = make("spane",
                   "Think about what you have been experiencing during the moderation task. "
                   "How often did you experience each of the following feelings?",
                   1, 5,
                   {{"Positive", P}, {"Negative", N}, {"Good", P}, {"Bad", N}, {"Pleasant", P}, {"Unpleasant", N},
                    {"Happy", P}, {"Sad", N}, {"Afraid", N}, {"Joyful", P}, {"Angry", N}, {"Contented", P}});
    s.panas = make("panas", "Indicate to what extent you feel this way right now, that is, at the present moment.", 1,
                   7,
                   {{"Upset", N}, {"Hostile", N}, {"Alert", P}, {"Ashamed", N}, {"Inspired", P}, {"Nervous", N},
                    {"Determined", P}, {"Attentive", P}, {"Afraid", N}, {"Active", P}});
    s.exhaustion = make("exhaustion",
                        "Imagine doing this moderation work as your full-time job. "
                        "How much do you agree with each statement?",
                        1, 7,
                        {{"I would feel emotionally drained by this work.", U},
                         {"I would feel used up at the end of a workday.", U},
                         {"I would feel fatigued when I get up in the morning and face another day of this work.", U},
                         {"Working with this content all day would be a strain for me.", U},
                         {"I would feel burned out from this work.", U},
                         {"I would feel frustrated by this job.", U}});
    s.tam_peou = make("tam_peou", "How much do you agree with each statement about the image viewer?", 1, 7,
                      {{"Learning to use the blurred image viewer was easy for me.", U},
                       {"I found it easy to get the viewer to show what I needed to see.", U},
                       {"My interaction with the viewer was clear and understandable.", U},
                       {"I found the viewer flexible to interact with.", U},
                       {"It would be easy for me to become skillful at using the viewer.", U},
                       {"I found the viewer easy to use.", U}});
    s.tam_pu = make("tam_pu", "How much do you agree with each statement about blurring images during moderation?", 1,
                    7,
                    {{"Blurring would let me moderate images more quickly.", U},
                     {"Blurring would improve my moderation performance.", U},
                     {"Blurring would increase my productivity as a moderator.", U},
                     {"Blurring would make moderation more effective.", U},
                     {"Blurring would make moderation easier to do.", U},
                     {"I would find blurring useful in moderation work.", U}});
    return s;
}

std::string_view to_string(Keying k) {
    switch (k) {
    case Keying::positive: return "positive";
    case Keying::negative: return "negative";
    case Keying::none: break;
    }
    return "none";
}

Keying parse_keying(const std::string& s, const std::string& where) {
    if (s == "positive")
        return Keying::positive;
    if (s == "negative")
        return Keying::negative;
    if (s == "none")
        return Keying::none;
    throw Error(ErrorKind::schema, fmt::format("{}: unknown keying '{}'", where, s));
}

void check_keyed(const Instrument& ins, std::size_t items, std::size_t per_key, int lo, int hi) {
    if (ins.items.size() != items || ins.count(Keying::positive) != per_key ||
        ins.count(Keying::negative) != per_key)
        throw Error(ErrorKind::schema,
                    fmt::format("instrument '{}' needs {} items ({} positive, {} negative), has {} ({}/{})", ins.name,
                                items, per_key, per_key, ins.items.size(), ins.count(Keying::positive),
                                ins.count(Keying::negative)));
    if (ins.scale_min != lo || ins.scale_max != hi)
        throw Error(ErrorKind::schema, fmt::format("instrument '{}' must use a {}..{} scale", ins.name, lo, hi));
}

void check_unkeyed(const Instrument& ins) {
    if (ins.items.empty())
        throw Error(ErrorKind::schema, fmt::format("instrument '{}' has no items", ins.name));
    if (ins.scale_min >= ins.scale_max)
        throw Error(ErrorKind::schema, fmt::format("instrument '{}' has an empty scale", ins.name));
    if (ins.count(Keying::none) != ins.items.size())
        throw Error(ErrorKind::schema, fmt::format("instrument '{}' is mean-scored; items must be unkeyed", ins.name));
}

Instrument instrument_from_json(const json& j, const std::string& name) {
    if (!j.is_object())
        throw Error(ErrorKind::schema, fmt::format("instrument '{}' missing", name));
    Instrument ins;
    ins.name = name;
    ins.framing = j.value("framing", "");
    const auto& scale = j.at("scale");
    ins.scale_min = scale.at(0).get<int>();
    ins.scale_max = scale.at(1).get<int>();
    for (const auto& item : j.at("items"))
        ins.items.push_back({item.at("text").get<std::string>(),
                             parse_keying(item.value("key", "none"), fmt::format("instrument '{}'", name))});
    return ins;
}

json instrument_to_json(const Instrument& ins) {
    json items = json::array();
    for (const auto& item : ins.items)
        items.push_back({{"text", item.text}, {"key", to_string(item.key)}});
    return {{"framing", ins.framing}, {"scale", {ins.scale_min, ins.scale_max}}, {"items", items}};
}

} // namespace

std::size_t Instrument::count(Keying k) const {
    return static_cast<std::size_t>(
        std::count_if(items.begin(), items.end(), [k](const InstrumentItem& i) { return i.key == k; }));
}

const InstrumentSet& default_instruments() {
    static const InstrumentSet defaults = build_defaults();
    return defaults;
}

void check_instruments(const InstrumentSet& set) {
    check_keyed(set.spane, 12, 6, 1, 5);
    check_keyed(set.panas, 10, 5, 1, 7);
    check_unkeyed(set.exhaustion);
    check_unkeyed(set.tam_peou);
    check_unkeyed(set.tam_pu);
    for (const auto& field : set.demographics)
        if (field.name.empty())
            throw Error(ErrorKind::schema, "demographic field without a name");
}

InstrumentSet instruments_from_json(const json& j) {
    try {
        InstrumentSet set;
        for (const auto& f : j.at("demographics"))
            set.demographics.push_back({f.at("name").get<std::string>(), f.value("prompt", ""),
                                        f.value("options", std::vector<std::string>{})});
        const auto& ins = j.at("instruments");
        set.spane = instrument_from_json(ins.value("spane", json()), "spane");
        set.panas = instrument_from_json(ins.value("panas", json()), "panas");
        set.exhaustion = instrument_from_json(ins.value("exhaustion", json()), "exhaustion");
        set.tam_peou = instrument_from_json(ins.value("tam_peou", json()), "tam_peou");
        set.tam_pu = instrument_from_json(ins.value("tam_pu", json()), "tam_pu");
        check_instruments(set);
        return set;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::schema, fmt::format("instrument definition: {}", e.what()));
    }
}

json instruments_to_json(const InstrumentSet& set) {
    json demographics = json::array();
    for (const auto& f : set.demographics)
        demographics.push_back({{"name", f.name}, {"prompt", f.prompt}, {"options", f.options}});
    return {{"demographics", demographics},
            {"instruments",
             {{"spane", instrument_to_json(set.spane)},
              {"panas", instrument_to_json(set.panas)},
              {"exhaustion", instrument_to_json(set.exhaustion)},
              {"tam_peou", instrument_to_json(set.tam_peou)},
              {"tam_pu", instrument_to_json(set.tam_pu)}}}};
}

InstrumentSet load_instruments(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::io, fmt::format("cannot open instrument file {}", path.string()));
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::schema, fmt::format("{}: {}", path.string(), e.what()));
    }
    return instruments_from_json(j);
}

} // namespace veilmod::survey
