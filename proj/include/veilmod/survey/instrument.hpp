#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace veilmod::survey {

// Which subscale an item contributes to. SPANE uses positive/negative
// experience, PANAS uses positive/negative affect; unkeyed scales are
// mean-scored over all items.
enum class Keying { none, positive, negative };

struct InstrumentItem {
    std::string text;
    Keying key = Keying::none;
};

struct Instrument {
    std::string name;
    std::string framing;
    int scale_min = 1;
    int scale_max = 7;
    std::vector<InstrumentItem> items;

    std::size_t count(Keying k) const;
};

struct DemographicField {
    std::string name;
    std::string prompt;
    std::vector<std::string> options; // empty = free text
};

struct InstrumentSet {
    std::vector<DemographicField> demographics;
    Instrument spane;
    Instrument panas;
    Instrument exhaustion;
    Instrument tam_peou;
    Instrument tam_pu;
};

// Built-in battery: SPANE 12 items (6/6, 1..5), I-PANAS-SF 10 items (5/5, 1..7),
// emotional exhaustion 6 items (1..7), TAM PEOU and PU 6 items each (1..7).
const InstrumentSet& default_instruments();

// Throws schema error unless SPANE has 12 items split 6/6 on 1..5, PANAS has
// 10 items split 5/5 on 1..7, and every unkeyed scale is non-empty with
// scale_min < scale_max.
void check_instruments(const InstrumentSet& set);

InstrumentSet load_instruments(const std::filesystem::path& path);
InstrumentSet instruments_from_json(const nlohmann::json& j);
nlohmann::json instruments_to_json(const InstrumentSet& set);

} // namespace veilmod::survey
