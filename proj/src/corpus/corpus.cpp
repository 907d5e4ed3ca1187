#include "veilmod/corpus/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "veilmod/corpus/codec.hpp"
#include "veilmod/error.hpp"

namespace veilmod::corpus {

namespace fs = std::filesystem;

std::string_view to_string(Category c) {
    switch (c) {
    case Category::sex_nudity: return "sex_nudity";
    case Category::graphic: return "graphic";
    case Category::safe: return "safe";
    }
    return "?";
}

std::string_view to_string(Realism r) {
    return r == Realism::realistic ? "realistic" : "synthetic";
}

std::optional<Category> parse_category(std::string_view s) {
    for (Category c : all_categories)
        if (s == to_string(c))
            return c;
    return std::nullopt;
}

std::optional<Realism> parse_realism(std::string_view s) {
    for (Realism r : all_realisms)
        if (s == to_string(r))
            return r;
    return std::nullopt;
}

std::size_t CountTable::row_total(Category c) const {
    const auto& row = cells[index_of(c)];
    return row[0] + row[1];
}

std::size_t CountTable::column_total(Realism r) const {
    std::size_t n = 0;
    for (const auto& row : cells)
        n += row[index_of(r)];
    return n;
}

std::size_t CountTable::total() const {
    return column_total(Realism::realistic) + column_total(Realism::synthetic);
}

CountTable& CountTable::operator+=(const CountTable& other) {
    for (std::size_t i = 0; i < cells.size(); ++i)
        for (std::size_t j = 0; j < cells[i].size(); ++j)
            cells[i][j] += other.cells[i][j];
    return *this;
}

bool is_valid_image_id(std::string_view id) {
    if (id.empty() || id.size() > 128 || id == "." || id == "..")
        return false;
    return std::all_of(id.begin(), id.end(), [](char ch) {
        return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '.' ||
               ch == '_' || ch == '-';
    });
}

Corpus::Corpus(fs::path root, std::vector<ImageRecord> records) : root_(std::move(root)), records_(std::move(records)) {
    by_id_.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& rec = records_[i];
        if (!is_valid_image_id(rec.id))
            throw Error(ErrorKind::schema, fmt::format("record '{}': id must match [A-Za-z0-9._-]+", rec.id));
        if (!by_id_.emplace(rec.id, i).second)
            throw Error(ErrorKind::schema, fmt::format("record '{}': duplicate id", rec.id));
        ++counts_.cells[index_of(rec.category)][index_of(rec.realism)];
    }
}

const ImageRecord* Corpus::find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &records_[it->second];
}

namespace {

constexpr std::string_view manifest_header = "id\tpath\tcategory\trealism";

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos)
            break;
        start = tab + 1;
    }
    return fields;
}

} // namespace

Corpus parse_manifest(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in)
        throw Error(ErrorKind::io, fmt::format("cannot open manifest {}", manifest_path.string()));

    std::vector<ImageRecord> records;
    std::string line;
    bool saw_header = false;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line.front() == '#')
            continue;
        if (!saw_header) {
            if (line != manifest_header)
                throw Error(ErrorKind::schema,
                            fmt::format("{}:{}: expected header '{}'", manifest_path.string(), line_no,
                                        "id<TAB>path<TAB>category<TAB>realism"));
            saw_header = true;
            continue;
        }
        const auto f = split_tabs(line);
        if (f.size() != 4)
            throw Error(ErrorKind::schema, fmt::format("{}:{}: expected 4 tab-separated fields, got {}",
                                                       manifest_path.string(), line_no, f.size()));
        const auto category = parse_category(f[2]);
        if (!category)
            throw Error(ErrorKind::schema,
                        fmt::format("record '{}' (line {}): unknown category '{}' (expected sex_nudity|graphic|safe)",
                                    f[0], line_no, f[2]));
        const auto realism = parse_realism(f[3]);
        if (!realism)
            throw Error(ErrorKind::schema,
                        fmt::format("record '{}' (line {}): unknown realism '{}' (expected realistic|synthetic)", f[0],
                                    line_no, f[3]));
        if (f[1].empty())
            throw Error(ErrorKind::schema, fmt::format("record '{}' (line {}): empty path", f[0], line_no));
        records.push_back({f[0], f[1], *category, *realism, 0, 0});
    }
    if (in.bad())
        throw Error(ErrorKind::io, fmt::format("read error on {}", manifest_path.string()));
    if (records.empty())
        throw Error(ErrorKind::schema, fmt::format("{}: empty corpus", manifest_path.string()));

    return Corpus(manifest_path.parent_path(), std::move(records));
}

Corpus ingest_manifest(const fs::path& manifest_path) {
    Corpus parsed = parse_manifest(manifest_path);
    std::vector<ImageRecord> records = parsed.records();
    for (auto& rec : records) {
        const fs::path file = parsed.root() / rec.file_path;
        if (!fs::exists(file))
            throw Error(ErrorKind::io, fmt::format("record '{}': image file {} not found", rec.id, file.string()));
        try {
            const auto img = decode_image_file(file);
            rec.width = img.width;
            rec.height = img.height;
        } catch (const Error& e) {
            throw Error(e.kind(), fmt::format("record '{}': {}", rec.id, e.what()));
        }
    }
    return Corpus(parsed.root(), std::move(records));
}

std::string format_manifest(const Corpus& corpus) {
    std::string out;
    out += manifest_header;
    out += '\n';
    for (const auto& rec : corpus.records())
        out += fmt::format("{}\t{}\t{}\t{}\n", rec.id, rec.file_path, to_string(rec.category), to_string(rec.realism));
    return out;
}

void export_manifest(const Corpus& corpus, const fs::path& manifest_path) {
    const std::string text = format_manifest(corpus);
    write_file_atomic(manifest_path,
                      std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

CountTable category_counts(const Corpus& corpus) {
    CountTable t;
    for (const auto& rec : corpus.records())
        ++t.cells[index_of(rec.category)][index_of(rec.realism)];
    return t;
}

Corpus concat(const Corpus& a, const Corpus& b) {
    std::vector<ImageRecord> records = a.records();
    records.insert(records.end(), b.records().begin(), b.records().end());
    return Corpus(a.root(), std::move(records));
}

std::vector<ImageRecord> sample_task_set(const Corpus& corpus, std::size_t n, std::uint64_t seed, bool balance) {
    if (n < 1 || n > corpus.size())
        throw Error(ErrorKind::invalid_parameter,
                    fmt::format("task count must be in 1..{}, got {}", corpus.size(), n));

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> chosen;
    chosen.reserve(n);

    if (!balance) {
        std::vector<std::size_t> all(corpus.size());
        for (std::size_t i = 0; i < all.size(); ++i)
            all[i] = i;
        std::shuffle(all.begin(), all.end(), rng);
        chosen.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
    } else {
        std::array<std::vector<std::size_t>, 3> groups;
        for (std::size_t i = 0; i < corpus.size(); ++i)
            groups[index_of(corpus.records()[i].category)].push_back(i);
        for (auto& g : groups)
            std::shuffle(g.begin(), g.end(), rng);

        // round-robin over a seeded category order; the remainder lands on the
        // first categories in that order
        std::array<std::size_t, 3> order{0, 1, 2};
        std::shuffle(order.begin(), order.end(), rng);
        std::array<std::size_t, 3> quota{};
        std::size_t assigned = 0;
        while (assigned < n) {
            for (std::size_t c : order) {
                if (assigned == n)
                    break;
                if (quota[c] < groups[c].size()) {
                    ++quota[c];
                    ++assigned;
                }
            }
        }
        for (std::size_t c = 0; c < groups.size(); ++c)
            chosen.insert(chosen.end(), groups[c].begin(), groups[c].begin() + static_cast<std::ptrdiff_t>(quota[c]));
        std::shuffle(chosen.begin(), chosen.end(), rng);
    }

    std::vector<ImageRecord> out;
    out.reserve(n);
    for (std::size_t i : chosen)
        out.push_back(corpus.records()[i]);
    return out;
}

std::string format_count_table(const CountTable& t) {
    std::string out = fmt::format("{:<16}{:>11}{:>11}{:>8}\n", "category", "realistic", "synthetic", "total");
    for (Category c : all_categories)
        out += fmt::format("{:<16}{:>11}{:>11}{:>8}\n", to_string(c), t.at(c, Realism::realistic),
                           t.at(c, Realism::synthetic), t.row_total(c));
    out += fmt::format("{:<16}{:>11}{:>11}{:>8}\n", "total", t.column_total(Realism::realistic),
                       t.column_total(Realism::synthetic), t.total());
    return out;
}

} // namespace veilmod::corpus
