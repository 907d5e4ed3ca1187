#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace veilmod::corpus {

enum class Category { sex_nudity, graphic, safe };
enum class Realism { realistic, synthetic };

inline constexpr std::array<Category, 3> all_categories{Category::sex_nudity, Category::graphic, Category::safe};
inline constexpr std::array<Realism, 2> all_realisms{Realism::realistic, Realism::synthetic};

std::string_view to_string(Category c);
std::string_view to_string(Realism r);
std::optional<Category> parse_category(std::string_view s);
std::optional<Realism> parse_realism(std::string_view s);

inline std::size_t index_of(Category c) { return static_cast<std::size_t>(c); }
inline std::size_t index_of(Realism r) { return static_cast<std::size_t>(r); }

struct ImageRecord {
    std::string id;
    std::string file_path; // relative to the corpus root
    Category category = Category::safe;
    Realism realism = Realism::realistic;
    int width = 0;
    int height = 0;

    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

// category x realism tally
struct CountTable {
    std::array<std::array<std::size_t, 2>, 3> cells{};

    std::size_t at(Category c, Realism r) const { return cells[index_of(c)][index_of(r)]; }
    std::size_t row_total(Category c) const;
    std::size_t column_total(Realism r) const;
    std::size_t total() const;

    CountTable& operator+=(const CountTable& other);
    friend bool operator==(const CountTable&, const CountTable&) = default;
};

// Ids are restricted to [A-Za-z0-9._-] so they are safe in URLs and cache paths.
bool is_valid_image_id(std::string_view id);

class Corpus {
public:
    Corpus() = default;
    // Validates id uniqueness/syntax; throws schema errors.
    Corpus(std::filesystem::path root, std::vector<ImageRecord> records);

    const std::filesystem::path& root() const { return root_; }
    const std::vector<ImageRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    const ImageRecord* find(std::string_view id) const;
    std::filesystem::path image_path(const ImageRecord& record) const { return root_ / record.file_path; }

    const CountTable& counts() const { return counts_; }

    friend bool operator==(const Corpus& a, const Corpus& b) { return a.records_ == b.records_; }

private:
    std::filesystem::path root_;
    std::vector<ImageRecord> records_;
    std::unordered_map<std::string, std::size_t> by_id_;
    CountTable counts_;
};

// Manifest: UTF-8 text, tab-separated, header line "id\tpath\tcategory\trealism",
// '#' comment lines and blank lines ignored. Paths are relative to the manifest.
Corpus ingest_manifest(const std::filesystem::path& manifest_path);

// Same as ingest_manifest but skips image decoding; width/height stay 0.
Corpus parse_manifest(const std::filesystem::path& manifest_path);

std::string format_manifest(const Corpus& corpus);
void export_manifest(const Corpus& corpus, const std::filesystem::path& manifest_path);

// Fresh tally over the records.
CountTable category_counts(const Corpus& corpus);

// Records of b appended to a; ids must stay unique. Keeps a's root.
Corpus concat(const Corpus& a, const Corpus& b);

// Deterministic in (corpus, n, seed, balance). With balance the per-category
// counts are as even as the corpus allows (differ by at most one whenever
// every category holds enough records).
std::vector<ImageRecord> sample_task_set(const Corpus& corpus, std::size_t n, std::uint64_t seed, bool balance);

std::string format_count_table(const CountTable& table);

} // namespace veilmod::corpus
