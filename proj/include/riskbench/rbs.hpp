#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskbench/corpus.hpp"
#include "riskbench/embedding.hpp"
#include "riskbench/kernels.hpp"
#include "riskbench/similarity.hpp"

namespace riskbench {

struct RbsItem {
    std::string text;
    int frequency = 1;
};

struct RbsCategory {
    std::string name;
    std::vector<RbsItem> items;
};

/// Two-level risk breakdown structure: categories holding generic items.
struct Rbs {
    std::vector<RbsCategory> categories;

    /// {"categories": [{"name": ..., "items": [{"text": ..., "frequency": n}]}]}
    static Rbs from_json(const nlohmann::json& j);
    static Rbs load(const std::filesystem::path& path);
    /// Unique category names, unique item texts, no empty category,
    /// frequencies >= 1.
    void validate() const;

    std::size_t item_count() const;
    /// Items flattened in category order.
    std::vector<std::string> item_texts() const;
    /// Category index of every flattened item.
    std::vector<std::size_t> item_categories() const;
};

struct CoverageRow {
    std::string risk_id;
    std::string text;
    std::size_t item_index = 0;
    std::string best_item;
    std::string best_category;
    double score = 0.0;
    bool covered = false;
    bool used_fallback = false;
    std::string register_category;
};

struct CategoryAgreement {
    std::size_t compared = 0;
    std::size_t agreed = 0;
    std::optional<double> fraction;
};

struct CoverageReport {
    std::string project_id;
    double threshold = 0.6;
    std::vector<CoverageRow> rows;
    std::size_t covered_count = 0;
    double coverage_fraction = 0.0;
    /// Ten 0.1-wide score bins; negative scores land in the first bin.
    std::array<std::size_t, 10> score_histogram{};
    MeanWithCount covered_cost;
    MeanWithCount covered_schedule;
    MeanWithCount uncovered_cost;
    MeanWithCount uncovered_schedule;
    /// Covered risks whose own category label matches the RBS category of
    /// their best item (case-insensitive); risks without a label skipped.
    CategoryAgreement category_agreement;

    nlohmann::json to_json() const;
    static CoverageReport from_json(const nlohmann::json& j);
};

struct CoverageOptions {
    double threshold = 0.6;
    bool use_description = false;
    Parallelism par;
};

/// Best-matches every risk to an RBS item by cosine of embedded texts.
/// Throws EmptyInputError on an empty register.
CoverageReport coverage(const Rbs& rbs, std::span<const RiskItem> register_items, const TextEncoder& encoder,
                        const CoverageOptions& opts = {}, std::string project_id = {});

struct CategoryShare {
    std::string category;
    std::size_t count = 0;
    double fraction = 0.0;
};

/// Fraction of covered risks per RBS category, descending by count, ties
/// in RBS order. Categories with no covered risk are listed with 0.
/// Throws EmptyInputError when nothing is covered.
std::vector<CategoryShare> category_distribution(const Rbs& rbs, std::span<const CoverageReport> reports);

/// Per-project presence counts over RBS item pairs.
struct CooccurrenceMatrix {
    std::vector<std::string> items;
    std::vector<std::size_t> occurrences;  // projects where the item occurs
    std::vector<std::size_t> pair_counts;  // upper triangle i < j, row-major
    std::size_t project_count = 0;

    std::size_t count(std::size_t i, std::size_t j) const;
};

/// Item i occurs in a project iff a covered risk of that project maps to
/// it; count(i, j) is the number of projects where both occur.
CooccurrenceMatrix cooccurrence(const Rbs& rbs, std::span<const CoverageReport> reports);

struct CooccurrencePair {
    std::string item_a;
    std::string item_b;
    std::size_t count = 0;
};

/// All pairs, sorted by count descending then item_a, item_b.
std::vector<CooccurrencePair> ranked_pairs(const CooccurrenceMatrix& matrix);

}  // namespace riskbench
