#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace riskbench {

/// Qualitative High/Medium/Low rating.
enum class Rating { Unset, Low, Medium, High };

std::string_view to_string(Rating r);
std::optional<Rating> parse_rating(std::string_view text);

struct Assessment {
    std::optional<int> probability_band;  // 1..5
    std::optional<int> cost_band;
    std::optional<int> schedule_band;
    Rating qualitative_cost = Rating::Unset;
    Rating qualitative_schedule = Rating::Unset;
    std::optional<double> raw_probability;  // fraction 0..1
    std::optional<double> raw_cost;         // million USD
    std::optional<double> raw_schedule;     // months

    bool operator==(const Assessment&) const = default;
};

struct RiskItem {
    std::string risk_id;
    std::string name;
    std::string description;
    std::string category_label;
    std::string status_note;
    Assessment assessment;

    bool operator==(const RiskItem&) const = default;
};

struct RegisterSnapshot {
    int ordinal = 0;  // 0 is the initial (ex ante) register
    std::string label;
    std::vector<RiskItem> items;

    bool operator==(const RegisterSnapshot&) const = default;
};

enum class SizeBand { Under500M, From500MTo1B, Over1B };

std::string_view to_string(SizeBand b);
std::optional<SizeBand> parse_size_band(std::string_view text);
SizeBand size_band_for_value(double contract_value_musd);

struct ProjectRecord {
    std::string project_id;
    std::string jurisdiction;
    std::string delivery_method;
    std::string project_type;
    std::optional<SizeBand> size_band;
    std::optional<double> contract_value_musd;
    std::optional<int> award_year;
    std::vector<RegisterSnapshot> snapshots;

    /// Every distinct risk across all snapshots, in first-appearance order,
    /// each carrying its most recent version.
    std::vector<RiskItem> consolidated_register() const;
};

struct Corpus {
    std::vector<ProjectRecord> projects;
    std::string manifest_path;

    const ProjectRecord* find(std::string_view project_id) const;
};

/// Band edges and the qualitative risk matrix used to turn raw assessments
/// into 1-5 Likert bands.
struct ScaleConfig {
    std::array<double, 4> probability_band_edges{0.10, 0.30, 0.50, 0.70};
    std::array<double, 4> cost_band_edges{0.001, 0.005, 0.01, 0.05};  // fraction of project value
    std::array<double, 4> schedule_band_edges{1.0, 3.0, 6.0, 12.0};   // months
    /// risk_matrix[probability_band - 1][impact_band - 1]
    std::array<std::array<Rating, 5>, 5> risk_matrix = default_matrix();

    static std::array<std::array<Rating, 5>, 5> default_matrix();
    static ScaleConfig from_json(const nlohmann::json& j);
    static ScaleConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
    void validate() const;
};

/// Band for `value` given four ascending edges. Intervals are upper
/// inclusive: [0, e1] -> 1, (e1, e2] -> 2, ..., (e4, inf) -> 5.
int band_for(double value, const std::array<double, 4>& edges);

enum class RegisterFormat { Csv, Json };

std::optional<RegisterFormat> format_for_path(const std::filesystem::path& path);

RegisterSnapshot parse_register(std::string_view bytes, RegisterFormat format);
std::string serialize_register(const RegisterSnapshot& snapshot, RegisterFormat format);

/// Fill bands and qualitative ratings from raw values. `project_value_musd`
/// is required when raw_cost is set. Throws ValidationError when no raw
/// field is set.
Assessment normalize_assessment(const Assessment& raw, std::optional<double> project_value_musd,
                                const ScaleConfig& cfg);

Corpus load_corpus(const std::filesystem::path& manifest_path, const ScaleConfig& cfg = {});

}  // namespace riskbench
