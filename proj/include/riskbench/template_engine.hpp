#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskbench/corpus.hpp"
#include "riskbench/embedding.hpp"
#include "riskbench/kernels.hpp"
#include "riskbench/similarity.hpp"

namespace riskbench {

/// Conjunction of optional project attributes; unset means "all".
struct FilterCriteria {
    std::optional<std::string> project_type;
    std::optional<SizeBand> size_band;
    std::optional<std::string> delivery_method;
    std::optional<std::string> jurisdiction;

    /// "type=highway,size=over_1B,delivery=DBB,location=CA"; a value of
    /// "all" leaves that attribute unset.
    static FilterCriteria parse(std::string_view text);
    /// Criteria selecting projects that share `project`'s value for `key`.
    static FilterCriteria matching(const ProjectRecord& project, GroupKey key);

    bool matches(const ProjectRecord& project) const;
    bool empty() const { return !project_type && !size_band && !delivery_method && !jurisdiction; }
    nlohmann::json to_json() const;
    static FilterCriteria from_json(const nlohmann::json& j);
};

struct FilteredProjects {
    std::vector<ProjectRecord> projects;
    bool small_sample_warning = false;  // fewer than 5 projects selected
};

inline constexpr std::size_t kSmallSampleProjects = 5;

FilteredProjects filter_projects(const Corpus& corpus, const FilterCriteria& criteria);

struct GroupMember {
    std::string project_id;
    std::string risk_id;
    std::string text;
    Assessment assessment;
};

struct RiskGroup {
    std::string seed_project_id;
    std::string seed_risk_id;
    std::vector<GroupMember> members;  // seed first
    std::vector<std::string> source_projects;  // distinct, in first-member order
    double prevalence = 0.0;
    std::string representative_text;
    std::optional<double> avg_probability_band;
    std::optional<double> avg_cost_band;
    std::optional<double> avg_schedule_band;
    std::string category;
    double category_score = 0.0;
};

struct GroupingOptions {
    double threshold = 0.7;
    bool use_description = false;
    Parallelism par;
};

/// Greedy seed clustering: walking projects then risks in order, the first
/// unassigned risk seeds a group and every later unassigned risk whose
/// cosine to the seed reaches the threshold joins it. Fills members,
/// source projects and prevalence; call summarize_group for the rest.
std::vector<RiskGroup> group_risks(std::span<const ProjectRecord> projects, const TextEncoder& encoder,
                                   const GroupingOptions& opts = {});

/// Representative = most frequent normalized member text (ties: smallest
/// normalized text), reported with the spelling of its first occurrence.
/// Band averages skip Unset values.
void summarize_group(RiskGroup& group);

struct Category {
    std::string label;
    std::string description;
};

struct CategorySet {
    std::vector<Category> categories;

    /// {"categories": [{"label": ..., "description": ...}, ...]}
    static CategorySet load(const std::filesystem::path& path);
    void validate() const;
};

struct Classification {
    std::string label;
    std::size_t index = 0;
    double score = 0.0;
    bool all_oov = false;
};

/// Argmax cosine between a risk text and each category's text (label plus
/// description, or label only). Ties go to the earlier category.
class RiskClassifier {
public:
    RiskClassifier(const CategorySet& categories, const TextEncoder& encoder, bool label_only = false);
    Classification classify(std::string_view text) const;
    /// Cosine against every category, in category order.
    std::vector<double> scores(std::string_view text) const;

private:
    const TextEncoder* encoder_;
    std::vector<std::string> labels_;
    VectorSet category_vectors_;
};

Classification classify_risk(std::string_view text, const CategorySet& categories, const TextEncoder& encoder,
                             bool label_only = false);

enum class SortKey { Prevalence, Cost, Schedule };
std::optional<SortKey> parse_sort_key(std::string_view text);
std::string_view to_string(SortKey key);

struct TemplateEntry {
    int rank = 0;
    std::string text;
    std::string category;
    double prevalence = 0.0;
    std::optional<double> avg_probability;
    std::optional<double> avg_cost;
    std::optional<double> avg_schedule;
    std::size_t group_size = 0;
    std::vector<std::string> source_projects;
};

struct RiskTemplate {
    std::vector<TemplateEntry> entries;
    SortKey sort_key = SortKey::Prevalence;
    FilterCriteria source_filter;
    std::size_t source_project_count = 0;

    /// Ranked array of entry objects.
    nlohmann::json entries_json() const;
    static std::vector<TemplateEntry> entries_from_json(const nlohmann::json& j);
};

/// Stable descending sort on the key (Unset averages last), ties by
/// prevalence then representative text, truncated to top_n (> 0).
RiskTemplate build_template(std::span<const RiskGroup> groups, SortKey sort_key, int top_n,
                            const FilterCriteria& filter = {}, std::size_t source_project_count = 0);

struct EvalCounts {
    std::size_t tp = 0;
    std::size_t fn = 0;
    std::size_t fp = 0;
    std::optional<double> recall;
    std::optional<double> precision;
    std::optional<double> f1;

    static EvalCounts from_counts(std::size_t tp, std::size_t fn, std::size_t fp);
};

struct EvalRow {
    std::string risk_id;
    std::string text;
    int matched_rank = 0;
    double score = 0.0;
    bool true_positive = false;
};

struct TemplateEvaluation {
    EvalCounts counts;
    std::vector<EvalRow> rows;
};

/// Best-match every test risk into the template; score >= label_threshold
/// is a TP, else FN. FP counts entries no TP chose as its best match.
TemplateEvaluation evaluate_template(std::span<const TemplateEntry> entries, std::span<const RiskItem> test_register,
                                     const TextEncoder& encoder, double label_threshold = 0.6,
                                     bool use_description = false, Parallelism par = {});

struct TemplateOptions {
    double match_threshold = 0.7;
    double label_threshold = 0.6;
    SortKey sort_key = SortKey::Prevalence;
    int top_n = 30;
    bool use_description = false;
    bool category_label_only = false;
    Parallelism par;
};

/// filter -> group -> summarize -> classify -> rank.
RiskTemplate generate_template(const Corpus& corpus, const FilterCriteria& filter, const TextEncoder& encoder,
                               const CategorySet& categories, const TemplateOptions& opts,
                               bool* small_sample_warning = nullptr);

struct SensitivityEntry {
    std::string project_id;
    std::string characteristic_value;
    bool skipped = false;
    std::string skip_reason;
    std::size_t filtered_project_count = 0;
    EvalCounts baseline;
    EvalCounts filtered;
};

struct SensitivityReport {
    GroupKey characteristic = GroupKey::None;
    std::vector<SensitivityEntry> entries;
    EvalCounts baseline_overall;  // pooled over non-skipped entries
    EvalCounts filtered_overall;
    std::optional<double> delta_recall;
    std::optional<double> delta_precision;
    std::optional<double> delta_f1;
};

/// For each test project, compares a template built from the whole corpus
/// with one built from corpus projects sharing its `characteristic` value.
/// GroupKey::None means "all" and reproduces the baseline.
SensitivityReport sensitivity_run(const Corpus& corpus, const Corpus& test_projects, GroupKey characteristic,
                                  const TextEncoder& encoder, const CategorySet& categories,
                                  const TemplateOptions& opts);

}  // namespace riskbench
