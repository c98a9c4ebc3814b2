#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "riskbench/corpus.hpp"
#include "riskbench/embedding.hpp"
#include "riskbench/kernels.hpp"
#include "riskbench/stats.hpp"
#include "riskbench/text.hpp"

namespace riskbench {

/// Project attribute used to partition projects into comparison groups.
/// DeliveryFamily folds DB and DBB into "traditional" and everything else
/// into "p3".
enum class GroupKey { None, DeliveryMethod, DeliveryFamily, ProjectType, SizeBand, Jurisdiction };

std::optional<GroupKey> parse_group_key(std::string_view text);
std::string_view to_string(GroupKey key);
std::string group_value(const ProjectRecord& project, GroupKey key);

/// Text used to represent a risk when matching.
std::string risk_text(const RiskItem& item, bool use_description);

enum class SimilarityLevel { Document, RiskItem, Pooling, Evaluation };
std::string_view to_string(SimilarityLevel level);

struct MatchResult {
    std::string source_risk_id;
    std::string target_risk_id;
    std::size_t target_index = 0;
    double score = 0.0;
};

struct PairScore {
    std::string source;
    std::string target;
    double score = 0.0;
};

struct ScoreSummary {
    std::size_t count = 0;
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
};

ScoreSummary summarize_scores(std::span<const double> scores);

struct GroupSummary {
    std::string group;
    ScoreSummary scores;
};

/// Score-band histogram with edges {0.5, 0.6, 0.7, 0.8, 1.0}:
/// counts for <0.5, [0.5,0.6), [0.6,0.7), [0.7,0.8), [0.8,1.0].
struct ScoreHistogram {
    static constexpr std::array<double, 5> edges{0.5, 0.6, 0.7, 0.8, 1.0};
    std::array<std::size_t, 5> counts{};

    void add(double score);
    static std::string_view bin_label(std::size_t bin);
};

struct SimilarityReport {
    SimilarityLevel level = SimilarityLevel::Document;
    std::vector<PairScore> pairs;
    ScoreSummary summary;
    std::vector<GroupSummary> groups;  // within-group pairs only, pair-weighted
    std::optional<TTestResult> test;   // present when exactly two groups qualify
    std::optional<ScoreHistogram> histogram;
    std::optional<double> fraction_at_least_half;
};

struct SimilarityOptions {
    GroupKey group_by = GroupKey::None;
    bool use_description = false;
    TTestVariant t_test = TTestVariant::Welch;
    Parallelism par;
};

/// Whole-register document per project: category, name and description of
/// every consolidated risk, tokenized.
TokenStream register_document(const ProjectRecord& project, const StopWords& stop_words);

/// Cosine of TF-IDF register documents for every unordered project pair.
/// The TF-IDF model is fitted on the corpus' register documents.
SimilarityReport document_similarity(const Corpus& corpus, const StopWords& stop_words,
                                     const SimilarityOptions& opts = {});

MatchResult best_match(const RiskItem& risk, std::span<const RiskItem> candidates, const TextEncoder& encoder,
                       bool use_description = false);

/// Every risk of `a` best-matched into `b`; pairs hold risk ids.
SimilarityReport pairwise_risk_similarity(std::span<const RiskItem> a, std::span<const RiskItem> b,
                                          const TextEncoder& encoder, const SimilarityOptions& opts = {});

/// Mean directional risk-level similarity for every ordered project pair
/// (source risks matched into target).
SimilarityReport risk_level_similarity(const Corpus& corpus, const TextEncoder& encoder,
                                       const SimilarityOptions& opts = {});

/// Each risk of `project_id` best-matched against the union of all other
/// projects' risks in `corpus`.
SimilarityReport pooling_similarity(std::string_view project_id, const Corpus& corpus, const TextEncoder& encoder,
                                    const SimilarityOptions& opts = {});

/// [1 - |x1 - x2| / 4] * 100 for Likert bands 1..5.
double evaluation_similarity(int x1, int x2);

/// 100 when equal, else 0. Throws ValidationError on Unset.
double qualitative_match(Rating a, Rating b);

struct RiskMatch {
    std::string source_project;
    std::string source_risk;
    std::string target_project;
    std::string target_risk;
    double score = 0.0;
    Assessment source_assessment;
    Assessment target_assessment;
};

/// Best matches for every risk of every project into every other project.
std::vector<RiskMatch> collect_risk_matches(const Corpus& corpus, const TextEncoder& encoder,
                                            const SimilarityOptions& opts = {});

struct MeanWithCount {
    std::size_t count = 0;
    std::optional<double> mean;
};

struct EvaluationReport {
    double min_score = 0.0;
    std::size_t match_count = 0;
    MeanWithCount probability;
    MeanWithCount cost;
    MeanWithCount schedule;
    MeanWithCount probability_cost;      // qualitative cost rating agreement
    MeanWithCount probability_schedule;  // qualitative schedule rating agreement
};

/// Assessment agreement over matches scoring >= min_score.
/// Throws EmptyInputError when no match survives the filter.
EvaluationReport evaluation_level_report(std::span<const RiskMatch> matches, double min_score);

}  // namespace riskbench
