#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskbench/corpus.hpp"
#include "riskbench/kernels.hpp"

namespace riskbench {

enum class RiskState { Reg, Hap, Clo };
enum class RiskTransition { Generate, Occur, Continue, Close };

std::string_view to_string(RiskState s);
std::string_view to_string(RiskTransition t);
/// Accepts Reg/Hap/Clo and the longer spellings used in register status
/// columns (registered, happening, occurred, realized, closed, retired).
std::optional<RiskState> parse_risk_state(std::string_view text);
std::optional<RiskTransition> parse_transition(std::string_view text);

/// One move of the lifecycle automaton. `continue` keeps any state,
/// `occur` takes Reg to Hap, `close` takes Reg or Hap to Clo. Generate only
/// creates the initial Reg state and is never a move between states.
/// Throws TransitionError naming the pair otherwise.
RiskState step(RiskState state, RiskTransition transition);

/// True iff the word starts with generate, every later move is legal and
/// its last move is the one that reaches Clo. Words do not continue past
/// the closing move.
bool accepts(std::span<const RiskTransition> word);

struct RiskObservation {
    int snapshot_ordinal = 0;
    std::optional<RiskState> explicit_state;
    std::optional<double> probability;  // fraction 0..1
    bool impact_recorded = false;
};

struct InferenceRules {
    double happening_probability = 0.9;
    bool require_impact = true;

    static InferenceRules from_json(const nlohmann::json& j);
    static InferenceRules load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
};

/// Explicit state wins; otherwise Hap when the probability reaches the
/// rule and (if required) an impact is recorded; otherwise Reg.
RiskState infer_state(const RiskObservation& obs, const InferenceRules& rules = {});

enum class RiskOrigin { Initial, Construction };
enum class RiskOutcome { Realized, Dismissed };
std::string_view to_string(RiskOrigin o);
std::string_view to_string(RiskOutcome o);

struct RiskLifecycle {
    std::string risk_id;
    RiskOrigin origin = RiskOrigin::Initial;
    RiskOutcome outcome = RiskOutcome::Dismissed;
    int first_ordinal = 0;
    std::vector<RiskState> observed;          // one state per snapshot from first_ordinal to the last
    std::vector<RiskTransition> transitions;  // accepted word, ending at the close
    std::vector<RiskState> run;               // automaton states after each transition
};

/// Builds the lifecycle of one risk from its observations in a project with
/// `snapshot_count` snapshots (ordinals 0..count-1). Gaps carry the last
/// state forward. The final register is followed by a closing step unless
/// the risk is already closed, so a risk seen happening in the last
/// register counts as realized.
RiskLifecycle build_lifecycle(std::string risk_id, std::span<const RiskObservation> observations,
                              int snapshot_count, const InferenceRules& rules = {});

struct LifecycleCounts {
    std::size_t initial_identified = 0;
    std::size_t initial_realized = 0;
    std::size_t construction_identified = 0;
    std::size_t construction_realized = 0;

    std::size_t identified() const { return initial_identified + construction_identified; }
    std::size_t realized() const { return initial_realized + construction_realized; }
    LifecycleCounts& operator+=(const LifecycleCounts& o);
    bool operator==(const LifecycleCounts&) const = default;
};

/// Ratios are Unset when their denominator is zero.
struct RatioSet {
    LifecycleCounts counts;
    std::optional<double> total_realization;   // realized / identified
    std::optional<double> total_dismissed;     // dismissed / identified
    std::optional<double> initial_realization; // initial realized / initial identified
    std::optional<double> initial_dismissed;
    std::optional<double> initial_efficiency;  // initial realized / realized
    std::optional<double> new_item;            // construction identified / identified
    std::optional<double> further_realized;    // construction realized / construction identified

    static RatioSet from_counts(const LifecycleCounts& counts);
};

LifecycleCounts count_lifecycles(std::span<const RiskLifecycle> lifecycles);
/// Throws EmptyInputError on an empty list.
RatioSet compute_ratios(std::span<const RiskLifecycle> lifecycles);
/// Ratios of summed counts. Throws EmptyInputError on an empty list.
RatioSet aggregate_ratios(std::span<const LifecycleCounts> per_project);
/// Unweighted mean of each defined per-project ratio (counts are summed).
RatioSet mean_of_ratios(std::span<const RatioSet> per_project);

struct StyleThresholds {
    double doer = 0.5;
    double careful = 0.5;

    static StyleThresholds from_json(const nlohmann::json& j);
    static StyleThresholds load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
};

enum class StyleAxis { Planner, Doer };
enum class StyleCare { Careful, Excessive };
std::string_view to_string(StyleAxis a);
std::string_view to_string(StyleCare c);

struct StyleLabel {
    std::optional<StyleAxis> axis;
    std::optional<StyleCare> care;

    bool classifiable() const { return axis && care; }
    /// "careful planner", "excessive doer" or "unclassifiable".
    std::string to_string() const;
};

/// Doer iff new_item >= doer threshold. Planners are careful iff initial
/// realization >= careful threshold, doers iff further realization is.
StyleLabel classify_style(const RatioSet& ratios, const StyleThresholds& thresholds = {});

struct ProjectLifecycles {
    std::string project_id;
    int snapshot_count = 0;
    std::vector<RiskLifecycle> lifecycles;
};

/// Observation of a register row: status column as explicit state, raw
/// probability, impact recorded when raw cost or schedule is positive.
RiskObservation observation_from_item(const RiskItem& item, int ordinal);

/// Lifecycles of every risk of a project, built from its register
/// snapshots. Risks are listed in first-appearance order.
ProjectLifecycles project_lifecycles(const ProjectRecord& project, const InferenceRules& rules = {},
                                     Parallelism par = {});

/// CSV with header project_id,risk_id,snapshot,state. Projects and risks
/// keep first-appearance order; a project's snapshot count is its largest
/// snapshot + 1.
std::vector<ProjectLifecycles> load_lifecycle_csv(std::string_view bytes, const InferenceRules& rules = {});

}  // namespace riskbench
