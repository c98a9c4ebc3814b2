#include "riskbench/lifecycle.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "riskbench/csv.hpp"
#include "riskbench/errors.hpp"
#include "riskbench/util.hpp"

namespace riskbench {

std::string_view to_string(RiskState s) {
    switch (s) {
        case RiskState::Reg: return "Reg";
        case RiskState::Hap: return "Hap";
        case RiskState::Clo: return "Clo";
    }
    return "";
}

std::string_view to_string(RiskTransition t) {
    switch (t) {
        case RiskTransition::Generate: return "generate";
        case RiskTransition::Occur: return "occur";
        case RiskTransition::Continue: return "continue";
        case RiskTransition::Close: return "close";
    }
    return "";
}

std::optional<RiskState> parse_risk_state(std::string_view text) {
    auto t = to_lower_ascii(trim(text));
    if (t == "reg" || t == "registered" || t == "open" || t == "active") return RiskState::Reg;
    if (t == "hap" || t == "happening" || t == "happened" || t == "occurred" || t == "realized") return RiskState::Hap;
    if (t == "clo" || t == "closed" || t == "retired") return RiskState::Clo;
    return std::nullopt;
}

std::optional<RiskTransition> parse_transition(std::string_view text) {
    auto t = to_lower_ascii(trim(text));
    if (t == "generate") return RiskTransition::Generate;
    if (t == "occur") return RiskTransition::Occur;
    if (t == "continue") return RiskTransition::Continue;
    if (t == "close") return RiskTransition::Close;
    return std::nullopt;
}

RiskState step(RiskState state, RiskTransition transition) {
    switch (transition) {
        case RiskTransition::Continue: return state;
        case RiskTransition::Occur:
            if (state == RiskState::Reg) return RiskState::Hap;
            break;
        case RiskTransition::Close:
            if (state != RiskState::Clo) return RiskState::Clo;
            break;
        case RiskTransition::Generate: break;
    }
    throw TransitionError("illegal transition (" + std::string(to_string(state)) + ", " +
                          std::string(to_string(transition)) + ")");
}

bool accepts(std::span<const RiskTransition> word) {
    if (word.empty() || word.front() != RiskTransition::Generate) return false;
    RiskState s = RiskState::Reg;
    for (std::size_t i = 1; i < word.size(); ++i) {
        if (word[i] == RiskTransition::Generate) return false;
        if (s == RiskState::Hap && word[i] == RiskTransition::Occur) return false;
        if (s == RiskState::Clo) return false;  // the closing move ends the word
        s = step(s, word[i]);
    }
    return s == RiskState::Clo;
}

InferenceRules InferenceRules::from_json(const nlohmann::json& j) {
    InferenceRules r;
    if (!j.is_object()) throw ValidationError("inference rules: expected an object");
    if (j.contains("happening_probability")) {
        if (!j.at("happening_probability").is_number()) {
            throw ValidationError("inference rules: happening_probability must be a number");
        }
        r.happening_probability = j.at("happening_probability").get<double>();
    }
    if (j.contains("require_impact")) {
        if (!j.at("require_impact").is_boolean()) throw ValidationError("inference rules: require_impact must be a boolean");
        r.require_impact = j.at("require_impact").get<bool>();
    }
    if (!(r.happening_probability >= 0.0 && r.happening_probability <= 1.0)) {
        throw ValidationError("inference rules: happening_probability must lie in [0, 1]");
    }
    return r;
}

InferenceRules InferenceRules::load(const std::filesystem::path& path) {
    try {
        return from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("inference rules " + path.string() + ": " + e.what());
    }
}

nlohmann::json InferenceRules::to_json() const {
    return {{"happening_probability", happening_probability}, {"require_impact", require_impact}};
}

RiskState infer_state(const RiskObservation& obs, const InferenceRules& rules) {
    if (obs.explicit_state) return *obs.explicit_state;
    if (obs.probability && *obs.probability >= rules.happening_probability &&
        (obs.impact_recorded || !rules.require_impact)) {
        return RiskState::Hap;
    }
    return RiskState::Reg;
}

std::string_view to_string(RiskOrigin o) { return o == RiskOrigin::Initial ? "initial" : "construction"; }
std::string_view to_string(RiskOutcome o) { return o == RiskOutcome::Realized ? "realized" : "dismissed"; }

namespace {

RiskTransition transition_between(RiskState from, RiskState to, const std::string& risk_id, int ordinal) {
    if (from == to) return RiskTransition::Continue;
    if (from == RiskState::Reg && to == RiskState::Hap) return RiskTransition::Occur;
    if (to == RiskState::Clo) return RiskTransition::Close;
    throw TransitionError("risk '" + risk_id + "': " + std::string(to_string(from)) + " followed by " +
                          std::string(to_string(to)) + " at snapshot " + std::to_string(ordinal));
}

}  // namespace

RiskLifecycle build_lifecycle(std::string risk_id, std::span<const RiskObservation> observations,
                              int snapshot_count, const InferenceRules& rules) {
    if (observations.empty()) throw EmptyInputError("risk '" + risk_id + "': no observations");
    for (std::size_t i = 0; i < observations.size(); ++i) {
        int ord = observations[i].snapshot_ordinal;
        if (ord < 0 || ord >= snapshot_count) {
            throw ValidationError("risk '" + risk_id + "': snapshot " + std::to_string(ord) + " outside 0.." +
                                  std::to_string(snapshot_count - 1));
        }
        if (i > 0 && ord <= observations[i - 1].snapshot_ordinal) {
            throw ValidationError("risk '" + risk_id + "': snapshots must be strictly ascending");
        }
    }

    RiskLifecycle lc;
    lc.risk_id = std::move(risk_id);
    lc.first_ordinal = observations.front().snapshot_ordinal;
    lc.origin = lc.first_ordinal == 0 ? RiskOrigin::Initial : RiskOrigin::Construction;

    std::size_t next = 0;
    RiskState current = RiskState::Reg;
    for (int ord = lc.first_ordinal; ord < snapshot_count; ++ord) {
        if (next < observations.size() && observations[next].snapshot_ordinal == ord) {
            current = infer_state(observations[next], rules);
            ++next;
        }
        lc.observed.push_back(current);
    }
    if (lc.observed.front() == RiskState::Clo) {
        throw TransitionError("risk '" + lc.risk_id + "': closed at its first observation (snapshot " +
                              std::to_string(lc.first_ordinal) + ")");
    }

    lc.transitions.push_back(RiskTransition::Generate);
    if (lc.observed.front() == RiskState::Hap) lc.transitions.push_back(RiskTransition::Occur);
    for (std::size_t k = 1; k < lc.observed.size(); ++k) {
        auto t = transition_between(lc.observed[k - 1], lc.observed[k], lc.risk_id, lc.first_ordinal + static_cast<int>(k));
        if (lc.observed[k - 1] != RiskState::Clo) lc.transitions.push_back(t);
    }
    if (lc.observed.back() != RiskState::Clo) lc.transitions.push_back(RiskTransition::Close);

    RiskState s = RiskState::Reg;
    lc.run.push_back(s);
    for (std::size_t k = 1; k < lc.transitions.size(); ++k) {
        s = step(s, lc.transitions[k]);
        lc.run.push_back(s);
    }
    if (!accepts(lc.transitions)) throw TransitionError("risk '" + lc.risk_id + "': lifecycle word not accepted");
    bool occurred = std::find(lc.transitions.begin(), lc.transitions.end(), RiskTransition::Occur) != lc.transitions.end();
    lc.outcome = occurred ? RiskOutcome::Realized : RiskOutcome::Dismissed;
    return lc;
}

LifecycleCounts& LifecycleCounts::operator+=(const LifecycleCounts& o) {
    initial_identified += o.initial_identified;
    initial_realized += o.initial_realized;
    construction_identified += o.construction_identified;
    construction_realized += o.construction_realized;
    return *this;
}

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

RatioSet RatioSet::from_counts(const LifecycleCounts& c) {
    RatioSet r;
    r.counts = c;
    r.total_realization = ratio(c.realized(), c.identified());
    r.total_dismissed = ratio(c.identified() - c.realized(), c.identified());
    r.initial_realization = ratio(c.initial_realized, c.initial_identified);
    r.initial_dismissed = ratio(c.initial_identified - c.initial_realized, c.initial_identified);
    r.initial_efficiency = ratio(c.initial_realized, c.realized());
    r.new_item = ratio(c.construction_identified, c.identified());
    r.further_realized = ratio(c.construction_realized, c.construction_identified);
    return r;
}

LifecycleCounts count_lifecycles(std::span<const RiskLifecycle> lifecycles) {
    LifecycleCounts c;
    for (const auto& lc : lifecycles) {
        bool realized = lc.outcome == RiskOutcome::Realized;
        if (lc.origin == RiskOrigin::Initial) {
            ++c.initial_identified;
            if (realized) ++c.initial_realized;
        } else {
            ++c.construction_identified;
            if (realized) ++c.construction_realized;
        }
    }
    return c;
}

RatioSet compute_ratios(std::span<const RiskLifecycle> lifecycles) {
    if (lifecycles.empty()) throw EmptyInputError("compute_ratios: no lifecycles");
    return RatioSet::from_counts(count_lifecycles(lifecycles));
}

RatioSet aggregate_ratios(std::span<const LifecycleCounts> per_project) {
    if (per_project.empty()) throw EmptyInputError("aggregate_ratios: no projects");
    LifecycleCounts total;
    for (const auto& c : per_project) total += c;
    return RatioSet::from_counts(total);
}

RatioSet mean_of_ratios(std::span<const RatioSet> per_project) {
    if (per_project.empty()) throw EmptyInputError("mean_of_ratios: no projects");
    RatioSet out;
    for (const auto& r : per_project) out.counts += r.counts;
    auto mean_of = [&](std::optional<double> RatioSet::*field) -> std::optional<double> {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& r : per_project) {
            if (r.*field) {
                sum += *(r.*field);
                ++n;
            }
        }
        if (n == 0) return std::nullopt;
        return sum / static_cast<double>(n);
    };
    out.total_realization = mean_of(&RatioSet::total_realization);
    out.total_dismissed = mean_of(&RatioSet::total_dismissed);
    out.initial_realization = mean_of(&RatioSet::initial_realization);
    out.initial_dismissed = mean_of(&RatioSet::initial_dismissed);
    out.initial_efficiency = mean_of(&RatioSet::initial_efficiency);
    out.new_item = mean_of(&RatioSet::new_item);
    out.further_realized = mean_of(&RatioSet::further_realized);
    return out;
}

StyleThresholds StyleThresholds::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("style thresholds: expected an object");
    StyleThresholds t;
    for (auto [key, field] : {std::pair{"doer", &t.doer}, std::pair{"careful", &t.careful}}) {
        if (!j.contains(key)) continue;
        if (!j.at(key).is_number()) throw ValidationError(std::string("style thresholds: '") + key + "' must be a number");
        *field = j.at(key).get<double>();
        if (!(*field >= 0.0 && *field <= 1.0)) {
            throw ValidationError(std::string("style thresholds: '") + key + "' must lie in [0, 1]");
        }
    }
    return t;
}

StyleThresholds StyleThresholds::load(const std::filesystem::path& path) {
    try {
        return from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("style thresholds " + path.string() + ": " + e.what());
    }
}

nlohmann::json StyleThresholds::to_json() const { return {{"careful", careful}, {"doer", doer}}; }

std::string_view to_string(StyleAxis a) { return a == StyleAxis::Planner ? "planner" : "doer"; }
std::string_view to_string(StyleCare c) { return c == StyleCare::Careful ? "careful" : "excessive"; }

std::string StyleLabel::to_string() const {
    if (!classifiable()) return "unclassifiable";
    return std::string(riskbench::to_string(*care)) + " " + std::string(riskbench::to_string(*axis));
}

StyleLabel classify_style(const RatioSet& ratios, const StyleThresholds& thresholds) {
    StyleLabel label;
    if (!ratios.new_item) return label;
    label.axis = *ratios.new_item >= thresholds.doer ? StyleAxis::Doer : StyleAxis::Planner;
    const auto& rate = *label.axis == StyleAxis::Doer ? ratios.further_realized : ratios.initial_realization;
    if (rate) label.care = *rate >= thresholds.careful ? StyleCare::Careful : StyleCare::Excessive;
    return label;
}

RiskObservation observation_from_item(const RiskItem& item, int ordinal) {
    RiskObservation obs;
    obs.snapshot_ordinal = ordinal;
    if (!trim(item.status_note).empty()) {
        obs.explicit_state = parse_risk_state(item.status_note);
        if (!obs.explicit_state) {
            throw ValidationError("risk '" + item.risk_id + "': unknown status '" + item.status_note + "'");
        }
    }
    const auto& a = item.assessment;
    obs.probability = a.raw_probability;
    obs.impact_recorded = (a.raw_cost && *a.raw_cost > 0.0) || (a.raw_schedule && *a.raw_schedule > 0.0);
    return obs;
}

namespace {

struct RiskObservations {
    std::string risk_id;
    std::vector<RiskObservation> observations;
};

std::vector<RiskLifecycle> build_all(std::vector<RiskObservations>& risks, int snapshot_count,
                                     const InferenceRules& rules, Parallelism par) {
    std::vector<RiskLifecycle> out(risks.size());
    parallel_for(risks.size(), par, [&](std::size_t i) {
        out[i] = build_lifecycle(risks[i].risk_id, risks[i].observations, snapshot_count, rules);
    });
    return out;
}

}  // namespace

ProjectLifecycles project_lifecycles(const ProjectRecord& project, const InferenceRules& rules, Parallelism par) {
    if (project.snapshots.empty()) throw EmptyInputError("project '" + project.project_id + "': no registers");
    std::vector<RiskObservations> risks;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& snap : project.snapshots) {
        for (const auto& item : snap.items) {
            auto [it, inserted] = index.try_emplace(item.risk_id, risks.size());
            if (inserted) risks.push_back({item.risk_id, {}});
            risks[it->second].observations.push_back(observation_from_item(item, snap.ordinal));
        }
    }
    ProjectLifecycles out;
    out.project_id = project.project_id;
    out.snapshot_count = project.snapshots.back().ordinal + 1;
    try {
        out.lifecycles = build_all(risks, out.snapshot_count, rules, par);
    } catch (const Error& e) {
        throw ValidationError("project '" + project.project_id + "': " + e.what());
    }
    return out;
}

std::vector<ProjectLifecycles> load_lifecycle_csv(std::string_view bytes, const InferenceRules& rules) {
    auto table = csv::parse(bytes);
    if (table.rows.empty()) throw ParseError("lifecycle csv: missing header");
    const auto& header = table.rows.front();
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[to_lower_ascii(trim(header[i]))] = i;
    for (const char* name : {"project_id", "risk_id", "snapshot", "state"}) {
        if (!col.count(name)) throw ParseError(std::string("lifecycle csv: missing column '") + name + "'");
    }

    struct ProjectAcc {
        std::string id;
        int max_snapshot = 0;
        std::vector<RiskObservations> risks;
        std::unordered_map<std::string, std::size_t> index;
    };
    std::vector<ProjectAcc> projects;
    std::unordered_map<std::string, std::size_t> project_index;
    for (std::size_t r = 1; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        auto loc = "lifecycle csv line " + std::to_string(table.line_numbers[r]);
        auto cell = [&](const char* name) -> std::string {
            auto i = col.at(name);
            return i < row.size() ? std::string(trim(row[i])) : std::string();
        };
        auto pid = cell("project_id");
        auto rid = cell("risk_id");
        if (pid.empty() || rid.empty()) throw ParseError(loc + ": empty project_id or risk_id");
        auto snap = parse_number(cell("snapshot"));
        if (!snap || *snap < 0 || *snap != static_cast<double>(static_cast<int>(*snap))) {
            throw ParseError(loc + ": snapshot must be a non-negative integer");
        }
        auto state = parse_risk_state(cell("state"));
        if (!state) throw ParseError(loc + ": state must be Reg, Hap or Clo");

        auto [pit, pnew] = project_index.try_emplace(pid, projects.size());
        if (pnew) projects.push_back({pid, 0, {}, {}});
        auto& p = projects[pit->second];
        auto [rit, rnew] = p.index.try_emplace(rid, p.risks.size());
        if (rnew) p.risks.push_back({rid, {}});
        RiskObservation obs;
        obs.snapshot_ordinal = static_cast<int>(*snap);
        obs.explicit_state = state;
        auto& list = p.risks[rit->second].observations;
        if (!list.empty() && list.back().snapshot_ordinal >= obs.snapshot_ordinal) {
            throw ParseError(loc + ": snapshots of risk '" + rid + "' must be strictly ascending");
        }
        list.push_back(obs);
        p.max_snapshot = std::max(p.max_snapshot, obs.snapshot_ordinal);
    }
    if (projects.empty()) throw EmptyInputError("lifecycle csv: no rows");

    std::vector<ProjectLifecycles> out;
    for (auto& p : projects) {
        ProjectLifecycles pl;
        pl.project_id = p.id;
        pl.snapshot_count = p.max_snapshot + 1;
        try {
            pl.lifecycles = build_all(p.risks, pl.snapshot_count, rules, {});
        } catch (const Error& e) {
            throw ValidationError("project '" + p.id + "': " + e.what());
        }
        out.push_back(std::move(pl));
    }
    return out;
}

}  // namespace riskbench
