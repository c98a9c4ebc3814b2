#include "riskbench/app.hpp"

#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <set>

#include <CLI11.hpp>

#include "riskbench/corpus.hpp"
#include "riskbench/csv.hpp"
#include "riskbench/embedding.hpp"
#include "riskbench/errors.hpp"
#include "riskbench/lifecycle.hpp"
#include "riskbench/rbs.hpp"
#include "riskbench/report.hpp"
#include "riskbench/similarity.hpp"
#include "riskbench/stats.hpp"
#include "riskbench/template_engine.hpp"
#include "riskbench/util.hpp"

namespace riskbench {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path data_dir() {
    if (const char* env = std::getenv("RISKBENCH_DATA"); env && *env) return env;
    return RISKBENCH_DEFAULT_DATA_DIR;
}

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

template <class T>
json opt_int(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

// ---------------------------------------------------------------------------
// options shared between subcommands

struct TextOptions {
    std::string embeddings;
    std::string sentences;
    std::string stopwords;
    bool use_description = false;
};

struct Env {
    int jobs = 1;
    std::string out_path;
    std::string scales;
    ReportBundle bundle;
    std::ostream* out = nullptr;
    std::ostream* err = nullptr;

    Parallelism par() const { return {jobs}; }
};

fs::path or_bundled(const std::string& given, const char* relative) {
    return given.empty() ? data_dir() / relative : fs::path(given);
}

void add_text_options(CLI::App* sub, TextOptions& t) {
    sub->add_option("--embeddings", t.embeddings, "Word-vector file (default: bundled demo vectors)");
    sub->add_option("--sentence-embeddings,--sentences", t.sentences, "Precomputed sentence vectors (JSON Lines); word vectors become the fallback");
    sub->add_option("--stopwords", t.stopwords, "Stop-word list (default: bundled English list)");
    sub->add_flag("--use-description", t.use_description, "Match on name plus description");
}

std::vector<fs::path> manifest_register_paths(const fs::path& manifest) {
    std::vector<fs::path> out;
    json j;
    try {
        j = json::parse(read_file(manifest));
    } catch (const json::parse_error& e) {
        throw ParseError("manifest " + manifest.string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("projects") || !j.at("projects").is_array()) return out;
    auto base = manifest.parent_path();
    for (const auto& p : j.at("projects")) {
        if (!p.is_object() || !p.contains("registers") || !p.at("registers").is_array()) continue;
        for (const auto& r : p.at("registers")) {
            if (!r.is_object() || !r.contains("path") || !r.at("path").is_string()) continue;
            fs::path rel = r.at("path").get<std::string>();
            out.push_back(rel.is_absolute() ? rel : base / rel);
        }
    }
    return out;
}

Corpus load_manifest(Env& env, const std::string& manifest) {
    if (manifest.empty()) throw UsageError("--manifest is required");
    ScaleConfig cfg;
    if (!env.scales.empty()) {
        cfg = ScaleConfig::load(env.scales);
        env.bundle.add_input(env.scales);
    }
    auto corpus = load_corpus(manifest, cfg);
    env.bundle.add_input(manifest);
    for (const auto& p : manifest_register_paths(manifest)) env.bundle.add_input(p);
    return corpus;
}

TextEncoder make_encoder(Env& env, const TextOptions& t) {
    auto words_path = or_bundled(t.embeddings, "embeddings/word_vectors.txt");
    auto stop_path = or_bundled(t.stopwords, "stopwords_en.txt");
    std::vector<std::string> warnings;
    auto words = std::make_shared<const EmbeddingBackend>(EmbeddingBackend::load_word_vectors(words_path, &warnings));
    for (const auto& w : warnings) *env.err << "warning: " << w << "\n";
    env.bundle.add_input(words_path);
    auto stop = StopWords::load(stop_path);
    env.bundle.add_input(stop_path);
    env.bundle.config["embeddings"] = words_path.string();
    env.bundle.config["stopwords"] = stop_path.string();
    env.bundle.config["use_description"] = t.use_description;
    if (t.sentences.empty()) {
        env.bundle.config["backend"] = "word_average";
        return TextEncoder(words, std::move(stop));
    }
    auto sentences = std::make_shared<const EmbeddingBackend>(EmbeddingBackend::load_sentence_vectors(t.sentences));
    if (sentences->dimension() != words->dimension()) {
        throw DimensionError("sentence vectors have dimension " + std::to_string(sentences->dimension()) +
                             " but word vectors have " + std::to_string(words->dimension()));
    }
    env.bundle.add_input(t.sentences);
    env.bundle.config["sentences"] = t.sentences;
    env.bundle.config["backend"] = "precomputed_sentence";
    return TextEncoder(sentences, std::move(stop), words);
}

void emit(Env& env) {
    if (env.out_path.empty()) {
        *env.out << canonical_json(env.bundle.to_json());
    } else {
        emit_report(env.bundle, env.out_path);
    }
}

// ---------------------------------------------------------------------------
// result payloads

json summary_json(const ScoreSummary& s) {
    return {{"count", s.count}, {"mean", s.mean}, {"min", s.min}, {"max", s.max}};
}

json similarity_json(const SimilarityReport& r) {
    json pairs = json::array();
    for (const auto& p : r.pairs) pairs.push_back({{"source", p.source}, {"target", p.target}, {"score", p.score}});
    json groups = json::array();
    for (const auto& g : r.groups) groups.push_back({{"group", g.group}, {"scores", summary_json(g.scores)}});
    json out{{"level", to_string(r.level)}, {"pairs", pairs}, {"summary", summary_json(r.summary)}, {"groups", groups}};
    if (r.test) {
        out["t_test"] = {{"variant", to_string(r.test->variant)},
                         {"statistic", r.test->statistic},
                         {"degrees_of_freedom", r.test->degrees_of_freedom},
                         {"p_value", r.test->p_value}};
    } else {
        out["t_test"] = nullptr;
    }
    if (r.histogram) {
        json h = json::array();
        for (std::size_t b = 0; b < r.histogram->counts.size(); ++b) {
            h.push_back({{"bin", ScoreHistogram::bin_label(b)}, {"count", r.histogram->counts[b]}});
        }
        out["histogram"] = h;
    }
    if (r.fraction_at_least_half) out["fraction_at_least_half"] = *r.fraction_at_least_half;
    return out;
}

json mean_count_json(const MeanWithCount& m) { return {{"count", m.count}, {"mean", opt(m.mean)}}; }

json evaluation_json(const EvaluationReport& r) {
    return {{"min_score", r.min_score},
            {"match_count", r.match_count},
            {"probability", mean_count_json(r.probability)},
            {"cost", mean_count_json(r.cost)},
            {"schedule", mean_count_json(r.schedule)},
            {"probability_cost", mean_count_json(r.probability_cost)},
            {"probability_schedule", mean_count_json(r.probability_schedule)}};
}

json counts_json(const EvalCounts& c) {
    return {{"tp", c.tp}, {"fn", c.fn}, {"fp", c.fp}, {"recall", opt(c.recall)}, {"precision", opt(c.precision)},
            {"f1", opt(c.f1)}};
}

json ratio_json(const RatioSet& r) {
    const auto& c = r.counts;
    return {{"counts",
             {{"initial_identified", c.initial_identified},
              {"initial_realized", c.initial_realized},
              {"construction_identified", c.construction_identified},
              {"construction_realized", c.construction_realized},
              {"identified", c.identified()},
              {"realized", c.realized()}}},
            {"total_realization", opt(r.total_realization)},
            {"total_dismissed", opt(r.total_dismissed)},
            {"initial_realization", opt(r.initial_realization)},
            {"initial_dismissed", opt(r.initial_dismissed)},
            {"initial_efficiency", opt(r.initial_efficiency)},
            {"new_item", opt(r.new_item)},
            {"further_realized", opt(r.further_realized)}};
}

LifecycleCounts counts_from_json(const json& j) {
    LifecycleCounts c;
    c.initial_identified = j.at("initial_identified").get<std::size_t>();
    c.initial_realized = j.at("initial_realized").get<std::size_t>();
    c.construction_identified = j.at("construction_identified").get<std::size_t>();
    c.construction_realized = j.at("construction_realized").get<std::size_t>();
    return c;
}

void write_heatmap(Env& env, const std::string& path, const Corpus& corpus, const SimilarityReport& r, bool symmetric) {
    std::vector<std::string> ids;
    std::map<std::string, std::size_t> index;
    for (const auto& p : corpus.projects) {
        index[p.project_id] = ids.size();
        ids.push_back(p.project_id);
    }
    const std::size_t n = ids.size();
    std::vector<double> grid(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) grid[i * n + i] = 1.0;
    for (const auto& p : r.pairs) {
        auto i = index.at(p.source), j = index.at(p.target);
        grid[i * n + j] = p.score;
        if (symmetric) grid[j * n + i] = p.score;
    }
    write_text(path, heatmap_csv(ids, ids, grid));
    env.bundle.config["heatmap"] = path;
}

// ---------------------------------------------------------------------------
// subcommands

void run_ingest(Env& env, const std::string& manifest) {
    auto corpus = load_manifest(env, manifest);
    json projects = json::array();
    std::size_t risk_total = 0;
    for (const auto& p : corpus.projects) {
        json snaps = json::array();
        for (const auto& s : p.snapshots) {
            snaps.push_back({{"ordinal", s.ordinal}, {"label", s.label}, {"risk_count", s.items.size()}});
        }
        json risks = json::array();
        for (const auto& r : p.consolidated_register()) {
            const auto& a = r.assessment;
            risks.push_back({{"risk_id", r.risk_id},
                             {"name", r.name},
                             {"category", r.category_label},
                             {"status", r.status_note},
                             {"probability_band", opt_int(a.probability_band)},
                             {"cost_band", opt_int(a.cost_band)},
                             {"schedule_band", opt_int(a.schedule_band)},
                             {"qualitative_cost", to_string(a.qualitative_cost)},
                             {"qualitative_schedule", to_string(a.qualitative_schedule)}});
        }
        risk_total += risks.size();
        projects.push_back({{"id", p.project_id},
                            {"jurisdiction", p.jurisdiction},
                            {"delivery_method", p.delivery_method},
                            {"project_type", p.project_type},
                            {"size_band", p.size_band ? json(to_string(*p.size_band)) : json(nullptr)},
                            {"contract_value_musd", opt(p.contract_value_musd)},
                            {"award_year", opt_int(p.award_year)},
                            {"snapshots", snaps},
                            {"risks", risks}});
    }
    env.bundle.config["manifest"] = manifest;
    env.bundle.result = {{"project_count", corpus.projects.size()}, {"risk_count", risk_total}, {"projects", projects}};
}

struct SimilarityArgs {
    std::string manifest;
    std::string group_by = "none";
    std::string t_test = "welch";
    std::string heatmap;
    std::string project;
    std::vector<double> min_scores{0.5, 0.7, 0.8};
    TextOptions text;
};

SimilarityOptions similarity_options(Env& env, const SimilarityArgs& a) {
    SimilarityOptions o;
    auto key = parse_group_key(a.group_by);
    if (!key) throw UsageError("unknown --group-by '" + a.group_by + "'");
    o.group_by = *key;
    o.t_test = a.t_test == "pooled" ? TTestVariant::Pooled : TTestVariant::Welch;
    o.use_description = a.text.use_description;
    o.par = env.par();
    env.bundle.config["manifest"] = a.manifest;
    env.bundle.config["group_by"] = to_string(o.group_by);
    env.bundle.config["t_test"] = to_string(o.t_test);
    return o;
}

void run_similarity_docs(Env& env, const SimilarityArgs& a) {
    auto opts = similarity_options(env, a);
    auto corpus = load_manifest(env, a.manifest);
    auto stop_path = or_bundled(a.text.stopwords, "stopwords_en.txt");
    auto stop = StopWords::load(stop_path);
    env.bundle.add_input(stop_path);
    env.bundle.config["stopwords"] = stop_path.string();
    auto report = document_similarity(corpus, stop, opts);
    if (!a.heatmap.empty()) write_heatmap(env, a.heatmap, corpus, report, true);
    env.bundle.result = similarity_json(report);
}

void run_similarity_risks(Env& env, const SimilarityArgs& a) {
    auto opts = similarity_options(env, a);
    auto corpus = load_manifest(env, a.manifest);
    auto encoder = make_encoder(env, a.text);
    auto report = risk_level_similarity(corpus, encoder, opts);
    if (!a.heatmap.empty()) write_heatmap(env, a.heatmap, corpus, report, false);
    env.bundle.result = similarity_json(report);
}

void run_similarity_pooling(Env& env, const SimilarityArgs& a) {
    auto opts = similarity_options(env, a);
    auto corpus = load_manifest(env, a.manifest);
    auto encoder = make_encoder(env, a.text);
    env.bundle.config["project"] = a.project;
    env.bundle.result = similarity_json(pooling_similarity(a.project, corpus, encoder, opts));
}

void run_similarity_evaluation(Env& env, const SimilarityArgs& a) {
    auto opts = similarity_options(env, a);
    auto corpus = load_manifest(env, a.manifest);
    auto encoder = make_encoder(env, a.text);
    auto matches = collect_risk_matches(corpus, encoder, opts);
    json rows = json::array();
    for (double t : a.min_scores) {
        try {
            rows.push_back(evaluation_json(evaluation_level_report(matches, t)));
        } catch (const EmptyInputError& e) {
            rows.push_back({{"min_score", t}, {"error", e.what()}});
        }
    }
    env.bundle.config["min_scores"] = a.min_scores;
    env.bundle.result = {{"match_count", matches.size()}, {"thresholds", rows}};
}

struct TemplateArgs {
    std::string manifest;
    std::string test_manifest;
    std::string filter;
    std::string sort = "prevalence";
    std::string categories;
    std::string characteristic = "project_type";
    std::string template_path;
    std::vector<std::string> registers;
    int top = 30;
    double match_threshold = 0.7;
    double label_threshold = 0.6;
    bool label_only = false;
    TextOptions text;
};

TemplateOptions template_options(Env& env, const TemplateArgs& a) {
    TemplateOptions o;
    auto key = parse_sort_key(a.sort);
    if (!key) throw UsageError("unknown --sort '" + a.sort + "'");
    o.sort_key = *key;
    o.top_n = a.top;
    o.match_threshold = a.match_threshold;
    o.label_threshold = a.label_threshold;
    o.use_description = a.text.use_description;
    o.category_label_only = a.label_only;
    o.par = env.par();
    env.bundle.config["sort"] = to_string(o.sort_key);
    env.bundle.config["top"] = o.top_n;
    env.bundle.config["match_threshold"] = o.match_threshold;
    env.bundle.config["label_threshold"] = o.label_threshold;
    env.bundle.config["category_label_only"] = o.category_label_only;
    return o;
}

CategorySet load_categories(Env& env, const TemplateArgs& a) {
    auto path = or_bundled(a.categories, "wsdot_categories.json");
    auto set = CategorySet::load(path);
    env.bundle.add_input(path);
    env.bundle.config["categories"] = path.string();
    return set;
}

void run_template_build(Env& env, const TemplateArgs& a) {
    auto opts = template_options(env, a);
    auto filter = FilterCriteria::parse(a.filter);
    env.bundle.config["manifest"] = a.manifest;
    env.bundle.config["filter"] = filter.to_json();
    auto corpus = load_manifest(env, a.manifest);
    auto encoder = make_encoder(env, a.text);
    auto categories = load_categories(env, a);
    bool warning = false;
    auto t = generate_template(corpus, filter, encoder, categories, opts, &warning);
    if (warning) {
        *env.err << "warning: template built from " << t.source_project_count << " project(s); fewer than "
                 << kSmallSampleProjects << " projects may bias the template\n";
    }
    env.bundle.result = {{"template", t.entries_json()},
                         {"sort_key", to_string(t.sort_key)},
                         {"filter", t.source_filter.to_json()},
                         {"source_project_count", t.source_project_count},
                         {"small_sample_warning", warning}};
}

std::vector<TemplateEntry> read_template(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError("template " + path + ": " + e.what());
    }
    if (j.is_object() && j.contains("result") && j.at("result").is_object()) j = j.at("result");
    if (j.is_object() && j.contains("template")) j = j.at("template");
    return RiskTemplate::entries_from_json(j);
}

void run_template_eval(Env& env, const TemplateArgs& a) {
    if (a.template_path.empty()) throw UsageError("--template is required");
    if (a.registers.empty()) throw UsageError("at least one --register is required");
    env.bundle.config["template"] = a.template_path;
    env.bundle.config["label_threshold"] = a.label_threshold;
    env.bundle.config["registers"] = a.registers;
    auto entries = read_template(a.template_path);
    env.bundle.add_input(a.template_path);
    auto encoder = make_encoder(env, a.text);
    json per = json::array();
    std::size_t tp = 0, fn = 0, fp = 0;
    for (const auto& path : a.registers) {
        auto format = format_for_path(path);
        if (!format) throw ValidationError("register file has unknown extension: " + path);
        if (!fs::exists(path)) throw ValidationError("register file not found: " + path);
        auto snap = parse_register(read_file(path), *format);
        env.bundle.add_input(path);
        auto ev = evaluate_template(entries, snap.items, encoder, a.label_threshold, a.text.use_description, env.par());
        json rows = json::array();
        for (const auto& r : ev.rows) {
            rows.push_back({{"risk_id", r.risk_id},
                            {"text", r.text},
                            {"matched_rank", r.matched_rank},
                            {"score", r.score},
                            {"true_positive", r.true_positive}});
        }
        per.push_back({{"register", path}, {"counts", counts_json(ev.counts)}, {"rows", rows}});
        tp += ev.counts.tp;
        fn += ev.counts.fn;
        fp += ev.counts.fp;
    }
    env.bundle.result = {{"registers", per}, {"overall", counts_json(EvalCounts::from_counts(tp, fn, fp))}};
}

void run_template_sensitivity(Env& env, const TemplateArgs& a) {
    if (a.test_manifest.empty()) throw UsageError("--test-manifest is required");
    auto opts = template_options(env, a);
    GroupKey key = GroupKey::None;
    if (a.characteristic != "all") {
        auto k = parse_group_key(a.characteristic);
        if (!k || *k == GroupKey::DeliveryFamily || *k == GroupKey::None) {
            throw UsageError("unknown --characteristic '" + a.characteristic + "'");
        }
        key = *k;
    }
    env.bundle.config["manifest"] = a.manifest;
    env.bundle.config["test_manifest"] = a.test_manifest;
    env.bundle.config["characteristic"] = key == GroupKey::None ? "all" : std::string(to_string(key));
    auto corpus = load_manifest(env, a.manifest);
    auto tests = load_manifest(env, a.test_manifest);
    auto encoder = make_encoder(env, a.text);
    auto categories = load_categories(env, a);
    auto rep = sensitivity_run(corpus, tests, key, encoder, categories, opts);
    json entries = json::array();
    for (const auto& e : rep.entries) {
        json row{{"project_id", e.project_id},
                 {"characteristic_value", e.characteristic_value},
                 {"skipped", e.skipped},
                 {"filtered_project_count", e.filtered_project_count}};
        if (e.skipped) {
            row["skip_reason"] = e.skip_reason;
        } else {
            row["baseline"] = counts_json(e.baseline);
            row["filtered"] = counts_json(e.filtered);
        }
        entries.push_back(row);
    }
    env.bundle.result = {{"entries", entries},
                         {"baseline_overall", counts_json(rep.baseline_overall)},
                         {"filtered_overall", counts_json(rep.filtered_overall)},
                         {"delta_recall", opt(rep.delta_recall)},
                         {"delta_precision", opt(rep.delta_precision)},
                         {"delta_f1", opt(rep.delta_f1)}};
}

struct LifecycleArgs {
    std::string manifest;
    std::string lifecycle_csv;
    std::string rules;
    std::string thresholds;
    std::string ratios;
    std::string groups;
    std::string performance;
    std::vector<std::string> metrics{"cost_growth", "time_growth"};
    double alpha = 0.05;
    bool detail = false;
};

std::vector<ProjectLifecycles> load_lifecycles(Env& env, const LifecycleArgs& a) {
    if (a.manifest.empty() == a.lifecycle_csv.empty()) {
        throw UsageError("give exactly one of --manifest or --lifecycle-csv");
    }
    auto rules_path = or_bundled(a.rules, "inference_rules.json");
    auto rules = InferenceRules::load(rules_path);
    env.bundle.add_input(rules_path);
    env.bundle.config["rules"] = rules.to_json();
    std::vector<ProjectLifecycles> out;
    if (!a.lifecycle_csv.empty()) {
        env.bundle.config["lifecycle_csv"] = a.lifecycle_csv;
        out = load_lifecycle_csv(read_file(a.lifecycle_csv), rules);
        env.bundle.add_input(a.lifecycle_csv);
    } else {
        env.bundle.config["manifest"] = a.manifest;
        auto corpus = load_manifest(env, a.manifest);
        for (const auto& p : corpus.projects) out.push_back(project_lifecycles(p, rules, env.par()));
    }
    return out;
}

json lifecycle_word(const RiskLifecycle& lc) {
    std::string word;
    for (auto t : lc.transitions) {
        if (!word.empty()) word += ' ';
        word += to_string(t);
    }
    return {{"risk_id", lc.risk_id}, {"origin", to_string(lc.origin)}, {"outcome", to_string(lc.outcome)},
            {"transitions", word}};
}

void run_lifecycle_ratios(Env& env, const LifecycleArgs& a) {
    auto projects = load_lifecycles(env, a);
    json per = json::array();
    std::vector<LifecycleCounts> counts;
    std::vector<RatioSet> ratios;
    for (const auto& p : projects) {
        auto r = compute_ratios(p.lifecycles);
        counts.push_back(r.counts);
        ratios.push_back(r);
        json row{{"project_id", p.project_id}, {"snapshot_count", p.snapshot_count}, {"ratios", ratio_json(r)}};
        if (a.detail) {
            json words = json::array();
            for (const auto& lc : p.lifecycles) words.push_back(lifecycle_word(lc));
            row["lifecycles"] = words;
        }
        per.push_back(row);
    }
    env.bundle.config["detail"] = a.detail;
    env.bundle.result = {{"projects", per},
                         {"pooled", ratio_json(aggregate_ratios(counts))},
                         {"mean_of_ratios", ratio_json(mean_of_ratios(ratios))}};
}

json style_row(const std::string& id, const RatioSet& r, const StyleThresholds& t) {
    auto label = classify_style(r, t);
    return {{"project_id", id},
            {"new_item", opt(r.new_item)},
            {"initial_realization", opt(r.initial_realization)},
            {"further_realized", opt(r.further_realized)},
            {"axis", label.axis ? json(to_string(*label.axis)) : json(nullptr)},
            {"care", label.care ? json(to_string(*label.care)) : json(nullptr)},
            {"style", label.to_string()}};
}

void run_lifecycle_styles(Env& env, const LifecycleArgs& a) {
    auto th_path = or_bundled(a.thresholds, "style_thresholds.json");
    auto thresholds = StyleThresholds::load(th_path);
    env.bundle.add_input(th_path);
    env.bundle.config["thresholds"] = thresholds.to_json();
    std::vector<std::pair<std::string, RatioSet>> ratios;
    if (!a.ratios.empty()) {
        if (!a.manifest.empty() || !a.lifecycle_csv.empty()) {
            throw UsageError("--ratios cannot be combined with --manifest or --lifecycle-csv");
        }
        env.bundle.config["ratios"] = a.ratios;
        json j;
        try {
            j = json::parse(read_file(a.ratios));
        } catch (const json::parse_error& e) {
            throw ParseError("ratios " + a.ratios + ": " + e.what());
        }
        env.bundle.add_input(a.ratios);
        if (j.contains("result")) j = j.at("result");
        if (!j.contains("projects") || !j.at("projects").is_array()) {
            throw ValidationError("ratios " + a.ratios + ": expected a lifecycle ratios report");
        }
        try {
            for (const auto& p : j.at("projects")) {
                auto c = counts_from_json(p.at("ratios").at("counts"));
                ratios.emplace_back(p.at("project_id").get<std::string>(), RatioSet::from_counts(c));
            }
        } catch (const json::exception& e) {
            throw ValidationError("ratios " + a.ratios + ": " + e.what());
        }
    } else {
        for (const auto& p : load_lifecycles(env, a)) ratios.emplace_back(p.project_id, compute_ratios(p.lifecycles));
    }
    json rows = json::array();
    std::map<std::string, std::size_t> tally;
    for (const auto& [id, r] : ratios) {
        auto row = style_row(id, r, thresholds);
        ++tally[row.at("style").get<std::string>()];
        rows.push_back(row);
    }
    env.bundle.result = {{"projects", rows}, {"style_counts", tally}};
}

void run_lifecycle_compare(Env& env, const LifecycleArgs& a) {
    if (a.groups.empty()) throw UsageError("--groups is required");
    if (a.metrics.empty()) throw UsageError("--metric needs at least one column");
    json j;
    try {
        j = json::parse(read_file(a.groups));
    } catch (const json::parse_error& e) {
        throw ParseError("groups " + a.groups + ": " + e.what());
    }
    env.bundle.add_input(a.groups);
    env.bundle.config["groups"] = a.groups;
    env.bundle.config["metrics"] = a.metrics;
    env.bundle.config["alpha"] = a.alpha;
    if (j.contains("result")) j = j.at("result");
    if (!j.contains("projects") || !j.at("projects").is_array()) {
        throw ValidationError("groups " + a.groups + ": expected a lifecycle styles report");
    }

    std::map<std::string, std::vector<double>> perf;
    if (!a.performance.empty()) {
        env.bundle.add_input(a.performance);
        env.bundle.config["performance"] = a.performance;
        auto table = csv::parse(read_file(a.performance));
        if (table.rows.empty()) throw ParseError("performance " + a.performance + ": missing header");
        std::map<std::string, std::size_t> col;
        for (std::size_t i = 0; i < table.rows[0].size(); ++i) col[to_lower_ascii(trim(table.rows[0][i]))] = i;
        if (!col.count("project_id")) throw ParseError("performance " + a.performance + ": missing column 'project_id'");
        for (const auto& m : a.metrics) {
            if (!col.count(m)) throw ParseError("performance " + a.performance + ": missing column '" + m + "'");
        }
        for (std::size_t r = 1; r < table.rows.size(); ++r) {
            const auto& row = table.rows[r];
            auto cell = [&](std::size_t i) { return i < row.size() ? std::string(trim(row[i])) : std::string(); };
            std::vector<double> point;
            for (const auto& m : a.metrics) {
                auto v = parse_number(cell(col.at(m)));
                if (!v) {
                    throw ParseError("performance " + a.performance + " line " + std::to_string(table.line_numbers[r]) +
                                     ": '" + m + "' is not a number");
                }
                point.push_back(*v);
            }
            perf[cell(col.at("project_id"))] = point;
        }
    }

    std::vector<DenseVector> planners, doers;
    std::vector<std::string> planner_ids, doer_ids, skipped;
    for (const auto& p : j.at("projects")) {
        auto id = p.value("project_id", std::string());
        std::string axis = p.contains("axis") && p.at("axis").is_string() ? p.at("axis").get<std::string>() : "";
        std::optional<DenseVector> point;
        if (auto it = perf.find(id); it != perf.end()) {
            point = it->second;
        } else if (a.performance.empty()) {
            DenseVector v;
            for (const auto& m : a.metrics) {
                if (!p.contains(m) || !p.at(m).is_number()) break;
                v.push_back(p.at(m).get<double>());
            }
            if (v.size() == a.metrics.size()) point = v;
        }
        if (axis.empty() || !point) {
            skipped.push_back(id);
            continue;
        }
        if (axis == "planner") {
            planners.push_back(*point);
            planner_ids.push_back(id);
        } else {
            doers.push_back(*point);
            doer_ids.push_back(id);
        }
    }
    auto h = hotelling_t2(planners, doers, a.alpha);
    auto group_means = [&](const std::vector<DenseVector>& pts) {
        json means = json::object();
        for (std::size_t k = 0; k < a.metrics.size(); ++k) {
            double s = 0.0;
            for (const auto& pt : pts) s += pt[k];
            means[a.metrics[k]] = s / static_cast<double>(pts.size());
        }
        return means;
    };
    env.bundle.result = {{"planners", {{"projects", planner_ids}, {"means", group_means(planners)}}},
                         {"doers", {{"projects", doer_ids}, {"means", group_means(doers)}}},
                         {"skipped", skipped},
                         {"hotelling",
                          {{"t_squared", h.t_squared},
                           {"critical_value", h.critical_value},
                           {"p_value", h.p_value},
                           {"significant", h.significant},
                           {"alpha", h.alpha},
                           {"dimension", h.dimension},
                           {"group_sizes", {h.size_a, h.size_b}},
                           {"pooled_sd", h.pooled_sd}}}};
}

struct RbsArgs {
    std::string rbs;
    std::string manifest;
    std::string coverage_path;
    double threshold = 0.6;
    TextOptions text;
};

Rbs load_rbs(Env& env, const RbsArgs& a) {
    auto path = or_bundled(a.rbs, "rbs_table21.json");
    auto rbs = Rbs::load(path);
    env.bundle.add_input(path);
    env.bundle.config["rbs"] = path.string();
    return rbs;
}

void run_rbs_coverage(Env& env, const RbsArgs& a) {
    env.bundle.config["manifest"] = a.manifest;
    env.bundle.config["threshold"] = a.threshold;
    auto rbs = load_rbs(env, a);
    auto corpus = load_manifest(env, a.manifest);
    auto encoder = make_encoder(env, a.text);
    CoverageOptions opts{a.threshold, a.text.use_description, env.par()};
    std::vector<CoverageReport> reports;
    json per = json::array();
    std::size_t risks = 0, covered = 0;
    for (const auto& p : corpus.projects) {
        auto items = p.consolidated_register();
        if (items.empty()) continue;
        reports.push_back(coverage(rbs, items, encoder, opts, p.project_id));
        per.push_back(reports.back().to_json());
        risks += reports.back().rows.size();
        covered += reports.back().covered_count;
    }
    json dist = nullptr;
    if (covered > 0) {
        dist = json::array();
        for (const auto& s : category_distribution(rbs, reports)) {
            dist.push_back({{"category", s.category}, {"count", s.count}, {"fraction", s.fraction}});
        }
    }
    env.bundle.result = {{"rbs", {{"category_count", rbs.categories.size()}, {"item_count", rbs.item_count()}}},
                         {"threshold", a.threshold},
                         {"projects", per},
                         {"overall",
                          {{"risk_count", risks},
                           {"covered_count", covered},
                           {"coverage_fraction", risks ? json(static_cast<double>(covered) / static_cast<double>(risks))
                                                       : json(nullptr)}}},
                         {"category_distribution", dist}};
}

std::string run_rbs_cooccur(Env& env, const RbsArgs& a) {
    if (a.coverage_path.empty()) throw UsageError("--coverage is required");
    auto rbs = load_rbs(env, a);
    json j;
    try {
        j = json::parse(read_file(a.coverage_path));
    } catch (const json::parse_error& e) {
        throw ParseError("coverage " + a.coverage_path + ": " + e.what());
    }
    if (j.contains("result")) j = j.at("result");
    if (!j.contains("projects") || !j.at("projects").is_array()) {
        throw ValidationError("coverage " + a.coverage_path + ": expected an rbs coverage report");
    }
    std::vector<CoverageReport> reports;
    for (const auto& p : j.at("projects")) reports.push_back(CoverageReport::from_json(p));
    auto m = cooccurrence(rbs, reports);
    std::string out = "item_a,item_b,count\n";
    for (const auto& pr : ranked_pairs(m)) out += csv::join({pr.item_a, pr.item_b, std::to_string(pr.count)}) + "\n";
    return out;
}

// ---------------------------------------------------------------------------

std::vector<std::string> command_echo(int argc, const char* const* argv) {
    // output location and worker count do not change results
    static const std::set<std::string> dropped{"--out", "--jobs", "-o", "-j"};
    std::vector<std::string> out;
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (dropped.count(arg)) {
            ++i;
            continue;
        }
        if (arg.size() > 2 && arg[0] == '-' && (arg[1] == 'o' || arg[1] == 'j')) continue;  // -o<path>, -j<n>
        auto eq = arg.find('=');
        if (eq != std::string::npos && dropped.count(arg.substr(0, eq))) continue;
        out.push_back(arg);
    }
    return out;
}

const CLI::App* deepest(const CLI::App* app) {
    for (const auto* sub : app->get_subcommands()) return deepest(sub);
    return app;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Risk register analytics: similarity, templates, lifecycles and RBS coverage.", "riskbench"};
    app.set_version_flag("--version", std::string("riskbench ") + RISKBENCH_VERSION);
    app.require_subcommand(1);
    app.fallthrough();

    Env env;
    env.out = &out;
    env.err = &err;
    app.add_option("-j,--jobs", env.jobs, "Worker threads for pairwise kernels")->check(CLI::PositiveNumber);
    app.add_option("--scales", env.scales, "Band edges and risk matrix (JSON)");

    std::function<void()> action;
    auto with_out = [&](CLI::App* sub) {
        sub->add_option("-o,--out", env.out_path, "Report path (default: stdout)");
        return sub;
    };
    const CLI::Range unit(0.0, 1.0);

    std::string ingest_manifest;
    auto* ingest = with_out(app.add_subcommand("ingest", "Load and normalize a corpus"));
    ingest->add_option("--manifest", ingest_manifest, "Corpus manifest")->required();
    ingest->callback([&] { action = [&] { run_ingest(env, ingest_manifest); }; });

    SimilarityArgs sim;
    auto* similarity = app.add_subcommand("similarity", "Similarity between project registers");
    similarity->require_subcommand(1);
    auto sim_common = [&](CLI::App* sub) {
        with_out(sub);
        sub->add_option("--manifest", sim.manifest, "Corpus manifest")->required();
        sub->add_option("--group-by", sim.group_by, "none|delivery_method|delivery_family|project_type|size_band|jurisdiction");
        sub->add_option("--t-test", sim.t_test, "welch|pooled")->check(CLI::IsMember({"welch", "pooled"}));
        return sub;
    };
    auto* docs = sim_common(similarity->add_subcommand("docs", "TF-IDF whole-register similarity"));
    docs->add_option("--stopwords", sim.text.stopwords, "Stop-word list");
    docs->add_option("--heatmap", sim.heatmap, "Also write a project x project CSV");
    docs->callback([&] { action = [&] { run_similarity_docs(env, sim); }; });
    auto* risks = sim_common(similarity->add_subcommand("risks", "Best-match risk similarity between projects"));
    add_text_options(risks, sim.text);
    risks->add_option("--heatmap", sim.heatmap, "Also write a project x project CSV");
    risks->callback([&] { action = [&] { run_similarity_risks(env, sim); }; });
    auto* pooling = sim_common(similarity->add_subcommand("pooling", "One project against all others pooled"));
    add_text_options(pooling, sim.text);
    pooling->add_option("--project", sim.project, "Project id")->required();
    pooling->callback([&] { action = [&] { run_similarity_pooling(env, sim); }; });
    auto* evaluation = sim_common(similarity->add_subcommand("evaluation", "Assessment agreement of matched risks"));
    add_text_options(evaluation, sim.text);
    evaluation->add_option("--min-score", sim.min_scores, "Match score cut-offs")->delimiter(',')->check(unit);
    evaluation->callback([&] { action = [&] { run_similarity_evaluation(env, sim); }; });

    TemplateArgs tpl;
    auto* templ = app.add_subcommand("template", "Risk register templates");
    templ->require_subcommand(1);
    auto tpl_build_opts = [&](CLI::App* sub) {
        sub->add_option("--sort", tpl.sort, "prevalence|cost|schedule");
        sub->add_option("--top", tpl.top, "Entries kept")->check(CLI::PositiveNumber);
        sub->add_option("--match-threshold", tpl.match_threshold, "Grouping cosine threshold")->check(unit);
        sub->add_option("--label-threshold", tpl.label_threshold, "True-positive cosine threshold")->check(unit);
        sub->add_option("--categories", tpl.categories, "Category set (default: bundled)");
        sub->add_flag("--label-only", tpl.label_only, "Classify against category labels only");
        add_text_options(sub, tpl.text);
    };
    auto* build = with_out(templ->add_subcommand("build", "Build a ranked template"));
    build->add_option("--manifest", tpl.manifest, "Corpus manifest")->required();
    build->add_option("--filter", tpl.filter, "type=..,size=..,delivery=..,location=..");
    tpl_build_opts(build);
    build->callback([&] { action = [&] { run_template_build(env, tpl); }; });
    auto* eval = with_out(templ->add_subcommand("eval", "Score a template against test registers"));
    eval->add_option("--template", tpl.template_path, "Template report or entry array")->required();
    eval->add_option("--register", tpl.registers, "Test register (repeatable)")->required();
    eval->add_option("--label-threshold", tpl.label_threshold, "True-positive cosine threshold")->check(unit);
    add_text_options(eval, tpl.text);
    eval->callback([&] { action = [&] { run_template_eval(env, tpl); }; });
    auto* sens = with_out(templ->add_subcommand("sensitivity", "Filtered vs unfiltered template accuracy"));
    sens->add_option("--manifest", tpl.manifest, "Corpus manifest")->required();
    sens->add_option("--test-manifest", tpl.test_manifest, "Test projects manifest")->required();
    sens->add_option("--characteristic", tpl.characteristic, "project_type|size_band|delivery_method|jurisdiction|all");
    tpl_build_opts(sens);
    sens->callback([&] { action = [&] { run_template_sensitivity(env, tpl); }; });

    LifecycleArgs lc;
    auto* lifecycle = app.add_subcommand("lifecycle", "Risk lifecycle ratios and styles");
    lifecycle->require_subcommand(1);
    auto lc_inputs = [&](CLI::App* sub) {
        sub->add_option("--manifest", lc.manifest, "Corpus manifest");
        sub->add_option("--lifecycle-csv", lc.lifecycle_csv, "project_id,risk_id,snapshot,state table");
        sub->add_option("--rules", lc.rules, "State inference rules (default: bundled)");
    };
    auto* ratios = with_out(lifecycle->add_subcommand("ratios", "Per-project and pooled ratios"));
    lc_inputs(ratios);
    ratios->add_flag("--detail", lc.detail, "Include every risk's transition word");
    ratios->callback([&] { action = [&] { run_lifecycle_ratios(env, lc); }; });
    auto* styles = with_out(lifecycle->add_subcommand("styles", "Planner/doer style labels"));
    lc_inputs(styles);
    styles->add_option("--ratios", lc.ratios, "Existing ratios report");
    styles->add_option("--thresholds", lc.thresholds, "Style thresholds (default: bundled)");
    styles->callback([&] { action = [&] { run_lifecycle_styles(env, lc); }; });
    auto* compare = with_out(lifecycle->add_subcommand("compare", "Hotelling T^2 of planners vs doers"));
    compare->add_option("--groups", lc.groups, "Styles report")->required();
    compare->add_option("--performance", lc.performance, "CSV with project_id and metric columns");
    compare->add_option("--metric", lc.metrics, "Metric columns")->delimiter(',');
    compare->add_option("--alpha", lc.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
    compare->callback([&] { action = [&] { run_lifecycle_compare(env, lc); }; });

    RbsArgs rb;
    auto* rbs = app.add_subcommand("rbs", "Risk breakdown structure coverage");
    rbs->require_subcommand(1);
    auto* cov = with_out(rbs->add_subcommand("coverage", "Match registers against the RBS"));
    cov->add_option("--rbs", rb.rbs, "RBS file (default: bundled)");
    cov->add_option("--manifest", rb.manifest, "Corpus manifest")->required();
    cov->add_option("--threshold", rb.threshold, "Coverage cosine threshold")->check(unit);
    add_text_options(cov, rb.text);
    cov->callback([&] { action = [&] { run_rbs_coverage(env, rb); }; });
    auto* cooc = with_out(rbs->add_subcommand("cooccur", "Pairwise RBS item co-occurrence CSV"));
    cooc->add_option("--coverage", rb.coverage_path, "Coverage report")->required();
    cooc->add_option("--rbs", rb.rbs, "RBS file (default: bundled)");
    cooc->callback([&] {
        action = [&] {
            auto csv_text = run_rbs_cooccur(env, rb);
            if (env.out_path.empty()) {
                out << csv_text;
            } else {
                write_text(env.out_path, csv_text);
            }
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        if (code == 0) return kExitOk;
        err << deepest(&app)->help();
        return kExitUsage;
    }

    env.bundle.tool_version = RISKBENCH_VERSION;
    env.bundle.command = command_echo(argc, argv);
    if (!env.scales.empty()) env.bundle.config["scales"] = env.scales;
    try {
        action();
        if (!cooc->parsed()) emit(env);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n" << deepest(&app)->help();
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitOk;
}

}  // namespace riskbench
