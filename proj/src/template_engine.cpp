#include "riskbench/template_engine.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "riskbench/errors.hpp"
#include "riskbench/util.hpp"

namespace riskbench {

// ---------------------------------------------------------------------------
// filtering

namespace {

bool equals_ci(std::string_view a, std::string_view b) { return to_lower_ascii(trim(a)) == to_lower_ascii(trim(b)); }

std::optional<std::string> criterion(std::string_view value) {
    auto v = trim(value);
    if (v.empty() || equals_ci(v, "all")) return std::nullopt;
    return std::string(v);
}

}  // namespace

FilterCriteria FilterCriteria::parse(std::string_view text) {
    FilterCriteria c;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto comma = text.find(',', pos);
        auto part = trim(text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        pos = comma == std::string_view::npos ? text.size() + 1 : comma + 1;
        if (part.empty()) continue;
        auto eq = part.find('=');
        if (eq == std::string_view::npos) throw ValidationError("filter: expected key=value, got '" + std::string(part) + "'");
        auto key = to_lower_ascii(trim(part.substr(0, eq)));
        auto value = criterion(part.substr(eq + 1));
        if (key == "type" || key == "project_type") {
            c.project_type = value;
        } else if (key == "size" || key == "size_band") {
            if (value) {
                c.size_band = parse_size_band(*value);
                if (!c.size_band) throw ValidationError("filter: unknown size band '" + *value + "'");
            } else {
                c.size_band.reset();
            }
        } else if (key == "delivery" || key == "delivery_method") {
            c.delivery_method = value;
        } else if (key == "location" || key == "jurisdiction") {
            c.jurisdiction = value;
        } else {
            throw ValidationError("filter: unknown key '" + key + "'");
        }
    }
    return c;
}

FilterCriteria FilterCriteria::matching(const ProjectRecord& p, GroupKey key) {
    FilterCriteria c;
    switch (key) {
        case GroupKey::None: break;
        case GroupKey::ProjectType: c.project_type = p.project_type; break;
        case GroupKey::SizeBand:
            if (!p.size_band) throw ValidationError("project '" + p.project_id + "' has no size band");
            c.size_band = p.size_band;
            break;
        case GroupKey::DeliveryMethod: c.delivery_method = p.delivery_method; break;
        case GroupKey::Jurisdiction: c.jurisdiction = p.jurisdiction; break;
        case GroupKey::DeliveryFamily:
            throw ValidationError("delivery_family is not a filter characteristic");
    }
    return c;
}

bool FilterCriteria::matches(const ProjectRecord& p) const {
    if (project_type && !equals_ci(*project_type, p.project_type)) return false;
    if (size_band && (!p.size_band || *p.size_band != *size_band)) return false;
    if (delivery_method && !equals_ci(*delivery_method, p.delivery_method)) return false;
    if (jurisdiction && !equals_ci(*jurisdiction, p.jurisdiction)) return false;
    return true;
}

nlohmann::json FilterCriteria::to_json() const {
    auto or_all = [](const std::optional<std::string>& v) { return v ? *v : std::string("all"); };
    return {{"project_type", or_all(project_type)},
            {"size_band", size_band ? std::string(to_string(*size_band)) : std::string("all")},
            {"delivery_method", or_all(delivery_method)},
            {"jurisdiction", or_all(jurisdiction)}};
}

FilterCriteria FilterCriteria::from_json(const nlohmann::json& j) {
    FilterCriteria c;
    if (!j.is_object()) return c;
    auto get = [&](const char* k) -> std::optional<std::string> {
        if (!j.contains(k) || !j.at(k).is_string()) return std::nullopt;
        return criterion(j.at(k).get<std::string>());
    };
    c.project_type = get("project_type");
    c.delivery_method = get("delivery_method");
    c.jurisdiction = get("jurisdiction");
    if (auto sb = get("size_band")) c.size_band = parse_size_band(*sb);
    return c;
}

FilteredProjects filter_projects(const Corpus& corpus, const FilterCriteria& criteria) {
    FilteredProjects out;
    for (const auto& p : corpus.projects) {
        if (criteria.matches(p)) out.projects.push_back(p);
    }
    out.small_sample_warning = out.projects.size() < kSmallSampleProjects;
    return out;
}

// ---------------------------------------------------------------------------
// grouping

std::vector<RiskGroup> group_risks(std::span<const ProjectRecord> projects, const TextEncoder& encoder,
                                   const GroupingOptions& opts) {
    std::vector<GroupMember> all;
    for (const auto& p : projects) {
        for (const auto& r : p.consolidated_register()) {
            all.push_back({p.project_id, r.risk_id, risk_text(r, opts.use_description), r.assessment});
        }
    }
    std::vector<std::string> texts;
    texts.reserve(all.size());
    for (const auto& m : all) texts.push_back(m.text);
    auto embeddings = encoder.encode_all(texts, opts.par);
    std::vector<DenseVector> vecs;
    vecs.reserve(embeddings.size());
    for (auto& e : embeddings) vecs.push_back(std::move(e.vector));
    VectorSet set(vecs);

    const double project_count = static_cast<double>(projects.size());
    std::vector<bool> assigned(all.size(), false);
    std::vector<RiskGroup> groups;
    std::vector<std::size_t> open;
    for (std::size_t seed = 0; seed < all.size(); ++seed) {
        if (assigned[seed]) continue;
        assigned[seed] = true;
        RiskGroup g;
        g.seed_project_id = all[seed].project_id;
        g.seed_risk_id = all[seed].risk_id;
        g.members.push_back(all[seed]);

        open.clear();
        for (std::size_t k = seed + 1; k < all.size(); ++k) {
            if (!assigned[k]) open.push_back(k);
        }
        auto scores = cosine_to_seed(set, seed, open, opts.par);
        for (std::size_t k = 0; k < open.size(); ++k) {
            if (scores[k] >= opts.threshold) {
                assigned[open[k]] = true;
                g.members.push_back(all[open[k]]);
            }
        }
        for (const auto& m : g.members) {
            if (std::find(g.source_projects.begin(), g.source_projects.end(), m.project_id) == g.source_projects.end()) {
                g.source_projects.push_back(m.project_id);
            }
        }
        g.prevalence = static_cast<double>(g.source_projects.size()) / project_count;
        groups.push_back(std::move(g));
    }
    return groups;
}

void summarize_group(RiskGroup& group) {
    if (group.members.empty()) throw EmptyInputError("summarize_group: empty group");
    std::map<std::string, std::pair<std::size_t, std::string>> freq;  // normalized -> (count, first spelling)
    for (const auto& m : group.members) {
        auto key = normalize_text(m.text);
        auto [it, inserted] = freq.try_emplace(key, 0, std::string(trim(m.text)));
        ++it->second.first;
    }
    // std::map iterates keys ascending, so strict > keeps the smallest on ties.
    const std::pair<std::size_t, std::string>* best = nullptr;
    for (const auto& [key, entry] : freq) {
        if (!best || entry.first > best->first) best = &entry;
    }
    group.representative_text = best->second;

    auto average = [&](auto band_of) -> std::optional<double> {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& m : group.members) {
            if (auto b = band_of(m.assessment)) {
                sum += *b;
                ++n;
            }
        }
        if (n == 0) return std::nullopt;
        return sum / static_cast<double>(n);
    };
    group.avg_probability_band = average([](const Assessment& a) { return a.probability_band; });
    group.avg_cost_band = average([](const Assessment& a) { return a.cost_band; });
    group.avg_schedule_band = average([](const Assessment& a) { return a.schedule_band; });
}

// ---------------------------------------------------------------------------
// classification

CategorySet CategorySet::load(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("category set " + path.string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("categories") || !j.at("categories").is_array()) {
        throw ValidationError("category set " + path.string() + ": expected {\"categories\": [...]}");
    }
    CategorySet set;
    for (const auto& c : j.at("categories")) {
        if (!c.contains("label") || !c.at("label").is_string()) {
            throw ValidationError("category set " + path.string() + ": every category needs a label");
        }
        set.categories.push_back({c.at("label").get<std::string>(), c.value("description", std::string())});
    }
    set.validate();
    return set;
}

void CategorySet::validate() const {
    if (categories.empty()) throw ValidationError("category set is empty");
    std::set<std::string> seen;
    for (const auto& c : categories) {
        if (trim(c.label).empty()) throw ValidationError("category set: empty label");
        if (!seen.insert(normalize_text(c.label)).second) {
            throw ValidationError("category set: duplicate label '" + c.label + "'");
        }
    }
}

RiskClassifier::RiskClassifier(const CategorySet& categories, const TextEncoder& encoder, bool label_only)
    : encoder_(&encoder) {
    categories.validate();
    std::vector<DenseVector> vecs;
    for (const auto& c : categories.categories) {
        labels_.push_back(c.label);
        std::string text = label_only || c.description.empty() ? c.label : c.label + " " + c.description;
        vecs.push_back(encoder.encode(text).vector);
    }
    category_vectors_ = VectorSet(vecs);
}

std::vector<double> RiskClassifier::scores(std::string_view text) const {
    std::vector<DenseVector> q{encoder_->encode(text).vector};
    return cosine_matrix_serial(VectorSet(q), category_vectors_);
}

Classification RiskClassifier::classify(std::string_view text) const {
    auto e = encoder_->encode(text);
    std::vector<DenseVector> q{e.vector};
    auto best = best_matches_serial(VectorSet(q), category_vectors_).front();
    return {labels_[best.index], best.index, best.score, e.all_oov};
}

Classification classify_risk(std::string_view text, const CategorySet& categories, const TextEncoder& encoder,
                             bool label_only) {
    return RiskClassifier(categories, encoder, label_only).classify(text);
}

// ---------------------------------------------------------------------------
// templates

std::optional<SortKey> parse_sort_key(std::string_view text) {
    auto t = to_lower_ascii(trim(text));
    if (t == "prevalence") return SortKey::Prevalence;
    if (t == "cost" || t == "cost_impact") return SortKey::Cost;
    if (t == "schedule" || t == "schedule_impact") return SortKey::Schedule;
    return std::nullopt;
}

std::string_view to_string(SortKey key) {
    switch (key) {
        case SortKey::Prevalence: return "prevalence";
        case SortKey::Cost: return "cost";
        case SortKey::Schedule: return "schedule";
    }
    return "";
}

namespace {

nlohmann::json optional_number(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> read_optional_number(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    if (!j.at(key).is_number()) throw ValidationError(std::string("template entry: '") + key + "' must be a number");
    return j.at(key).get<double>();
}

}  // namespace

nlohmann::json RiskTemplate::entries_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries) {
        arr.push_back({{"rank", e.rank},
                       {"text", e.text},
                       {"category", e.category},
                       {"prevalence", e.prevalence},
                       {"avg_probability", optional_number(e.avg_probability)},
                       {"avg_cost", optional_number(e.avg_cost)},
                       {"avg_schedule", optional_number(e.avg_schedule)},
                       {"group_size", e.group_size},
                       {"source_projects", e.source_projects}});
    }
    return arr;
}

std::vector<TemplateEntry> RiskTemplate::entries_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ValidationError("template: expected an array of entries");
    std::vector<TemplateEntry> out;
    for (const auto& e : j) {
        if (!e.is_object() || !e.contains("text") || !e.at("text").is_string()) {
            throw ValidationError("template: every entry needs a text");
        }
        TemplateEntry t;
        t.rank = e.value("rank", static_cast<int>(out.size()) + 1);
        t.text = e.at("text").get<std::string>();
        t.category = e.value("category", std::string());
        t.prevalence = e.value("prevalence", 0.0);
        t.avg_probability = read_optional_number(e, "avg_probability");
        t.avg_cost = read_optional_number(e, "avg_cost");
        t.avg_schedule = read_optional_number(e, "avg_schedule");
        t.group_size = e.value("group_size", std::size_t{0});
        if (e.contains("source_projects") && e.at("source_projects").is_array()) {
            t.source_projects = e.at("source_projects").get<std::vector<std::string>>();
        }
        out.push_back(std::move(t));
    }
    if (out.empty()) throw ValidationError("template: no entries");
    return out;
}

RiskTemplate build_template(std::span<const RiskGroup> groups, SortKey sort_key, int top_n,
                            const FilterCriteria& filter, std::size_t source_project_count) {
    if (top_n <= 0) throw ValidationError("template: top_n must be positive");
    if (groups.empty()) throw EmptyInputError("template: no risk groups");

    auto key_of = [&](const RiskGroup& g) -> std::optional<double> {
        switch (sort_key) {
            case SortKey::Prevalence: return g.prevalence;
            case SortKey::Cost: return g.avg_cost_band;
            case SortKey::Schedule: return g.avg_schedule_band;
        }
        return std::nullopt;
    };
    std::vector<const RiskGroup*> order;
    for (const auto& g : groups) order.push_back(&g);
    std::stable_sort(order.begin(), order.end(), [&](const RiskGroup* a, const RiskGroup* b) {
        auto ka = key_of(*a);
        auto kb = key_of(*b);
        if (ka.has_value() != kb.has_value()) return ka.has_value();
        if (ka && *ka != *kb) return *ka > *kb;
        if (a->prevalence != b->prevalence) return a->prevalence > b->prevalence;
        return a->representative_text < b->representative_text;
    });

    RiskTemplate t;
    t.sort_key = sort_key;
    t.source_filter = filter;
    t.source_project_count = source_project_count;
    auto n = std::min(order.size(), static_cast<std::size_t>(top_n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& g = *order[i];
        t.entries.push_back({static_cast<int>(i) + 1, g.representative_text, g.category, g.prevalence,
                             g.avg_probability_band, g.avg_cost_band, g.avg_schedule_band, g.members.size(),
                             g.source_projects});
    }
    return t;
}

EvalCounts EvalCounts::from_counts(std::size_t tp, std::size_t fn, std::size_t fp) {
    EvalCounts c;
    c.tp = tp;
    c.fn = fn;
    c.fp = fp;
    const double t = static_cast<double>(tp);
    if (tp + fn > 0) c.recall = t / static_cast<double>(tp + fn);
    if (tp + fp > 0) c.precision = t / static_cast<double>(tp + fp);
    if (tp + fn + fp > 0) c.f1 = t / (t + 0.5 * static_cast<double>(fn + fp));
    return c;
}

TemplateEvaluation evaluate_template(std::span<const TemplateEntry> entries, std::span<const RiskItem> test_register,
                                     const TextEncoder& encoder, double label_threshold, bool use_description,
                                     Parallelism par) {
    if (entries.empty()) throw EmptyInputError("evaluate_template: empty template");
    if (test_register.empty()) throw EmptyInputError("evaluate_template: empty test register");
    std::vector<std::string> entry_texts;
    for (const auto& e : entries) entry_texts.push_back(e.text);
    std::vector<std::string> test_texts;
    for (const auto& r : test_register) test_texts.push_back(risk_text(r, use_description));

    auto to_set = [&](const std::vector<std::string>& texts) {
        auto emb = encoder.encode_all(texts, par);
        std::vector<DenseVector> vecs;
        for (auto& e : emb) vecs.push_back(std::move(e.vector));
        return VectorSet(vecs);
    };
    auto matches = best_matches(to_set(test_texts), to_set(entry_texts), par);

    TemplateEvaluation out;
    std::vector<bool> used(entries.size(), false);
    std::size_t tp = 0, fn = 0;
    for (std::size_t i = 0; i < matches.size(); ++i) {
        bool hit = matches[i].score >= label_threshold;
        if (hit) {
            ++tp;
            used[matches[i].index] = true;
        } else {
            ++fn;
        }
        out.rows.push_back({test_register[i].risk_id, test_texts[i], entries[matches[i].index].rank,
                            matches[i].score, hit});
    }
    auto fp = static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
    out.counts = EvalCounts::from_counts(tp, fn, fp);
    return out;
}

RiskTemplate generate_template(const Corpus& corpus, const FilterCriteria& filter, const TextEncoder& encoder,
                               const CategorySet& categories, const TemplateOptions& opts,
                               bool* small_sample_warning) {
    auto selected = filter_projects(corpus, filter);
    if (small_sample_warning) *small_sample_warning = selected.small_sample_warning;
    if (selected.projects.empty()) throw EmptyInputError("template: filter selects no projects");
    auto groups = group_risks(selected.projects, encoder, {opts.match_threshold, opts.use_description, opts.par});
    RiskClassifier classifier(categories, encoder, opts.category_label_only);
    for (auto& g : groups) {
        summarize_group(g);
        auto c = classifier.classify(g.representative_text);
        g.category = c.label;
        g.category_score = c.score;
    }
    return build_template(groups, opts.sort_key, opts.top_n, filter, selected.projects.size());
}

SensitivityReport sensitivity_run(const Corpus& corpus, const Corpus& test_projects, GroupKey characteristic,
                                  const TextEncoder& encoder, const CategorySet& categories,
                                  const TemplateOptions& opts) {
    for (const auto& t : test_projects.projects) {
        if (corpus.find(t.project_id)) {
            throw ValidationError("sensitivity: test project '" + t.project_id + "' is also in the corpus");
        }
    }
    SensitivityReport report;
    report.characteristic = characteristic;
    auto baseline = generate_template(corpus, {}, encoder, categories, opts);

    std::size_t btp = 0, bfn = 0, bfp = 0, ftp = 0, ffn = 0, ffp = 0;
    for (const auto& test : test_projects.projects) {
        SensitivityEntry entry;
        entry.project_id = test.project_id;
        entry.characteristic_value = group_value(test, characteristic);
        auto register_items = test.consolidated_register();
        if (register_items.empty()) {
            entry.skipped = true;
            entry.skip_reason = "test project has no risks";
            report.entries.push_back(std::move(entry));
            continue;
        }
        auto filter = FilterCriteria::matching(test, characteristic);
        auto selected = filter_projects(corpus, filter);
        entry.filtered_project_count = selected.projects.size();
        if (selected.projects.empty()) {
            entry.skipped = true;
            entry.skip_reason = "no corpus project matches " + std::string(to_string(characteristic)) + "=" +
                                entry.characteristic_value;
            report.entries.push_back(std::move(entry));
            continue;
        }
        entry.baseline = evaluate_template(baseline.entries, register_items, encoder, opts.label_threshold,
                                           opts.use_description, opts.par)
                             .counts;
        auto filtered = characteristic == GroupKey::None ? baseline
                                                         : generate_template(corpus, filter, encoder, categories, opts);
        entry.filtered = evaluate_template(filtered.entries, register_items, encoder, opts.label_threshold,
                                           opts.use_description, opts.par)
                             .counts;
        btp += entry.baseline.tp;
        bfn += entry.baseline.fn;
        bfp += entry.baseline.fp;
        ftp += entry.filtered.tp;
        ffn += entry.filtered.fn;
        ffp += entry.filtered.fp;
        report.entries.push_back(std::move(entry));
    }
    report.baseline_overall = EvalCounts::from_counts(btp, bfn, bfp);
    report.filtered_overall = EvalCounts::from_counts(ftp, ffn, ffp);
    auto delta = [](const std::optional<double>& f, const std::optional<double>& b) -> std::optional<double> {
        if (!f || !b) return std::nullopt;
        return *f - *b;
    };
    report.delta_recall = delta(report.filtered_overall.recall, report.baseline_overall.recall);
    report.delta_precision = delta(report.filtered_overall.precision, report.baseline_overall.precision);
    report.delta_f1 = delta(report.filtered_overall.f1, report.baseline_overall.f1);
    return report;
}

}  // namespace riskbench
