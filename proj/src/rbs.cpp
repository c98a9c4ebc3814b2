#include "riskbench/rbs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "riskbench/errors.hpp"
#include "riskbench/util.hpp"

namespace riskbench {

Rbs Rbs::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("categories") || !j.at("categories").is_array()) {
        throw ValidationError("rbs: expected {\"categories\": [...]}");
    }
    Rbs rbs;
    for (const auto& c : j.at("categories")) {
        if (!c.is_object() || !c.contains("name") || !c.at("name").is_string()) {
            throw ValidationError("rbs: every category needs a name");
        }
        RbsCategory cat;
        cat.name = c.at("name").get<std::string>();
        if (c.contains("items")) {
            if (!c.at("items").is_array()) throw ValidationError("rbs: items of '" + cat.name + "' must be an array");
            for (const auto& it : c.at("items")) {
                if (!it.is_object() || !it.contains("text") || !it.at("text").is_string()) {
                    throw ValidationError("rbs: every item of '" + cat.name + "' needs a text");
                }
                RbsItem item;
                item.text = it.at("text").get<std::string>();
                if (it.contains("frequency")) {
                    if (!it.at("frequency").is_number_integer()) {
                        throw ValidationError("rbs: frequency of '" + item.text + "' must be an integer");
                    }
                    item.frequency = it.at("frequency").get<int>();
                }
                cat.items.push_back(std::move(item));
            }
        }
        rbs.categories.push_back(std::move(cat));
    }
    rbs.validate();
    return rbs;
}

Rbs Rbs::load(const std::filesystem::path& path) {
    try {
        return from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("rbs " + path.string() + ": " + e.what());
    }
}

void Rbs::validate() const {
    if (categories.empty()) throw ValidationError("rbs: no categories");
    std::set<std::string> names;
    std::set<std::string> texts;
    for (const auto& c : categories) {
        if (trim(c.name).empty()) throw ValidationError("rbs: empty category name");
        if (!names.insert(normalize_text(c.name)).second) throw ValidationError("rbs: duplicate category '" + c.name + "'");
        if (c.items.empty()) throw ValidationError("rbs: category '" + c.name + "' has no items");
        for (const auto& item : c.items) {
            if (trim(item.text).empty()) throw ValidationError("rbs: empty item text in '" + c.name + "'");
            if (!texts.insert(normalize_text(item.text)).second) {
                throw ValidationError("rbs: duplicate item '" + item.text + "'");
            }
            if (item.frequency < 1) throw ValidationError("rbs: frequency of '" + item.text + "' must be >= 1");
        }
    }
}

std::size_t Rbs::item_count() const {
    std::size_t n = 0;
    for (const auto& c : categories) n += c.items.size();
    return n;
}

std::vector<std::string> Rbs::item_texts() const {
    std::vector<std::string> out;
    for (const auto& c : categories) {
        for (const auto& item : c.items) out.push_back(item.text);
    }
    return out;
}

std::vector<std::size_t> Rbs::item_categories() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < categories.size(); ++k) out.insert(out.end(), categories[k].items.size(), k);
    return out;
}

namespace {

struct MeanAcc {
    double sum = 0.0;
    std::size_t n = 0;
    void add(const std::optional<double>& v) {
        if (v) {
            sum += *v;
            ++n;
        }
    }
    MeanWithCount result() const {
        MeanWithCount m;
        m.count = n;
        if (n) m.mean = sum / static_cast<double>(n);
        return m;
    }
};

nlohmann::json mean_json(const MeanWithCount& m) {
    return {{"count", m.count}, {"mean", m.mean ? nlohmann::json(*m.mean) : nlohmann::json(nullptr)}};
}

MeanWithCount mean_from_json(const nlohmann::json& j) {
    MeanWithCount m;
    if (!j.is_object()) return m;
    m.count = j.value("count", std::size_t{0});
    if (j.contains("mean") && j.at("mean").is_number()) m.mean = j.at("mean").get<double>();
    return m;
}

}  // namespace

CoverageReport coverage(const Rbs& rbs, std::span<const RiskItem> register_items, const TextEncoder& encoder,
                        const CoverageOptions& opts, std::string project_id) {
    if (register_items.empty()) throw EmptyInputError("coverage: empty register");
    auto item_texts = rbs.item_texts();
    auto item_cats = rbs.item_categories();

    std::vector<std::string> risk_texts;
    for (const auto& r : register_items) risk_texts.push_back(risk_text(r, opts.use_description));
    auto risk_emb = encoder.encode_all(risk_texts, opts.par);
    auto item_emb = encoder.encode_all(item_texts, opts.par);
    std::vector<DenseVector> rv, iv;
    for (auto& e : risk_emb) rv.push_back(e.vector);
    for (auto& e : item_emb) iv.push_back(std::move(e.vector));
    auto best = best_matches(VectorSet(rv), VectorSet(iv), opts.par);

    CoverageReport rep;
    rep.project_id = std::move(project_id);
    rep.threshold = opts.threshold;
    MeanAcc cc, cs, uc, us;
    for (std::size_t i = 0; i < register_items.size(); ++i) {
        const auto& item = register_items[i];
        CoverageRow row;
        row.risk_id = item.risk_id;
        row.text = risk_texts[i];
        row.item_index = best[i].index;
        row.best_item = item_texts[best[i].index];
        row.best_category = rbs.categories[item_cats[best[i].index]].name;
        row.score = best[i].score;
        row.covered = row.score >= opts.threshold;
        row.used_fallback = risk_emb[i].used_fallback;
        row.register_category = item.category_label;

        auto bin = static_cast<std::size_t>(std::clamp(std::floor(row.score * 10.0), 0.0, 9.0));
        ++rep.score_histogram[bin];
        const auto& a = item.assessment;
        if (row.covered) {
            ++rep.covered_count;
            cc.add(a.raw_cost);
            cs.add(a.raw_schedule);
            if (!trim(row.register_category).empty()) {
                ++rep.category_agreement.compared;
                if (normalize_text(row.register_category) == normalize_text(row.best_category)) {
                    ++rep.category_agreement.agreed;
                }
            }
        } else {
            uc.add(a.raw_cost);
            us.add(a.raw_schedule);
        }
        rep.rows.push_back(std::move(row));
    }
    rep.coverage_fraction = static_cast<double>(rep.covered_count) / static_cast<double>(rep.rows.size());
    rep.covered_cost = cc.result();
    rep.covered_schedule = cs.result();
    rep.uncovered_cost = uc.result();
    rep.uncovered_schedule = us.result();
    auto& ag = rep.category_agreement;
    if (ag.compared) ag.fraction = static_cast<double>(ag.agreed) / static_cast<double>(ag.compared);
    return rep;
}

nlohmann::json CoverageReport::to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto& r : rows) {
        rows_json.push_back({{"risk_id", r.risk_id},
                             {"text", r.text},
                             {"item_index", r.item_index},
                             {"best_item", r.best_item},
                             {"best_category", r.best_category},
                             {"score", r.score},
                             {"covered", r.covered},
                             {"used_fallback", r.used_fallback},
                             {"register_category", r.register_category}});
    }
    nlohmann::json hist = nlohmann::json::array();
    for (std::size_t b = 0; b < score_histogram.size(); ++b) {
        char label[16];
        std::snprintf(label, sizeof label, "%.1f-%.1f", static_cast<double>(b) / 10.0, static_cast<double>(b + 1) / 10.0);
        hist.push_back({{"bin", label}, {"count", score_histogram[b]}});
    }
    const auto& ag = category_agreement;
    return {{"project_id", project_id},
            {"threshold", threshold},
            {"rows", rows_json},
            {"risk_count", rows.size()},
            {"covered_count", covered_count},
            {"coverage_fraction", coverage_fraction},
            {"score_histogram", hist},
            {"impact",
             {{"covered", {{"cost", mean_json(covered_cost)}, {"schedule", mean_json(covered_schedule)}}},
              {"not_covered", {{"cost", mean_json(uncovered_cost)}, {"schedule", mean_json(uncovered_schedule)}}}}},
            {"category_agreement",
             {{"compared", ag.compared},
              {"agreed", ag.agreed},
              {"fraction", ag.fraction ? nlohmann::json(*ag.fraction) : nlohmann::json(nullptr)}}}};
}

CoverageReport CoverageReport::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("rows") || !j.at("rows").is_array()) {
        throw ValidationError("coverage report: expected an object with rows");
    }
    CoverageReport rep;
    rep.project_id = j.value("project_id", std::string());
    rep.threshold = j.value("threshold", 0.6);
    for (const auto& r : j.at("rows")) {
        if (!r.is_object() || !r.contains("item_index") || !r.contains("covered")) {
            throw ValidationError("coverage report '" + rep.project_id + "': rows need item_index and covered");
        }
        CoverageRow row;
        row.risk_id = r.value("risk_id", std::string());
        row.text = r.value("text", std::string());
        row.item_index = r.at("item_index").get<std::size_t>();
        row.best_item = r.value("best_item", std::string());
        row.best_category = r.value("best_category", std::string());
        row.score = r.value("score", 0.0);
        row.covered = r.at("covered").get<bool>();
        row.used_fallback = r.value("used_fallback", false);
        row.register_category = r.value("register_category", std::string());
        if (row.covered) ++rep.covered_count;
        ++rep.score_histogram[static_cast<std::size_t>(std::clamp(std::floor(row.score * 10.0), 0.0, 9.0))];
        rep.rows.push_back(std::move(row));
    }
    if (!rep.rows.empty()) {
        rep.coverage_fraction = static_cast<double>(rep.covered_count) / static_cast<double>(rep.rows.size());
    }
    if (j.contains("impact")) {
        const auto& im = j.at("impact");
        auto part = [&](const char* group, const char* what) {
            if (!im.contains(group) || !im.at(group).contains(what)) return MeanWithCount{};
            return mean_from_json(im.at(group).at(what));
        };
        rep.covered_cost = part("covered", "cost");
        rep.covered_schedule = part("covered", "schedule");
        rep.uncovered_cost = part("not_covered", "cost");
        rep.uncovered_schedule = part("not_covered", "schedule");
    }
    if (j.contains("category_agreement") && j.at("category_agreement").is_object()) {
        const auto& a = j.at("category_agreement");
        auto& ag = rep.category_agreement;
        ag.compared = a.value("compared", std::size_t{0});
        ag.agreed = a.value("agreed", std::size_t{0});
        if (a.contains("fraction") && a.at("fraction").is_number()) ag.fraction = a.at("fraction").get<double>();
    }
    return rep;
}

std::vector<CategoryShare> category_distribution(const Rbs& rbs, std::span<const CoverageReport> reports) {
    auto cats = rbs.item_categories();
    std::vector<CategoryShare> shares;
    for (const auto& c : rbs.categories) shares.push_back({c.name, 0, 0.0});
    std::size_t total = 0;
    for (const auto& rep : reports) {
        for (const auto& row : rep.rows) {
            if (!row.covered) continue;
            if (row.item_index >= cats.size()) {
                throw ValidationError("coverage row item index " + std::to_string(row.item_index) + " outside the rbs");
            }
            ++shares[cats[row.item_index]].count;
            ++total;
        }
    }
    if (total == 0) throw EmptyInputError("category distribution: no covered risks");
    for (auto& s : shares) s.fraction = static_cast<double>(s.count) / static_cast<double>(total);
    std::stable_sort(shares.begin(), shares.end(),
                     [](const CategoryShare& a, const CategoryShare& b) { return a.count > b.count; });
    return shares;
}

std::size_t CooccurrenceMatrix::count(std::size_t i, std::size_t j) const {
    const std::size_t n = items.size();
    if (i >= n || j >= n) throw ValidationError("cooccurrence: item index out of range");
    if (i == j) return occurrences[i];
    if (i > j) std::swap(i, j);
    // offset of row i in the packed upper triangle
    std::size_t offset = i * n - i * (i + 1) / 2;
    return pair_counts[offset + (j - i - 1)];
}

CooccurrenceMatrix cooccurrence(const Rbs& rbs, std::span<const CoverageReport> reports) {
    CooccurrenceMatrix m;
    m.items = rbs.item_texts();
    const std::size_t n = m.items.size();
    m.occurrences.assign(n, 0);
    m.pair_counts.assign(n * (n - 1) / 2, 0);
    m.project_count = reports.size();
    std::vector<bool> present(n);
    std::vector<std::size_t> seen;
    for (const auto& rep : reports) {
        std::fill(present.begin(), present.end(), false);
        for (const auto& row : rep.rows) {
            if (!row.covered) continue;
            if (row.item_index >= n) {
                throw ValidationError("coverage row item index " + std::to_string(row.item_index) + " outside the rbs");
            }
            present[row.item_index] = true;
        }
        seen.clear();
        for (std::size_t i = 0; i < n; ++i) {
            if (present[i]) seen.push_back(i);
        }
        for (std::size_t a = 0; a < seen.size(); ++a) {
            ++m.occurrences[seen[a]];
            std::size_t i = seen[a];
            std::size_t offset = i * n - i * (i + 1) / 2;
            for (std::size_t b = a + 1; b < seen.size(); ++b) ++m.pair_counts[offset + (seen[b] - i - 1)];
        }
    }
    return m;
}

std::vector<CooccurrencePair> ranked_pairs(const CooccurrenceMatrix& matrix) {
    std::vector<CooccurrencePair> out;
    const std::size_t n = matrix.items.size();
    out.reserve(matrix.pair_counts.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) out.push_back({matrix.items[i], matrix.items[j], matrix.count(i, j)});
    }
    std::sort(out.begin(), out.end(), [](const CooccurrencePair& a, const CooccurrencePair& b) {
        if (a.count != b.count) return a.count > b.count;
        if (a.item_a != b.item_a) return a.item_a < b.item_a;
        return a.item_b < b.item_b;
    });
    return out;
}

}  // namespace riskbench
