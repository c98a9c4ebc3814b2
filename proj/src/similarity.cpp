#include "riskbench/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include "riskbench/errors.hpp"
#include "riskbench/util.hpp"

namespace riskbench {

std::optional<GroupKey> parse_group_key(std::string_view text) {
    auto t = to_lower_ascii(trim(text));
    if (t.empty() || t == "none") return GroupKey::None;
    if (t == "delivery_method") return GroupKey::DeliveryMethod;
    if (t == "delivery_family") return GroupKey::DeliveryFamily;
    if (t == "project_type") return GroupKey::ProjectType;
    if (t == "size_band" || t == "size") return GroupKey::SizeBand;
    if (t == "jurisdiction" || t == "location") return GroupKey::Jurisdiction;
    return std::nullopt;
}

std::string_view to_string(GroupKey key) {
    switch (key) {
        case GroupKey::None: return "none";
        case GroupKey::DeliveryMethod: return "delivery_method";
        case GroupKey::DeliveryFamily: return "delivery_family";
        case GroupKey::ProjectType: return "project_type";
        case GroupKey::SizeBand: return "size_band";
        case GroupKey::Jurisdiction: return "jurisdiction";
    }
    return "none";
}

std::string group_value(const ProjectRecord& p, GroupKey key) {
    switch (key) {
        case GroupKey::None: return "all";
        case GroupKey::DeliveryMethod: return p.delivery_method;
        case GroupKey::DeliveryFamily: {
            auto m = to_lower_ascii(p.delivery_method);
            return (m == "db" || m == "dbb") ? "traditional" : "p3";
        }
        case GroupKey::ProjectType: return p.project_type;
        case GroupKey::SizeBand: return p.size_band ? std::string(to_string(*p.size_band)) : std::string();
        case GroupKey::Jurisdiction: return p.jurisdiction;
    }
    return {};
}

std::string risk_text(const RiskItem& item, bool use_description) {
    if (!use_description || item.description.empty()) return item.name;
    return item.name + " " + item.description;
}

std::string_view to_string(SimilarityLevel level) {
    switch (level) {
        case SimilarityLevel::Document: return "document";
        case SimilarityLevel::RiskItem: return "risk_item";
        case SimilarityLevel::Pooling: return "pooling";
        case SimilarityLevel::Evaluation: return "evaluation";
    }
    return "";
}

ScoreSummary summarize_scores(std::span<const double> scores) {
    ScoreSummary s;
    s.count = scores.size();
    if (scores.empty()) return s;
    double sum = 0.0;
    s.min = scores.front();
    s.max = scores.front();
    for (double x : scores) {
        sum += x;
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
    }
    s.mean = sum / static_cast<double>(scores.size());
    return s;
}

void ScoreHistogram::add(double score) {
    std::size_t bin = 0;
    while (bin < 4 && score >= edges[bin]) ++bin;
    ++counts[bin];
}

std::string_view ScoreHistogram::bin_label(std::size_t bin) {
    static constexpr std::array<std::string_view, 5> labels{"<0.5", "0.5-0.6", "0.6-0.7", "0.7-0.8", "0.8-1.0"};
    return labels.at(bin);
}

namespace {

void fill_summary(SimilarityReport& report) {
    std::vector<double> scores;
    scores.reserve(report.pairs.size());
    for (const auto& p : report.pairs) scores.push_back(p.score);
    report.summary = summarize_scores(scores);
}

/// Within-group statistics over project pairs; both ends must share the
/// group value. Adds a t-test when exactly two groups have >= 2 pairs.
void fill_groups(SimilarityReport& report, const Corpus& corpus, const SimilarityOptions& opts) {
    if (opts.group_by == GroupKey::None) return;
    std::map<std::string, std::string> group_of;
    for (const auto& p : corpus.projects) group_of[p.project_id] = group_value(p, opts.group_by);
    std::map<std::string, std::vector<double>> by_group;
    for (const auto& pair : report.pairs) {
        const auto& ga = group_of.at(pair.source);
        if (ga == group_of.at(pair.target)) by_group[ga].push_back(pair.score);
    }
    for (const auto& [g, scores] : by_group) report.groups.push_back({g, summarize_scores(scores)});
    std::vector<const std::vector<double>*> testable;
    for (const auto& [g, scores] : by_group) {
        if (scores.size() >= 2) testable.push_back(&scores);
    }
    if (testable.size() == 2 && by_group.size() == 2) {
        try {
            report.test = two_sample_t_test(*testable[0], *testable[1], opts.t_test);
        } catch (const ValidationError&) {
            // zero variance in both groups: no test
        }
    }
}

struct EncodedProject {
    std::vector<RiskItem> risks;
    VectorSet vectors;
};

EncodedProject encode_project(const ProjectRecord& project, const TextEncoder& encoder, const SimilarityOptions& opts) {
    EncodedProject out;
    out.risks = project.consolidated_register();
    std::vector<std::string> texts;
    texts.reserve(out.risks.size());
    for (const auto& r : out.risks) texts.push_back(risk_text(r, opts.use_description));
    auto embeddings = encoder.encode_all(texts, opts.par);
    std::vector<DenseVector> vecs;
    vecs.reserve(embeddings.size());
    for (auto& e : embeddings) vecs.push_back(std::move(e.vector));
    out.vectors = VectorSet(vecs);
    return out;
}

std::vector<EncodedProject> encode_corpus(const Corpus& corpus, const TextEncoder& encoder,
                                          const SimilarityOptions& opts) {
    std::vector<EncodedProject> out;
    out.reserve(corpus.projects.size());
    for (const auto& p : corpus.projects) out.push_back(encode_project(p, encoder, opts));
    return out;
}

bool same_group(const ProjectRecord& a, const ProjectRecord& b, GroupKey key) {
    return key == GroupKey::None || group_value(a, key) == group_value(b, key);
}

}  // namespace

TokenStream register_document(const ProjectRecord& project, const StopWords& stop_words) {
    TokenStream doc;
    for (const auto& item : project.consolidated_register()) {
        for (const auto* field : {&item.category_label, &item.name, &item.description}) {
            auto tokens = tokenize(*field, stop_words);
            doc.insert(doc.end(), tokens.begin(), tokens.end());
        }
    }
    return doc;
}

SimilarityReport document_similarity(const Corpus& corpus, const StopWords& stop_words,
                                     const SimilarityOptions& opts) {
    if (corpus.projects.size() < 2) throw ValidationError("document similarity needs at least 2 projects");
    std::vector<TokenStream> docs;
    docs.reserve(corpus.projects.size());
    for (const auto& p : corpus.projects) docs.push_back(register_document(p, stop_words));
    auto model = tfidf_fit(docs);
    std::vector<SparseVector> vectors(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (!docs[i].empty()) vectors[i] = tfidf_vector(model, docs[i]);
    }
    auto scores = pairwise_sparse_cosine(vectors, opts.par);

    SimilarityReport report;
    report.level = SimilarityLevel::Document;
    std::size_t k = 0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        for (std::size_t j = i + 1; j < docs.size(); ++j) {
            report.pairs.push_back({corpus.projects[i].project_id, corpus.projects[j].project_id, scores[k++]});
        }
    }
    fill_summary(report);
    fill_groups(report, corpus, opts);
    return report;
}

MatchResult best_match(const RiskItem& risk, std::span<const RiskItem> candidates, const TextEncoder& encoder,
                       bool use_description) {
    if (candidates.empty()) throw EmptyInputError("best_match: no candidates");
    auto query = encoder.encode(risk_text(risk, use_description));
    std::vector<DenseVector> cand;
    cand.reserve(candidates.size());
    for (const auto& c : candidates) cand.push_back(encoder.encode(risk_text(c, use_description)).vector);
    std::vector<DenseVector> q{std::move(query.vector)};
    auto best = best_matches_serial(VectorSet(q), VectorSet(cand)).front();
    return {risk.risk_id, candidates[best.index].risk_id, best.index, best.score};
}

SimilarityReport pairwise_risk_similarity(std::span<const RiskItem> a, std::span<const RiskItem> b,
                                          const TextEncoder& encoder, const SimilarityOptions& opts) {
    if (a.empty() || b.empty()) throw EmptyInputError("pairwise risk similarity: empty register");
    auto encode = [&](std::span<const RiskItem> items) {
        std::vector<std::string> texts;
        for (const auto& r : items) texts.push_back(risk_text(r, opts.use_description));
        auto emb = encoder.encode_all(texts, opts.par);
        std::vector<DenseVector> vecs;
        for (auto& e : emb) vecs.push_back(std::move(e.vector));
        return VectorSet(vecs);
    };
    auto va = encode(a);
    auto vb = encode(b);
    auto matches = best_matches(va, vb, opts.par);
    SimilarityReport report;
    report.level = SimilarityLevel::RiskItem;
    for (std::size_t i = 0; i < a.size(); ++i) {
        report.pairs.push_back({a[i].risk_id, b[matches[i].index].risk_id, matches[i].score});
    }
    fill_summary(report);
    return report;
}

SimilarityReport risk_level_similarity(const Corpus& corpus, const TextEncoder& encoder,
                                       const SimilarityOptions& opts) {
    if (corpus.projects.size() < 2) throw ValidationError("risk-level similarity needs at least 2 projects");
    auto encoded = encode_corpus(corpus, encoder, opts);
    SimilarityReport report;
    report.level = SimilarityLevel::RiskItem;
    for (std::size_t i = 0; i < encoded.size(); ++i) {
        for (std::size_t j = 0; j < encoded.size(); ++j) {
            if (i == j) continue;
            double score = 0.0;
            if (encoded[i].vectors.size() && encoded[j].vectors.size()) {
                auto matches = best_matches(encoded[i].vectors, encoded[j].vectors, opts.par);
                double sum = 0.0;
                for (const auto& m : matches) sum += m.score;
                score = sum / static_cast<double>(matches.size());
            }
            report.pairs.push_back({corpus.projects[i].project_id, corpus.projects[j].project_id, score});
        }
    }
    fill_summary(report);
    fill_groups(report, corpus, opts);
    return report;
}

SimilarityReport pooling_similarity(std::string_view project_id, const Corpus& corpus, const TextEncoder& encoder,
                                    const SimilarityOptions& opts) {
    const ProjectRecord* self = corpus.find(project_id);
    if (!self) throw ValidationError("pooling: project '" + std::string(project_id) + "' not in corpus");
    if (corpus.projects.size() < 2) throw ValidationError("pooling: corpus has no other project");

    auto own = encode_project(*self, encoder, opts);
    std::vector<std::string> pool_owner;
    std::vector<std::string> pool_ids;
    std::vector<std::string> pool_texts;
    for (const auto& p : corpus.projects) {
        if (p.project_id == project_id) continue;
        for (const auto& r : p.consolidated_register()) {
            pool_owner.push_back(p.project_id);
            pool_ids.push_back(r.risk_id);
            pool_texts.push_back(risk_text(r, opts.use_description));
        }
    }
    if (pool_texts.empty()) throw EmptyInputError("pooling: other projects have no risks");
    auto pool_emb = encoder.encode_all(pool_texts, opts.par);
    std::vector<DenseVector> pool_vecs;
    pool_vecs.reserve(pool_emb.size());
    for (auto& e : pool_emb) pool_vecs.push_back(std::move(e.vector));
    VectorSet pool(pool_vecs);

    SimilarityReport report;
    report.level = SimilarityLevel::Pooling;
    ScoreHistogram hist;
    std::size_t at_least_half = 0;
    if (own.vectors.size()) {
        auto matches = best_matches(own.vectors, pool, opts.par);
        for (std::size_t i = 0; i < matches.size(); ++i) {
            const auto& m = matches[i];
            report.pairs.push_back({own.risks[i].risk_id, pool_owner[m.index] + "/" + pool_ids[m.index], m.score});
            hist.add(m.score);
            if (m.score >= 0.5) ++at_least_half;
        }
    }
    fill_summary(report);
    report.histogram = hist;
    report.fraction_at_least_half =
        report.pairs.empty() ? 0.0 : static_cast<double>(at_least_half) / static_cast<double>(report.pairs.size());
    return report;
}

double evaluation_similarity(int x1, int x2) {
    if (x1 < 1 || x1 > 5 || x2 < 1 || x2 > 5) {
        throw ValidationError("evaluation similarity: bands must lie in 1..5, got " + std::to_string(x1) + " and " +
                              std::to_string(x2));
    }
    return (1.0 - std::abs(x1 - x2) / 4.0) * 100.0;
}

double qualitative_match(Rating a, Rating b) {
    if (a == Rating::Unset || b == Rating::Unset) throw ValidationError("qualitative match: rating is Unset");
    return a == b ? 100.0 : 0.0;
}

std::vector<RiskMatch> collect_risk_matches(const Corpus& corpus, const TextEncoder& encoder,
                                            const SimilarityOptions& opts) {
    auto encoded = encode_corpus(corpus, encoder, opts);
    std::vector<RiskMatch> out;
    for (std::size_t i = 0; i < encoded.size(); ++i) {
        for (std::size_t j = 0; j < encoded.size(); ++j) {
            if (i == j || !encoded[i].vectors.size() || !encoded[j].vectors.size()) continue;
            if (!same_group(corpus.projects[i], corpus.projects[j], opts.group_by)) continue;
            auto matches = best_matches(encoded[i].vectors, encoded[j].vectors, opts.par);
            for (std::size_t k = 0; k < matches.size(); ++k) {
                const auto& src = encoded[i].risks[k];
                const auto& dst = encoded[j].risks[matches[k].index];
                out.push_back({corpus.projects[i].project_id, src.risk_id, corpus.projects[j].project_id,
                               dst.risk_id, matches[k].score, src.assessment, dst.assessment});
            }
        }
    }
    return out;
}

EvaluationReport evaluation_level_report(std::span<const RiskMatch> matches, double min_score) {
    EvaluationReport r;
    r.min_score = min_score;
    struct Acc {
        double sum = 0.0;
        std::size_t n = 0;
        void add(double x) {
            sum += x;
            ++n;
        }
        MeanWithCount result() const {
            MeanWithCount m;
            m.count = n;
            if (n) m.mean = sum / static_cast<double>(n);
            return m;
        }
    } prob, cost, sched, prob_cost, prob_sched;

    for (const auto& m : matches) {
        if (m.score < min_score) continue;
        ++r.match_count;
        const auto& a = m.source_assessment;
        const auto& b = m.target_assessment;
        if (a.probability_band && b.probability_band) prob.add(evaluation_similarity(*a.probability_band, *b.probability_band));
        if (a.cost_band && b.cost_band) cost.add(evaluation_similarity(*a.cost_band, *b.cost_band));
        if (a.schedule_band && b.schedule_band) sched.add(evaluation_similarity(*a.schedule_band, *b.schedule_band));
        if (a.qualitative_cost != Rating::Unset && b.qualitative_cost != Rating::Unset) {
            prob_cost.add(qualitative_match(a.qualitative_cost, b.qualitative_cost));
        }
        if (a.qualitative_schedule != Rating::Unset && b.qualitative_schedule != Rating::Unset) {
            prob_sched.add(qualitative_match(a.qualitative_schedule, b.qualitative_schedule));
        }
    }
    if (r.match_count == 0) {
        throw EmptyInputError("evaluation level: no matches with score >= " + std::to_string(min_score));
    }
    r.probability = prob.result();
    r.cost = cost.result();
    r.schedule = sched.result();
    r.probability_cost = prob_cost.result();
    r.probability_schedule = prob_sched.result();
    return r;
}

}  // namespace riskbench
