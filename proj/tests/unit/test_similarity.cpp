#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <set>

#include "riskbench/errors.hpp"
#include "riskbench/similarity.hpp"
#include "unit/test_support.hpp"

using namespace riskbench;

namespace {

RiskItem risk(std::string id, std::string name) {
    RiskItem r;
    r.risk_id = std::move(id);
    r.name = std::move(name);
    return r;
}

ProjectRecord project(std::string id, std::vector<RiskItem> items, std::string delivery = "DBB") {
    ProjectRecord p;
    p.project_id = std::move(id);
    p.delivery_method = std::move(delivery);
    RegisterSnapshot s;
    s.items = std::move(items);
    p.snapshots.push_back(std::move(s));
    return p;
}

TextEncoder word_encoder(std::unordered_map<std::string, DenseVector> table, std::size_t dim) {
    return TextEncoder(std::make_shared<EmbeddingBackend>(EmbeddingBackend::from_words(dim, std::move(table))), {});
}

const TextEncoder& reference_encoder() {
    static TextEncoder enc(std::make_shared<EmbeddingBackend>(EmbeddingBackend::load_word_vectors(
                               testsupport::data_path("embeddings/word_vectors.txt"))),
                           StopWords::load(testsupport::data_path("stopwords_en.txt")));
    return enc;
}

}  // namespace

TEST_CASE("evaluation similarity over the Likert grid") {
    for (int a = 1; a <= 5; ++a) {
        for (int b = 1; b <= 5; ++b) {
            double v = evaluation_similarity(a, b);
            CHECK(v == 100.0 - 25.0 * std::abs(a - b));
            CHECK(v == evaluation_similarity(b, a));
        }
    }
    CHECK(evaluation_similarity(2, 4) == 50.0);
    CHECK(evaluation_similarity(1, 5) == 0.0);
    CHECK_THROWS_AS(evaluation_similarity(0, 3), ValidationError);
    CHECK_THROWS_AS(evaluation_similarity(3, 6), ValidationError);
}

TEST_CASE("qualitative match") {
    CHECK(qualitative_match(Rating::High, Rating::High) == 100.0);
    CHECK(qualitative_match(Rating::High, Rating::Low) == 0.0);
    CHECK(qualitative_match(Rating::Medium, Rating::Medium) == 100.0);
    CHECK_THROWS_AS(qualitative_match(Rating::Unset, Rating::Low), ValidationError);
}

TEST_CASE("two sample t-test") {
    std::vector<double> a{1, 2, 3, 4, 5}, b{2, 3, 4, 5, 6};
    auto pooled = two_sample_t_test(a, b, TTestVariant::Pooled);
    CHECK(pooled.statistic == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(pooled.degrees_of_freedom == doctest::Approx(8.0));
    CHECK(pooled.p_value == doctest::Approx(0.346594).epsilon(1e-5));

    auto same = two_sample_t_test(a, a);
    CHECK(same.statistic == 0.0);
    CHECK(same.p_value == doctest::Approx(1.0));

    // Welch by hand on unequal variances
    std::vector<double> c{1, 2, 3, 4}, d{2, 6, 10};
    double va = 5.0 / 3.0, vb = 16.0;
    double se2 = va / 4 + vb / 3;
    auto welch = two_sample_t_test(c, d);
    CHECK(welch.variant == TTestVariant::Welch);
    CHECK(welch.statistic == doctest::Approx((2.5 - 6.0) / std::sqrt(se2)).epsilon(1e-12));
    double df = se2 * se2 / ((va / 4) * (va / 4) / 3 + (vb / 3) * (vb / 3) / 2);
    CHECK(welch.degrees_of_freedom == doctest::Approx(df).epsilon(1e-12));

    CHECK_THROWS_AS(two_sample_t_test(std::vector<double>{1}, b), ValidationError);
    CHECK_THROWS_AS(two_sample_t_test(std::vector<double>{1, 1}, std::vector<double>{2, 2}), ValidationError);
}

TEST_CASE("t-test p-value falls as the mean gap grows") {
    std::vector<double> base{0.1, -0.3, 0.4, 0.0, -0.2, 0.25};
    double last = 2.0;
    for (int step = 0; step < 20; ++step) {
        std::vector<double> shifted = base;
        for (auto& x : shifted) x += 0.1 * step;
        auto r = two_sample_t_test(base, shifted);
        CHECK(r.p_value >= 0.0);
        CHECK(r.p_value <= 1.0);
        CHECK(r.p_value <= last);
        last = r.p_value;
    }
}

TEST_CASE("document similarity trivial cases") {
    Corpus same;
    same.projects = {project("A", {risk("1", "bridge deck repair"), risk("2", "utility relocation")}),
                     project("B", {risk("1", "bridge deck repair"), risk("2", "utility relocation")})};
    auto r = document_similarity(same, {});
    REQUIRE(r.pairs.size() == 1);
    CHECK(r.pairs[0].score == doctest::Approx(1.0).epsilon(1e-12));

    Corpus disjoint;
    disjoint.projects = {project("A", {risk("1", "bridge deck")}), project("B", {risk("1", "utility relocation")})};
    CHECK(document_similarity(disjoint, {}).pairs[0].score == 0.0);

    Corpus one;
    one.projects = {project("A", {risk("1", "x")})};
    CHECK_THROWS_AS(document_similarity(one, {}), ValidationError);
}

TEST_CASE("document similarity matches a brute-force evaluation") {
    Corpus c;
    c.projects = {project("A", {risk("1", "soil settlement delay"), risk("2", "permit delay")}, "DBB"),
                  project("B", {risk("1", "permit approval"), risk("2", "soil testing")}, "DB"),
                  project("C", {risk("1", "utility relocation delay")}, "DBB")};
    std::vector<std::vector<std::string>> docs{{"soil", "settlement", "delay", "permit", "delay"},
                                               {"permit", "approval", "soil", "testing"},
                                               {"utility", "relocation", "delay"}};
    auto weights = [&](std::size_t i) {
        std::map<std::string, double> w;
        for (const auto& t : std::set<std::string>(docs[i].begin(), docs[i].end())) {
            double n = 0, kt = 0;
            for (const auto& x : docs[i]) n += x == t;
            for (const auto& d : docs) kt += std::count(d.begin(), d.end(), t) > 0;
            w[t] = n / static_cast<double>(docs[i].size()) * (1 + std::log(3.0 / kt));
        }
        return w;
    };
    auto cos = [&](std::size_t i, std::size_t j) {
        auto a = weights(i), b = weights(j);
        double d = 0, na = 0, nb = 0;
        for (auto& [t, x] : a) {
            na += x * x;
            if (b.count(t)) d += x * b[t];
        }
        for (auto& [t, x] : b) nb += x * x;
        return d / std::sqrt(na * nb);
    };
    SimilarityOptions opts;
    opts.group_by = GroupKey::DeliveryMethod;
    auto r = document_similarity(c, {}, opts);
    REQUIRE(r.pairs.size() == 3);
    std::vector<double> want{cos(0, 1), cos(0, 2), cos(1, 2)};
    double sum = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(std::abs(r.pairs[k].score - want[k]) < 1e-9);
        sum += r.pairs[k].score;
    }
    CHECK(std::abs(r.summary.mean - sum / 3) < 1e-9);
    REQUIRE(r.groups.size() == 1);
    CHECK(r.groups[0].group == "DBB");
    CHECK(r.groups[0].scores.count == 1);
    CHECK(r.groups[0].scores.mean == doctest::Approx(want[1]));
}

TEST_CASE("best match") {
    auto enc = word_encoder({{"alpha", {1, 0, 0}}, {"beta", {0, 1, 0}}, {"gamma", {0, 0, 1}}}, 3);
    std::vector<RiskItem> cands{risk("c1", "beta"), risk("c2", "alpha gamma"), risk("c3", "alpha")};
    auto m = best_match(risk("q", "alpha"), cands, enc);
    CHECK(m.target_risk_id == "c3");
    CHECK(m.score == 1.0);

    auto single = best_match(risk("q", "gamma"), std::vector<RiskItem>{risk("only", "beta")}, enc);
    CHECK(single.target_risk_id == "only");
    CHECK(single.score == 0.0);

    auto oov = best_match(risk("q", "unknown words"), cands, enc);
    CHECK(oov.target_index == 0);
    CHECK(oov.score == 0.0);

    CHECK_THROWS_AS(best_match(risk("q", "alpha"), std::vector<RiskItem>{}, enc), EmptyInputError);
}

TEST_CASE("near-paraphrase wins under the reference word vectors") {
    const auto& enc = reference_encoder();
    std::vector<RiskItem> pool{risk("a", "Contractor delays and default"), risk("b", "Utility relocation may not happen on time"),
                               risk("c", "Environmental permitting and requirements")};
    auto m = best_match(risk("q", "Utility relocation may not happen in time"), pool, enc);
    CHECK(m.target_risk_id == "b");
    CHECK(m.score > 0.9);
    auto exact = best_match(risk("q", "Contractor delays and default"), pool, enc);
    CHECK(exact.target_risk_id == "a");
    CHECK(exact.score == 1.0);
}

TEST_CASE("pairwise risk similarity") {
    const auto& enc = reference_encoder();
    std::vector<RiskItem> reg{risk("1", "Right of way acquisition issues"), risk("2", "Utility relocation"),
                              risk("3", "Schedule slippage"), risk("4", "Design changes")};
    auto self = pairwise_risk_similarity(reg, reg, enc);
    CHECK(self.summary.mean == 1.0);

    std::vector<RiskItem> one{reg[1]};
    auto single = pairwise_risk_similarity(one, reg, enc);
    CHECK(single.summary.mean == single.pairs[0].score);

    // hand-built 2x2: A = {(1,0), (1,1)}, B = {(0,1), (1,2)}
    auto hand = word_encoder({{"p", {1, 0}}, {"q", {1, 1}}, {"r", {0, 1}}, {"s", {1, 2}}}, 2);
    std::vector<RiskItem> a{risk("a1", "p"), risk("a2", "q")}, b{risk("b1", "r"), risk("b2", "s")};
    double a1 = std::max(0.0, 1.0 / std::sqrt(5.0));
    double a2 = std::max(1.0 / std::sqrt(2.0), 3.0 / std::sqrt(10.0));
    auto r = pairwise_risk_similarity(a, b, hand);
    CHECK(r.pairs[0].target == "b2");
    CHECK(r.pairs[1].target == "b2");
    CHECK(r.summary.mean == doctest::Approx((a1 + a2) / 2).epsilon(1e-12));
    // direction matters
    auto back = pairwise_risk_similarity(b, a, hand);
    CHECK(back.summary.mean != doctest::Approx(r.summary.mean));

    CHECK_THROWS_AS(pairwise_risk_similarity(std::vector<RiskItem>{}, reg, enc), EmptyInputError);
}

TEST_CASE("pooling similarity") {
    auto enc = word_encoder({{"alpha", {1, 0, 0}}, {"beta", {0, 1, 0}}, {"gamma", {0, 0, 1}}}, 3);
    Corpus c;
    c.projects = {project("A", {risk("1", "alpha"), risk("2", "beta")}), project("B", {risk("1", "alpha")}),
                  project("C", {risk("1", "alpha beta")})};
    auto r = pooling_similarity("A", c, enc);
    REQUIRE(r.pairs.size() == 2);
    CHECK(r.pairs[0].score == 1.0);
    CHECK(r.pairs[0].target == "B/1");
    CHECK(r.pairs[1].score == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(*r.fraction_at_least_half == 1.0);
    CHECK(r.histogram->counts[4] == 1);
    CHECK(r.histogram->counts[3] == 1);

    Corpus orth;
    orth.projects = {project("A", {risk("1", "alpha")}), project("B", {risk("1", "beta")}),
                     project("C", {risk("1", "gamma")})};
    CHECK(*pooling_similarity("A", orth, enc).fraction_at_least_half == 0.0);
    CHECK_THROWS_AS(pooling_similarity("Z", orth, enc), ValidationError);
}

TEST_CASE("pooling fraction matches an exhaustive oracle") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 1.0);
    std::unordered_map<std::string, DenseVector> table;
    std::vector<std::string> words;
    for (int i = 0; i < 12; ++i) {
        words.push_back("w" + std::to_string(i));
        table[words.back()] = {g(rng), g(rng), g(rng), g(rng)};
    }
    auto enc = word_encoder(table, 4);
    std::uniform_int_distribution<int> pick(0, 11), len(1, 3), count(1, 6);
    Corpus c;
    for (int p = 0; p < 5; ++p) {
        std::vector<RiskItem> items;
        int n = count(rng);
        for (int i = 0; i < n; ++i) {
            std::string text;
            for (int k = len(rng); k > 0; --k) text += words[static_cast<std::size_t>(pick(rng))] + " ";
            items.push_back(risk(std::to_string(i), text));
        }
        c.projects.push_back(project("P" + std::to_string(p), items));
    }
    for (const auto& self : c.projects) {
        std::size_t hits = 0, total = 0;
        for (const auto& mine : self.snapshots[0].items) {
            double best = -2.0;
            auto v = enc.encode(mine.name).vector;
            for (const auto& other : c.projects) {
                if (other.project_id == self.project_id) continue;
                for (const auto& cand : other.snapshots[0].items) best = std::max(best, cosine(v, enc.encode(cand.name).vector));
            }
            hits += best >= 0.5;
            ++total;
        }
        auto r = pooling_similarity(self.project_id, c, enc, {GroupKey::None, false, TTestVariant::Welch, {3}});
        CHECK(*r.fraction_at_least_half == doctest::Approx(static_cast<double>(hits) / static_cast<double>(total)));
    }
}

namespace {

RiskMatch match(double score, int p1, int p2, Rating q1, Rating q2) {
    RiskMatch m;
    m.score = score;
    m.source_assessment.probability_band = p1;
    m.target_assessment.probability_band = p2;
    m.source_assessment.cost_band = p1;
    m.target_assessment.cost_band = p2;
    m.source_assessment.qualitative_cost = q1;
    m.target_assessment.qualitative_cost = q2;
    return m;
}

}  // namespace

TEST_CASE("evaluation level report") {
    std::vector<RiskMatch> same{match(0.9, 3, 3, Rating::High, Rating::High), match(0.6, 1, 1, Rating::Low, Rating::Low)};
    auto r = evaluation_level_report(same, 0.5);
    CHECK(*r.probability.mean == 100.0);
    CHECK(*r.cost.mean == 100.0);
    CHECK(*r.probability_cost.mean == 100.0);
    CHECK_FALSE(r.schedule.mean.has_value());
    CHECK_THROWS_AS(evaluation_level_report(same, 0.95), EmptyInputError);

    std::vector<RiskMatch> four{match(0.55, 1, 2, Rating::Low, Rating::Low), match(0.75, 2, 4, Rating::Low, Rating::High),
                                match(0.85, 5, 1, Rating::High, Rating::Low), match(0.95, 3, 3, Rating::Medium, Rating::Medium)};
    auto all = evaluation_level_report(four, 0.5);
    CHECK(all.match_count == 4);
    CHECK(*all.probability.mean == doctest::Approx((75.0 + 50.0 + 0.0 + 100.0) / 4));
    CHECK(*all.probability_cost.mean == doctest::Approx(50.0));
    auto high = evaluation_level_report(four, 0.8);
    CHECK(high.match_count == 2);
    CHECK(*high.probability.mean == doctest::Approx(50.0));

    std::size_t last = 5;
    for (double t : {0.5, 0.6, 0.7, 0.8, 0.9}) {
        auto rep = evaluation_level_report(four, t);
        CHECK(rep.match_count <= last);
        last = rep.match_count;
    }
}

TEST_CASE("score histogram edges") {
    ScoreHistogram h;
    for (double s : {0.49, 0.5, 0.59, 0.6, 0.7, 0.79, 0.8, 1.0}) h.add(s);
    CHECK(h.counts == std::array<std::size_t, 5>{1, 2, 1, 2, 2});
}

TEST_CASE("group keys") {
    CHECK(parse_group_key("delivery_method") == GroupKey::DeliveryMethod);
    ProjectRecord p;
    p.delivery_method = "DB";
    CHECK(group_value(p, GroupKey::DeliveryFamily) == "traditional");
    p.delivery_method = "P3";
    CHECK(group_value(p, GroupKey::DeliveryFamily) == "p3");
}

TEST_CASE("risk level similarity is jobs invariant on the demo corpus") {
    auto corpus = load_corpus(testsupport::data_path("fixtures/demo/manifest.json"));
    SimilarityOptions serial, parallel;
    serial.group_by = parallel.group_by = GroupKey::DeliveryMethod;
    parallel.par.jobs = 4;
    auto a = risk_level_similarity(corpus, reference_encoder(), serial);
    auto b = risk_level_similarity(corpus, reference_encoder(), parallel);
    REQUIRE(a.pairs.size() == b.pairs.size());
    for (std::size_t i = 0; i < a.pairs.size(); ++i) CHECK(a.pairs[i].score == b.pairs[i].score);
    CHECK(a.summary.mean == b.summary.mean);
}
