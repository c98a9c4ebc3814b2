#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "riskbench/errors.hpp"
#include "riskbench/rbs.hpp"
#include "unit/test_support.hpp"

using namespace riskbench;

namespace {

const Rbs& bundled() {
    static Rbs rbs = Rbs::load(testsupport::data_path("rbs_table21.json"));
    return rbs;
}

std::shared_ptr<const EmbeddingBackend> word_backend() {
    static auto b = std::make_shared<const EmbeddingBackend>(
        EmbeddingBackend::load_word_vectors(testsupport::data_path("embeddings/word_vectors.txt")));
    return b;
}

StopWords stop_words() { return StopWords::load(testsupport::data_path("stopwords_en.txt")); }

const TextEncoder& word_encoder() {
    static TextEncoder enc(word_backend(), stop_words());
    return enc;
}

const TextEncoder& sentence_encoder() {
    static TextEncoder enc(std::make_shared<const EmbeddingBackend>(EmbeddingBackend::load_sentence_vectors(
                               testsupport::data_path("embeddings/sentences.jsonl"))),
                           stop_words(), word_backend());
    return enc;
}

RiskItem risk(std::string id, std::string name) {
    RiskItem r;
    r.risk_id = std::move(id);
    r.name = std::move(name);
    return r;
}

// Report whose covered rows point at the given item indices.
CoverageReport report_with(std::string project, std::initializer_list<std::size_t> items,
                           std::initializer_list<std::size_t> uncovered = {}) {
    CoverageReport rep;
    rep.project_id = std::move(project);
    for (auto i : items) {
        CoverageRow row;
        row.item_index = i;
        row.covered = true;
        row.score = 0.9;
        rep.rows.push_back(row);
    }
    for (auto i : uncovered) {
        CoverageRow row;
        row.item_index = i;
        row.score = 0.1;
        rep.rows.push_back(row);
    }
    return rep;
}

Rbs small_rbs() {
    return Rbs::from_json(nlohmann::json::parse(R"({"categories": [
        {"name": "Design", "items": [{"text": "a"}, {"text": "b"}]},
        {"name": "Permits", "items": [{"text": "c"}, {"text": "d"}, {"text": "e"}]}]})"));
}

}  // namespace

TEST_CASE("bundled breakdown structure") {
    const auto& rbs = bundled();
    CHECK(rbs.categories.size() == 11);
    CHECK(rbs.item_count() == 70);
    CHECK(rbs.item_texts().size() == 70);
    auto cats = rbs.item_categories();
    CHECK(std::is_sorted(cats.begin(), cats.end()));
    CHECK(cats.back() == 10);
    bool found = false;
    for (const auto& c : rbs.categories) {
        for (const auto& it : c.items) {
            if (it.text == "Environmental permitting and requirements") {
                found = true;
                CHECK(it.frequency == 10);
            }
        }
    }
    CHECK(found);
}

TEST_CASE("breakdown structure validation") {
    auto parse = [](const char* text) { return Rbs::from_json(nlohmann::json::parse(text)); };
    CHECK_THROWS_AS(parse(R"({"categories": [{"name": "A", "items": [{"text": "x"}]},
                                             {"name": "B", "items": [{"text": "x"}]}]})"),
                    ValidationError);
    CHECK_THROWS_AS(parse(R"({"categories": [{"name": "A", "items": []}]})"), ValidationError);
    CHECK_THROWS_AS(parse(R"({"categories": []})"), ValidationError);
    CHECK_THROWS_AS(parse(R"({"categories": [{"name": "A", "items": [{"text": "x", "frequency": 0}]}]})"),
                    ValidationError);
    CHECK_THROWS_AS(parse(R"({"categories": [{"name": "A", "items": [{"text": "x"}]},
                                             {"name": "a", "items": [{"text": "y"}]}]})"),
                    ValidationError);
    CHECK_THROWS_AS(parse(R"([1, 2])"), ValidationError);
    CHECK_THROWS(Rbs::load("/nonexistent/rbs.json"));
}

TEST_CASE("verbatim item scores one") {
    std::vector<RiskItem> reg{risk("R1", "Right of way acquisition issues")};
    for (const auto* enc : {&word_encoder(), &sentence_encoder()}) {
        auto rep = coverage(bundled(), reg, *enc);
        REQUIRE(rep.rows.size() == 1);
        CHECK(rep.rows[0].score == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(rep.rows[0].covered);
        CHECK(rep.rows[0].best_item == "Right of way acquisition issues");
        CHECK(rep.coverage_fraction == 1.0);
    }
}

TEST_CASE("security requirements is not covered") {
    std::vector<RiskItem> reg{risk("R1", "Security requirements")};
    auto rep = coverage(bundled(), reg, sentence_encoder());
    REQUIRE(rep.rows.size() == 1);
    CHECK_FALSE(rep.rows[0].used_fallback);
    CHECK(rep.rows[0].score < 0.6);
    CHECK(std::abs(rep.rows[0].score - 0.44) <= 0.1);
    CHECK_FALSE(rep.rows[0].covered);
    CHECK(rep.coverage_fraction == 0.0);

    std::vector<RiskItem> unseen{risk("R2", "Quarterly budget forecast slips")};
    CHECK(coverage(bundled(), unseen, sentence_encoder()).rows[0].used_fallback);
}

TEST_CASE("threshold extremes") {
    auto texts = bundled().item_texts();
    std::vector<RiskItem> reg{risk("R1", texts[3]), risk("R2", "Quarterly budget forecast slips"),
                              risk("R3", "zzqx unknown"), risk("R4", texts[40])};
    CoverageOptions o;
    o.threshold = 1.01;
    CHECK(coverage(bundled(), reg, word_encoder(), o).coverage_fraction == 0.0);
    o.threshold = 0.0;
    auto all = coverage(bundled(), reg, word_encoder(), o);
    CHECK(all.coverage_fraction == 1.0);
    for (const auto& r : all.rows) CHECK(r.covered);
    CHECK_THROWS_AS(coverage(bundled(), std::vector<RiskItem>{}, word_encoder()), EmptyInputError);
}

TEST_CASE("eight verbatim items and two nonsense strings") {
    auto texts = bundled().item_texts();
    std::vector<RiskItem> reg;
    for (std::size_t i = 0; i < 8; ++i) reg.push_back(risk("V" + std::to_string(i), texts[i * 8]));
    reg.push_back(risk("N1", "qwxz plorb"));
    reg.push_back(risk("N2", "zzyzx frobnicate"));
    for (double t : {0.05, 0.3, 0.6, 0.9, 1.0}) {
        CoverageOptions o;
        o.threshold = t;
        auto rep = coverage(bundled(), reg, word_encoder(), o);
        CHECK(rep.coverage_fraction == doctest::Approx(0.8));
        CHECK(rep.covered_count == 8);
        CHECK(rep.threshold == t);
    }
}

TEST_CASE("coverage is monotone in the threshold and best scores are argmaxes") {
    std::mt19937_64 rng(5);
    auto texts = bundled().item_texts();
    std::vector<RiskItem> reg;
    std::uniform_int_distribution<std::size_t> pick(0, texts.size() - 1);
    for (int k = 0; k < 40; ++k) {
        // splice words from two items to get partial matches
        auto a = tokenize(texts[pick(rng)]), b = tokenize(texts[pick(rng)]);
        std::string text;
        for (std::size_t i = 0; i < a.size(); i += 2) text += a[i] + " ";
        for (std::size_t i = 1; i < b.size(); i += 2) text += b[i] + " ";
        reg.push_back(risk("R" + std::to_string(k), text));
    }
    double prev = -1.0;
    for (int step = 20; step >= 0; --step) {
        CoverageOptions o;
        o.threshold = step / 20.0;
        double f = coverage(bundled(), reg, word_encoder(), o).coverage_fraction;
        CHECK(f >= prev);
        prev = f;
    }

    auto rep = coverage(bundled(), reg, word_encoder());
    std::vector<std::string> item_texts = texts;
    auto items = word_encoder().encode_all(item_texts);
    for (std::size_t r = 0; r < reg.size(); ++r) {
        auto q = word_encoder().encode(reg[r].name);
        for (std::size_t j = 0; j < items.size(); ++j) CHECK_FALSE(cosine(q.vector, items[j].vector) > rep.rows[r].score);
        CHECK(rep.rows[r].best_item == texts[rep.rows[r].item_index]);
    }
    std::size_t hist = 0;
    for (auto c : rep.score_histogram) hist += c;
    CHECK(hist == reg.size());
}

TEST_CASE("coverage is independent of the worker count") {
    auto texts = bundled().item_texts();
    std::vector<RiskItem> reg;
    for (std::size_t i = 0; i < texts.size(); i += 3) reg.push_back(risk("R" + std::to_string(i), texts[i] + " delay"));
    CoverageOptions a, b;
    a.par = {1};
    b.par = {3};
    CHECK(coverage(bundled(), reg, word_encoder(), a).to_json() == coverage(bundled(), reg, word_encoder(), b).to_json());
}

TEST_CASE("category distribution") {
    auto rbs = small_rbs();
    std::vector<CoverageReport> one{report_with("P", {0, 1, 1})};
    auto d1 = category_distribution(rbs, one);
    REQUIRE(d1.size() == 2);
    CHECK(d1[0].category == "Design");
    CHECK(d1[0].fraction == 1.0);
    CHECK(d1[1].fraction == 0.0);

    std::vector<CoverageReport> two{report_with("P", {2, 4}, {0}), report_with("Q", {1})};
    auto d2 = category_distribution(rbs, two);
    CHECK(d2[0].category == "Permits");
    CHECK(d2[0].count == 2);
    CHECK(d2[0].fraction == doctest::Approx(2.0 / 3.0));
    CHECK(d2[1].fraction == doctest::Approx(1.0 / 3.0));

    std::vector<CoverageReport> none{report_with("P", {}, {0, 3})};
    CHECK_THROWS_AS(category_distribution(rbs, none), EmptyInputError);
    std::vector<CoverageReport> bad{report_with("P", {9})};
    CHECK_THROWS_AS(category_distribution(rbs, bad), ValidationError);
}

TEST_CASE("co-occurrence examples") {
    auto rbs = small_rbs();
    std::vector<CoverageReport> reps{report_with("P", {0, 1}), report_with("Q", {1, 0, 0})};
    auto m = cooccurrence(rbs, reps);
    CHECK(m.project_count == 2);
    CHECK(m.count(0, 1) == 2);
    CHECK(m.count(1, 0) == 2);
    CHECK(m.occurrences[0] == 2);
    for (std::size_t j = 0; j < 5; ++j) {
        if (j != 4) CHECK(m.count(4, j) == 0);
    }
    auto ranked = ranked_pairs(m);
    CHECK(ranked.size() == 10);
    CHECK(ranked[0].item_a == "a");
    CHECK(ranked[0].item_b == "b");
    CHECK(ranked[0].count == 2);
    CHECK(ranked[1].count == 0);
    CHECK_THROWS_AS(m.count(0, 7), ValidationError);
}

TEST_CASE("co-occurrence matches set intersections on random fixtures") {
    const auto& rbs = bundled();
    const std::size_t n = rbs.item_count();
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        std::uniform_int_distribution<int> nproj(1, 8), nrows(0, 25);
        std::uniform_int_distribution<std::size_t> item(0, n - 1);
        std::bernoulli_distribution cov(0.7);
        std::vector<CoverageReport> reps;
        std::vector<std::set<std::size_t>> present;
        int p = nproj(rng);
        for (int k = 0; k < p; ++k) {
            CoverageReport rep;
            std::set<std::size_t> s;
            int rows = nrows(rng);
            for (int r = 0; r < rows; ++r) {
                CoverageRow row;
                row.item_index = item(rng);
                row.covered = cov(rng);
                if (row.covered) s.insert(row.item_index);
                rep.rows.push_back(row);
            }
            reps.push_back(rep);
            present.push_back(s);
        }
        auto m = cooccurrence(rbs, reps);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t occ = 0;
            for (const auto& s : present) occ += s.count(i);
            CHECK(m.occurrences[i] == occ);
            for (std::size_t j = i + 1; j < n; ++j) {
                std::size_t both = 0;
                for (const auto& s : present) both += s.count(i) && s.count(j);
                CHECK(m.count(i, j) == both);
                CHECK(m.count(j, i) == both);
                CHECK(both <= std::min(m.occurrences[i], m.occurrences[j]));
            }
        }
        auto ranked = ranked_pairs(m);
        CHECK(ranked.size() == n * (n - 1) / 2);
        for (std::size_t k = 1; k < ranked.size(); ++k) CHECK(ranked[k - 1].count >= ranked[k].count);
    }
}

TEST_CASE("coverage report round trip") {
    std::vector<RiskItem> reg{risk("R1", "Right of way acquisition issues"), risk("R2", "Security requirements")};
    reg[0].category_label = "right of way";
    reg[0].assessment.raw_cost = 2.5;
    auto rep = coverage(bundled(), reg, sentence_encoder(), {}, "P9");
    auto back = CoverageReport::from_json(rep.to_json());
    CHECK(back.to_json() == rep.to_json());
    CHECK(back.project_id == "P9");
    CHECK(back.rows.size() == 2);
    CHECK_THROWS_AS(CoverageReport::from_json(nlohmann::json::array()), ValidationError);
}
