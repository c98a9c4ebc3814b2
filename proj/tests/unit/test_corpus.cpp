#include <doctest.h>

#include <random>

#include "riskbench/corpus.hpp"
#include "riskbench/csv.hpp"
#include "riskbench/errors.hpp"
#include "riskbench/util.hpp"
#include "unit/test_support.hpp"

using namespace riskbench;
using testsupport::TempDir;

TEST_CASE("csv reader handles quotes, CRLF and embedded newlines") {
    auto t = csv::parse("a,b,c\r\n\"x, y\",\"say \"\"hi\"\"\",\"two\nlines\"\r\nlast,,\n");
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[1] == csv::Row{"x, y", "say \"hi\"", "two\nlines"});
    CHECK(t.rows[2] == csv::Row{"last", "", ""});
    CHECK(t.line_numbers == std::vector<int>{1, 2, 4});
    CHECK_THROWS_AS(csv::parse("a,\"open\n"), ParseError);
}

TEST_CASE("csv escape round-trips through parse") {
    csv::Row row{"plain", "comma,inside", "quote\"inside", "new\nline", ""};
    auto t = csv::parse(csv::join(row) + "\n");
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0] == row);
}

TEST_CASE("band edges are upper inclusive") {
    std::array<double, 4> edges{0.1, 0.3, 0.5, 0.7};
    CHECK(band_for(0.0, edges) == 1);
    CHECK(band_for(0.1, edges) == 1);
    CHECK(band_for(0.1000001, edges) == 2);
    CHECK(band_for(0.5, edges) == 3);
    CHECK(band_for(0.7, edges) == 4);
    CHECK(band_for(0.71, edges) == 5);
    CHECK(band_for(1.0, edges) == 5);
}

TEST_CASE("normalize_assessment boundaries") {
    ScaleConfig cfg;
    Assessment raw;
    raw.raw_probability = 0.0;
    CHECK(normalize_assessment(raw, std::nullopt, cfg).probability_band == 1);
    raw.raw_probability = 1.0;
    CHECK(normalize_assessment(raw, std::nullopt, cfg).probability_band == 5);

    Assessment cost;
    cost.raw_cost = 5.0;  // 0.5% of 1000
    CHECK(normalize_assessment(cost, 1000.0, cfg).cost_band == 2);
    cost.raw_cost = 5.001;
    CHECK(normalize_assessment(cost, 1000.0, cfg).cost_band == 3);

    Assessment sched;
    sched.raw_schedule = 12.0;
    CHECK(normalize_assessment(sched, std::nullopt, cfg).schedule_band == 4);
    sched.raw_schedule = 12.5;
    CHECK(normalize_assessment(sched, std::nullopt, cfg).schedule_band == 5);
}

TEST_CASE("normalize_assessment fills qualitative ratings from the matrix") {
    Assessment raw;
    raw.raw_probability = 0.8;  // band 5
    raw.raw_cost = 100.0;       // 10% of 1000 -> band 5
    raw.raw_schedule = 0.5;     // band 1
    auto a = normalize_assessment(raw, 1000.0, {});
    CHECK(a.qualitative_cost == Rating::High);
    CHECK(a.qualitative_schedule == Rating::Low);
    raw.raw_probability = 0.4;  // band 3
    raw.raw_schedule = 2.0;     // band 2, product 6
    CHECK(normalize_assessment(raw, 1000.0, {}).qualitative_schedule == Rating::Medium);
}

TEST_CASE("normalize_assessment errors") {
    CHECK_THROWS_AS(normalize_assessment({}, 100.0, {}), ValidationError);
    Assessment cost;
    cost.raw_cost = 1.0;
    CHECK_THROWS_AS(normalize_assessment(cost, std::nullopt, {}), ValidationError);
}

TEST_CASE("normalize_assessment is monotone and banded") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ScaleConfig cfg;
    for (int i = 0; i < 500; ++i) {
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        Assessment ra, rb;
        ra.raw_probability = a;
        rb.raw_probability = b;
        ra.raw_cost = a * 100.0;
        rb.raw_cost = b * 100.0;
        ra.raw_schedule = a * 20.0;
        rb.raw_schedule = b * 20.0;
        auto na = normalize_assessment(ra, 1000.0, cfg);
        auto nb = normalize_assessment(rb, 1000.0, cfg);
        CHECK(*na.probability_band <= *nb.probability_band);
        CHECK(*na.cost_band <= *nb.cost_band);
        CHECK(*na.schedule_band <= *nb.schedule_band);
        for (auto band : {*na.probability_band, *na.cost_band, *na.schedule_band}) {
            CHECK(band >= 1);
            CHECK(band <= 5);
        }
        CHECK(na.qualitative_cost != Rating::Unset);
        CHECK(na.qualitative_schedule != Rating::Unset);
    }
}

TEST_CASE("size band boundaries") {
    CHECK(size_band_for_value(499.0) == SizeBand::Under500M);
    CHECK(size_band_for_value(500.0) == SizeBand::From500MTo1B);
    CHECK(size_band_for_value(1000.0) == SizeBand::From500MTo1B);
    CHECK(size_band_for_value(1000.1) == SizeBand::Over1B);
    CHECK(parse_size_band("over_1B") == SizeBand::Over1B);
    CHECK_FALSE(parse_size_band("huge").has_value());
}

TEST_CASE("parse_register keeps file order") {
    auto snap = parse_register(
        "risk_id,name,description,category,probability,cost_impact,schedule_impact,status,snapshot\n"
        "R1,Utility relocation,,,0.3,High,2,,0\n"
        "R2,Design changes,,,,,,,0\n",
        RegisterFormat::Csv);
    REQUIRE(snap.items.size() == 2);
    CHECK(snap.items[0].name == "Utility relocation");
    CHECK(snap.items[1].name == "Design changes");
    CHECK(snap.items[0].assessment.qualitative_cost == Rating::High);
    CHECK(snap.items[0].assessment.raw_schedule == 2.0);
}

TEST_CASE("parse_register errors name the row") {
    const std::string header = "risk_id,name\n";
    try {
        parse_register(header + "R1,ok\nR2,\n", RegisterFormat::Csv);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_register(header + "R1,a\nR1,b\n", RegisterFormat::Csv), ValidationError);
    CHECK_THROWS_AS(parse_register("name\nx\n", RegisterFormat::Csv), ParseError);
    CHECK_THROWS_AS(parse_register("risk_id,name,probability\nR1,a,1.5\n", RegisterFormat::Csv), ParseError);
    CHECK_THROWS_AS(parse_register("[{\"risk_id\": \"R1\"}]", RegisterFormat::Json), ParseError);
    CHECK_THROWS_AS(parse_register("{not json", RegisterFormat::Json), ParseError);
}

TEST_CASE("json register with 35 items") {
    nlohmann::json items = nlohmann::json::array();
    for (int i = 0; i < 35; ++i) items.push_back({{"risk_id", "A" + std::to_string(i)}, {"name", "risk " + std::to_string(i)}});
    auto snap = parse_register(nlohmann::json{{"items", items}}.dump(), RegisterFormat::Json);
    CHECK(snap.items.size() == 35);
}

namespace {

RegisterSnapshot random_snapshot(std::mt19937_64& rng) {
    static const std::vector<std::string> words{"utility", "relocation", "delay", "permit", "soil, wet",
                                                "\"quoted\"", "line\nbreak", "I-73", "café"};
    std::uniform_int_distribution<int> count(0, 8), word(0, static_cast<int>(words.size()) - 1), coin(0, 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RegisterSnapshot s;
    s.ordinal = count(rng);
    int n = count(rng);
    for (int i = 0; i < n; ++i) {
        RiskItem item;
        item.risk_id = "R" + std::to_string(i);
        item.name = words[static_cast<std::size_t>(word(rng))] + " " + words[static_cast<std::size_t>(word(rng))];
        if (coin(rng)) item.description = words[static_cast<std::size_t>(word(rng))];
        if (coin(rng)) item.category_label = "design";
        if (coin(rng)) item.status_note = "Hap";
        if (coin(rng)) item.assessment.raw_probability = u(rng);
        if (coin(rng)) item.assessment.raw_cost = u(rng) * 50.0;
        else if (coin(rng)) item.assessment.qualitative_cost = Rating::Medium;
        if (coin(rng)) item.assessment.raw_schedule = u(rng) * 12.0;
        s.items.push_back(item);
    }
    return s;
}

}  // namespace

TEST_CASE("register round trip is stable") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        auto s = random_snapshot(rng);
        for (auto fmt : {RegisterFormat::Csv, RegisterFormat::Json}) {
            auto once = parse_register(serialize_register(s, fmt), fmt);
            auto twice = parse_register(serialize_register(once, fmt), fmt);
            CHECK(once == twice);
            CHECK(once.items == s.items);
        }
    }
}

TEST_CASE("load_corpus") {
    TempDir dir;
    SUBCASE("empty manifest") {
        auto m = dir.write("m.json", R"({"projects": []})");
        CHECK(load_corpus(m).projects.empty());
    }
    SUBCASE("missing register names the path") {
        auto m = dir.write("m.json", R"({"projects": [{"id": "X", "registers": [{"ordinal": 0, "path": "nope.csv"}]}]})");
        try {
            load_corpus(m);
            FAIL("expected an error");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("nope.csv") != std::string::npos);
        }
    }
    SUBCASE("bad ordinals and duplicate ids") {
        dir.write("r.csv", "risk_id,name\nR1,x\n");
        auto m1 = dir.write("m1.json",
                            R"({"projects": [{"id": "X", "registers": [{"ordinal": 1, "path": "r.csv"}, {"ordinal": 0, "path": "r.csv"}]}]})");
        CHECK_THROWS_AS(load_corpus(m1), ValidationError);
        auto m2 = dir.write("m2.json", R"({"projects": [{"id": "X", "registers": [{"ordinal": 0, "path": "r.csv"}]},
                                                        {"id": "X", "registers": [{"ordinal": 0, "path": "r.csv"}]}]})");
        CHECK_THROWS_AS(load_corpus(m2), ValidationError);
    }
}

TEST_CASE("lifecycle corpus fixture loads eleven projects") {
    auto corpus = load_corpus(testsupport::data_path("fixtures/lifecycle_corpus/manifest.json"));
    CHECK(corpus.projects.size() == 11);
    for (const auto& p : corpus.projects) {
        CHECK_FALSE(p.snapshots.empty());
        for (const auto& snap : p.snapshots) {
            for (const auto& item : snap.items) {
                const auto& a = item.assessment;
                if (a.probability_band) {
                    CHECK(*a.probability_band >= 1);
                    CHECK(*a.probability_band <= 5);
                }
            }
        }
    }
}

TEST_CASE("consolidated register keeps latest version in first-appearance order") {
    ProjectRecord p;
    RegisterSnapshot s0, s1;
    s0.ordinal = 0;
    s0.items = {RiskItem{"A", "first", "", "", "", {}}, RiskItem{"B", "second", "", "", "", {}}};
    s1.ordinal = 1;
    s1.items = {RiskItem{"C", "third", "", "", "", {}}, RiskItem{"A", "first revised", "", "", "", {}}};
    p.snapshots = {s0, s1};
    auto reg = p.consolidated_register();
    REQUIRE(reg.size() == 3);
    CHECK(reg[0].risk_id == "A");
    CHECK(reg[0].name == "first revised");
    CHECK(reg[1].risk_id == "B");
    CHECK(reg[2].risk_id == "C");
}

TEST_CASE("scale config validation") {
    ScaleConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    auto round = ScaleConfig::from_json(cfg.to_json());
    CHECK(round.cost_band_edges == cfg.cost_band_edges);
    cfg.probability_band_edges = {0.5, 0.3, 0.6, 0.7};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    CHECK_NOTHROW(ScaleConfig::load(testsupport::data_path("scales_default.json")).validate());
}
