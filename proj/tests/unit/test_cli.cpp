#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <sys/wait.h>

#include "riskbench/app.hpp"
#include "riskbench/errors.hpp"
#include "riskbench/report.hpp"
#include "unit/test_support.hpp"

using namespace riskbench;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "riskbench");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string fixture(const std::string& rel) { return testsupport::data_path("fixtures/" + rel).string(); }

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("float formatting") {
    CHECK(format_float(0.7333333) == "0.733333");
    CHECK(format_float(0.0) == "0");
    CHECK(format_float(-0.0) == "0");
    CHECK(format_float(1.0) == "1");
    CHECK(format_float(2.5e-7) == "2.5e-07");
    CHECK(format_float(std::numeric_limits<double>::quiet_NaN()) == "null");
    CHECK(format_float(std::numeric_limits<double>::infinity()) == "null");
}

TEST_CASE("canonical json") {
    nlohmann::json j = {{"b", 1}, {"a", {{"z", 0.1 + 0.2}, {"y", nullptr}}}, {"c", {1.0, "x"}}};
    auto text = canonical_json(j);
    CHECK(text.back() == '\n');
    CHECK(text.find("\"a\"") < text.find("\"b\""));
    CHECK(text.find("\"y\"") < text.find("\"z\""));
    CHECK(text.find("0.3") != std::string::npos);
    CHECK(text.find("0.30000000000000004") == std::string::npos);
    CHECK(text.find("\n  \"a\": {") != std::string::npos);
    CHECK(canonical_json(nlohmann::json::parse(text)) == text);
}

TEST_CASE("sha256") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    testsupport::TempDir dir;
    CHECK(sha256_file(dir.write("f.txt", "abc")) == sha256_hex("abc"));
    CHECK_THROWS_AS(sha256_file(dir.path() / "missing"), ValidationError);
}

TEST_CASE("heatmap csv shape") {
    auto csv = heatmap_csv({"P1", "P2"}, {"P1", "P2", "P3"}, {1, 0.5, 0.25, 0.5, 1, 0});
    CHECK(csv == ",P1,P2,P3\nP1,1,0.5,0.25\nP2,0.5,1,0\n");
}

TEST_CASE("exit codes") {
    auto v = run({"--version"});
    CHECK(v.code == kExitOk);
    CHECK(v.out.rfind("riskbench ", 0) == 0);
    CHECK(run({"bogus"}).code == kExitUsage);
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"template", "build"}).code == kExitUsage);
    CHECK(run({"rbs", "coverage", "--manifest", fixture("demo/manifest.json"), "--threshold", "1.5"}).code ==
          kExitUsage);
    auto missing = run({"ingest", "--manifest", "/nonexistent/register_manifest.json"});
    CHECK(missing.code == kExitValidation);
    CHECK(missing.err.find("/nonexistent/register_manifest.json") != std::string::npos);
}

TEST_CASE("the binary runs standalone") {
    testsupport::TempDir dir;
    auto out = dir.path() / "version.txt";
    std::string cmd = std::string("\"") + RISKBENCH_CLI_PATH + "\" --version > \"" + out.string() + "\"";
    int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 0);
    CHECK(slurp(out).rfind("riskbench ", 0) == 0);
    status = std::system((std::string("\"") + RISKBENCH_CLI_PATH + "\" nope 2>/dev/null").c_str());
    CHECK(WEXITSTATUS(status) == 2);
}

TEST_CASE("template build report") {
    auto manifest = fixture("demo/manifest.json");
    auto r = run({"template", "build", "--manifest", manifest});
    REQUIRE(r.code == kExitOk);
    auto j = nlohmann::json::parse(r.out);
    REQUIRE(j.at("result").at("template").is_array());
    CHECK_FALSE(j.at("result").at("template").empty());
    CHECK(j.at("command").at(0) == "template");
    bool digested = false;
    for (const auto& in : j.at("inputs")) {
        if (in.at("path") == manifest) {
            digested = true;
            CHECK(in.at("sha256") == sha256_file(manifest));
        }
    }
    CHECK(digested);
    CHECK(j.contains("tool_version"));
}

TEST_CASE("reports are deterministic and independent of jobs and output path") {
    testsupport::TempDir dir;
    auto manifest = fixture("demo/manifest.json");
    auto a = run({"similarity", "risks", "--manifest", manifest});
    auto b = run({"-j", "3", "similarity", "risks", "--manifest", manifest});
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(run({"similarity", "risks", "--manifest", manifest}).out == a.out);

    auto path = dir.path() / "nested" / "risks.json";
    auto c = run({"--jobs=2", "similarity", "risks", "--manifest", manifest, "--out", path.string()});
    REQUIRE(c.code == 0);
    CHECK(c.out.empty());
    CHECK(slurp(path) == a.out);
}

TEST_CASE("heatmap side output") {
    testsupport::TempDir dir;
    auto heat = dir.path() / "heat.csv";
    auto r = run({"similarity", "docs", "--manifest", fixture("demo/manifest.json"), "--heatmap", heat.string(), "-o",
                  (dir.path() / "docs.json").string()});
    REQUIRE(r.code == 0);
    std::istringstream csv(slurp(heat));
    std::string line;
    std::size_t lines = 0;
    while (std::getline(csv, line)) {
        ++lines;
        CHECK(std::count(line.begin(), line.end(), ',') == 7);
    }
    CHECK(lines == 8);
}

TEST_CASE("coverage then co-occurrence") {
    testsupport::TempDir dir;
    auto cov = dir.path() / "cov.json";
    REQUIRE(run({"rbs", "coverage", "--manifest", fixture("demo/manifest.json"), "-o", cov.string()}).code == 0);
    auto co = run({"rbs", "cooccur", "--coverage", cov.string()});
    REQUIRE(co.code == 0);
    CHECK(co.out.rfind("item_a,item_b,count\n", 0) == 0);
    CHECK(std::count(co.out.begin(), co.out.end(), '\n') == 1 + 70 * 69 / 2);
}

TEST_CASE("lifecycle styles then compare") {
    testsupport::TempDir dir;
    auto styles = dir.path() / "styles.json";
    REQUIRE(run({"lifecycle", "styles", "--manifest", fixture("lifecycle_corpus/manifest.json"), "-o", styles.string()}).code ==
            0);
    auto cmp = run({"lifecycle", "compare", "--groups", styles.string(), "--performance",
                    fixture("lifecycle_corpus/performance.csv")});
    REQUIRE(cmp.code == 0);
    auto j = nlohmann::json::parse(cmp.out);
    CHECK(j.at("config").at("alpha") == 0.05);
    CHECK(run({"lifecycle", "compare", "--groups", styles.string()}).code != 0);
}

TEST_CASE("emit_report on an unwritable path") {
    ReportBundle b;
    CHECK_THROWS_AS(emit_report(b, "/proc/riskbench/report.json"), ValidationError);
    testsupport::TempDir dir;
    auto n = emit_report(b, dir.path() / "r.json");
    CHECK(n == slurp(dir.path() / "r.json").size());
}
