#include "riskbench/corpus.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "riskbench/csv.hpp"
#include "riskbench/errors.hpp"
#include "riskbench/util.hpp"

namespace riskbench {

// ---------------------------------------------------------------------------
// small shared helpers

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string_view trim(std::string_view s) {
    const char* ws = " \t\r\n\f\v";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::string normalize_text(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : trim(s)) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            pending_space = true;
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return to_lower_ascii(out);
}

std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    std::string buf(s);
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size() || errno == ERANGE || !std::isfinite(v)) return std::nullopt;
    return v;
}

// ---------------------------------------------------------------------------
// enums

std::string_view to_string(Rating r) {
    switch (r) {
        case Rating::Low: return "Low";
        case Rating::Medium: return "Medium";
        case Rating::High: return "High";
        case Rating::Unset: break;
    }
    return "Unset";
}

std::optional<Rating> parse_rating(std::string_view text) {
    auto t = to_lower_ascii(trim(text));
    if (t == "high" || t == "h") return Rating::High;
    if (t == "medium" || t == "med" || t == "m") return Rating::Medium;
    if (t == "low" || t == "l") return Rating::Low;
    return std::nullopt;
}

std::string_view to_string(SizeBand b) {
    switch (b) {
        case SizeBand::Under500M: return "under_500M";
        case SizeBand::From500MTo1B: return "500M_to_1B";
        case SizeBand::Over1B: return "over_1B";
    }
    return "";
}

std::optional<SizeBand> parse_size_band(std::string_view text) {
    auto t = to_lower_ascii(trim(text));
    if (t == "under_500m") return SizeBand::Under500M;
    if (t == "500m_to_1b") return SizeBand::From500MTo1B;
    if (t == "over_1b") return SizeBand::Over1B;
    return std::nullopt;
}

SizeBand size_band_for_value(double v) {
    if (v < 500.0) return SizeBand::Under500M;
    if (v <= 1000.0) return SizeBand::From500MTo1B;
    return SizeBand::Over1B;
}

// ---------------------------------------------------------------------------
// model helpers

std::vector<RiskItem> ProjectRecord::consolidated_register() const {
    std::vector<RiskItem> out;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& snap : snapshots) {
        for (const auto& item : snap.items) {
            auto [it, inserted] = index.emplace(item.risk_id, out.size());
            if (inserted) {
                out.push_back(item);
            } else {
                out[it->second] = item;
            }
        }
    }
    return out;
}

const ProjectRecord* Corpus::find(std::string_view project_id) const {
    for (const auto& p : projects) {
        if (p.project_id == project_id) return &p;
    }
    return nullptr;
}

// ---------------------------------------------------------------------------
// scales

std::array<std::array<Rating, 5>, 5> ScaleConfig::default_matrix() {
    std::array<std::array<Rating, 5>, 5> m{};
    for (int p = 1; p <= 5; ++p) {
        for (int i = 1; i <= 5; ++i) {
            int product = p * i;
            m[p - 1][i - 1] = product >= 15 ? Rating::High : product >= 6 ? Rating::Medium : Rating::Low;
        }
    }
    return m;
}

namespace {

std::array<double, 4> read_edges(const nlohmann::json& j, const char* key, std::array<double, 4> fallback) {
    if (!j.contains(key)) return fallback;
    const auto& arr = j.at(key);
    if (!arr.is_array() || arr.size() != 4) {
        throw ValidationError(std::string("scale config: '") + key + "' must be an array of 4 numbers");
    }
    std::array<double, 4> out{};
    for (std::size_t i = 0; i < 4; ++i) {
        if (!arr[i].is_number()) throw ValidationError(std::string("scale config: '") + key + "' must be numeric");
        out[i] = arr[i].get<double>();
    }
    return out;
}

}  // namespace

ScaleConfig ScaleConfig::from_json(const nlohmann::json& j) {
    ScaleConfig cfg;
    cfg.probability_band_edges = read_edges(j, "probability_band_edges", cfg.probability_band_edges);
    cfg.cost_band_edges = read_edges(j, "cost_band_edges", cfg.cost_band_edges);
    cfg.schedule_band_edges = read_edges(j, "schedule_band_edges", cfg.schedule_band_edges);
    if (j.contains("risk_matrix")) {
        const auto& rows = j.at("risk_matrix");
        if (!rows.is_array() || rows.size() != 5) {
            throw ValidationError("scale config: risk_matrix must be 5 rows of 5 ratings");
        }
        for (std::size_t p = 0; p < 5; ++p) {
            if (!rows[p].is_array() || rows[p].size() != 5) {
                throw ValidationError("scale config: risk_matrix must be 5 rows of 5 ratings");
            }
            for (std::size_t i = 0; i < 5; ++i) {
                auto r = rows[p][i].is_string() ? parse_rating(rows[p][i].get<std::string>()) : std::nullopt;
                if (!r) throw ValidationError("scale config: risk_matrix entries must be High, Medium or Low");
                cfg.risk_matrix[p][i] = *r;
            }
        }
    }
    cfg.validate();
    return cfg;
}

ScaleConfig ScaleConfig::load(const std::filesystem::path& path) {
    auto text = read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("scale config " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

nlohmann::json ScaleConfig::to_json() const {
    nlohmann::json matrix = nlohmann::json::array();
    for (const auto& row : risk_matrix) {
        nlohmann::json r = nlohmann::json::array();
        for (auto v : row) r.push_back(std::string(to_string(v)));
        matrix.push_back(r);
    }
    return {{"probability_band_edges", probability_band_edges},
            {"cost_band_edges", cost_band_edges},
            {"schedule_band_edges", schedule_band_edges},
            {"risk_matrix", matrix}};
}

void ScaleConfig::validate() const {
    auto check = [](const std::array<double, 4>& e, const char* name) {
        for (std::size_t i = 1; i < e.size(); ++i) {
            if (!(e[i] > e[i - 1])) {
                throw ValidationError(std::string("scale config: ") + name + " must be strictly ascending");
            }
        }
        if (!(e[0] >= 0.0)) throw ValidationError(std::string("scale config: ") + name + " must be non-negative");
    };
    check(probability_band_edges, "probability_band_edges");
    check(cost_band_edges, "cost_band_edges");
    check(schedule_band_edges, "schedule_band_edges");
    if (probability_band_edges.back() >= 1.0) {
        throw ValidationError("scale config: probability_band_edges must lie inside [0, 1)");
    }
    for (const auto& row : risk_matrix) {
        for (auto v : row) {
            if (v == Rating::Unset) throw ValidationError("scale config: risk_matrix must be total");
        }
    }
}

int band_for(double value, const std::array<double, 4>& edges) {
    int band = 1;
    for (double e : edges) {
        if (value > e) ++band;
    }
    return band;
}

Assessment normalize_assessment(const Assessment& raw, std::optional<double> project_value_musd,
                                const ScaleConfig& cfg) {
    if (!raw.raw_probability && !raw.raw_cost && !raw.raw_schedule) {
        throw ValidationError("nothing to normalize: no raw probability, cost or schedule value");
    }
    Assessment out = raw;
    if (raw.raw_probability) {
        double p = *raw.raw_probability;
        if (p < 0.0 || p > 1.0) throw ValidationError("raw probability outside [0, 1]");
        out.probability_band = band_for(p, cfg.probability_band_edges);
    }
    if (raw.raw_cost) {
        if (!project_value_musd || *project_value_musd <= 0.0) {
            throw ValidationError("raw cost impact requires a positive project value");
        }
        out.cost_band = band_for(std::max(0.0, *raw.raw_cost) / *project_value_musd, cfg.cost_band_edges);
    }
    if (raw.raw_schedule) {
        out.schedule_band = band_for(std::max(0.0, *raw.raw_schedule), cfg.schedule_band_edges);
    }
    if (out.probability_band && out.cost_band) {
        out.qualitative_cost = cfg.risk_matrix[*out.probability_band - 1][*out.cost_band - 1];
    }
    if (out.probability_band && out.schedule_band) {
        out.qualitative_schedule = cfg.risk_matrix[*out.probability_band - 1][*out.schedule_band - 1];
    }
    return out;
}

// ---------------------------------------------------------------------------
// registers

std::optional<RegisterFormat> format_for_path(const std::filesystem::path& path) {
    auto ext = to_lower_ascii(path.extension().string());
    if (ext == ".csv") return RegisterFormat::Csv;
    if (ext == ".json") return RegisterFormat::Json;
    return std::nullopt;
}

namespace {

struct ParsedRegister {
    RegisterSnapshot snapshot;
    std::optional<int> declared_ordinal;
};

std::string where(int row, int line) {
    return "row " + std::to_string(row) + " (line " + std::to_string(line) + ")";
}

double parse_probability(std::string_view text, const std::string& loc) {
    auto t = trim(text);
    bool percent = !t.empty() && t.back() == '%';
    if (percent) t.remove_suffix(1);
    auto v = parse_number(t);
    if (!v) throw ParseError(loc + ": probability '" + std::string(text) + "' is not a number");
    double p = percent ? *v / 100.0 : *v;
    if (p < 0.0 || p > 1.0) throw ParseError(loc + ": probability " + std::string(text) + " outside [0, 1]");
    return p;
}

/// Impact cells hold either a number or a qualitative High/Medium/Low.
void parse_impact(std::string_view text, std::optional<double>& raw, Rating& rating, const std::string& loc,
                  const char* what) {
    if (trim(text).empty()) return;
    if (auto r = parse_rating(text)) {
        rating = *r;
        return;
    }
    auto v = parse_number(text);
    if (!v) throw ParseError(loc + ": " + what + " '" + std::string(text) + "' is neither a number nor High/Medium/Low");
    if (*v < 0.0) throw ParseError(loc + ": " + what + " must be non-negative");
    raw = *v;
}

void finish_item(RiskItem& item, std::set<std::string>& seen, const std::string& loc) {
    item.risk_id = std::string(trim(item.risk_id));
    item.name = std::string(trim(item.name));
    if (item.risk_id.empty()) throw ParseError(loc + ": empty risk_id");
    if (item.name.empty()) throw ParseError(loc + ": empty risk name");
    if (!seen.insert(item.risk_id).second) {
        throw ValidationError(loc + ": duplicate risk_id '" + item.risk_id + "'");
    }
}

void declare_ordinal(std::optional<int>& declared, std::string_view text, const std::string& loc) {
    auto t = trim(text);
    if (t.empty()) return;
    auto v = parse_number(t);
    if (!v || *v < 0 || std::floor(*v) != *v) throw ParseError(loc + ": snapshot must be a non-negative integer");
    int ord = static_cast<int>(*v);
    if (declared && *declared != ord) throw ParseError(loc + ": snapshot column disagrees with earlier rows");
    declared = ord;
}

ParsedRegister parse_csv_register(std::string_view bytes) {
    auto table = csv::parse(bytes);
    if (table.rows.empty()) throw ParseError("register CSV: missing header row");
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < table.rows[0].size(); ++i) {
        col.emplace(to_lower_ascii(trim(table.rows[0][i])), i);
    }
    for (const char* required : {"risk_id", "name"}) {
        if (!col.count(required)) throw ParseError(std::string("register CSV: missing required column '") + required + "'");
    }
    auto cell = [&](const csv::Row& row, const char* key) -> std::string_view {
        auto it = col.find(key);
        if (it == col.end() || it->second >= row.size()) return {};
        return row[it->second];
    };

    ParsedRegister out;
    std::set<std::string> seen;
    for (std::size_t r = 1; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        auto loc = where(static_cast<int>(r), table.line_numbers[r]);
        RiskItem item;
        item.risk_id = std::string(cell(row, "risk_id"));
        item.name = std::string(cell(row, "name"));
        item.description = std::string(trim(cell(row, "description")));
        item.category_label = std::string(trim(cell(row, "category")));
        item.status_note = std::string(trim(cell(row, "status")));
        if (auto p = cell(row, "probability"); !trim(p).empty()) {
            item.assessment.raw_probability = parse_probability(p, loc);
        }
        parse_impact(cell(row, "cost_impact"), item.assessment.raw_cost, item.assessment.qualitative_cost, loc,
                     "cost_impact");
        parse_impact(cell(row, "schedule_impact"), item.assessment.raw_schedule,
                     item.assessment.qualitative_schedule, loc, "schedule_impact");
        declare_ordinal(out.declared_ordinal, cell(row, "snapshot"), loc);
        finish_item(item, seen, loc);
        out.snapshot.items.push_back(std::move(item));
    }
    if (out.declared_ordinal) out.snapshot.ordinal = *out.declared_ordinal;
    return out;
}

std::string json_scalar_text(const nlohmann::json& v) {
    if (v.is_null()) return {};
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
        return buf;
    }
    throw ParseError("register JSON: expected string or number, got " + v.dump());
}

ParsedRegister parse_json_register(std::string_view bytes) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("register JSON: ") + e.what());
    }
    ParsedRegister out;
    const nlohmann::json* items = &j;
    if (j.is_object()) {
        if (!j.contains("items")) throw ParseError("register JSON: object must contain 'items'");
        items = &j.at("items");
        if (j.contains("ordinal")) declare_ordinal(out.declared_ordinal, json_scalar_text(j.at("ordinal")), "register");
        if (j.contains("label")) out.snapshot.label = json_scalar_text(j.at("label"));
    }
    if (!items->is_array()) throw ParseError("register JSON: items must be an array");

    std::set<std::string> seen;
    int r = 0;
    for (const auto& rec : *items) {
        ++r;
        auto loc = "record " + std::to_string(r);
        if (!rec.is_object()) throw ParseError(loc + ": expected an object");
        auto get = [&](const char* key) { return rec.contains(key) ? json_scalar_text(rec.at(key)) : std::string(); };
        RiskItem item;
        item.risk_id = get("risk_id");
        item.name = get("name");
        item.description = std::string(trim(get("description")));
        item.category_label = std::string(trim(get("category")));
        item.status_note = std::string(trim(get("status")));
        if (auto p = get("probability"); !trim(p).empty()) item.assessment.raw_probability = parse_probability(p, loc);
        parse_impact(get("cost_impact"), item.assessment.raw_cost, item.assessment.qualitative_cost, loc,
                     "cost_impact");
        parse_impact(get("schedule_impact"), item.assessment.raw_schedule, item.assessment.qualitative_schedule,
                     loc, "schedule_impact");
        declare_ordinal(out.declared_ordinal, get("snapshot"), loc);
        finish_item(item, seen, loc);
        out.snapshot.items.push_back(std::move(item));
    }
    if (out.declared_ordinal) out.snapshot.ordinal = *out.declared_ordinal;
    return out;
}

ParsedRegister parse_any(std::string_view bytes, RegisterFormat format) {
    return format == RegisterFormat::Csv ? parse_csv_register(bytes) : parse_json_register(bytes);
}

std::string number_text(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string impact_text(const std::optional<double>& raw, Rating rating) {
    if (raw) return number_text(*raw);
    if (rating != Rating::Unset) return std::string(to_string(rating));
    return {};
}

}  // namespace

RegisterSnapshot parse_register(std::string_view bytes, RegisterFormat format) {
    return parse_any(bytes, format).snapshot;
}

std::string serialize_register(const RegisterSnapshot& snapshot, RegisterFormat format) {
    if (format == RegisterFormat::Csv) {
        std::string out = "risk_id,name,description,category,probability,cost_impact,schedule_impact,status,snapshot\n";
        for (const auto& item : snapshot.items) {
            const auto& a = item.assessment;
            csv::Row row{item.risk_id,
                         item.name,
                         item.description,
                         item.category_label,
                         a.raw_probability ? number_text(*a.raw_probability) : std::string(),
                         impact_text(a.raw_cost, a.qualitative_cost),
                         impact_text(a.raw_schedule, a.qualitative_schedule),
                         item.status_note,
                         std::to_string(snapshot.ordinal)};
            out += csv::join(row);
            out.push_back('\n');
        }
        return out;
    }
    nlohmann::json items = nlohmann::json::array();
    for (const auto& item : snapshot.items) {
        const auto& a = item.assessment;
        nlohmann::json rec{{"risk_id", item.risk_id}, {"name", item.name}};
        if (!item.description.empty()) rec["description"] = item.description;
        if (!item.category_label.empty()) rec["category"] = item.category_label;
        if (!item.status_note.empty()) rec["status"] = item.status_note;
        if (a.raw_probability) rec["probability"] = *a.raw_probability;
        if (auto t = impact_text(a.raw_cost, a.qualitative_cost); !t.empty()) {
            rec["cost_impact"] = a.raw_cost ? nlohmann::json(*a.raw_cost) : nlohmann::json(t);
        }
        if (auto t = impact_text(a.raw_schedule, a.qualitative_schedule); !t.empty()) {
            rec["schedule_impact"] = a.raw_schedule ? nlohmann::json(*a.raw_schedule) : nlohmann::json(t);
        }
        items.push_back(std::move(rec));
    }
    nlohmann::json j{{"ordinal", snapshot.ordinal}, {"items", items}};
    if (!snapshot.label.empty()) j["label"] = snapshot.label;
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// manifest

namespace {

std::string required_string(const nlohmann::json& j, const char* key, const std::string& loc) {
    if (!j.contains(key) || !j.at(key).is_string() || trim(j.at(key).get<std::string>()).empty()) {
        throw ValidationError(loc + ": missing or empty '" + key + "'");
    }
    return std::string(trim(j.at(key).get<std::string>()));
}

std::string optional_string(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return {};
    if (j.at(key).is_string()) return std::string(trim(j.at(key).get<std::string>()));
    return j.at(key).dump();
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& manifest_path, const ScaleConfig& cfg) {
    auto text = read_file(manifest_path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("manifest " + manifest_path.string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("projects") || !j.at("projects").is_array()) {
        throw ValidationError("manifest " + manifest_path.string() + ": expected {\"projects\": [...]}");
    }
    auto base = manifest_path.parent_path();

    Corpus corpus;
    corpus.manifest_path = manifest_path.string();
    std::set<std::string> ids;
    for (const auto& pj : j.at("projects")) {
        ProjectRecord p;
        p.project_id = required_string(pj, "id", "manifest project");
        auto loc = "project '" + p.project_id + "'";
        if (!ids.insert(p.project_id).second) throw ValidationError("manifest: duplicate project id '" + p.project_id + "'");
        p.jurisdiction = optional_string(pj, "jurisdiction");
        p.delivery_method = optional_string(pj, "delivery_method");
        p.project_type = optional_string(pj, "project_type");
        if (pj.contains("contract_value_musd") && !pj.at("contract_value_musd").is_null()) {
            if (!pj.at("contract_value_musd").is_number() || pj.at("contract_value_musd").get<double>() <= 0.0) {
                throw ValidationError(loc + ": contract_value_musd must be a positive number");
            }
            p.contract_value_musd = pj.at("contract_value_musd").get<double>();
        }
        if (pj.contains("award_year") && !pj.at("award_year").is_null()) {
            if (!pj.at("award_year").is_number_integer()) throw ValidationError(loc + ": award_year must be an integer");
            p.award_year = pj.at("award_year").get<int>();
        }
        if (auto sb = optional_string(pj, "size_band"); !sb.empty()) {
            p.size_band = parse_size_band(sb);
            if (!p.size_band) throw ValidationError(loc + ": unknown size_band '" + sb + "'");
            if (p.contract_value_musd && size_band_for_value(*p.contract_value_musd) != *p.size_band) {
                throw ValidationError(loc + ": size_band '" + sb + "' inconsistent with contract value");
            }
        } else if (p.contract_value_musd) {
            p.size_band = size_band_for_value(*p.contract_value_musd);
        }

        if (!pj.contains("registers") || !pj.at("registers").is_array() || pj.at("registers").empty()) {
            throw ValidationError(loc + ": at least one register is required");
        }
        std::optional<int> last_ordinal;
        for (const auto& rj : pj.at("registers")) {
            auto rel = required_string(rj, "path", loc + " register");
            if (!rj.contains("ordinal") || !rj.at("ordinal").is_number_integer() || rj.at("ordinal").get<int>() < 0) {
                throw ValidationError(loc + ": register '" + rel + "' needs a non-negative integer ordinal");
            }
            int ordinal = rj.at("ordinal").get<int>();
            if (last_ordinal && ordinal <= *last_ordinal) {
                throw ValidationError(loc + ": register ordinals must be strictly increasing");
            }
            last_ordinal = ordinal;
            std::filesystem::path path = std::filesystem::path(rel).is_absolute() ? std::filesystem::path(rel) : base / rel;
            if (!std::filesystem::exists(path)) throw ValidationError("register file not found: " + path.string());
            auto format = format_for_path(path);
            if (!format) throw ValidationError("register file has unknown extension: " + path.string());

            ParsedRegister parsed;
            try {
                parsed = parse_any(read_file(path), *format);
            } catch (const Error& e) {
                throw ParseError(path.string() + ": " + e.what());
            }
            if (parsed.declared_ordinal && *parsed.declared_ordinal != ordinal) {
                throw ValidationError(path.string() + ": snapshot column " + std::to_string(*parsed.declared_ordinal) +
                                      " disagrees with manifest ordinal " + std::to_string(ordinal));
            }
            RegisterSnapshot snap = std::move(parsed.snapshot);
            snap.ordinal = ordinal;
            if (auto label = optional_string(rj, "label"); !label.empty()) snap.label = label;
            for (auto& item : snap.items) {
                auto& a = item.assessment;
                if (!a.raw_probability && !a.raw_cost && !a.raw_schedule) continue;
                Assessment raw = a;
                if (!p.contract_value_musd) raw.raw_cost.reset();
                if (!raw.raw_probability && !raw.raw_cost && !raw.raw_schedule) continue;
                auto normalized = normalize_assessment(raw, p.contract_value_musd, cfg);
                normalized.raw_cost = a.raw_cost;
                a = normalized;
            }
            p.snapshots.push_back(std::move(snap));
        }
        corpus.projects.push_back(std::move(p));
    }
    return corpus;
}

}  // namespace riskbench
