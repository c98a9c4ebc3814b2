#include "riskbench/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <openssl/evp.h>

#include "riskbench/csv.hpp"
#include "riskbench/errors.hpp"
#include "riskbench/util.hpp"

namespace riskbench {

std::string format_float(double v) {
    if (!std::isfinite(v)) return "null";
    if (v == 0.0) return "0";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

namespace {

void indent(std::string& out, int depth) { out.append(static_cast<std::size_t>(depth) * 2, ' '); }

void write_value(std::string& out, const nlohmann::json& j, int depth) {
    switch (j.type()) {
        case nlohmann::json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            // nlohmann::json objects are std::map backed, so items() is key-ordered
            for (const auto& [key, value] : j.items()) {
                if (!first) out += ",\n";
                first = false;
                indent(out, depth + 1);
                out += nlohmann::json(key).dump();
                out += ": ";
                write_value(out, value, depth + 1);
            }
            out += "\n";
            indent(out, depth);
            out += "}";
            return;
        }
        case nlohmann::json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ",\n";
                indent(out, depth + 1);
                write_value(out, j[i], depth + 1);
            }
            out += "\n";
            indent(out, depth);
            out += "]";
            return;
        }
        case nlohmann::json::value_t::number_float:
            out += format_float(j.get<double>());
            return;
        default:
            out += j.dump();
            return;
    }
}

}  // namespace

std::string canonical_json(const nlohmann::json& j) {
    std::string out;
    write_value(out, j, 0);
    out += "\n";
    return out;
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 computation failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

void ReportBundle::add_input(const std::filesystem::path& path) {
    auto p = path.string();
    for (const auto& in : inputs) {
        if (in.path == p) return;
    }
    inputs.push_back({p, sha256_file(path)});
}

nlohmann::json ReportBundle::to_json() const {
    nlohmann::json digests = nlohmann::json::array();
    for (const auto& in : inputs) digests.push_back({{"path", in.path}, {"sha256", in.sha256}});
    return {{"command", command},
            {"config", config},
            {"tool_version", tool_version},
            {"inputs", digests},
            {"result", result}};
}

void write_text(const std::filesystem::path& path, std::string_view bytes) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write file: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ValidationError("cannot write file: " + path.string());
}

std::size_t emit_report(const ReportBundle& bundle, const std::filesystem::path& path) {
    auto text = canonical_json(bundle.to_json());
    write_text(path, text);
    return text.size();
}

std::string heatmap_csv(const std::vector<std::string>& row_labels, const std::vector<std::string>& col_labels,
                        const std::vector<double>& values) {
    if (values.size() != row_labels.size() * col_labels.size()) {
        throw DimensionError("heatmap: " + std::to_string(values.size()) + " values for a " +
                             std::to_string(row_labels.size()) + "x" + std::to_string(col_labels.size()) + " grid");
    }
    csv::Row header{""};
    header.insert(header.end(), col_labels.begin(), col_labels.end());
    std::string out = csv::join(header) + "\n";
    for (std::size_t i = 0; i < row_labels.size(); ++i) {
        csv::Row row{row_labels[i]};
        for (std::size_t j = 0; j < col_labels.size(); ++j) row.push_back(format_float(values[i * col_labels.size() + j]));
        out += csv::join(row) + "\n";
    }
    return out;
}

}  // namespace riskbench
