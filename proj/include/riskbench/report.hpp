#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace riskbench {

/// %.6g with "-0" folded to "0". Non-finite values print as null.
std::string format_float(double v);

/// Two-space indented JSON with keys in byte order, floats through
/// format_float and a trailing newline.
std::string canonical_json(const nlohmann::json& j);

std::string sha256_hex(std::string_view bytes);
/// Throws ValidationError when the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

struct InputDigest {
    std::string path;  // as given on the command line
    std::string sha256;
};

struct ReportBundle {
    std::vector<std::string> command;
    nlohmann::json config = nlohmann::json::object();
    std::string tool_version;
    std::vector<InputDigest> inputs;
    nlohmann::json result = nlohmann::json::object();

    /// Digests the file and records it. A path already recorded is skipped.
    void add_input(const std::filesystem::path& path);
    nlohmann::json to_json() const;
};

/// Writes canonical JSON of the bundle; returns the byte count. Parent
/// directories are created. Throws ValidationError on an unwritable path.
std::size_t emit_report(const ReportBundle& bundle, const std::filesystem::path& path);

/// Writes bytes verbatim, creating parent directories.
void write_text(const std::filesystem::path& path, std::string_view bytes);

/// Rectangular CSV: header row "" + column labels, then one row per label
/// with values through format_float. `values` is row-major.
std::string heatmap_csv(const std::vector<std::string>& row_labels, const std::vector<std::string>& col_labels,
                        const std::vector<double>& values);

}  // namespace riskbench
