#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace riskbench {

/// Whole file as bytes. Throws ValidationError naming the path when it
/// cannot be opened.
std::string read_file(const std::filesystem::path& path);

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

/// Trim, collapse internal whitespace runs to one space, lowercase.
std::string normalize_text(std::string_view s);

std::optional<double> parse_number(std::string_view s);

}  // namespace riskbench
