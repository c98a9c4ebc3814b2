#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace riskbench::csv {

using Row = std::vector<std::string>;

/// Parsed CSV table. `line_numbers[i]` is the 1-based source line where
/// record i starts (records may span lines inside quoted fields).
struct Table {
    std::vector<Row> rows;
    std::vector<int> line_numbers;
};

/// RFC 4180 reader: comma separated, double-quote escaping, CRLF or LF.
/// Throws ParseError on an unterminated quoted field.
Table parse(std::string_view text);

std::string escape(std::string_view field);
std::string join(const Row& row);

}  // namespace riskbench::csv
