#include "riskbench/csv.hpp"

#include "riskbench/errors.hpp"

namespace riskbench::csv {

Table parse(std::string_view text) {
    Table table;
    Row row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    int line = 1;
    int record_line = 1;

    // Strip a UTF-8 byte order mark.
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") {
        text.remove_prefix(3);
    }

    auto end_record = [&] {
        row.push_back(std::move(field));
        field.clear();
        bool blank = row.size() == 1 && row.front().empty();
        if (!blank) {
            table.rows.push_back(std::move(row));
            table.line_numbers.push_back(record_line);
        }
        row.clear();
        field_started = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field_started && field.empty()) {
                    in_quotes = true;
                    field_started = true;
                } else {
                    field.push_back(c);
                }
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                field_started = false;
                break;
            case '\r':
                break;
            case '\n':
                end_record();
                ++line;
                record_line = line;
                break;
            default:
                field.push_back(c);
                field_started = true;
        }
    }
    if (in_quotes) {
        throw ParseError("unterminated quoted field starting on line " + std::to_string(record_line));
    }
    if (!field.empty() || !row.empty()) end_record();
    return table;
}

std::string escape(std::string_view field) {
    bool needs_quotes = field.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!needs_quotes) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string join(const Row& row) {
    std::string out;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out.push_back(',');
        out += escape(row[i]);
    }
    return out;
}

}  // namespace riskbench::csv
