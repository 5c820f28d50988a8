#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "medcomm/error.hpp"

namespace medcomm::detail {

struct CsvRow {
    std::size_t line = 0;  // 1-based physical line where the row starts
    std::vector<std::string> fields;
};

/// RFC 4180 reader: comma separated, double-quote escaping, quoted fields
/// may span lines. CRLF and LF both end a record. Blank lines are skipped.
inline std::vector<CsvRow> parse_csv(std::string_view text) {
    std::vector<CsvRow> rows;
    CsvRow row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;
    row.line = 1;

    auto end_field = [&] {
        row.fields.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        bool blank = row.fields.size() == 1 && row.fields[0].empty();
        if (!blank) rows.push_back(std::move(row));
        row = CsvRow{};
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
                if (field_started || !field.empty()) {
                    throw DataError("csv line " + std::to_string(line) + ": stray quote inside unquoted field");
                }
                in_quotes = true;
                field_started = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                break;
            case '\n':
                end_row();
                ++line;
                row.line = line;
                break;
            default:
                field.push_back(c);
        }
    }
    if (in_quotes) {
        throw DataError("csv line " + std::to_string(row.line) + ": unterminated quoted field");
    }
    if (!field.empty() || field_started || !row.fields.empty()) end_row();
    return rows;
}

inline std::string csv_escape(std::string_view s) {
    bool needs = s.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!needs) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace medcomm::detail
