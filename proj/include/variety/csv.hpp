#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "variety/error.hpp"

namespace variety {

using CsvRow = std::vector<std::string>;

/// RFC 4180 reader: quoted fields may hold commas, doubled quotes and line
/// breaks; CRLF and LF both end a record; a leading UTF-8 BOM is skipped.
/// A trailing line break does not produce an extra record.
inline std::vector<CsvRow> parse_csv(std::string_view text) {
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

    std::vector<CsvRow> rows;
    CsvRow row;
    std::string field;
    bool in_quotes = false;
    bool after_quote = false;  // just closed a quoted field
    std::size_t line = 1;
    std::size_t column = 1;
    std::size_t quote_line = 0;
    std::size_t quote_column = 0;

    auto fail = [&](const std::string& what) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(column) +
                                               ": " + what);
    };
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        after_quote = false;
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                    ++column;
                } else {
                    in_quotes = false;
                    after_quote = true;
                }
            } else {
                field.push_back(ch);
                if (ch == '\n') {
                    ++line;
                    column = 0;
                }
            }
        } else if (ch == ',') {
            end_field();
        } else if (ch == '\r' || ch == '\n') {
            if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_row();
            ++line;
            column = 0;
        } else if (ch == '"') {
            if (!field.empty() || after_quote) fail("unexpected quote inside unquoted field");
            in_quotes = true;
            quote_line = line;
            quote_column = column;
        } else {
            if (after_quote) fail("text after closing quote");
            field.push_back(ch);
        }
        ++column;
    }
    if (in_quotes) {
        line = quote_line;
        column = quote_column;
        fail("unterminated quoted field");
    }
    if (!field.empty() || !row.empty() || after_quote) end_row();
    return rows;
}

inline std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += "\"\"";
        else out.push_back(ch);
    }
    out += '"';
    return out;
}

inline std::string csv_line(const CsvRow& row) {
    std::string out;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(row[i]);
    }
    out += '\n';
    return out;
}

}  // namespace variety
