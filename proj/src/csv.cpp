#include "ehk/csv.hpp"

#include <fstream>
#include <sstream>

#include "ehk/errors.hpp"

namespace ehk::csv {

namespace {

bool needs_quoting(const std::string& field) {
    return field.find_first_of(",\"\r\n") != std::string::npos;
}

} // namespace

Table parse(const std::string& text, const std::string& origin) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;

    auto end_field = [&] {
        record.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        // A lone empty field on an otherwise blank line is a blank line.
        if (record.size() == 1 && record[0].empty()) {
            record.clear();
            return;
        }
        records.push_back(std::move(record));
        record.clear();
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
                if (field.empty() && !field_started) {
                    in_quotes = true;
                    field_started = true;
                } else {
                    throw ParseError(origin + ": row " + std::to_string(records.size() + 1) +
                                     ": stray quote in unquoted field (line " + std::to_string(line) + ")");
                }
                break;
            case ',':
                end_field();
                break;
            case '\r':
                break; // paired with the \n that follows; stray \r is dropped
            case '\n':
                end_record();
                ++line;
                break;
            default:
                field.push_back(c);
                field_started = true;
                break;
        }
    }
    if (in_quotes) {
        throw ParseError(origin + ": unterminated quoted field at end of input");
    }
    if (field_started || !field.empty() || !record.empty()) {
        end_record();
    }

    if (records.empty()) {
        throw ParseError(origin + ": missing header row");
    }

    Table table;
    table.header = records.front();
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != table.header.size()) {
            throw ParseError(origin + ": row " + std::to_string(r) + ": expected " +
                             std::to_string(table.header.size()) + " fields, got " +
                             std::to_string(records[r].size()));
        }
        table.rows.push_back(std::move(records[r]));
    }
    return table;
}

Table read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw LoadError("cannot open file: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.filename().string());
}

std::string escape_field(const std::string& field) {
    if (!needs_quoting(field)) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

std::string format_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += escape_field(fields[i]);
    }
    out.push_back('\n');
    return out;
}

std::string format(const Table& table) {
    std::string out = format_row(table.header);
    for (const auto& row : table.rows) out += format_row(row);
    return out;
}

} // namespace ehk::csv
