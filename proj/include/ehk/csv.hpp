#pragma once
// Minimal RFC-4180 CSV reader/writer: quoted fields, "" escapes, embedded
// newlines inside quotes, CRLF or LF line endings, UTF-8 passthrough.

#include <filesystem>
#include <string>
#include <vector>

namespace ehk::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// Parses CSV text. A header row is required; every data row must have the
// same field count as the header. Throws ParseError naming `origin` and the
// 1-based row number on malformed input.
Table parse(const std::string& text, const std::string& origin = "<string>");

// Reads and parses a file. Throws LoadError if the file cannot be read.
Table read_file(const std::filesystem::path& path);

std::string escape_field(const std::string& field);
std::string format_row(const std::vector<std::string>& fields);
std::string format(const Table& table);

} // namespace ehk::csv
