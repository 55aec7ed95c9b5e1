#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace fxbench::csv {

struct Row {
  std::size_t line = 0;  // physical line where the record starts
  std::vector<std::string> fields;
};

/// RFC-4180 reader: quoted fields may contain separators, doubled quotes and
/// line breaks. Accepts LF or CRLF and a leading UTF-8 BOM. Throws
/// fxbench::Error on an unterminated quote.
std::vector<Row> parse(std::string_view text);

std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Whole-file read; throws FileNotFound.
std::string read_file(const std::string& path);

}  // namespace fxbench::csv
