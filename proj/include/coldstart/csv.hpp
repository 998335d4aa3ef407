#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coldstart::csv {

struct Document {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC 4180 reader: comma separated, double-quote quoting with "" escapes,
// CRLF or LF line endings. A UTF-8 byte order mark is skipped. Every record
// must have as many fields as the header.
Document parse(std::istream& in, std::string_view source_name);
Document read_file(const std::string& path);

// Quotes a field only when it contains a comma, quote or line break.
std::string escape(std::string_view field);
void write_row(std::ostream& out, std::span<const std::string> fields);

}  // namespace coldstart::csv
