#include "coldstart/csv.hpp"

#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include "coldstart/errors.hpp"

namespace coldstart::csv {
namespace {

constexpr const char* kModule = "ingest_features";

}  // namespace

Document parse(std::istream& in, std::string_view source_name) {
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  std::size_t pos = 0;
  if (text.starts_with("\xEF\xBB\xBF")) pos = 3;

  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  std::size_t line = 1;

  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
    // A lone empty field is a blank line.
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };

  for (; pos < text.size(); ++pos) {
    const char ch = text[pos];
    if (in_quotes) {
      if (ch == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          field.push_back('"');
          ++pos;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (!field.empty() || field_was_quoted) {
          throw DataError(kModule, std::string(source_name) + ": stray quote on line " +
                                       std::to_string(line));
        }
        in_quotes = true;
        field_was_quoted = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
        break;
      case '\r':
        if (pos + 1 < text.size() && text[pos + 1] == '\n') break;
        end_record();
        ++line;
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(ch);
    }
  }
  if (in_quotes) {
    throw DataError(kModule, std::string(source_name) + ": unterminated quoted field");
  }
  if (!field.empty() || !record.empty() || field_was_quoted) end_record();

  if (records.empty()) throw DataError(kModule, std::string(source_name) + ": empty file");

  Document doc;
  doc.header = std::move(records.front());
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].size() != doc.header.size()) {
      throw DataError(kModule, std::string(source_name) + ": data row " + std::to_string(i) +
                                   " has " + std::to_string(records[i].size()) +
                                   " fields, header has " + std::to_string(doc.header.size()));
    }
    doc.rows.push_back(std::move(records[i]));
  }
  return doc;
}

Document read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(kModule, "cannot open '" + path + "'");
  return parse(in, path);
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

}  // namespace coldstart::csv
