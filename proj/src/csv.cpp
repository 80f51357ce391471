#include "themetric/csv.hpp"

#include <sstream>

namespace themetric {

CsvReader::CsvReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw IoError("cannot open file: " + path);
}

bool CsvReader::next(std::vector<std::string>& fields) {
  fields.clear();
  if (in_.peek() == std::char_traits<char>::eof()) return false;
  record_line_ = cur_line_;

  std::string field;
  bool in_quotes = false;
  bool any = false;
  int c;
  while ((c = in_.get()) != std::char_traits<char>::eof()) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in_.peek() == '"') {
          field.push_back('"');
          in_.get();
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++cur_line_;
        field.push_back(static_cast<char>(c));
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      // swallow; handled with the following \n (or alone as an ending)
      if (in_.peek() == '\n') in_.get();
      ++cur_line_;
      fields.push_back(std::move(field));
      return true;
    } else if (c == '\n') {
      ++cur_line_;
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(static_cast<char>(c));
    }
  }
  if (in_quotes) throw DataError(path_ + ": unterminated quoted field at line " +
                                 std::to_string(record_line_));
  if (any) fields.push_back(std::move(field));
  return any;
}

std::string csv_escape(const std::string& field) {
  bool needs_quotes = field.find_first_of(",\"\n\r") != std::string::npos;
  if (!needs_quotes) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

std::size_t expect_header(CsvReader& reader, const std::vector<std::string>& required,
                          const std::vector<std::string>& optional_tail) {
  std::vector<std::string> fields;
  if (!reader.next(fields))
    throw DataError(reader.path() + ": empty file, expected header row");
  if (fields.size() < required.size() ||
      fields.size() > required.size() + optional_tail.size()) {
    throw DataError(reader.path() + ": unexpected header column count at line " +
                    std::to_string(reader.line()));
  }
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const std::string& want =
        i < required.size() ? required[i] : optional_tail[i - required.size()];
    if (fields[i] != want) {
      throw DataError(reader.path() + ": expected header column '" + want + "', got '" +
                      fields[i] + "'");
    }
  }
  return fields.size();
}

}  // namespace themetric
