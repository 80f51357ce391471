#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "themetric/common.hpp"

namespace themetric {

// Minimal RFC-4180-ish reader: comma separated, optional double-quote
// quoting with "" escapes, LF or CRLF endings. Tracks physical line
// numbers for error messages.
class CsvReader {
 public:
  explicit CsvReader(const std::string& path);

  // Reads the next record into `fields`. Returns false at end of file.
  bool next(std::vector<std::string>& fields);

  // Physical line the last record started on (1-based).
  std::size_t line() const { return record_line_; }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t cur_line_ = 1;
  std::size_t record_line_ = 1;
};

// Quotes a field when needed for embedding into a CSV row.
std::string csv_escape(const std::string& field);

// Parses one header record and checks it against the expected column
// names; `optional_tail` columns may be missing. Returns the number of
// columns actually present.
std::size_t expect_header(CsvReader& reader,
                          const std::vector<std::string>& required,
                          const std::vector<std::string>& optional_tail = {});

}  // namespace themetric
