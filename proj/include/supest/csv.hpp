#pragma once

// Small CSV helpers shared by the file formats. Rows are plain comma-separated
// fields without quoting; tokens never appear in CSV fields except in the
// vocabulary sidecar, where the token is the final field and may contain commas.

#include <cstdint>
#include <istream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace supest {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace csv {

/// Shortest representation that round-trips to the same double.
std::string format_double(double value);

std::vector<std::string_view> split(std::string_view line, char sep = ',');

std::string_view trim(std::string_view s);

/// Strict parsers: the whole field must be consumed. Return false on failure.
bool parse_u64(std::string_view field, std::uint64_t& out);
bool parse_double(std::string_view field, double& out);

/// Reads the next line, stripping a trailing '\r'. Tracks 1-based line numbers.
class LineReader {
 public:
  LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  bool next(std::string& line);
  [[nodiscard]] std::size_t line_number() const { return line_number_; }
  [[nodiscard]] const std::string& source() const { return source_; }
  [[noreturn]] void fail(const std::string& what) const;

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_number_ = 0;
};

}  // namespace csv
}  // namespace supest
