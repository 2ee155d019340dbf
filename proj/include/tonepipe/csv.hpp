#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tonepipe {

// Comma-delimited, double-quoted fields, "" escapes a quote, UTF-8. Quoted
// fields may contain embedded newlines. One dialect, no autodetection.
class CsvReader {
  public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    // Reads one record into fields. Returns false at end of input.
    bool next_row(std::vector<std::string>& fields);

    // 1-based line number on which the last record started.
    std::size_t line() const { return record_start_line_; }

  private:
    std::istream& in_;
    std::size_t current_line_ = 0;
    std::size_t record_start_line_ = 0;
};

std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, std::span<const std::string> fields);

// Shortest representation that round-trips the exact double value.
// Locale-independent, so identical inputs always serialize identically.
std::string fmt_double(double v);

// Fixed decimal places, for human-facing report columns.
std::string fmt_fixed(double v, int places);

}  // namespace tonepipe
