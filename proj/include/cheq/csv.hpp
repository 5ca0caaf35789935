#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cheq::csv {

/// A parsed CSV file: header row plus data rows. Fields may be quoted with
/// double quotes; embedded quotes are doubled per RFC 4180.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
};

Table read_file(const std::string& path);
Table read_string(std::string_view text);

/// Quotes only when needed (comma, quote or newline in the field).
std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace cheq::csv
