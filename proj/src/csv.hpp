#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace scytag::detail {

/// Rows of a CSV document with RFC 4180 quoting. Blank lines are dropped.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Parses a CSV whose first row must equal `header`; returns the data rows.
/// Throws ParseError on a header mismatch or a row of the wrong width.
std::vector<std::vector<std::string>> parse_csv_table(std::string_view text,
                                                      const std::vector<std::string>& header);

std::string csv_field(std::string_view value);
std::string csv_row(const std::vector<std::string>& fields);

} // namespace scytag::detail
