#ifndef OMICSNET_TEXT_HPP
#define OMICSNET_TEXT_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace omicsnet {

/// Split one comma-separated line. Fields are taken verbatim (no quoting);
/// a trailing carriage return is dropped.
std::vector<std::string> split_csv_line(std::string_view line);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

/// Strict parse of a finite real; nullopt on any trailing garbage or inf/nan.
std::optional<double> parse_double(std::string_view text);

/// Reads all lines of a stream, skipping a final empty line.
std::vector<std::string> read_lines(std::istream& in);

std::string trim(std::string_view s);

} // namespace omicsnet

#endif
