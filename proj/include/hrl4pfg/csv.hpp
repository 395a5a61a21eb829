#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace hrl4pfg::csv {

/// Splits one RFC 4180 record (quoted fields allowed, no embedded newlines).
std::vector<std::string> split_record(std::string_view line);

/// Quotes a field only when it contains a comma, quote or newline.
std::string escape(std::string_view field);

/// `%.17g`: round-trips every finite double.
std::string format_double(double v);

double parse_double(const std::string& s, std::string_view what);
long long parse_int(const std::string& s, std::string_view what);

/// Reads the next non-empty line without its line terminator; returns false at EOF.
bool next_line(std::istream& in, std::string& line);

}  // namespace hrl4pfg::csv
