#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace ticketlab {

/// Shortest text that parses back to the identical double.
std::string format_double(double v);

// Strict parsers; `where` is reported in the ParseError on failure.
double parse_double(std::string_view text, std::size_t where);
std::int64_t parse_int(std::string_view text, std::size_t where);
std::size_t parse_size(std::string_view text, std::size_t where);

}  // namespace ticketlab
