#include "ticketlab/format.hpp"

#include <array>
#include <charconv>

#include "ticketlab/errors.hpp"

namespace ticketlab {

std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) throw Error("cannot format double");
    return std::string(buf.data(), end);
}

double parse_double(std::string_view text, std::size_t where) {
    double v = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size()) {
        throw ParseError("invalid number '" + std::string(text) + "'", where);
    }
    return v;
}

std::int64_t parse_int(std::string_view text, std::size_t where) {
    std::int64_t v = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size()) {
        throw ParseError("invalid integer '" + std::string(text) + "'", where);
    }
    return v;
}

std::size_t parse_size(std::string_view text, std::size_t where) {
    std::size_t v = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size()) {
        throw ParseError("invalid count '" + std::string(text) + "'", where);
    }
    return v;
}

}  // namespace ticketlab
