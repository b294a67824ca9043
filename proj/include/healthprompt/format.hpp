#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>

#include "healthprompt/error.hpp"

namespace healthprompt {

// Shortest decimal that round-trips: 57 -> "57", 0.2 -> "0.2", 1.40 -> "1.4".
inline std::string shortest_decimal(double v) {
    if (v == 0.0) return "0";  // also folds -0
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) throw ValidationError("cannot format number");
    std::string out(buf.data(), end);
    // to_chars may pick scientific form for very large/small magnitudes; the
    // prompt text always uses positional notation.
    if (out.find('e') != std::string::npos) {
        auto [end2, ec2] =
            std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed);
        if (ec2 != std::errc{}) throw ValidationError("cannot format number");
        out.assign(buf.data(), end2);
    }
    return out;
}

// Python float repr style for positional values: always carries a fraction
// ("46" -> "46.0"). Used when reproducing prompts rendered from float columns.
inline std::string float_repr(double v) {
    std::string s = shortest_decimal(v);
    if (s.find('.') == std::string::npos) s += ".0";
    return s;
}

inline std::string fixed_decimal(double v, int places) {
    std::array<char, 64> buf{};
    if (std::abs(v) < 0.5 * std::pow(10.0, -places)) v = 0.0;
    const int n = std::snprintf(buf.data(), buf.size(), "%.*f", places, v);
    return std::string(buf.data(), static_cast<std::size_t>(n));
}

inline std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

// Strict full-field double parse; rejects trailing junk.
inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace healthprompt
