#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>

namespace healthprompt::llm {

struct Verdict {
    std::optional<int> label;  // nullopt: unparseable
    std::string raw;

    bool parseable() const noexcept { return label.has_value(); }
    bool operator==(const Verdict&) const = default;
};

// First standalone "0" or "1": a digit with no digit on either side.
inline Verdict parse_label(std::string_view raw) {
    const auto digit = [&](std::size_t i) { return std::isdigit(static_cast<unsigned char>(raw[i])) != 0; };
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '0' && raw[i] != '1') continue;
        if (i > 0 && digit(i - 1)) continue;
        if (i + 1 < raw.size() && digit(i + 1)) continue;
        return {raw[i] - '0', std::string(raw)};
    }
    return {std::nullopt, std::string(raw)};
}

}  // namespace healthprompt::llm
