#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "healthprompt/error.hpp"
#include "healthprompt/ml/importance.hpp"
#include "healthprompt/ml/model.hpp"
#include "healthprompt/schema.hpp"

namespace healthprompt {

enum class DkKind { none, mlfi, mlfi_ord };

inline std::string_view dk_kind_label(DkKind k) {
    switch (k) {
        case DkKind::none: return "NO";
        case DkKind::mlfi: return "MLFI";
        case DkKind::mlfi_ord: return "MLFI-ord";
    }
    return "?";
}

inline DkKind parse_dk_kind(std::string_view s) {
    if (s == "NO" || s == "NONE" || s == "none") return DkKind::none;
    if (s == "MLFI" || s == "mlfi") return DkKind::mlfi;
    if (s == "MLFI-ord" || s == "MLFI_ORD" || s == "mlfi_ord" || s == "mlfi-ord") return DkKind::mlfi_ord;
    throw ValidationError("unknown DK kind '" + std::string(s) + "'");
}

struct DomainKnowledge {
    DkKind kind = DkKind::none;
    std::string source_name;  // classifier tag, empty for none
    std::string text;

    bool operator==(const DomainKnowledge&) const = default;
};

// How many features the MLFI sentence calls important and unimportant.
struct DkConfig {
    std::size_t n_top = 6;
    std::size_t n_bottom = 2;
};

// Lowercase concatenated class name used inside the DK sentence.
inline std::string source_tag(ml::Family f) {
    switch (f) {
        case ml::Family::RF: return "randomforestclassifier";
        case ml::Family::LR: return "logisticregression";
        case ml::Family::GBT: return "xgbclassifier";
        case ml::Family::ADA: return "adaboostclassifier";
        case ml::Family::KNN: return "kneighborsclassifier";
        case ml::Family::MLP: return "mlpclassifier";
    }
    return {};
}

// Tag for a ranking's source: family tokens map through source_tag, any
// other string is lowercased and used as is.
inline std::string source_tag(std::string_view source) {
    try {
        return source_tag(ml::parse_family(source));
    } catch (const ValidationError&) {
        std::string out(source);
        std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
        return out;
    }
}

namespace detail {

// "a, b, and c"; "a and b" for two names.
inline std::string join_with_and(const std::vector<std::string>& names) {
    if (names.empty()) return {};
    if (names.size() == 1) return names.front();
    if (names.size() == 2) return names[0] + " and " + names[1];
    std::string out;
    for (std::size_t i = 0; i + 1 < names.size(); ++i) out += names[i] + ", ";
    return out + "and " + names.back();
}

}  // namespace detail

inline DomainKnowledge render_dk(const ImportanceRanking& ranking, DkKind kind, const FeatureSchema& schema,
                                 const DkConfig& cfg = {}) {
    if (kind == DkKind::none) return {};
    validate(ranking, schema);
    const auto order = ranking.order();
    DomainKnowledge dk{kind, source_tag(ranking.source), {}};

    if (kind == DkKind::mlfi) {
        if (cfg.n_top < 1 || cfg.n_bottom < 1 || cfg.n_top + cfg.n_bottom > order.size()) {
            throw ValidationError("dk: top/bottom counts do not fit a ranking of " + std::to_string(order.size()));
        }
        const std::vector<std::string> top(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cfg.n_top));
        const std::vector<std::string> bottom(order.end() - static_cast<std::ptrdiff_t>(cfg.n_bottom), order.end());
        dk.text = "According to a " + dk.source_name +
                  " classifier, the most important features in assessing heart disease risk include " +
                  detail::join_with_and(top) + ". Features like " + detail::join_with_and(bottom) +
                  " have relatively lower importance";
        return dk;
    }

    if (order.size() < 3) throw ValidationError("dk: ordered variant needs at least 3 features");
    std::string seq = "starts with " + order[0] + ", followed by " + order[1] + ", then ";
    for (std::size_t i = 2; i + 1 < order.size(); ++i) seq += order[i] + ", ";
    seq += "and finally " + order.back();
    dk.text = "The order of features is critically important when evaluating heart disease risk. "
              "The sequence of features according to their importance " +
              seq;
    return dk;
}

// One cell of the DK axis: dk0 has no source, the rest pair a kind with the
// family whose ranking feeds it.
struct DkSlot {
    std::string id;  // "dk0" .. "dk6"
    DkKind kind = DkKind::none;
    std::optional<ml::Family> source;
};

// dk0, then (MLFI, MLFI-ord) for each source family in turn.
inline std::vector<DkSlot> dk_slots(const std::vector<ml::Family>& sources = {ml::Family::RF, ml::Family::LR,
                                                                                ml::Family::GBT}) {
    std::vector<DkSlot> out{{"dk0", DkKind::none, std::nullopt}};
    for (auto f : sources) {
        out.push_back({"dk" + std::to_string(out.size()), DkKind::mlfi, f});
        out.push_back({"dk" + std::to_string(out.size()), DkKind::mlfi_ord, f});
    }
    return out;
}

inline nlohmann::json to_json(const DomainKnowledge& dk) {
    return {{"kind", dk_kind_label(dk.kind)}, {"source", dk.source_name}, {"text", dk.text}};
}

inline DomainKnowledge dk_from_json(const nlohmann::json& j) {
    return {parse_dk_kind(j.at("kind").get<std::string>()), j.value("source", std::string{}),
            j.value("text", std::string{})};
}

}  // namespace healthprompt
