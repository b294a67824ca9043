#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "healthprompt/dataset.hpp"
#include "healthprompt/error.hpp"
#include "healthprompt/random.hpp"

namespace healthprompt {

struct ImportanceEntry {
    std::string feature;
    double weight = 0.0;

    bool operator==(const ImportanceEntry&) const = default;
};

// Normalized feature weights, heaviest first. Equal weights keep the
// schema's column order.
struct ImportanceRanking {
    std::vector<ImportanceEntry> entries;
    std::string source;       // family that produced it, e.g. "RF"
    bool degenerate = false;  // raw weights were all zero; ranking is uniform

    std::vector<std::string> order() const {
        std::vector<std::string> out;
        out.reserve(entries.size());
        for (const auto& e : entries) out.push_back(e.feature);
        return out;
    }

    bool operator==(const ImportanceRanking&) const = default;
};

// Normalizes raw nonnegative scores (negatives clamp to 0) into a ranking.
inline ImportanceRanking make_ranking(std::span<const double> raw, const FeatureSchema& schema, std::string source) {
    if (raw.size() != schema.size()) {
        throw ValidationError("importance: expected " + std::to_string(schema.size()) + " scores, got " +
                              std::to_string(raw.size()));
    }
    std::vector<double> w(raw.size());
    double total = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        w[i] = std::isfinite(raw[i]) && raw[i] > 0.0 ? raw[i] : 0.0;
        total += w[i];
    }
    ImportanceRanking out;
    out.source = std::move(source);
    if (total <= 0.0) {
        out.degenerate = true;
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
    } else {
        for (auto& v : w) v /= total;
    }
    std::vector<std::size_t> idx(w.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });
    for (auto i : idx) out.entries.push_back({schema[i].name, w[i]});
    return out;
}

// Ranking with a prescribed order, used for fixtures: weights descend
// linearly (n, n-1, ..., 1) before normalization.
inline ImportanceRanking ranking_from_order(std::span<const std::string> order, const FeatureSchema& schema,
                                            std::string source) {
    if (order.size() != schema.size()) throw ValidationError("importance: order must name every feature once");
    std::vector<double> raw(schema.size(), -1.0);
    for (std::size_t r = 0; r < order.size(); ++r) {
        const auto i = schema.require_index(order[r]);
        if (raw[i] >= 0.0) throw ValidationError("importance: feature '" + order[r] + "' listed twice");
        raw[i] = static_cast<double>(order.size() - r);
    }
    return make_ranking(raw, schema, std::move(source));
}

// Throws unless the ranking covers the schema once, sums to 1 and is sorted.
inline void validate(const ImportanceRanking& r, const FeatureSchema& schema) {
    if (r.entries.size() != schema.size()) {
        throw ValidationError("ranking has " + std::to_string(r.entries.size()) + " entries, expected " +
                              std::to_string(schema.size()));
    }
    std::vector<bool> seen(schema.size(), false);
    double total = 0.0;
    for (std::size_t k = 0; k < r.entries.size(); ++k) {
        const auto i = schema.require_index(r.entries[k].feature);
        if (seen[i]) throw ValidationError("ranking lists '" + r.entries[k].feature + "' twice");
        seen[i] = true;
        if (r.entries[k].weight < 0.0) throw ValidationError("ranking has a negative weight");
        if (k > 0 && r.entries[k].weight > r.entries[k - 1].weight) throw ValidationError("ranking is not sorted");
        total += r.entries[k].weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError("ranking weights do not sum to 1");
}

inline nlohmann::json to_json(const ImportanceRanking& r) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : r.entries) entries.push_back({{"feature", e.feature}, {"weight", e.weight}});
    return {{"source", r.source}, {"degenerate", r.degenerate}, {"entries", entries}};
}

inline ImportanceRanking ranking_from_json(const nlohmann::json& j) {
    ImportanceRanking r;
    r.source = j.at("source").get<std::string>();
    r.degenerate = j.value("degenerate", false);
    for (const auto& e : j.at("entries")) r.entries.push_back({e.at("feature").get<std::string>(), e.at("weight").get<double>()});
    return r;
}

// Mean accuracy drop over `repeats` seeded column shuffles. `predict` maps a
// feature row to a label; shuffle r of feature f uses derive_seed(seed, f, r).
template <typename Predict>
std::vector<double> permutation_importance(Predict&& predict, const Dataset& data, std::size_t repeats,
                                           std::uint64_t seed) {
    const std::size_t n = data.size();
    const std::size_t width = data.n_features();
    if (n == 0) throw ValidationError("permutation importance: empty dataset");
    auto accuracy = [&](const std::vector<std::vector<double>>& rows) {
        std::size_t hits = 0;
        for (std::size_t i = 0; i < n; ++i) hits += (predict(std::span<const double>(rows[i])) == data.labels[i]);
        return static_cast<double>(hits) / static_cast<double>(n);
    };
    const double baseline = accuracy(data.rows);
    std::vector<double> out(width, 0.0);
    auto rows = data.rows;
    std::vector<std::size_t> perm(n);
    for (std::size_t f = 0; f < width; ++f) {
        double drop = 0.0;
        for (std::size_t r = 0; r < repeats; ++r) {
            Rng rng = make_rng(derive_seed(seed, f, r));
            std::iota(perm.begin(), perm.end(), std::size_t{0});
            shuffle(perm, rng);
            for (std::size_t i = 0; i < n; ++i) rows[i][f] = data.rows[perm[i]][f];
            drop += baseline - accuracy(rows);
        }
        for (std::size_t i = 0; i < n; ++i) rows[i][f] = data.rows[i][f];
        out[f] = drop / static_cast<double>(std::max<std::size_t>(1, repeats));
    }
    return out;
}

}  // namespace healthprompt
