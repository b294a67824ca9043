#pragma once

// Slow, independent reference computations. They share no code with the
// library beyond its data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "healthprompt/dataset.hpp"
#include "healthprompt/random.hpp"

namespace healthprompt::test_support {

// --- KNN imputation -------------------------------------------------------

// Straight transcription of the imputation rule: per missing cell, list every
// donor with its distance, stable-sort, average the first k.
inline std::vector<std::vector<double>> naive_impute(const std::vector<std::vector<Cell>>& rows, std::size_t k) {
    const std::size_t n = rows.size();
    const std::size_t w = n ? rows[0].size() : 0;
    std::vector<double> lo(w, 0.0), hi(w, 0.0);
    for (std::size_t c = 0; c < w; ++c) {
        std::vector<double> present;
        for (const auto& r : rows) {
            if (r[c]) present.push_back(*r[c]);
        }
        if (!present.empty()) {
            lo[c] = *std::min_element(present.begin(), present.end());
            hi[c] = *std::max_element(present.begin(), present.end());
        }
    }
    auto scaled = [&](std::size_t i, std::size_t c) { return hi[c] > lo[c] ? (*rows[i][c] - lo[c]) / (hi[c] - lo[c]) : 0.0; };
    auto dist = [&](std::size_t a, std::size_t b) {
        double s = 0.0;
        double shared = 0.0;
        for (std::size_t c = 0; c < w; ++c) {
            if (rows[a][c] && rows[b][c]) {
                s += std::pow(scaled(a, c) - scaled(b, c), 2);
                shared += 1.0;
            }
        }
        return shared == 0.0 ? HUGE_VAL : std::sqrt(s * static_cast<double>(w) / shared);
    };
    std::vector<std::vector<double>> out(n, std::vector<double>(w));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < w; ++c) {
            if (rows[i][c]) {
                out[i][c] = *rows[i][c];
                continue;
            }
            std::vector<std::pair<double, std::size_t>> donors;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i && rows[j][c]) donors.push_back({dist(i, j), j});
            }
            std::stable_sort(donors.begin(), donors.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
            const std::size_t m = std::min(k, donors.size());
            double s = 0.0;
            for (std::size_t t = 0; t < m; ++t) s += *rows[donors[t].second][c];
            out[i][c] = s / static_cast<double>(m);
        }
    }
    return out;
}

// Small random table with holes. Every row keeps at least one cell and every
// column keeps at least `min_present` cells. Values repeat often so distance
// ties are common.
inline std::vector<std::vector<Cell>> random_holey_table(Rng& rng, std::size_t min_present) {
    const std::size_t n = static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(min_present) + 1, 14));
    const std::size_t w = static_cast<std::size_t>(uniform_int(rng, 1, 5));
    const double miss = uniform_real(rng, 0.0, 0.5);
    std::vector<std::vector<Cell>> rows(n, std::vector<Cell>(w));
    for (auto& r : rows) {
        for (auto& cell : r) {
            if (uniform01(rng) >= miss) cell = static_cast<double>(uniform_int(rng, 0, 4)) * 0.5;
        }
    }
    for (std::size_t c = 0; c < w; ++c) {
        std::size_t present = 0;
        for (const auto& r : rows) present += r[c].has_value();
        for (std::size_t i = 0; present < min_present && i < n; ++i) {
            if (!rows[i][c]) {
                rows[i][c] = 1.0;
                ++present;
            }
        }
    }
    for (auto& r : rows) {
        if (std::none_of(r.begin(), r.end(), [](const Cell& x) { return x.has_value(); })) r[0] = 2.0;
    }
    return rows;
}

// --- Metrics ----------------------------------------------------------------

struct NaiveMetrics {
    double precision, recall, f1, accuracy, fp_cost, fn_cost, csa;
};

// Counts each outcome with its own pass over the pairs.
inline NaiveMetrics naive_metrics(const std::vector<int>& pred, const std::vector<int>& truth, double w_fp = 0.2,
                                  double w_fn = 0.8) {
    auto count = [&](int p, int t) {
        std::size_t k = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) k += (pred[i] == p && truth[i] == t);
        return static_cast<double>(k);
    };
    const double tp = count(1, 1), tn = count(0, 0), fp = count(1, 0), fn = count(0, 1);
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    const double n = tp + tn + fp + fn;
    const double accuracy = n > 0 ? (tp + tn) / n : 0.0;
    const double weighted = (tp + tn) + w_fp * fp + w_fn * fn;
    const double csa = weighted > 0 ? (tp + tn) / weighted : 1.0;
    return {precision, recall, f1, accuracy, w_fp * fp, w_fn * fn, csa};
}

// --- Gradients --------------------------------------------------------------

// Central differences of f at p with step h per coordinate.
inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                              std::vector<double> p, double h = 1e-6) {
    std::vector<double> g(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double keep = p[j];
        p[j] = keep + h;
        const double up = f(p);
        p[j] = keep - h;
        const double down = f(p);
        p[j] = keep;
        g[j] = (up - down) / (2 * h);
    }
    return g;
}

}  // namespace healthprompt::test_support
