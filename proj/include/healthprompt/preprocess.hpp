#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "healthprompt/dataset.hpp"
#include "healthprompt/error.hpp"
#include "healthprompt/random.hpp"

namespace healthprompt {

inline constexpr std::size_t kDefaultImputeK = 5;

// Fills absent cells with the mean of that column over the k nearest donor
// rows. Distance is Euclidean over min-max scaled columns, restricted to the
// columns both rows have, scaled up by width/shared. Donors for a cell are the
// rows whose own value in that column is present; ties go to the lower row
// index. Present cells are copied through untouched.
inline std::vector<std::vector<double>> knn_impute_matrix(const std::vector<std::vector<Cell>>& rows,
                                                          std::size_t k,
                                                          std::span<const std::string> column_names = {}) {
    if (k < 1) throw ValidationError("knn_impute: k must be at least 1");
    const std::size_t n = rows.size();
    const std::size_t width = n == 0 ? 0 : rows.front().size();
    auto column_label = [&](std::size_t c) {
        return c < column_names.size() ? "'" + column_names[c] + "'" : "#" + std::to_string(c);
    };

    std::vector<double> lo(width, std::numeric_limits<double>::infinity());
    std::vector<double> hi(width, -std::numeric_limits<double>::infinity());
    std::vector<std::size_t> present_count(width, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != width) throw ValidationError("knn_impute: ragged rows");
        bool any = false;
        for (std::size_t c = 0; c < width; ++c) {
            if (!rows[i][c]) continue;
            any = true;
            lo[c] = std::min(lo[c], *rows[i][c]);
            hi[c] = std::max(hi[c], *rows[i][c]);
            ++present_count[c];
        }
        if (!any && width > 0) {
            throw ImputationError("knn_impute: row " + std::to_string(i) + " has no present cells");
        }
    }

    std::vector<std::vector<double>> scaled(n, std::vector<double>(width, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < width; ++c) {
            if (!rows[i][c]) continue;
            const double range = hi[c] - lo[c];
            scaled[i][c] = range > 0.0 ? (*rows[i][c] - lo[c]) / range : 0.0;
        }
    }

    auto distance = [&](std::size_t a, std::size_t b) {
        double sum = 0.0;
        std::size_t shared = 0;
        for (std::size_t c = 0; c < width; ++c) {
            if (!rows[a][c] || !rows[b][c]) continue;
            const double d = scaled[a][c] - scaled[b][c];
            sum += d * d;
            ++shared;
        }
        if (shared == 0) return std::numeric_limits<double>::infinity();
        return std::sqrt(sum * static_cast<double>(width) / static_cast<double>(shared));
    };

    std::vector<std::vector<double>> out(n, std::vector<double>(width, 0.0));
    std::vector<std::pair<double, std::size_t>> candidates;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < width; ++c) {
            if (rows[i][c]) {
                out[i][c] = *rows[i][c];
                continue;
            }
            if (present_count[c] == 0) {
                throw ImputationError("knn_impute: column " + column_label(c) + " is entirely missing");
            }
            candidates.clear();
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i && rows[j][c]) candidates.emplace_back(distance(i, j), j);
            }
            const std::size_t take = std::min(k, candidates.size());
            std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                              candidates.end());
            double sum = 0.0;
            for (std::size_t t = 0; t < take; ++t) sum += *rows[candidates[t].second][c];
            out[i][c] = sum / static_cast<double>(take);
        }
    }
    return out;
}

// Imputes a binarized raw dataset. Targets must already be 0/1.
inline Dataset knn_impute(const RawDataset& raw, std::size_t k = kDefaultImputeK) {
    const auto names = raw.schema.names();
    Dataset ds{raw.schema, knn_impute_matrix(raw.rows, k, names), raw.targets};
    for (int y : ds.labels) {
        if (y != 0 && y != 1) throw ValidationError("knn_impute: targets must be binarized first");
    }
    return ds;
}

// Lifts a complete dataset back into raw form (every cell present).
inline RawDataset to_raw(const Dataset& ds) {
    RawDataset raw{ds.schema, {}, ds.labels};
    raw.rows.reserve(ds.size());
    for (const auto& r : ds.rows) raw.rows.emplace_back(r.begin(), r.end());
    return raw;
}

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Stratified shuffle split. The test size is round(n * fraction); it is shared
// between classes by largest remainder so each class stays within one sample
// of its proportional share. Index lists come back sorted.
inline SplitIndices split_indices(std::span<const int> labels, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ValidationError("split: test_fraction must lie strictly between 0 and 1");
    }
    std::array<std::vector<std::size_t>, 2> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw ValidationError("split: labels must be binary");
        members[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    for (int c = 0; c < 2; ++c) {
        if (members[c].size() < 2) {
            throw ValidationError("split: class " + std::to_string(c) + " has fewer than 2 members");
        }
    }
    const double n = static_cast<double>(labels.size());
    const auto n_test = static_cast<std::size_t>(std::llround(n * test_fraction));

    std::array<std::size_t, 2> quota{};
    std::array<double, 2> remainder{};
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < 2; ++c) {
        const double exact = static_cast<double>(n_test) * static_cast<double>(members[c].size()) / n;
        quota[c] = static_cast<std::size_t>(std::floor(exact));
        remainder[c] = exact - std::floor(exact);
        assigned += quota[c];
    }
    while (assigned < n_test) {
        // Largest remainder; ties go to the positive class.
        const std::size_t c = remainder[1] >= remainder[0] ? 1 : 0;
        ++quota[c];
        remainder[c] = -1.0;
        ++assigned;
    }
    for (std::size_t c = 0; c < 2; ++c) {
        quota[c] = std::clamp<std::size_t>(quota[c], 1, members[c].size() - 1);
    }

    SplitIndices out;
    for (std::size_t c = 0; c < 2; ++c) {
        Rng rng = make_rng(derive_seed(seed, c));
        shuffle(members[c], rng);
        out.test.insert(out.test.end(), members[c].begin(), members[c].begin() + static_cast<std::ptrdiff_t>(quota[c]));
        out.train.insert(out.train.end(), members[c].begin() + static_cast<std::ptrdiff_t>(quota[c]), members[c].end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

struct TrainTest {
    Dataset train;
    Dataset test;
};

inline TrainTest split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
    const auto idx = split_indices(ds.labels, test_fraction, seed);
    return {ds.subset(idx.train), ds.subset(idx.test)};
}

// Per-feature z-score parameters fitted on a training set.
struct Scaler {
    std::vector<double> mean;
    std::vector<double> scale;  // population stddev, 1 for constant columns

    std::vector<double> transform(std::span<const double> x) const {
        if (x.size() != mean.size()) throw ValidationError("scaler: arity mismatch");
        std::vector<double> out(x.size());
        for (std::size_t c = 0; c < x.size(); ++c) out[c] = (x[c] - mean[c]) / scale[c];
        return out;
    }

    std::vector<double> inverse(std::span<const double> z) const {
        if (z.size() != mean.size()) throw ValidationError("scaler: arity mismatch");
        std::vector<double> out(z.size());
        for (std::size_t c = 0; c < z.size(); ++c) out[c] = z[c] * scale[c] + mean[c];
        return out;
    }

    Dataset transform(const Dataset& ds) const {
        Dataset out{ds.schema, {}, ds.labels};
        out.rows.reserve(ds.size());
        for (const auto& r : ds.rows) out.rows.push_back(transform(r));
        return out;
    }

    Dataset inverse(const Dataset& ds) const {
        Dataset out{ds.schema, {}, ds.labels};
        out.rows.reserve(ds.size());
        for (const auto& r : ds.rows) out.rows.push_back(inverse(r));
        return out;
    }
};

inline Scaler fit_scaler(const Dataset& train) {
    if (train.size() == 0) throw ValidationError("standardize: training set is empty");
    const std::size_t width = train.n_features();
    Scaler s{std::vector<double>(width, 0.0), std::vector<double>(width, 1.0)};
    const double n = static_cast<double>(train.size());
    for (std::size_t c = 0; c < width; ++c) {
        double sum = 0.0;
        for (const auto& r : train.rows) sum += r[c];
        const double mean = sum / n;
        double ss = 0.0;
        for (const auto& r : train.rows) ss += (r[c] - mean) * (r[c] - mean);
        const double sd = std::sqrt(ss / n);
        s.mean[c] = mean;
        s.scale[c] = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

struct Standardized {
    Dataset train;
    Dataset test;
    Scaler scaler;
};

inline Standardized standardize(const Dataset& train, const Dataset& test) {
    Scaler s = fit_scaler(train);
    return {s.transform(train), s.transform(test), std::move(s)};
}

}  // namespace healthprompt
