#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "healthprompt/error.hpp"
#include "healthprompt/ml/tree.hpp"  // Matrix

namespace healthprompt::ml {

enum class KnnWeights { uniform, distance };

struct KnnParams {
    std::size_t n_neighbors = 5;
    KnnWeights weights = KnnWeights::uniform;
    int p = 2;  // Minkowski exponent
};

// Brute-force k-nearest-neighbour vote. Equal distances resolve to the lower
// training index; a 0.5 vote predicts 1.
class Knn {
public:
    void fit(const Matrix& x, std::span<const int> y, const KnnParams& params) {
        if (x.empty()) throw ValidationError("knn: empty training set");
        if (params.n_neighbors == 0) throw ValidationError("knn: n_neighbors must be positive");
        if (params.p < 1) throw ValidationError("knn: p must be at least 1");
        x_ = x;
        y_.assign(y.begin(), y.end());
        params_ = params;
    }

    double predict_proba(std::span<const double> row) const {
        if (x_.empty() || row.size() != x_.front().size()) throw ValidationError("knn: arity mismatch");
        std::vector<std::pair<double, std::size_t>> d;
        d.reserve(x_.size());
        for (std::size_t i = 0; i < x_.size(); ++i) d.emplace_back(distance(row, x_[i]), i);
        const std::size_t k = std::min(params_.n_neighbors, d.size());
        std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());

        double num = 0.0, den = 0.0;
        if (params_.weights == KnnWeights::distance) {
            // Exact matches take the whole vote.
            for (std::size_t j = 0; j < k; ++j) {
                if (d[j].first == 0.0) {
                    num += y_[d[j].second];
                    den += 1.0;
                }
            }
            if (den > 0.0) return num / den;
            for (std::size_t j = 0; j < k; ++j) {
                const double w = 1.0 / d[j].first;
                num += w * y_[d[j].second];
                den += w;
            }
            return num / den;
        }
        for (std::size_t j = 0; j < k; ++j) num += y_[d[j].second];
        return num / static_cast<double>(k);
    }

    int predict(std::span<const double> row) const { return predict_proba(row) >= 0.5 ? 1 : 0; }

    nlohmann::json to_json() const {
        return {{"n_neighbors", params_.n_neighbors},
                {"weights", params_.weights == KnnWeights::uniform ? "uniform" : "distance"},
                {"p", params_.p},
                {"x", x_},
                {"y", y_}};
    }

    static Knn from_json(const nlohmann::json& j) {
        Knn k;
        k.params_.n_neighbors = j.at("n_neighbors").get<std::size_t>();
        k.params_.weights = j.at("weights").get<std::string>() == "uniform" ? KnnWeights::uniform : KnnWeights::distance;
        k.params_.p = j.at("p").get<int>();
        k.x_ = j.at("x").get<Matrix>();
        k.y_ = j.at("y").get<std::vector<int>>();
        return k;
    }

private:
    double distance(std::span<const double> a, std::span<const double> b) const {
        double s = 0.0;
        if (params_.p == 1) {
            for (std::size_t c = 0; c < a.size(); ++c) s += std::abs(a[c] - b[c]);
            return s;
        }
        if (params_.p == 2) {
            for (std::size_t c = 0; c < a.size(); ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
            return std::sqrt(s);
        }
        for (std::size_t c = 0; c < a.size(); ++c) s += std::pow(std::abs(a[c] - b[c]), params_.p);
        return std::pow(s, 1.0 / params_.p);
    }

    Matrix x_;
    std::vector<int> y_;
    KnnParams params_;
};

}  // namespace healthprompt::ml
