#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "healthprompt/ml/tree.hpp"
#include "healthprompt/parallel.hpp"
#include "healthprompt/random.hpp"

namespace healthprompt::ml {

struct ForestParams {
    std::size_t n_estimators = 100;
    int max_depth = -1;
    std::size_t min_samples_split = 2;
    std::size_t min_samples_leaf = 1;
    bool bootstrap = true;
    std::size_t max_features = 0;  // 0 selects floor(sqrt(n_features))
};

class RandomForest {
public:
    // Tree t draws from its own stream derive_seed(seed, t), so the fitted
    // forest is identical for any thread count.
    void fit(const Matrix& x, std::span<const int> labels, const ForestParams& params, std::uint64_t seed,
             std::size_t threads = 1) {
        if (x.empty()) throw ValidationError("forest: empty training set");
        if (params.n_estimators == 0) throw ValidationError("forest: n_estimators must be positive");
        const std::size_t n = x.size();
        const std::size_t width = x.front().size();
        std::vector<double> y(labels.begin(), labels.end());
        TreeParams tp;
        tp.max_depth = params.max_depth;
        tp.min_samples_split = params.min_samples_split;
        tp.min_samples_leaf = params.min_samples_leaf;
        tp.max_features = params.max_features != 0
                              ? params.max_features
                              : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(width))));
        trees_.assign(params.n_estimators, DecisionTree{});
        parallel_for(params.n_estimators, threads, [&](std::size_t t) {
            Rng rng = make_rng(derive_seed(seed, t));
            std::vector<std::size_t> samples(n);
            if (params.bootstrap) {
                for (auto& s : samples) s = uniform_index(rng, n);
            } else {
                std::iota(samples.begin(), samples.end(), std::size_t{0});
            }
            trees_[t].fit(x, y, {}, std::move(samples), tp, Criterion::gini, rng);
        });
    }

    // Majority vote of the trees' labels; an even split predicts 1.
    int predict(std::span<const double> row) const {
        std::size_t ones = 0;
        for (const auto& t : trees_) ones += static_cast<std::size_t>(t.predict_label(row));
        return 2 * ones >= trees_.size() ? 1 : 0;
    }

    // Mean of the per-tree normalized impurity importances.
    std::vector<double> importance() const {
        std::vector<double> out(trees_.empty() ? 0 : trees_.front().n_features(), 0.0);
        for (const auto& t : trees_) {
            const auto& imp = t.impurity_importance();
            double total = 0.0;
            for (double v : imp) total += v;
            if (total <= 0.0) continue;
            for (std::size_t f = 0; f < out.size(); ++f) out[f] += imp[f] / total;
        }
        for (auto& v : out) v /= static_cast<double>(std::max<std::size_t>(1, trees_.size()));
        return out;
    }

    const std::vector<DecisionTree>& trees() const noexcept { return trees_; }

    nlohmann::json to_json() const {
        nlohmann::json trees = nlohmann::json::array();
        for (const auto& t : trees_) trees.push_back(t.to_json());
        return {{"trees", trees}};
    }

    static RandomForest from_json(const nlohmann::json& j) {
        RandomForest f;
        for (const auto& t : j.at("trees")) f.trees_.push_back(DecisionTree::from_json(t));
        return f;
    }

private:
    std::vector<DecisionTree> trees_;
};

}  // namespace healthprompt::ml
