#pragma once

// CART decision tree shared by the forest and both boosting families.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "healthprompt/error.hpp"
#include "healthprompt/random.hpp"

namespace healthprompt::ml {

using Matrix = std::vector<std::vector<double>>;

enum class Criterion { gini, squared_error };

struct TreeParams {
    int max_depth = -1;  // < 0 means unlimited
    std::size_t min_samples_split = 2;
    std::size_t min_samples_leaf = 1;
    std::size_t max_features = 0;  // 0 means all candidates at every node
    std::vector<std::size_t> allowed_features{};  // empty means every column is a candidate
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // P(y=1) for gini trees, mean target for regression trees

    bool is_leaf() const noexcept { return feature < 0; }
};

class DecisionTree {
public:
    // Fits on the multiset `samples` (bootstrap duplicates allowed). `targets`
    // are 0/1 labels for gini trees and real residuals for regression trees;
    // `weights` may be empty for unit weights.
    void fit(const Matrix& x, std::span<const double> targets, std::span<const double> weights,
             std::vector<std::size_t> samples, const TreeParams& params, Criterion criterion, Rng& rng) {
        if (x.empty() || samples.empty()) throw ValidationError("tree: empty training set");
        n_features_ = x.front().size();
        criterion_ = criterion;
        nodes_.clear();
        importance_.assign(n_features_, 0.0);
        Builder b{x, targets, weights, params, criterion, rng, *this};
        b.grow(samples, 0);
    }

    const TreeNode& leaf_for(std::span<const double> row) const {
        std::size_t i = 0;
        while (!nodes_[i].is_leaf()) {
            const auto& n = nodes_[i];
            i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
        }
        return nodes_[i];
    }

    double predict_value(std::span<const double> row) const {
        if (row.size() != n_features_) throw ValidationError("tree: arity mismatch");
        return leaf_for(row).value;
    }

    int predict_label(std::span<const double> row) const { return predict_value(row) >= 0.5 ? 1 : 0; }

    // Weighted impurity decrease summed per feature (unnormalized).
    const std::vector<double>& impurity_importance() const noexcept { return importance_; }
    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    std::size_t n_features() const noexcept { return n_features_; }

    int depth() const {
        std::vector<std::pair<std::size_t, int>> stack{{0, 0}};
        int best = 0;
        while (!stack.empty()) {
            auto [i, d] = stack.back();
            stack.pop_back();
            best = std::max(best, d);
            if (!nodes_[i].is_leaf()) {
                stack.emplace_back(static_cast<std::size_t>(nodes_[i].left), d + 1);
                stack.emplace_back(static_cast<std::size_t>(nodes_[i].right), d + 1);
            }
        }
        return best;
    }

    nlohmann::json to_json() const {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : nodes_) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
        return {{"n_features", n_features_},
                {"criterion", criterion_ == Criterion::gini ? "gini" : "squared_error"},
                {"importance", importance_},
                {"nodes", nodes}};
    }

    static DecisionTree from_json(const nlohmann::json& j) {
        DecisionTree t;
        t.n_features_ = j.at("n_features").get<std::size_t>();
        t.criterion_ = j.at("criterion").get<std::string>() == "gini" ? Criterion::gini : Criterion::squared_error;
        t.importance_ = j.at("importance").get<std::vector<double>>();
        for (const auto& n : j.at("nodes")) {
            t.nodes_.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                                n.at(4).get<double>()});
        }
        if (t.nodes_.empty()) throw ValidationError("tree: no nodes");
        return t;
    }

private:
    struct Stats {
        double w = 0.0;    // total weight
        double wy = 0.0;   // sum of w*y
        double wyy = 0.0;  // sum of w*y*y

        void add(double weight, double y) {
            w += weight;
            wy += weight * y;
            wyy += weight * y * y;
        }
        void remove(double weight, double y) {
            w -= weight;
            wy -= weight * y;
            wyy -= weight * y * y;
        }
        double mean() const { return w > 0.0 ? wy / w : 0.0; }
        // Per-unit-weight impurity.
        double impurity(Criterion c) const {
            if (w <= 0.0) return 0.0;
            const double m = wy / w;
            if (c == Criterion::gini) return 2.0 * m * (1.0 - m);
            return std::max(0.0, wyy / w - m * m);
        }
    };

    struct Builder {
        const Matrix& x;
        std::span<const double> y;
        std::span<const double> weights;
        const TreeParams& params;
        Criterion criterion;
        Rng& rng;
        DecisionTree& tree;
        std::vector<std::size_t> features{};

        double weight(std::size_t i) const { return weights.empty() ? 1.0 : weights[i]; }

        int grow(std::vector<std::size_t>& samples, int depth) {
            Stats total;
            for (auto i : samples) total.add(weight(i), y[i]);
            const int id = static_cast<int>(tree.nodes_.size());
            tree.nodes_.push_back(TreeNode{-1, 0.0, -1, -1, total.mean()});

            const double node_impurity = total.impurity(criterion);
            const bool depth_ok = params.max_depth < 0 || depth < params.max_depth;
            if (!depth_ok || samples.size() < std::max<std::size_t>(2, params.min_samples_split) ||
                node_impurity <= 1e-15 || total.w <= 0.0) {
                return id;
            }

            choose_features();
            int best_feature = -1;
            double best_threshold = 0.0;
            double best_child = std::numeric_limits<double>::infinity();  // weighted child impurity
            std::vector<std::size_t> order(samples);
            for (auto f : features) {
                std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                    const double va = x[a][f], vb = x[b][f];
                    return va < vb || (va == vb && a < b);
                });
                Stats left;
                Stats right = total;
                for (std::size_t k = 0; k + 1 < order.size(); ++k) {
                    const auto i = order[k];
                    left.add(weight(i), y[i]);
                    right.remove(weight(i), y[i]);
                    const double v = x[i][f];
                    const double next = x[order[k + 1]][f];
                    if (next <= v) continue;
                    const std::size_t n_left = k + 1;
                    const std::size_t n_right = order.size() - n_left;
                    if (n_left < params.min_samples_leaf || n_right < params.min_samples_leaf) continue;
                    const double child = left.w * left.impurity(criterion) + right.w * right.impurity(criterion);
                    if (best_feature < 0 || child < best_child - 1e-12 * std::max(1.0, best_child)) {
                        best_child = child;
                        best_feature = static_cast<int>(f);
                        best_threshold = v + (next - v) / 2.0;
                        if (best_threshold >= next) best_threshold = v;
                    }
                }
            }
            if (best_feature < 0) return id;

            const double gain = std::max(0.0, total.w * node_impurity - best_child);
            tree.importance_[static_cast<std::size_t>(best_feature)] += gain;

            std::vector<std::size_t> left_samples, right_samples;
            for (auto i : samples) {
                (x[i][static_cast<std::size_t>(best_feature)] <= best_threshold ? left_samples : right_samples).push_back(i);
            }
            samples.clear();
            samples.shrink_to_fit();
            const int l = grow(left_samples, depth + 1);
            const int r = grow(right_samples, depth + 1);
            auto& node = tree.nodes_[static_cast<std::size_t>(id)];
            node.feature = best_feature;
            node.threshold = best_threshold;
            node.left = l;
            node.right = r;
            return id;
        }

        void choose_features() {
            if (params.allowed_features.empty()) {
                features.resize(tree.n_features_);
                std::iota(features.begin(), features.end(), std::size_t{0});
            } else {
                features = params.allowed_features;
            }
            const std::size_t width = features.size();
            const std::size_t m = params.max_features == 0 ? width : std::min(width, params.max_features);
            if (m < width) {
                for (std::size_t i = 0; i < m; ++i) {
                    const std::size_t j = i + uniform_index(rng, width - i);
                    std::swap(features[i], features[j]);
                }
                features.resize(m);
                std::sort(features.begin(), features.end());
            }
        }
    };

    std::size_t n_features_ = 0;
    Criterion criterion_ = Criterion::gini;
    std::vector<TreeNode> nodes_;
    std::vector<double> importance_;
};

}  // namespace healthprompt::ml
