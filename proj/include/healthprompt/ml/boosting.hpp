#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <nlohmann/json.hpp>

#include "healthprompt/ml/tree.hpp"
#include "healthprompt/random.hpp"

namespace healthprompt::ml {

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct GbtParams {
    std::size_t n_estimators = 100;
    double learning_rate = 0.1;
    int max_depth = 3;
    double colsample_bytree = 1.0;
};

// Gradient-boosted regression trees on the logistic loss. Each round fits a
// squared-error tree to the residuals y - sigmoid(F) over a per-tree column
// sample and adds learning_rate * leaf mean to the raw score.
class GradientBoosting {
public:
    void fit(const Matrix& x, std::span<const int> labels, const GbtParams& params, std::uint64_t seed) {
        if (x.empty()) throw ValidationError("gbt: empty training set");
        if (!(params.colsample_bytree > 0.0 && params.colsample_bytree <= 1.0)) {
            throw ValidationError("gbt: colsample_bytree must be in (0, 1]");
        }
        const std::size_t n = x.size();
        const std::size_t width = x.front().size();
        learning_rate_ = params.learning_rate;
        double positives = 0.0;
        for (int y : labels) positives += y;
        const double p = std::clamp(positives / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
        base_score_ = std::log(p / (1.0 - p));

        std::vector<double> raw(n, base_score_);
        std::vector<double> residual(n);
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), std::size_t{0});
        const auto n_cols = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::llround(params.colsample_bytree * static_cast<double>(width))), 1, width);

        trees_.clear();
        trees_.reserve(params.n_estimators);
        for (std::size_t m = 0; m < params.n_estimators; ++m) {
            Rng rng = make_rng(derive_seed(seed, m));
            for (std::size_t i = 0; i < n; ++i) residual[i] = labels[i] - sigmoid(raw[i]);
            TreeParams tp;
            tp.max_depth = params.max_depth;
            if (n_cols < width) {
                std::vector<std::size_t> cols(width);
                std::iota(cols.begin(), cols.end(), std::size_t{0});
                shuffle(cols, rng);
                cols.resize(n_cols);
                std::sort(cols.begin(), cols.end());
                tp.allowed_features = std::move(cols);
            }
            DecisionTree tree;
            tree.fit(x, residual, {}, all, tp, Criterion::squared_error, rng);
            for (std::size_t i = 0; i < n; ++i) raw[i] += learning_rate_ * tree.predict_value(x[i]);
            trees_.push_back(std::move(tree));
        }
    }

    double raw_score(std::span<const double> row) const {
        double f = base_score_;
        for (const auto& t : trees_) f += learning_rate_ * t.predict_value(row);
        return f;
    }

    double predict_proba(std::span<const double> row) const { return sigmoid(raw_score(row)); }
    int predict(std::span<const double> row) const { return predict_proba(row) >= 0.5 ? 1 : 0; }

    double base_score() const noexcept { return base_score_; }
    const std::vector<DecisionTree>& trees() const noexcept { return trees_; }

    // Total squared-error decrease per feature across all trees.
    std::vector<double> importance() const {
        std::vector<double> out(trees_.empty() ? 0 : trees_.front().n_features(), 0.0);
        for (const auto& t : trees_) {
            for (std::size_t f = 0; f < out.size(); ++f) out[f] += t.impurity_importance()[f];
        }
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json trees = nlohmann::json::array();
        for (const auto& t : trees_) trees.push_back(t.to_json());
        return {{"base_score", base_score_}, {"learning_rate", learning_rate_}, {"trees", trees}};
    }

    static GradientBoosting from_json(const nlohmann::json& j) {
        GradientBoosting g;
        g.base_score_ = j.at("base_score").get<double>();
        g.learning_rate_ = j.at("learning_rate").get<double>();
        for (const auto& t : j.at("trees")) g.trees_.push_back(DecisionTree::from_json(t));
        return g;
    }

private:
    double base_score_ = 0.0;
    double learning_rate_ = 0.1;
    std::vector<DecisionTree> trees_;
};

struct AdaBoostParams {
    std::size_t n_estimators = 50;
    double learning_rate = 1.0;
};

// Discrete AdaBoost (SAMME, two classes) over depth-1 gini stumps.
class AdaBoost {
public:
    void fit(const Matrix& x, std::span<const int> labels, const AdaBoostParams& params, std::uint64_t seed) {
        if (x.empty()) throw ValidationError("adaboost: empty training set");
        if (params.n_estimators == 0) throw ValidationError("adaboost: n_estimators must be positive");
        const std::size_t n = x.size();
        std::vector<double> y(labels.begin(), labels.end());
        std::vector<double> w(n, 1.0 / static_cast<double>(n));
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), std::size_t{0});
        stumps_.clear();
        alphas_.clear();
        round_errors_.clear();
        TreeParams tp;
        tp.max_depth = 1;
        for (std::size_t m = 0; m < params.n_estimators; ++m) {
            Rng rng = make_rng(derive_seed(seed, m));
            DecisionTree stump;
            stump.fit(x, y, w, all, tp, Criterion::gini, rng);
            double err = 0.0, total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                total += w[i];
                if (stump.predict_label(x[i]) != labels[i]) err += w[i];
            }
            err /= total;
            round_errors_.push_back(err);
            if (err <= 0.0) {
                stumps_.push_back(std::move(stump));
                alphas_.push_back(1.0);
                break;
            }
            if (err >= 0.5) {
                // No stump beats chance on these weights; keep the first so the
                // ensemble is never empty.
                if (stumps_.empty()) {
                    stumps_.push_back(std::move(stump));
                    alphas_.push_back(1.0);
                }
                break;
            }
            const double alpha = params.learning_rate * std::log((1.0 - err) / err);
            double norm = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (stump.predict_label(x[i]) != labels[i]) w[i] *= std::exp(alpha);
                norm += w[i];
            }
            for (auto& v : w) v /= norm;
            stumps_.push_back(std::move(stump));
            alphas_.push_back(alpha);
        }
    }

    double decision(std::span<const double> row) const {
        double s = 0.0;
        for (std::size_t m = 0; m < stumps_.size(); ++m) s += alphas_[m] * (stumps_[m].predict_label(row) == 1 ? 1.0 : -1.0);
        return s;
    }

    int predict(std::span<const double> row) const { return decision(row) >= 0.0 ? 1 : 0; }

    // Stump importances normalized per stump, averaged with the stump weights.
    std::vector<double> importance() const {
        std::vector<double> out(stumps_.empty() ? 0 : stumps_.front().n_features(), 0.0);
        for (std::size_t m = 0; m < stumps_.size(); ++m) {
            const auto& imp = stumps_[m].impurity_importance();
            double total = 0.0;
            for (double v : imp) total += v;
            if (total <= 0.0) continue;
            for (std::size_t f = 0; f < out.size(); ++f) out[f] += alphas_[m] * imp[f] / total;
        }
        return out;
    }

    // Weighted training error of each fitted round, in order.
    const std::vector<double>& round_errors() const noexcept { return round_errors_; }
    const std::vector<DecisionTree>& stumps() const noexcept { return stumps_; }
    const std::vector<double>& alphas() const noexcept { return alphas_; }

    nlohmann::json to_json() const {
        nlohmann::json stumps = nlohmann::json::array();
        for (const auto& t : stumps_) stumps.push_back(t.to_json());
        return {{"alphas", alphas_}, {"round_errors", round_errors_}, {"stumps", stumps}};
    }

    static AdaBoost from_json(const nlohmann::json& j) {
        AdaBoost a;
        a.alphas_ = j.at("alphas").get<std::vector<double>>();
        a.round_errors_ = j.at("round_errors").get<std::vector<double>>();
        for (const auto& t : j.at("stumps")) a.stumps_.push_back(DecisionTree::from_json(t));
        if (a.alphas_.size() != a.stumps_.size()) throw ValidationError("adaboost: alpha/stump count mismatch");
        return a;
    }

private:
    std::vector<DecisionTree> stumps_;
    std::vector<double> alphas_;
    std::vector<double> round_errors_;
};

}  // namespace healthprompt::ml
