#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "healthprompt/error.hpp"
#include "healthprompt/random.hpp"

namespace healthprompt {

struct ConfusionMatrix {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

    std::size_t total() const noexcept { return tp + tn + fp + fn; }
    std::size_t correct() const noexcept { return tp + tn; }
    bool operator==(const ConfusionMatrix&) const = default;
};

struct CostWeights {
    double w_fp = 0.2;
    double w_fn = 0.8;

    void validate() const {
        if (!(w_fp >= 0.0) || !(w_fn >= 0.0)) throw ValidationError("cost weights must be nonnegative");
        if (w_fp == 0.0 && w_fn == 0.0) throw ValidationError("cost weights cannot both be zero");
    }
};

struct MetricsRow {
    double precision = 0.0, recall = 0.0, f1 = 0.0, accuracy = 0.0;
    double fp_cost = 0.0, fn_cost = 0.0, cost_sensitive_accuracy = 0.0;

    bool operator==(const MetricsRow&) const = default;
};

struct ClassificationMetrics {
    double precision, recall, f1, accuracy;
};

struct CostMetrics {
    double fp_cost, fn_cost, cost_sensitive_accuracy;
};

inline ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truth) {
    if (preds.size() != truth.size()) {
        throw ValidationError("confusion: " + std::to_string(preds.size()) + " predictions for " +
                              std::to_string(truth.size()) + " labels");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if ((preds[i] != 0 && preds[i] != 1) || (truth[i] != 0 && truth[i] != 1)) {
            throw ValidationError("confusion: labels must be 0 or 1");
        }
        if (preds[i] == 1) {
            truth[i] == 1 ? ++cm.tp : ++cm.fp;
        } else {
            truth[i] == 0 ? ++cm.tn : ++cm.fn;
        }
    }
    return cm;
}

namespace detail {
inline double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }
}  // namespace detail

// 0/0 ratios are 0.
inline ClassificationMetrics classification_metrics(const ConfusionMatrix& cm) {
    const double tp = static_cast<double>(cm.tp);
    const double p = detail::ratio(tp, tp + static_cast<double>(cm.fp));
    const double r = detail::ratio(tp, tp + static_cast<double>(cm.fn));
    return {p, r, detail::ratio(2.0 * p * r, p + r),
            detail::ratio(static_cast<double>(cm.correct()), static_cast<double>(cm.total()))};
}

// csa = correct / (correct + w_fp*fp + w_fn*fn)
inline CostMetrics cost_metrics(const ConfusionMatrix& cm, const CostWeights& w = {}) {
    w.validate();
    const double fp_cost = w.w_fp * static_cast<double>(cm.fp);
    const double fn_cost = w.w_fn * static_cast<double>(cm.fn);
    const double correct = static_cast<double>(cm.correct());
    const double den = correct + fp_cost + fn_cost;
    // No errors at all (including the empty matrix) counts as perfect.
    const double csa = den == 0.0 ? 1.0 : correct / den;
    return {fp_cost, fn_cost, csa};
}

inline MetricsRow metrics_row(const ConfusionMatrix& cm, const CostWeights& w = {}) {
    const auto c = classification_metrics(cm);
    const auto k = cost_metrics(cm, w);
    return {c.precision, c.recall, c.f1, c.accuracy, k.fp_cost, k.fn_cost, k.cost_sensitive_accuracy};
}

inline MetricsRow evaluate(std::span<const int> preds, std::span<const int> truth, const CostWeights& w = {}) {
    return metrics_row(confusion(preds, truth), w);
}

enum class BaselineKind { maj1, maj0, random };

inline std::string_view baseline_name(BaselineKind k) {
    switch (k) {
        case BaselineKind::maj1: return "Maj1";
        case BaselineKind::maj0: return "Maj0";
        case BaselineKind::random: return "Random";
    }
    return "?";
}

inline std::vector<int> baseline_predict(BaselineKind kind, std::size_t n, std::uint64_t seed = 0) {
    std::vector<int> out(n, kind == BaselineKind::maj1 ? 1 : 0);
    if (kind == BaselineKind::random) {
        Rng rng = make_rng(seed);
        for (auto& v : out) v = uniform01(rng) < 0.5 ? 1 : 0;
    }
    return out;
}

// Field-wise mean of rows.
inline MetricsRow mean_row(std::span<const MetricsRow> rows) {
    MetricsRow m;
    if (rows.empty()) return m;
    for (const auto& r : rows) {
        m.precision += r.precision;
        m.recall += r.recall;
        m.f1 += r.f1;
        m.accuracy += r.accuracy;
        m.fp_cost += r.fp_cost;
        m.fn_cost += r.fn_cost;
        m.cost_sensitive_accuracy += r.cost_sensitive_accuracy;
    }
    const double n = static_cast<double>(rows.size());
    m.precision /= n;
    m.recall /= n;
    m.f1 /= n;
    m.accuracy /= n;
    m.fp_cost /= n;
    m.fn_cost /= n;
    m.cost_sensitive_accuracy /= n;
    return m;
}

// Field-wise population standard deviation, for repeated-seed runs.
inline MetricsRow stddev_row(std::span<const MetricsRow> rows) {
    MetricsRow s;
    if (rows.size() < 2) return s;
    const auto m = mean_row(rows);
    auto acc = [&](double MetricsRow::*f) {
        double v = 0.0;
        for (const auto& r : rows) v += (r.*f - m.*f) * (r.*f - m.*f);
        s.*f = std::sqrt(v / static_cast<double>(rows.size()));
    };
    for (auto f : {&MetricsRow::precision, &MetricsRow::recall, &MetricsRow::f1, &MetricsRow::accuracy,
                   &MetricsRow::fp_cost, &MetricsRow::fn_cost, &MetricsRow::cost_sensitive_accuracy}) {
        acc(f);
    }
    return s;
}

}  // namespace healthprompt
