#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "healthprompt/dataset.hpp"
#include "healthprompt/ml/model.hpp"
#include "healthprompt/parallel.hpp"
#include "healthprompt/random.hpp"

namespace healthprompt::ml {

struct CvTrial {
    HyperAssignment hyper;
    std::vector<std::optional<double>> fold_scores;  // nullopt: fold excluded
    double mean_score = 0.0;
};

struct CvReport {
    std::vector<CvTrial> trials;
    std::size_t best_index = 0;
    std::vector<std::string> warnings;
};

// Stratified fold assignment: each class is shuffled and dealt round-robin.
inline std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t folds, std::uint64_t seed) {
    if (folds < 2) throw ValidationError("cv: need at least 2 folds");
    std::vector<std::size_t> fold_of(labels.size(), 0);
    std::size_t offset = 0;
    for (int c = 0; c < 2; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == c) members.push_back(i);
        }
        Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        shuffle(members, rng);
        for (std::size_t k = 0; k < members.size(); ++k) fold_of[members[k]] = (offset + k) % folds;
        offset += members.size();
    }
    return fold_of;
}

struct SearchResult {
    TrainedModel model;
    CvReport report;
};

struct SearchOptions {
    std::size_t n_iter = 20;
    std::size_t folds = 5;
    std::size_t threads = 1;
    bool permutation_importance = false;  // rank KNN/MLP winners too
};

// Randomized search over spec.hyper_space scored by mean stratified-fold
// accuracy; the winner (first on ties) is refit on all of `train`.
inline SearchResult randomized_search(const ModelSpec& spec, const Dataset& train, std::uint64_t seed,
                                      const SearchOptions& opt = {}) {
    if (opt.n_iter < 1) throw ValidationError("search: n_iter must be at least 1");
    validate(train);
    for (int c = 0; c < 2; ++c) {
        if (train.count_label(c) < opt.folds) {
            throw ValidationError("search: class " + std::to_string(c) + " has fewer members than folds");
        }
    }
    CvReport report;
    Rng sampler = make_rng(derive_seed(seed, 0x5eed));
    for (std::size_t t = 0; t < opt.n_iter; ++t) report.trials.push_back({sample_assignment(spec.hyper_space, sampler), {}, 0.0});

    const auto fold_of = stratified_folds(train.labels, opt.folds, derive_seed(seed, 0xf01d));
    std::vector<Dataset> fold_train(opt.folds), fold_valid(opt.folds);
    std::vector<bool> degenerate(opt.folds, false);
    for (std::size_t f = 0; f < opt.folds; ++f) {
        std::vector<std::size_t> tr, va;
        for (std::size_t i = 0; i < train.size(); ++i) (fold_of[i] == f ? va : tr).push_back(i);
        fold_train[f] = train.subset(tr);
        fold_valid[f] = train.subset(va);
        const bool single = fold_train[f].count_label(0) == 0 || fold_train[f].count_label(1) == 0 ||
                            fold_valid[f].count_label(0) == 0 || fold_valid[f].count_label(1) == 0;
        if (single) {
            degenerate[f] = true;
            report.warnings.push_back("fold " + std::to_string(f) + " holds a single class; its score is excluded");
        }
    }

    std::vector<std::optional<double>> scores(opt.n_iter * opt.folds);
    parallel_for(scores.size(), opt.threads, [&](std::size_t job) {
        const std::size_t t = job / opt.folds, f = job % opt.folds;
        if (degenerate[f]) return;
        const auto model = fit_model(spec, fold_train[f], report.trials[t].hyper, derive_seed(seed, t + 1, f));
        std::size_t hits = 0;
        for (std::size_t i = 0; i < fold_valid[f].size(); ++i) {
            hits += model.predict(fold_valid[f].rows[i]) == fold_valid[f].labels[i];
        }
        scores[job] = static_cast<double>(hits) / static_cast<double>(fold_valid[f].size());
    });

    double best = -1.0;
    for (std::size_t t = 0; t < opt.n_iter; ++t) {
        auto& trial = report.trials[t];
        double sum = 0.0;
        std::size_t used = 0;
        for (std::size_t f = 0; f < opt.folds; ++f) {
            trial.fold_scores.push_back(scores[t * opt.folds + f]);
            if (scores[t * opt.folds + f]) {
                sum += *scores[t * opt.folds + f];
                ++used;
            }
        }
        trial.mean_score = used ? sum / static_cast<double>(used) : 0.0;
        if (trial.mean_score > best) {
            best = trial.mean_score;
            report.best_index = t;
        }
    }
    TrainOptions to;
    to.threads = opt.threads;
    to.permutation_importance = opt.permutation_importance;
    auto model = ml::train(spec, train, report.trials[report.best_index].hyper, seed, to);
    return {std::move(model), std::move(report)};
}

inline nlohmann::json to_json(const CvReport& r) {
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& t : r.trials) {
        nlohmann::json scores = nlohmann::json::array();
        for (const auto& s : t.fold_scores) scores.push_back(s ? nlohmann::json(*s) : nlohmann::json(nullptr));
        trials.push_back({{"hyper", to_json(t.hyper)}, {"fold_scores", scores}, {"mean_score", t.mean_score}});
    }
    return {{"trials", trials}, {"best_index", r.best_index}, {"warnings", r.warnings}};
}

}  // namespace healthprompt::ml
