#pragma once

// Model zoo facade: one TrainedModel type over the six classifier families,
// their hyperparameter spaces, importance extraction and JSON artifacts.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "healthprompt/dataset.hpp"
#include "healthprompt/error.hpp"
#include "healthprompt/ml/boosting.hpp"
#include "healthprompt/ml/forest.hpp"
#include "healthprompt/ml/hyper.hpp"
#include "healthprompt/ml/importance.hpp"
#include "healthprompt/ml/knn.hpp"
#include "healthprompt/ml/logistic.hpp"
#include "healthprompt/ml/mlp.hpp"

namespace healthprompt::ml {

enum class Family { RF, LR, MLP, KNN, GBT, ADA };

inline constexpr std::array<Family, 6> kAllFamilies = {Family::RF, Family::LR, Family::MLP,
                                                       Family::KNN, Family::GBT, Family::ADA};

inline std::string_view family_token(Family f) {
    switch (f) {
        case Family::RF: return "RF";
        case Family::LR: return "LR";
        case Family::MLP: return "MLP";
        case Family::KNN: return "KNN";
        case Family::GBT: return "GBT";
        case Family::ADA: return "ADA";
    }
    return "?";
}

// Row label used in result tables.
inline std::string_view family_display(Family f) {
    switch (f) {
        case Family::GBT: return "XGB";
        case Family::ADA: return "AdaBoost";
        default: return family_token(f);
    }
}

inline Family parse_family(std::string_view s) {
    for (auto f : kAllFamilies) {
        if (s == family_token(f) || s == family_display(f)) return f;
    }
    if (s == "ADABOOST" || s == "adaboost") return Family::ADA;
    throw ValidationError("unknown model family '" + std::string(s) + "'");
}

// Families whose fitted parameters carry a native importance signal.
inline bool has_native_importance(Family f) { return f == Family::RF || f == Family::LR || f == Family::GBT || f == Family::ADA; }

// Default search ranges. Every parameter name of the reference tuning grid is
// present; KNN algorithm/leaf_size and GBT use_label_encoder/eval_metric do
// not change a brute-force / logloss model and are carried as recorded knobs.
inline HyperSpace default_space(Family f) {
    using S = std::string;
    switch (f) {
        case Family::RF:
            return {{"n_estimators", IntRange{50, 400}},
                    {"max_depth", IntRange{2, 12}},
                    {"min_samples_split", IntRange{2, 10}},
                    {"min_samples_leaf", IntRange{1, 5}},
                    {"bootstrap", Choice{{true, false}}}};
        case Family::LR:
            return {{"C", RealRange{1e-3, 1e2, true}},
                    {"penalty", Choice{{S("l2"), S("none")}}},
                    {"solver", Choice{{S("gd"), S("nesterov")}}}};
        case Family::MLP:
            return {{"hidden_layer_sizes", Choice{{S("16"), S("32"), S("64"), S("32,16"), S("64,32")}}},
                    {"activation", Choice{{S("relu"), S("tanh"), S("logistic")}}},
                    {"solver", Choice{{S("adam"), S("sgd")}}},
                    {"alpha", RealRange{1e-5, 1e-1, true}},
                    {"learning_rate", Choice{{S("constant"), S("invscaling"), S("adaptive")}}},
                    {"learning_rate_init", RealRange{1e-3, 1e-1, true}},
                    {"tol", RealRange{1e-5, 1e-3, true}},
                    {"max_iter", IntRange{100, 400}}};
        case Family::KNN:
            return {{"n_neighbors", IntRange{3, 31}},
                    {"weights", Choice{{S("uniform"), S("distance")}}},
                    {"algorithm", Choice{{S("auto"), S("ball_tree"), S("kd_tree"), S("brute")}}},
                    {"leaf_size", IntRange{10, 50}},
                    {"p", Choice{{std::int64_t{1}, std::int64_t{2}}}}};
        case Family::GBT:
            return {{"use_label_encoder", Choice{{false}}},
                    {"eval_metric", Choice{{S("logloss")}}},
                    {"n_estimators", IntRange{50, 300}},
                    {"learning_rate", RealRange{0.01, 0.3, true}},
                    {"max_depth", IntRange{2, 6}},
                    {"colsample_bytree", RealRange{0.5, 1.0}}};
        case Family::ADA:
            return {{"n_estimators", IntRange{25, 300}}, {"learning_rate", RealRange{0.01, 2.0, true}}};
    }
    return {};
}

struct ModelSpec {
    Family family = Family::RF;
    HyperSpace hyper_space;

    static ModelSpec make(Family f) { return {f, default_space(f)}; }
};

using ModelImpl = std::variant<RandomForest, LogisticRegression, Mlp, Knn, GradientBoosting, AdaBoost>;

struct TrainOptions {
    std::size_t threads = 1;
    bool permutation_importance = false;  // also rank KNN/MLP
    std::size_t permutation_repeats = 10;
};

class TrainedModel {
public:
    TrainedModel(Family family, HyperAssignment hyper, ModelImpl impl, std::vector<std::string> features)
        : family_(family), hyper_(std::move(hyper)), impl_(std::move(impl)), features_(std::move(features)) {}

    Family family() const noexcept { return family_; }
    const HyperAssignment& hyper() const noexcept { return hyper_; }
    const ModelImpl& impl() const noexcept { return impl_; }
    const std::vector<std::string>& features() const noexcept { return features_; }
    const std::optional<ImportanceRanking>& importance() const noexcept { return importance_; }
    void set_importance(ImportanceRanking r) { importance_ = std::move(r); }

    // False only for iterative learners that hit their iteration cap.
    bool converged() const {
        if (const auto* m = std::get_if<LogisticRegression>(&impl_)) return m->converged();
        if (const auto* m = std::get_if<Mlp>(&impl_)) return m->converged();
        return true;
    }

    int predict(std::span<const double> x) const {
        if (x.size() != features_.size()) {
            throw ValidationError("predict: expected " + std::to_string(features_.size()) + " features, got " +
                                  std::to_string(x.size()));
        }
        return std::visit([&](const auto& m) { return m.predict(x); }, impl_);
    }

    std::vector<int> predict_all(const Dataset& ds) const {
        std::vector<int> out;
        out.reserve(ds.size());
        for (const auto& r : ds.rows) out.push_back(predict(r));
        return out;
    }

    // Raw per-feature scores in schema order from the fitted parameters;
    // nullopt for families without one.
    std::optional<std::vector<double>> native_importance() const {
        return std::visit(
            [](const auto& m) -> std::optional<std::vector<double>> {
                using M = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<M, Knn> || std::is_same_v<M, Mlp>) {
                    return std::nullopt;
                } else {
                    return m.importance();
                }
            },
            impl_);
    }

    nlohmann::json to_json() const;
    static TrainedModel from_json(const nlohmann::json& j);

private:
    Family family_;
    HyperAssignment hyper_;
    ModelImpl impl_;
    std::vector<std::string> features_;
    std::optional<ImportanceRanking> importance_;
};

namespace detail {

inline std::vector<std::size_t> parse_layers(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        double v = 0.0;
        if (!parse_double(tok, v) || v < 1 || std::floor(v) != v) throw ValidationError("mlp: bad hidden_layer_sizes '" + s + "'");
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty()) throw ValidationError("mlp: empty hidden_layer_sizes");
    return out;
}

inline std::size_t to_count(std::int64_t v, const char* what) {
    if (v < 0) throw ValidationError(std::string(what) + " must be nonnegative");
    return static_cast<std::size_t>(v);
}

inline ModelImpl fit_impl(Family family, const HyperAssignment& h, const Dataset& train, std::uint64_t seed,
                          std::size_t threads) {
    const auto& x = train.rows;
    const std::span<const int> y = train.labels;
    switch (family) {
        case Family::RF: {
            ForestParams p;
            p.n_estimators = to_count(get_int(h, "n_estimators", 100), "n_estimators");
            p.max_depth = static_cast<int>(get_int(h, "max_depth", -1));
            p.min_samples_split = to_count(get_int(h, "min_samples_split", 2), "min_samples_split");
            p.min_samples_leaf = to_count(get_int(h, "min_samples_leaf", 1), "min_samples_leaf");
            p.bootstrap = get_bool(h, "bootstrap", true);
            RandomForest m;
            m.fit(x, y, p, seed, threads);
            return m;
        }
        case Family::LR: {
            LogisticParams p;
            p.C = get_real(h, "C", 1.0);
            const auto penalty = get_string(h, "penalty", "l2");
            if (penalty != "l2" && penalty != "none") throw ValidationError("logistic: unknown penalty '" + penalty + "'");
            p.penalty = penalty == "l2" ? Penalty::l2 : Penalty::none;
            const auto solver = get_string(h, "solver", "gd");
            if (solver != "gd" && solver != "nesterov") throw ValidationError("logistic: unknown solver '" + solver + "'");
            p.solver = solver == "gd" ? LogisticSolver::gd : LogisticSolver::nesterov;
            p.max_iter = to_count(get_int(h, "max_iter", 2000), "max_iter");
            LogisticRegression m;
            m.fit(x, y, p);
            return m;
        }
        case Family::MLP: {
            MlpParams p;
            p.hidden_layer_sizes = parse_layers(get_string(h, "hidden_layer_sizes", "100"));
            const auto act = get_string(h, "activation", "relu");
            if (act == "relu") p.activation = Activation::relu;
            else if (act == "tanh") p.activation = Activation::tanh;
            else if (act == "logistic") p.activation = Activation::logistic;
            else if (act == "identity") p.activation = Activation::identity;
            else throw ValidationError("mlp: unknown activation '" + act + "'");
            const auto solver = get_string(h, "solver", "adam");
            if (solver != "adam" && solver != "sgd") throw ValidationError("mlp: unknown solver '" + solver + "'");
            p.solver = solver == "adam" ? MlpSolver::adam : MlpSolver::sgd;
            p.alpha = get_real(h, "alpha", 1e-4);
            const auto lr = get_string(h, "learning_rate", "constant");
            if (lr == "constant") p.learning_rate = LearningRateSchedule::constant;
            else if (lr == "invscaling") p.learning_rate = LearningRateSchedule::invscaling;
            else if (lr == "adaptive") p.learning_rate = LearningRateSchedule::adaptive;
            else throw ValidationError("mlp: unknown learning_rate '" + lr + "'");
            p.learning_rate_init = get_real(h, "learning_rate_init", 1e-3);
            p.tol = get_real(h, "tol", 1e-4);
            p.max_iter = to_count(get_int(h, "max_iter", 200), "max_iter");
            Mlp m;
            m.fit(x, y, p, seed);
            return m;
        }
        case Family::KNN: {
            KnnParams p;
            p.n_neighbors = to_count(get_int(h, "n_neighbors", 5), "n_neighbors");
            const auto w = get_string(h, "weights", "uniform");
            if (w != "uniform" && w != "distance") throw ValidationError("knn: unknown weights '" + w + "'");
            p.weights = w == "uniform" ? KnnWeights::uniform : KnnWeights::distance;
            p.p = static_cast<int>(get_int(h, "p", 2));
            Knn m;
            m.fit(x, y, p);
            return m;
        }
        case Family::GBT: {
            GbtParams p;
            p.n_estimators = to_count(get_int(h, "n_estimators", 100), "n_estimators");
            p.learning_rate = get_real(h, "learning_rate", 0.1);
            p.max_depth = static_cast<int>(get_int(h, "max_depth", 3));
            p.colsample_bytree = get_real(h, "colsample_bytree", 1.0);
            GradientBoosting m;
            m.fit(x, y, p, seed);
            return m;
        }
        case Family::ADA: {
            AdaBoostParams p;
            p.n_estimators = to_count(get_int(h, "n_estimators", 50), "n_estimators");
            p.learning_rate = get_real(h, "learning_rate", 1.0);
            AdaBoost m;
            m.fit(x, y, p, seed);
            return m;
        }
    }
    throw ValidationError("unknown family");
}

}  // namespace detail

// Ranking for a fitted model: impurity decrease for tree ensembles, |coef|
// for LR (expects standardized inputs), permutation accuracy drop on `train`
// for KNN and MLP.
inline ImportanceRanking feature_importance(const TrainedModel& model, const Dataset& train, std::size_t repeats = 10,
                                            std::uint64_t seed = 0) {
    if (train.n_features() != model.features().size()) throw ValidationError("feature_importance: schema mismatch");
    std::vector<double> raw;
    if (auto native = model.native_importance()) {
        raw = std::move(*native);
    } else {
        raw = permutation_importance([&](std::span<const double> x) { return model.predict(x); }, train, repeats, seed);
    }
    return make_ranking(raw, train.schema, std::string(family_token(model.family())));
}

// Fit without computing an importance ranking (cross-validation folds).
inline TrainedModel fit_model(const ModelSpec& spec, const Dataset& train, const HyperAssignment& hyper,
                              std::uint64_t seed, std::size_t threads = 1) {
    validate(train);
    if (train.size() == 0) throw ValidationError("train: empty training set");
    return TrainedModel(spec.family, hyper, detail::fit_impl(spec.family, hyper, train, seed, threads),
                        train.schema.names());
}

// Fits one family with a fixed assignment. Deterministic in (family, data,
// hyper, seed) regardless of options.threads.
inline TrainedModel train(const ModelSpec& spec, const Dataset& train, const HyperAssignment& hyper, std::uint64_t seed,
                          const TrainOptions& options = {}) {
    TrainedModel model = fit_model(spec, train, hyper, seed, options.threads);
    if (has_native_importance(spec.family) || options.permutation_importance) {
        model.set_importance(feature_importance(model, train, options.permutation_repeats, seed));
    }
    return model;
}

inline int predict(const TrainedModel& model, std::span<const double> x) { return model.predict(x); }

inline constexpr std::string_view kModelFormat = "healthprompt.model";
inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json TrainedModel::to_json() const {
    nlohmann::json params = std::visit([](const auto& m) { return m.to_json(); }, impl_);
    return {{"format", kModelFormat},
            {"version", kModelFormatVersion},
            {"family", family_token(family_)},
            {"features", features_},
            {"hyper", ml::to_json(hyper_)},
            {"converged", converged()},
            {"parameters", params},
            {"importance", importance_ ? healthprompt::to_json(*importance_) : nlohmann::json(nullptr)}};
}

inline TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
    if (j.value("format", "") != kModelFormat) throw ValidationError("model artifact: wrong format tag");
    if (j.value("version", 0) != kModelFormatVersion) {
        throw ValidationError("model artifact: unsupported version " + std::to_string(j.value("version", 0)));
    }
    const Family family = parse_family(j.at("family").get<std::string>());
    const auto& p = j.at("parameters");
    ModelImpl impl = [&]() -> ModelImpl {
        switch (family) {
            case Family::RF: return RandomForest::from_json(p);
            case Family::LR: return LogisticRegression::from_json(p);
            case Family::MLP: return Mlp::from_json(p);
            case Family::KNN: return Knn::from_json(p);
            case Family::GBT: return GradientBoosting::from_json(p);
            case Family::ADA: return AdaBoost::from_json(p);
        }
        throw ValidationError("unknown family");
    }();
    TrainedModel m(family, assignment_from_json(j.at("hyper")), std::move(impl),
                   j.at("features").get<std::vector<std::string>>());
    if (!j.at("importance").is_null()) m.set_importance(ranking_from_json(j.at("importance")));
    return m;
}

inline void save_model(const std::filesystem::path& path, const TrainedModel& m) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << m.to_json().dump(1) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

inline TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return TrainedModel::from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

}  // namespace healthprompt::ml
