#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "healthprompt/dataset.hpp"
#include "healthprompt/dk.hpp"
#include "healthprompt/llm/gateway.hpp"
#include "healthprompt/metrics.hpp"
#include "healthprompt/ml/search.hpp"
#include "healthprompt/parallel.hpp"
#include "healthprompt/preprocess.hpp"
#include "healthprompt/prompt.hpp"
#include "healthprompt/report.hpp"

namespace healthprompt {

struct ExperimentConfig {
    std::filesystem::path data_path;  // directory of UCI site files, or one CSV
    std::uint64_t seed = 42;
    double test_fraction = 0.2;
    std::size_t impute_k = kDefaultImputeK;
    CostWeights weights;
    std::vector<ml::Family> dk_sources{ml::Family::RF, ml::Family::LR, ml::Family::GBT};
    DkConfig dk;
    std::vector<std::size_t> n_ex_grid{0, 2, 4, 8, 16};
    std::size_t search_iter = 20;
    std::size_t search_folds = 5;
    std::size_t threads = 0;  // 0: hardware concurrency
    bool permutation_importance = false;
    // oracle | rule | scripted | cache | live
    std::string backend = "oracle";
    std::string rule_feature = "oldpeak";
    double rule_threshold = 1.0;
    std::vector<std::string> replies;
    llm::LlmConfig llm;
    llm::FallbackPolicy fallback = llm::FallbackPolicy::positive;
    std::filesystem::path cache_path;  // empty: <output_dir>/cache.jsonl
    std::filesystem::path output_dir = "out";
    bool paper_faithful = false;

    std::size_t thread_count() const { return threads == 0 ? default_thread_count() : threads; }
    std::filesystem::path cache_file() const { return cache_path.empty() ? output_dir / "cache.jsonl" : cache_path; }

    void validate() const {
        if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ValidationError("config: test_fraction must be in (0,1)");
        if (impute_k < 1) throw ValidationError("config: impute_k must be >= 1");
        weights.validate();
        if (search_iter < 1) throw ValidationError("config: search.n_iter must be >= 1");
        if (search_folds < 2) throw ValidationError("config: search.folds must be >= 2");
        static const std::set<std::string> backends{"oracle", "rule", "scripted", "cache", "live"};
        if (!backends.count(backend)) throw ValidationError("config: unknown backend '" + backend + "'");
        llm.validate();
    }
};

namespace detail {

inline std::string fallback_name(llm::FallbackPolicy f) {
    switch (f) {
        case llm::FallbackPolicy::positive: return "positive";
        case llm::FallbackPolicy::majority: return "majority";
        case llm::FallbackPolicy::error: return "error";
    }
    return "?";
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json sources = nlohmann::json::array();
    for (auto f : c.dk_sources) sources.push_back(std::string(ml::family_token(f)));
    return {{"data_path", c.data_path.string()},
            {"seed", c.seed},
            {"test_fraction", c.test_fraction},
            {"impute_k", c.impute_k},
            {"weights", {{"w_fp", c.weights.w_fp}, {"w_fn", c.weights.w_fn}}},
            {"dk_sources", sources},
            {"dk", {{"n_top", c.dk.n_top}, {"n_bottom", c.dk.n_bottom}}},
            {"n_ex_grid", c.n_ex_grid},
            {"search", {{"n_iter", c.search_iter}, {"folds", c.search_folds}}},
            {"threads", c.threads},
            {"permutation_importance", c.permutation_importance},
            {"backend", c.backend},
            {"rule", {{"feature", c.rule_feature}, {"threshold", c.rule_threshold}}},
            {"replies", c.replies},
            {"llm", to_json(c.llm)},
            {"fallback", detail::fallback_name(c.fallback)},
            {"cache_path", c.cache_path.string()},
            {"output_dir", c.output_dir.string()},
            {"paper_faithful", c.paper_faithful}};
}

// Unknown keys are rejected so typos fail loudly.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known{"data_path", "seed",      "test_fraction", "impute_k", "weights",
                                             "dk_sources", "dk",       "n_ex_grid",     "search",   "threads",
                                             "permutation_importance", "backend",       "rule",     "replies",
                                             "llm",       "fallback",  "cache_path",    "output_dir",
                                             "paper_faithful"};
    if (!j.is_object()) throw ValidationError("config: expected a JSON object");
    for (const auto& [k, v] : j.items()) {
        if (!known.count(k)) throw ValidationError("config: unknown key '" + k + "'");
    }
    ExperimentConfig c;
    try {
        c.data_path = j.value("data_path", std::string{});
        c.seed = j.value("seed", c.seed);
        c.test_fraction = j.value("test_fraction", c.test_fraction);
        c.impute_k = j.value("impute_k", c.impute_k);
        if (j.contains("weights")) {
            c.weights.w_fp = j["weights"].value("w_fp", c.weights.w_fp);
            c.weights.w_fn = j["weights"].value("w_fn", c.weights.w_fn);
        }
        if (j.contains("dk_sources")) {
            c.dk_sources.clear();
            for (const auto& s : j["dk_sources"]) c.dk_sources.push_back(ml::parse_family(s.get<std::string>()));
        }
        if (j.contains("dk")) {
            c.dk.n_top = j["dk"].value("n_top", c.dk.n_top);
            c.dk.n_bottom = j["dk"].value("n_bottom", c.dk.n_bottom);
        }
        if (j.contains("n_ex_grid")) c.n_ex_grid = j["n_ex_grid"].get<std::vector<std::size_t>>();
        if (j.contains("search")) {
            c.search_iter = j["search"].value("n_iter", c.search_iter);
            c.search_folds = j["search"].value("folds", c.search_folds);
        }
        c.threads = j.value("threads", c.threads);
        c.permutation_importance = j.value("permutation_importance", c.permutation_importance);
        c.backend = j.value("backend", c.backend);
        if (j.contains("rule")) {
            c.rule_feature = j["rule"].value("feature", c.rule_feature);
            c.rule_threshold = j["rule"].value("threshold", c.rule_threshold);
        }
        if (j.contains("replies")) c.replies = j["replies"].get<std::vector<std::string>>();
        if (j.contains("llm")) c.llm = llm::llm_config_from_json(j["llm"]);
        if (j.contains("fallback")) c.fallback = llm::parse_fallback(j["fallback"].get<std::string>());
        c.cache_path = j.value("cache_path", std::string{});
        c.output_dir = j.value("output_dir", c.output_dir.string());
        c.paper_faithful = j.value("paper_faithful", c.paper_faithful);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

struct PreparedData {
    DatasetStats stats;
    Dataset imputed;
    TrainTest split;
};

inline RawDataset load_raw(const std::filesystem::path& data_path) {
    if (data_path.empty()) throw ValidationError("config: data_path is not set");
    if (std::filesystem::is_directory(data_path)) return load_uci_sites(data_path);
    return load_csv(data_path, heart_schema());
}

inline PreparedData prepare_data(const RawDataset& raw, const ExperimentConfig& cfg) {
    PreparedData p;
    p.stats = stats(raw);
    p.imputed = knn_impute(binarize_target(raw), cfg.impute_k);
    p.split = split(p.imputed, cfg.test_fraction, cfg.seed);
    return p;
}

inline PreparedData prepare_data(const ExperimentConfig& cfg) { return prepare_data(load_raw(cfg.data_path), cfg); }

struct MlResult {
    ReportTable table;
    std::vector<ml::SearchResult> models;  // in kAllFamilies order
};

inline std::uint64_t family_seed(std::uint64_t seed, ml::Family f) {
    return derive_seed(seed, 100 + static_cast<std::uint64_t>(f));
}

// Tunes and evaluates the six classifiers on standardized copies of the
// split, then appends the trivial baselines.
inline MlResult run_ml_baselines(const TrainTest& data, const ExperimentConfig& cfg,
                                 const std::function<void(const std::string&)>& log = {}) {
    const auto std_data = standardize(data.train, data.test);
    MlResult out;
    ml::SearchOptions opt;
    opt.n_iter = cfg.search_iter;
    opt.folds = cfg.search_folds;
    opt.threads = cfg.thread_count();
    opt.permutation_importance = cfg.permutation_importance;
    for (auto f : ml::kAllFamilies) {
        if (log) log("tuning " + std::string(ml::family_display(f)));
        auto res = ml::randomized_search(ml::ModelSpec::make(f), std_data.train, family_seed(cfg.seed, f), opt);
        const auto preds = res.model.predict_all(std_data.test);
        out.table.rows.push_back(
            {std::string(ml::family_display(f)), "", "", std::nullopt, evaluate(preds, data.test.labels, cfg.weights), RowGroup::ml});
        out.models.push_back(std::move(res));
    }
    for (auto k : {BaselineKind::maj1, BaselineKind::maj0, BaselineKind::random}) {
        const auto preds = baseline_predict(k, data.test.size(), derive_seed(cfg.seed, 0xba5e));
        out.table.rows.push_back({std::string(baseline_name(k)), "", "", std::nullopt,
                                  evaluate(preds, data.test.labels, cfg.weights), RowGroup::baseline});
    }
    return out;
}

struct DkEntry {
    DkSlot slot;
    DomainKnowledge dk;
};

inline std::vector<DkEntry> build_dk(const std::map<ml::Family, ImportanceRanking>& rankings, const ExperimentConfig& cfg,
                                     const FeatureSchema& schema = heart_schema()) {
    std::vector<DkEntry> out;
    for (const auto& slot : dk_slots(cfg.dk_sources)) {
        if (!slot.source) {
            out.push_back({slot, {}});
            continue;
        }
        const auto it = rankings.find(*slot.source);
        if (it == rankings.end()) {
            throw ValidationError("no importance ranking for DK source " + std::string(ml::family_token(*slot.source)));
        }
        out.push_back({slot, render_dk(it->second, slot.kind, schema, cfg.dk)});
    }
    return out;
}

inline std::string prompt_row_name(const DkSlot& slot) { return "prompt-" + slot.id.substr(2); }

inline std::string dk_source_label(const DkSlot& slot) {
    return slot.source ? std::string(ml::family_display(*slot.source)) : std::string("-");
}

inline std::uint64_t example_seed(std::uint64_t seed, std::size_t n_ex) { return derive_seed(seed, 0xe8, n_ex); }

// Table rows for every (N_ex, DK) cell, N_ex outermost. Examples are drawn
// once per N_ex from the unscaled training split and shared by all DK
// variants. `on_row` sees each finished row, so callers can persist partial
// grids if a batch aborts.
inline ReportTable run_prompt_grid(const TrainTest& data, const std::vector<DkEntry>& dks, const ExperimentConfig& cfg,
                                   llm::Backend& backend, const std::function<void(const ReportRow&)>& on_row = {}) {
    ReportTable table;
    llm::BatchOptions opt;
    opt.max_in_flight = cfg.llm.max_in_flight;
    opt.fallback = cfg.fallback;
    opt.majority_label = data.train.count_label(1) >= data.train.count_label(0) ? 1 : 0;
    for (auto n_ex : cfg.n_ex_grid) {
        const auto examples = sample_examples(data.train, n_ex, example_seed(cfg.seed, n_ex));
        for (const auto& e : dks) {
            PromptSpec spec{n_ex, e.dk, cfg.seed, cfg.paper_faithful};
            const auto batch = llm::classify_batch(data.test, spec, examples, backend, opt);
            ReportRow row{prompt_row_name(e.slot), std::string(dk_kind_label(e.slot.kind)), dk_source_label(e.slot), n_ex,
                          evaluate(batch.labels(), data.test.labels, cfg.weights), RowGroup::prompt};
            if (on_row) on_row(row);
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

// Backend named by cfg.backend. The live endpoint is only reachable when
// `allow_live` is set; "cache" answers from the cache and fails on a miss.
inline std::unique_ptr<llm::Backend> make_backend(const ExperimentConfig& cfg, const Dataset& test, bool allow_live,
                                                  std::shared_ptr<llm::Transport> transport = {}) {
    if (cfg.backend == "oracle") return std::make_unique<llm::OracleMock>(test.labels);
    if (cfg.backend == "rule") return std::make_unique<llm::RuleMock>(cfg.rule_feature, cfg.rule_threshold);
    if (cfg.backend == "scripted") return std::make_unique<llm::ScriptedMock>(cfg.replies);
    auto cache = std::make_shared<llm::CompletionCache>(cfg.cache_file());
    if (cfg.backend == "live") {
        if (!allow_live) throw ValidationError("backend 'live' needs the --live flag");
        if (!transport) transport = std::make_shared<llm::HttpTransport>(cfg.llm.base_url, cfg.llm.timeout);
        return std::make_unique<llm::Gateway>(cfg.llm, std::move(transport), std::move(cache));
    }
    return std::make_unique<llm::Gateway>(cfg.llm, nullptr, std::move(cache));
}

}  // namespace healthprompt
