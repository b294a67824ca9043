// healthprompt: command-line driver for the experiment pipeline.
//
// Each verb reads and writes artifacts under the output directory so stages
// can be rerun on their own:
//   prepare-data  -> data/{train,test}.csv, data/stats.json
//   train-models  -> models/<FAM>.json, models/<FAM>.cv.json, importance/<FAM>.json, ml_rows.json
//   gen-dk        -> dk/dk.json, dk/dk<i>.txt
//   run-grid      -> grid_rows.json (rewritten after every finished row)
//   report        -> report.csv, report.md
//
// Exit codes: 0 ok, 1 validation/config error, 2 transport failure,
// 3 partial grid (rerun resumes from the completion cache).

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

#include "healthprompt/healthprompt.hpp"

namespace fs = std::filesystem;
using namespace healthprompt;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kTransport = 2, kPartial = 3 };

struct Overrides {
    std::string config;
    std::string data;
    std::string output_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::vector<std::size_t> n_ex;
    std::string backend;
    std::string model;
    std::string base_url;
    std::string cache;
    std::string fallback;
    std::optional<std::size_t> max_in_flight;
    std::optional<std::size_t> search_iter;
    bool paper_faithful = false;
    bool permutation_importance = false;
    bool live = false;
    bool export_prompts = false;
    bool quiet = false;
    std::string format = "both";
};

ExperimentConfig resolve(const Overrides& o) {
    ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    if (!o.data.empty()) c.data_path = o.data;
    if (!o.output_dir.empty()) c.output_dir = o.output_dir;
    if (o.seed) c.seed = *o.seed;
    if (o.threads) c.threads = *o.threads;
    if (!o.n_ex.empty()) c.n_ex_grid = o.n_ex;
    if (!o.backend.empty()) c.backend = o.backend;
    if (!o.model.empty()) c.llm.model_name = o.model;
    if (!o.base_url.empty()) c.llm.base_url = o.base_url;
    if (!o.cache.empty()) c.cache_path = o.cache;
    if (!o.fallback.empty()) c.fallback = llm::parse_fallback(o.fallback);
    if (o.max_in_flight) c.llm.max_in_flight = *o.max_in_flight;
    if (o.search_iter) c.search_iter = *o.search_iter;
    if (o.paper_faithful) c.paper_faithful = true;
    if (o.permutation_importance) c.permutation_importance = true;
    c.validate();
    return c;
}

void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
    if (!out) throw IoError("write failed: " + p.string());
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("missing artifact " + p.string() + " (run the earlier stage first)");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(p.string() + ": " + e.what());
    }
}

TrainTest load_split(const ExperimentConfig& c) {
    return {load_dataset_csv(c.output_dir / "data" / "train.csv", heart_schema()),
            load_dataset_csv(c.output_dir / "data" / "test.csv", heart_schema())};
}

class Log {
public:
    explicit Log(bool quiet) : quiet_(quiet) {}
    void operator()(const std::string& s) const {
        if (!quiet_) std::cerr << s << '\n';
    }

private:
    bool quiet_;
};

// --- verbs ------------------------------------------------------------------

void prepare(const ExperimentConfig& c, const Log& log) {
    const auto d = prepare_data(c);
    const auto dir = c.output_dir / "data";
    write_csv(dir / "train.csv", d.split.train);
    write_csv(dir / "test.csv", d.split.test);
    write_json(dir / "stats.json", {{"n_total", d.stats.n_total},
                                    {"n_with_missing", d.stats.n_with_missing},
                                    {"male_fraction", d.stats.male_fraction},
                                    {"n_train", d.split.train.size()},
                                    {"n_test", d.split.test.size()},
                                    {"train_positive", d.split.train.count_label(1)},
                                    {"test_positive", d.split.test.count_label(1)}});
    write_json(c.output_dir / "config.json", to_json(c));
    log("rows=" + std::to_string(d.stats.n_total) + " with_missing=" + std::to_string(d.stats.n_with_missing) +
        " train=" + std::to_string(d.split.train.size()) + " test=" + std::to_string(d.split.test.size()));
}

void train_models(const ExperimentConfig& c, const Log& log) {
    const auto split = load_split(c);
    const auto res = run_ml_baselines(split, c, [&](const std::string& s) { log(s); });
    for (std::size_t i = 0; i < ml::kAllFamilies.size(); ++i) {
        const auto f = ml::kAllFamilies[i];
        const std::string tok(ml::family_token(f));
        const auto& r = res.models[i];
        ml::save_model(c.output_dir / "models" / (tok + ".json"), r.model);
        write_json(c.output_dir / "models" / (tok + ".cv.json"), ml::to_json(r.report));
        for (const auto& w : r.report.warnings) log(tok + ": " + w);
        if (r.model.importance()) write_json(c.output_dir / "importance" / (tok + ".json"), to_json(*r.model.importance()));
    }
    write_json(c.output_dir / "ml_rows.json", to_json(res.table));
    for (const auto& row : res.table.rows) log(row.model + " F1=" + fixed_decimal(row.metrics.f1, 4));
}

std::vector<DkEntry> gen_dk(const ExperimentConfig& c, const Log& log) {
    std::map<ml::Family, ImportanceRanking> rankings;
    for (auto f : c.dk_sources) {
        const auto path = c.output_dir / "importance" / (std::string(ml::family_token(f)) + ".json");
        if (!fs::exists(path)) {
            throw ValidationError("no importance ranking for " + std::string(ml::family_token(f)) + " at " + path.string() +
                                  (ml::has_native_importance(f) ? "" : " (enable permutation_importance for this family)"));
        }
        rankings[f] = ranking_from_json(read_json(path));
    }
    const auto dks = build_dk(rankings, c);
    json j = json::array();
    for (const auto& e : dks) {
        auto item = to_json(e.dk);
        item["id"] = e.slot.id;
        item["family"] = e.slot.source ? json(std::string(ml::family_token(*e.slot.source))) : json(nullptr);
        j.push_back(item);
        if (!e.dk.text.empty()) write_text(c.output_dir / "dk" / (e.slot.id + ".txt"), e.dk.text + "\n");
    }
    write_json(c.output_dir / "dk" / "dk.json", j);
    log("wrote " + std::to_string(dks.size()) + " DK variants");
    return dks;
}

std::vector<DkEntry> load_dk(const ExperimentConfig& c) {
    const auto j = read_json(c.output_dir / "dk" / "dk.json");
    std::vector<DkEntry> out;
    for (const auto& item : j) {
        DkSlot slot{item.at("id").get<std::string>(), parse_dk_kind(item.at("kind").get<std::string>()), std::nullopt};
        if (!item.at("family").is_null()) slot.source = ml::parse_family(item["family"].get<std::string>());
        out.push_back({slot, dk_from_json(item)});
    }
    return out;
}

void export_grid_prompts(const ExperimentConfig& c, const TrainTest& split, const std::vector<DkEntry>& dks) {
    for (auto n_ex : c.n_ex_grid) {
        const auto examples = sample_examples(split.train, n_ex, example_seed(c.seed, n_ex));
        for (const auto& e : dks) {
            const PromptSpec spec{n_ex, e.dk, c.seed, c.paper_faithful};
            std::vector<Prompt> prompts;
            for (const auto& row : split.test.rows) prompts.push_back(assemble_prompt(split.test.schema, spec, examples, row));
            export_prompts(c.output_dir / "prompts" / (e.slot.id + "_n" + std::to_string(n_ex)), prompts);
        }
    }
}

int run_grid(const ExperimentConfig& c, const Overrides& o, const Log& log) {
    const auto split = load_split(c);
    const auto dks = load_dk(c);
    if (o.export_prompts) export_grid_prompts(c, split, dks);
    auto backend = make_backend(c, split.test, o.live);
    log("backend=" + backend->model_name() + " cells=" + std::to_string(dks.size() * c.n_ex_grid.size()));

    ReportTable done;
    const auto out = c.output_dir / "grid_rows.json";
    auto persist = [&](bool complete) {
        auto j = to_json(done);
        j["complete"] = complete;
        write_json(out, j);
    };
    try {
        run_prompt_grid(split, dks, c, *backend, [&](const ReportRow& r) {
            done.rows.push_back(r);
            persist(false);
            log(r.model + " n_ex=" + std::to_string(*r.n_ex) + " F1=" + fixed_decimal(r.metrics.f1, 4) +
                " csa=" + fixed_decimal(r.metrics.cost_sensitive_accuracy, 4));
        });
    } catch (const llm::BatchAborted& e) {
        // Nothing finished: a plain transport failure, earlier results stay.
        if (done.rows.empty() && e.completed() == 0) throw TransportError(e.what());
        persist(false);
        std::cerr << "grid aborted after " << done.rows.size() << " rows (" << e.completed()
                  << " replies of the current row cached): " << e.what() << "\nrerun run-grid to resume from "
                  << c.cache_file().string() << '\n';
        return kPartial;
    }
    persist(true);
    return kOk;
}

void report(const ExperimentConfig& c, const std::string& format, const Log& log) {
    ReportTable t;
    if (fs::exists(c.output_dir / "ml_rows.json")) t = report_from_json(read_json(c.output_dir / "ml_rows.json"));
    if (fs::exists(c.output_dir / "grid_rows.json")) {
        const auto j = read_json(c.output_dir / "grid_rows.json");
        if (!j.value("complete", true)) log("warning: grid_rows.json is partial");
        const auto grid = report_from_json(j);
        t.rows.insert(t.rows.end(), grid.rows.begin(), grid.rows.end());
    }
    if (t.rows.empty()) throw ValidationError("nothing to report: run train-models and/or run-grid first");
    if (format == "csv" || format == "both") emit_report(t, ReportFormat::csv, c.output_dir / "report.csv");
    if (format == "markdown" || format == "both") emit_report(t, ReportFormat::markdown, c.output_dir / "report.md");
    std::cout << render_report(t, ReportFormat::markdown);
}

void add_common(CLI::App* sub, Overrides& o) {
    sub->add_option("-c,--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("-o,--output-dir", o.output_dir, "artifact directory (default from config, else ./out)");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--threads", o.threads, "worker threads (0: all cores)");
    sub->add_flag("-q,--quiet", o.quiet, "no progress output");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Prompt-based heart-disease risk classification experiments"};
    app.require_subcommand(1);
    Overrides o;

    auto* prep = app.add_subcommand("prepare-data", "load, impute and split the cohort");
    add_common(prep, o);
    prep->add_option("-d,--data", o.data, "UCI directory or single CSV");

    auto* train = app.add_subcommand("train-models", "tune the six classifiers and rank features");
    add_common(train, o);
    train->add_option("--search-iter", o.search_iter, "random-search iterations per family");
    train->add_flag("--permutation-importance", o.permutation_importance, "also rank KNN and MLP");

    auto* dk = app.add_subcommand("gen-dk", "render domain-knowledge texts from rankings");
    add_common(dk, o);

    auto* grid = app.add_subcommand("run-grid", "classify the test split with every prompt variant");
    add_common(grid, o);
    grid->add_option("--backend", o.backend, "oracle | rule | scripted | cache | live");
    grid->add_option("--n-ex", o.n_ex, "example counts, e.g. --n-ex 0 2 4");
    grid->add_option("--model", o.model, "chat model name");
    grid->add_option("--base-url", o.base_url, "chat-completions endpoint origin");
    grid->add_option("--cache", o.cache, "completion cache file");
    grid->add_option("--fallback", o.fallback, "positive | majority | error");
    grid->add_option("--max-in-flight", o.max_in_flight, "concurrent requests");
    grid->add_flag("--paper-faithful", o.paper_faithful, "use the published prompt quirks");
    grid->add_flag("--live", o.live, "allow calls to the real endpoint");
    grid->add_flag("--export-prompts", o.export_prompts, "write every prompt under prompts/");

    auto* rep = app.add_subcommand("report", "assemble the results table");
    add_common(rep, o);
    rep->add_option("--format", o.format, "csv | markdown | both")->check(CLI::IsMember({"csv", "markdown", "both"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kInvalid;
    }

    const Log log(o.quiet);
    try {
        const auto cfg = resolve(o);
        if (*prep) prepare(cfg, log);
        if (*train) train_models(cfg, log);
        if (*dk) gen_dk(cfg, log);
        if (*grid) return run_grid(cfg, o, log);
        if (*rep) report(cfg, o.format, log);
        return kOk;
    } catch (const TransportError& e) {
        std::cerr << "transport error: " << e.what() << '\n';
        return kTransport;
    } catch (const llm::BatchAborted& e) {
        std::cerr << "aborted: " << e.what() << '\n';
        return kPartial;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    }
}
