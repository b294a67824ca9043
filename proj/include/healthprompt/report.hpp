#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "healthprompt/error.hpp"
#include "healthprompt/format.hpp"
#include "healthprompt/metrics.hpp"

namespace healthprompt {

enum class RowGroup { ml, baseline, prompt, average };

struct ReportRow {
    std::string model;      // "RF", "Maj1", "prompt-3", "Avg."
    std::string dk_type;    // "NO", "MLFI", "MLFI-ord"; empty for ML rows
    std::string dk_source;  // "-", "RF", "LR", "XGB"; empty for ML rows
    std::optional<std::size_t> n_ex;
    MetricsRow metrics;
    RowGroup group = RowGroup::ml;

    bool operator==(const ReportRow&) const = default;
};

struct ReportTable {
    std::vector<ReportRow> rows;
};

inline constexpr std::array<std::string_view, 11> kReportColumns = {
    "Model", "DK Type", "DK source", "N_ex", "Pre.", "Rec", "F1", "Acc.", "FP Cost", "FN Cost", "Cost-Sens Acc."};

// Rows in display order with averages inserted: one after the ML and
// baseline block (trivial baselines excluded from it) and one after each
// run of prompt rows sharing an N_ex. Existing average rows are dropped and
// recomputed.
inline std::vector<ReportRow> with_averages(const ReportTable& table) {
    std::vector<ReportRow> out, ml, baselines;
    std::vector<std::vector<ReportRow>> prompt_groups;
    for (const auto& r : table.rows) {
        switch (r.group) {
            case RowGroup::ml: ml.push_back(r); break;
            case RowGroup::baseline: baselines.push_back(r); break;
            case RowGroup::prompt:
                if (prompt_groups.empty() || prompt_groups.back().front().n_ex != r.n_ex) prompt_groups.emplace_back();
                prompt_groups.back().push_back(r);
                break;
            case RowGroup::average: break;
        }
    }
    auto average = [](const std::vector<ReportRow>& rows, bool prompt) {
        std::vector<MetricsRow> m;
        for (const auto& r : rows) m.push_back(r.metrics);
        ReportRow a{"Avg.", prompt ? "-" : "", prompt ? "-" : "", prompt ? rows.front().n_ex : std::nullopt,
                    mean_row(m), RowGroup::average};
        return a;
    };
    out.insert(out.end(), ml.begin(), ml.end());
    out.insert(out.end(), baselines.begin(), baselines.end());
    if (!ml.empty()) out.push_back(average(ml, false));
    for (const auto& g : prompt_groups) {
        out.insert(out.end(), g.begin(), g.end());
        out.push_back(average(g, true));
    }
    return out;
}

enum class ReportFormat { csv, markdown };

inline std::vector<std::string> report_cells(const ReportRow& r) {
    const auto& m = r.metrics;
    return {r.model,
            r.dk_type,
            r.dk_source,
            r.n_ex ? std::to_string(*r.n_ex) : std::string{},
            fixed_decimal(m.precision, 4),
            fixed_decimal(m.recall, 4),
            fixed_decimal(m.f1, 4),
            fixed_decimal(m.accuracy, 4),
            fixed_decimal(m.fp_cost, 4),
            fixed_decimal(m.fn_cost, 4),
            fixed_decimal(m.cost_sensitive_accuracy, 4)};
}

inline std::string render_report(const ReportTable& table, ReportFormat format) {
    if (table.rows.empty()) throw ValidationError("report: table is empty");
    const auto rows = with_averages(table);
    std::ostringstream out;
    auto line = [&](const auto& cells) {
        if (format == ReportFormat::csv) {
            for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
            out << '\n';
        } else {
            out << '|';
            for (const auto& c : cells) out << ' ' << c << " |";
            out << '\n';
        }
    };
    line(kReportColumns);
    if (format == ReportFormat::markdown) {
        out << '|';
        for (std::size_t i = 0; i < kReportColumns.size(); ++i) out << (i < 4 ? " --- |" : " ---: |");
        out << '\n';
    }
    for (const auto& r : rows) line(report_cells(r));
    return out.str();
}

inline void emit_report(const ReportTable& table, ReportFormat format, const std::filesystem::path& path) {
    const auto text = render_report(table, format);
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write report " + path.string());
    out << text;
    if (!out) throw IoError("write to " + path.string() + " failed");
}

inline std::string_view group_name(RowGroup g) {
    switch (g) {
        case RowGroup::ml: return "ml";
        case RowGroup::baseline: return "baseline";
        case RowGroup::prompt: return "prompt";
        case RowGroup::average: return "average";
    }
    return "?";
}

inline RowGroup parse_group(std::string_view s) {
    for (auto g : {RowGroup::ml, RowGroup::baseline, RowGroup::prompt, RowGroup::average}) {
        if (s == group_name(g)) return g;
    }
    throw ValidationError("unknown row group '" + std::string(s) + "'");
}

inline nlohmann::json to_json(const MetricsRow& m) {
    return {{"precision", m.precision}, {"recall", m.recall},   {"f1", m.f1},
            {"accuracy", m.accuracy},   {"fp_cost", m.fp_cost}, {"fn_cost", m.fn_cost},
            {"cost_sensitive_accuracy", m.cost_sensitive_accuracy}};
}

inline MetricsRow metrics_from_json(const nlohmann::json& j) {
    return {j.at("precision").get<double>(), j.at("recall").get<double>(),  j.at("f1").get<double>(),
            j.at("accuracy").get<double>(),  j.at("fp_cost").get<double>(), j.at("fn_cost").get<double>(),
            j.at("cost_sensitive_accuracy").get<double>()};
}

inline nlohmann::json to_json(const ReportRow& r) {
    return {{"model", r.model},
            {"dk_type", r.dk_type},
            {"dk_source", r.dk_source},
            {"n_ex", r.n_ex ? nlohmann::json(*r.n_ex) : nlohmann::json(nullptr)},
            {"group", group_name(r.group)},
            {"metrics", to_json(r.metrics)}};
}

inline ReportRow report_row_from_json(const nlohmann::json& j) {
    ReportRow r;
    r.model = j.at("model").get<std::string>();
    r.dk_type = j.value("dk_type", std::string{});
    r.dk_source = j.value("dk_source", std::string{});
    if (j.contains("n_ex") && !j["n_ex"].is_null()) r.n_ex = j["n_ex"].get<std::size_t>();
    r.group = parse_group(j.at("group").get<std::string>());
    r.metrics = metrics_from_json(j.at("metrics"));
    return r;
}

inline nlohmann::json to_json(const ReportTable& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows) rows.push_back(to_json(r));
    return {{"rows", rows}};
}

inline ReportTable report_from_json(const nlohmann::json& j) {
    ReportTable t;
    for (const auto& r : j.at("rows")) t.rows.push_back(report_row_from_json(r));
    return t;
}

}  // namespace healthprompt
