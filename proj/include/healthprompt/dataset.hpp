#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "healthprompt/error.hpp"
#include "healthprompt/format.hpp"
#include "healthprompt/schema.hpp"

namespace healthprompt {

using Cell = std::optional<double>;

// Records as read from disk: cells may be absent, target is the raw 0-4 code
// (or already 0/1 after binarize_target).
struct RawDataset {
    FeatureSchema schema;
    std::vector<std::vector<Cell>> rows;
    std::vector<int> targets;

    std::size_t n_rows() const noexcept { return rows.size(); }
};

// Fully numeric records with binary labels.
struct Dataset {
    FeatureSchema schema;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;

    std::size_t size() const noexcept { return rows.size(); }
    std::size_t n_features() const noexcept { return schema.size(); }
    std::span<const double> row(std::size_t i) const { return rows.at(i); }

    std::size_t count_label(int label) const {
        std::size_t n = 0;
        for (int y : labels) n += (y == label);
        return n;
    }

    Dataset subset(std::span<const std::size_t> indices) const {
        Dataset out{schema, {}, {}};
        out.rows.reserve(indices.size());
        out.labels.reserve(indices.size());
        for (auto i : indices) {
            out.rows.push_back(rows.at(i));
            out.labels.push_back(labels.at(i));
        }
        return out;
    }
};

struct DatasetStats {
    std::size_t n_total = 0;
    std::size_t n_with_missing = 0;
    double male_fraction = 0.0;
    double prevalence_male = 0.0;
    double prevalence_female = 0.0;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline bool is_missing_token(std::string_view s) {
    s = trim(s);
    return s.empty() || s == "?";
}

}  // namespace detail

// Parses comma-separated records: the schema's features in order followed by
// the target column. A header line is optional; "?" and empty fields are
// missing cells.
inline RawDataset parse_csv(std::istream& in, const FeatureSchema& schema) {
    RawDataset out{schema, {}, {}};
    const std::size_t arity = schema.size() + 1;
    std::string line;
    std::size_t line_no = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = detail::split_fields(line);
        if (first_content) {
            first_content = false;
            double probe = 0.0;
            const auto head = trim(fields.front());
            if (!detail::is_missing_token(head) && !parse_double(head, probe)) {
                if (fields.size() != arity) {
                    throw ParseError(line_no, "header has " + std::to_string(fields.size()) +
                                                  " columns, expected " + std::to_string(arity));
                }
                for (std::size_t c = 0; c < schema.size(); ++c) {
                    if (trim(fields[c]) != schema[c].name) {
                        throw ParseError(line_no, "header column " + std::to_string(c + 1) + " is '" +
                                                      std::string(trim(fields[c])) + "', expected '" +
                                                      schema[c].name + "'");
                    }
                }
                continue;
            }
        }
        if (fields.size() != arity) {
            throw ParseError(line_no, "expected " + std::to_string(arity) + " fields, found " +
                                          std::to_string(fields.size()));
        }
        std::vector<Cell> row(schema.size());
        for (std::size_t c = 0; c < schema.size(); ++c) {
            if (detail::is_missing_token(fields[c])) continue;
            double v = 0.0;
            if (!parse_double(fields[c], v)) {
                throw ParseError(line_no, "column '" + schema[c].name + "' is not numeric: '" +
                                              std::string(trim(fields[c])) + "'");
            }
            row[c] = v;
        }
        double t = 0.0;
        if (!parse_double(fields.back(), t) || t != static_cast<double>(static_cast<int>(t))) {
            throw ParseError(line_no, "target is not an integer: '" + std::string(trim(fields.back())) + "'");
        }
        out.rows.push_back(std::move(row));
        out.targets.push_back(static_cast<int>(t));
    }
    return out;
}

inline RawDataset load_csv(const std::filesystem::path& path, const FeatureSchema& schema) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return parse_csv(in, schema);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), e.detail(), path.filename().string());
    }
}

// The four site files of the UCI heart-disease collection, in the order they
// are concatenated.
inline constexpr std::array<std::string_view, 4> kUciSiteFiles = {
    "processed.cleveland.data",
    "processed.hungarian.data",
    "processed.switzerland.data",
    "processed.va.data",
};

inline RawDataset concat(std::span<const RawDataset> parts) {
    if (parts.empty()) return {};
    RawDataset out{parts.front().schema, {}, {}};
    for (const auto& p : parts) {
        if (!(p.schema == out.schema)) throw ValidationError("cannot concatenate datasets with different schemas");
        out.rows.insert(out.rows.end(), p.rows.begin(), p.rows.end());
        out.targets.insert(out.targets.end(), p.targets.begin(), p.targets.end());
    }
    return out;
}

inline RawDataset load_uci_sites(const std::filesystem::path& dir) {
    std::vector<RawDataset> parts;
    for (auto name : kUciSiteFiles) parts.push_back(load_csv(dir / name, heart_schema()));
    return concat(parts);
}

// 0 stays 0, 1-4 collapse to 1. Idempotent.
inline RawDataset binarize_target(RawDataset raw) {
    for (std::size_t i = 0; i < raw.targets.size(); ++i) {
        const int t = raw.targets[i];
        if (t < 0 || t > 4) {
            throw ValidationError("row " + std::to_string(i) + ": target " + std::to_string(t) +
                                  " outside 0-4");
        }
        raw.targets[i] = t > 0 ? 1 : 0;
    }
    return raw;
}

inline DatasetStats stats(const RawDataset& raw) {
    DatasetStats s;
    s.n_total = raw.n_rows();
    const auto sex = raw.schema.index_of("sex");
    std::size_t n_sex = 0, n_male = 0, n_female = 0, pos_male = 0, pos_female = 0;
    for (std::size_t i = 0; i < raw.rows.size(); ++i) {
        const auto& row = raw.rows[i];
        bool missing = false;
        for (const auto& c : row) missing = missing || !c.has_value();
        s.n_with_missing += missing;
        if (!sex || !row[*sex]) continue;
        ++n_sex;
        const bool positive = raw.targets[i] > 0;
        if (*row[*sex] == 1.0) {
            ++n_male;
            pos_male += positive;
        } else {
            ++n_female;
            pos_female += positive;
        }
    }
    auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / b; };
    s.male_fraction = ratio(n_male, n_sex);
    s.prevalence_male = ratio(pos_male, n_male);
    s.prevalence_female = ratio(pos_female, n_female);
    return s;
}

// Canonical audit CSV: header, features in schema order, then "num".
inline void write_csv(std::ostream& out, const Dataset& ds) {
    for (const auto& f : ds.schema.features()) out << f.name << ',';
    out << kTargetColumn << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (double v : ds.rows[i]) out << shortest_decimal(v) << ',';
        out << ds.labels[i] << '\n';
    }
}

inline void write_csv(const std::filesystem::path& path, const Dataset& ds) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write_csv(out, ds);
    if (!out) throw IoError("write failed: " + path.string());
}

// Reads a file written by write_csv back into a Dataset.
inline Dataset load_dataset_csv(const std::filesystem::path& path, const FeatureSchema& schema) {
    RawDataset raw = load_csv(path, schema);
    Dataset ds{schema, {}, raw.targets};
    ds.rows.reserve(raw.n_rows());
    for (std::size_t i = 0; i < raw.rows.size(); ++i) {
        std::vector<double> row;
        row.reserve(schema.size());
        for (std::size_t c = 0; c < schema.size(); ++c) {
            if (!raw.rows[i][c]) throw ValidationError(path.string() + ": missing cell in imputed dataset");
            row.push_back(*raw.rows[i][c]);
        }
        if (raw.targets[i] != 0 && raw.targets[i] != 1) throw ValidationError(path.string() + ": label not in {0,1}");
        ds.rows.push_back(std::move(row));
    }
    return ds;
}

// Throws unless every row has schema arity and every label is 0/1.
inline void validate(const Dataset& ds) {
    if (ds.rows.size() != ds.labels.size()) throw ValidationError("row/label count mismatch");
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        if (ds.rows[i].size() != ds.schema.size()) {
            throw ValidationError("row " + std::to_string(i) + " has " + std::to_string(ds.rows[i].size()) +
                                  " values, expected " + std::to_string(ds.schema.size()));
        }
        if (ds.labels[i] != 0 && ds.labels[i] != 1) {
            throw ValidationError("row " + std::to_string(i) + " label is not binary");
        }
    }
}

}  // namespace healthprompt
