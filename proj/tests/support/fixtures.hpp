#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "healthprompt/ml/importance.hpp"
#include "healthprompt/prompt.hpp"
#include "healthprompt/schema.hpp"

#ifndef HEALTHPROMPT_TEST_DATA_DIR
#error "HEALTHPROMPT_TEST_DATA_DIR must point at tests/data"
#endif

namespace healthprompt::test_support {

inline std::filesystem::path data_dir() { return HEALTHPROMPT_TEST_DATA_DIR; }

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("missing test resource " + p.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline std::string golden(const std::string& name) { return read_file(data_dir() / "golden" / name); }

// Published importance orders for the three DK sources.
inline const std::vector<std::string> kRfOrder = {"cp",    "ca",  "chol",  "oldpeak",  "exang", "thalach", "thal",
                                                  "age",   "slope", "trestbps", "sex", "fbs",     "restecg"};
inline const std::vector<std::string> kLrOrder = {"cp",      "oldpeak", "ca",  "exang", "sex",   "thal",   "chol",
                                                  "thalach", "fbs",     "age", "slope", "restecg", "trestbps"};
inline const std::vector<std::string> kXgbOrder = {"exang", "cp",      "sex", "ca",       "oldpeak", "fbs",    "slope",
                                                   "thal",  "chol", "thalach", "age", "trestbps", "restecg"};

inline ImportanceRanking rf_ranking() { return ranking_from_order(kRfOrder, heart_schema(), "RF"); }
inline ImportanceRanking lr_ranking() { return ranking_from_order(kLrOrder, heart_schema(), "LR"); }
inline ImportanceRanking xgb_ranking() { return ranking_from_order(kXgbOrder, heart_schema(), "GBT"); }

// The three worked examples and the final query of the published prompt.
inline std::vector<Example> paper_examples() {
    return {{{57, 1, 2, 140, 265, 0, 1, 145, 1, 1, 2, 0.2, 5.8}, 1},
            {{48, 1, 2, 130, 245, 0, 0, 160, 0, 0, 1.4, 0.2, 4.6}, 0},
            {{44, 1, 4, 112, 290, 0, 2, 153, 0, 0, 1, 1, 3}, 1}};
}

inline std::vector<double> paper_query() { return {46, 1, 3, 150, 163, 0.2, 0, 116, 0, 0, 2.2, 0.4, 6.2}; }

}  // namespace healthprompt::test_support
