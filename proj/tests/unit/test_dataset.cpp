#include <gtest/gtest.h>

#include <sstream>

#include "healthprompt/dataset.hpp"
#include "support/fixtures.hpp"

using namespace healthprompt;

namespace {

RawDataset parse(const std::string& text) {
    std::istringstream in(text);
    return parse_csv(in, heart_schema());
}

const std::string kHeader = "age,sex,cp,trestbps,chol,fbs,restecg,thalach,exang,oldpeak,slope,ca,thal,num\n";

}  // namespace

TEST(Schema, CanonicalOrderAndDescriptions) {
    const auto& s = heart_schema();
    ASSERT_EQ(s.size(), 13u);
    const std::vector<std::string> expected = {"age",     "sex",   "cp",      "trestbps", "chol", "fbs", "restecg",
                                               "thalach", "exang", "oldpeak", "slope",    "ca",   "thal"};
    EXPECT_EQ(s.names(), expected);
    EXPECT_EQ(s[2].description,
              "Cp: Chest pain type (1 = typical angina, 2 = atypical angina, 3 = non-anginal pain, 4 = asymptomatic)");
    EXPECT_EQ(s.require_index("thal"), 12u);
    EXPECT_THROW(s.require_index("bmi"), ValidationError);
}

TEST(ParseCsv, QuestionMarksBecomeMissing) {
    const auto raw = parse("57,1,2,140,265,0,1,145,1,1,2,?,?,1\n");
    ASSERT_EQ(raw.n_rows(), 1u);
    EXPECT_EQ(raw.rows[0][0], 57.0);
    EXPECT_FALSE(raw.rows[0][11].has_value());
    EXPECT_FALSE(raw.rows[0][12].has_value());
    EXPECT_EQ(raw.targets[0], 1);
}

TEST(ParseCsv, EmptyFieldIsMissing) {
    const auto raw = parse("57,1,2,,265,0,1,145,1,1,2,0,3,0\n");
    EXPECT_FALSE(raw.rows[0][3].has_value());
    EXPECT_EQ(raw.rows[0][4], 265.0);
}

TEST(ParseCsv, HeaderOnlyGivesEmptyDataset) {
    EXPECT_EQ(parse(kHeader).n_rows(), 0u);
    EXPECT_EQ(parse("").n_rows(), 0u);
}

TEST(ParseCsv, WrongArityNamesLine) {
    try {
        parse(kHeader + "57,1,2,140,265,0,1,145,1,1,2,0,3,1\n57,1,2\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
}

TEST(ParseCsv, NonNumericCellNamesLineAndColumn) {
    try {
        parse("57,1,2,140,abc,0,1,145,1,1,2,0,3,1\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 1u);
        EXPECT_NE(std::string(e.what()).find("chol"), std::string::npos);
    }
}

TEST(ParseCsv, HeaderMismatchRejected) {
    EXPECT_THROW(parse("age,sex,cp,trestbps,chol,fbs,restecg,thalach,exang,oldpeak,slope,thal,ca,num\n"), ParseError);
}

TEST(LoadCsv, ErrorCarriesFileName) {
    const auto path = std::filesystem::temp_directory_path() / "hp_bad_rows.csv";
    {
        std::ofstream out(path);
        out << kHeader << "1,2,3\n";
    }
    try {
        load_csv(path, heart_schema());
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("hp_bad_rows.csv: line 2"), std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST(LoadCsv, ClevelandFixture) {
    const auto raw = load_csv(test_support::data_dir() / "cleveland.csv", heart_schema());
    EXPECT_EQ(raw.n_rows(), 303u);
    const auto s = stats(raw);
    EXPECT_EQ(s.n_total, 303u);
    EXPECT_EQ(s.n_with_missing, 6u);
    EXPECT_GT(s.male_fraction, 0.6);
    EXPECT_LT(s.male_fraction, 0.75);
}

TEST(LoadUci, MissingDirectoryIsIoError) {
    EXPECT_THROW(load_uci_sites("/nonexistent/uci"), IoError);
}

TEST(Binarize, Examples) {
    RawDataset raw{heart_schema(), std::vector<std::vector<Cell>>(5, std::vector<Cell>(13, 1.0)), {0, 1, 2, 3, 4}};
    const auto b = binarize_target(raw);
    EXPECT_EQ(b.targets, (std::vector<int>{0, 1, 1, 1, 1}));
    EXPECT_EQ(binarize_target(b).targets, b.targets);  // idempotent
}

TEST(Binarize, OutOfRangeTarget) {
    RawDataset raw{heart_schema(), {std::vector<Cell>(13, 1.0)}, {5}};
    EXPECT_THROW(binarize_target(raw), ValidationError);
    raw.targets = {-1};
    EXPECT_THROW(binarize_target(raw), ValidationError);
}

TEST(Stats, SingleCompleteRow) {
    const auto s = stats(parse("57,1,2,140,265,0,1,145,1,1,2,0,3,1\n"));
    EXPECT_EQ(s.n_total, 1u);
    EXPECT_EQ(s.n_with_missing, 0u);
    EXPECT_EQ(s.male_fraction, 1.0);
    EXPECT_EQ(s.prevalence_male, 1.0);
    EXPECT_EQ(s.prevalence_female, 0.0);
}

TEST(Stats, RatiosAreFractions) {
    const auto s = stats(parse("57,1,2,140,265,0,1,145,1,1,2,?,3,1\n40,0,2,140,265,0,1,145,1,1,2,0,3,0\n"
                               "50,1,2,140,265,0,1,145,1,1,2,0,3,0\n60,0,2,140,265,0,1,145,1,1,2,0,3,2\n"));
    EXPECT_EQ(s.n_with_missing, 1u);
    EXPECT_DOUBLE_EQ(s.male_fraction, 0.5);
    EXPECT_DOUBLE_EQ(s.prevalence_male, 0.5);
    EXPECT_DOUBLE_EQ(s.prevalence_female, 0.5);
}

TEST(WriteCsv, RoundTrip) {
    Dataset ds{heart_schema(), {{57, 1, 2, 140, 265, 0, 1, 145, 1, 1, 2, 0.2, 5.8}, {44, 0, 4, 112, 290, 0, 2, 153, 0, 0, 1, 1, 3}}, {1, 0}};
    const auto path = std::filesystem::temp_directory_path() / "hp_roundtrip.csv";
    write_csv(path, ds);
    const auto back = load_dataset_csv(path, heart_schema());
    EXPECT_EQ(back.rows, ds.rows);
    EXPECT_EQ(back.labels, ds.labels);
    std::filesystem::remove(path);
}

TEST(Validate, RejectsBadLabelsAndArity) {
    Dataset ds{heart_schema(), {std::vector<double>(13, 0.0)}, {2}};
    EXPECT_THROW(validate(ds), ValidationError);
    ds.labels = {1};
    ds.rows[0].pop_back();
    EXPECT_THROW(validate(ds), ValidationError);
}
