#include <gtest/gtest.h>

#include "healthprompt/dk.hpp"
#include "support/fixtures.hpp"

using namespace healthprompt;
namespace ts = healthprompt::test_support;

TEST(DomainKnowledge, MatchesPublishedTexts) {
    const auto& s = heart_schema();
    const std::vector<ImportanceRanking> sources = {ts::rf_ranking(), ts::lr_ranking(), ts::xgb_ranking()};
    int n = 1;
    for (const auto& r : sources) {
        for (auto kind : {DkKind::mlfi, DkKind::mlfi_ord}) {
            const auto dk = render_dk(r, kind, s);
            EXPECT_EQ(dk.kind, kind);
            EXPECT_EQ(dk.text, ts::golden("dk" + std::to_string(n) + ".txt")) << "dk" << n;
            ++n;
        }
    }
}

TEST(DomainKnowledge, SourceTags) {
    EXPECT_EQ(source_tag(ml::Family::RF), "randomforestclassifier");
    EXPECT_EQ(source_tag(ml::Family::LR), "logisticregression");
    EXPECT_EQ(source_tag(ml::Family::GBT), "xgbclassifier");
    EXPECT_EQ(source_tag(ml::Family::ADA), "adaboostclassifier");
    EXPECT_EQ(source_tag(ml::Family::KNN), "kneighborsclassifier");
    EXPECT_EQ(source_tag(ml::Family::MLP), "mlpclassifier");
    EXPECT_EQ(source_tag("XGB"), "xgbclassifier");
    EXPECT_EQ(source_tag("SomeModel"), "somemodel");
}

TEST(DomainKnowledge, NoneIsEmpty) {
    const auto dk = render_dk(ts::rf_ranking(), DkKind::none, heart_schema());
    EXPECT_EQ(dk.kind, DkKind::none);
    EXPECT_TRUE(dk.text.empty());
}

TEST(DomainKnowledge, ListJoining) {
    EXPECT_EQ(detail::join_with_and({"a"}), "a");
    EXPECT_EQ(detail::join_with_and({"a", "b"}), "a and b");
    EXPECT_EQ(detail::join_with_and({"a", "b", "c"}), "a, b, and c");
}

TEST(DomainKnowledge, CustomCounts) {
    const auto dk = render_dk(ts::rf_ranking(), DkKind::mlfi, heart_schema(), {3, 1});
    EXPECT_NE(dk.text.find("include cp, ca, and chol. Features like restecg have"), std::string::npos);
    EXPECT_THROW(render_dk(ts::rf_ranking(), DkKind::mlfi, heart_schema(), {12, 2}), ValidationError);
    EXPECT_THROW(render_dk(ts::rf_ranking(), DkKind::mlfi, heart_schema(), {6, 0}), ValidationError);
}

TEST(DomainKnowledge, RankingMustCoverSchema) {
    auto r = ts::rf_ranking();
    r.entries.pop_back();
    EXPECT_THROW(render_dk(r, DkKind::mlfi_ord, heart_schema()), ValidationError);
    auto dup = ts::rf_ranking();
    dup.entries[1].feature = dup.entries[0].feature;
    EXPECT_THROW(render_dk(dup, DkKind::mlfi, heart_schema()), ValidationError);
}

// Any permutation: MLFI names exactly the first six and last two, and the
// ordered text lists every feature once in ranking order.
TEST(DomainKnowledgeProperty, RandomPermutations) {
    const auto& s = heart_schema();
    Rng rng = make_rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        auto names = s.names();
        shuffle(names, rng);
        const auto r = ranking_from_order(names, s, "RF");
        const auto mlfi = render_dk(r, DkKind::mlfi, s).text;
        std::string top;
        for (int i = 0; i < 5; ++i) top += names[static_cast<std::size_t>(i)] + ", ";
        top += "and " + names[5] + ".";
        ASSERT_NE(mlfi.find(top), std::string::npos) << mlfi;
        ASSERT_NE(mlfi.find("Features like " + names[11] + " and " + names[12] + " have"), std::string::npos);

        const auto ord = render_dk(r, DkKind::mlfi_ord, s).text;
        std::size_t pos = 0;
        for (const auto& n : names) {
            const auto at = ord.find(" " + n + (n == names.back() ? "" : ","), pos);
            ASSERT_NE(at, std::string::npos) << n << " in " << ord;
            pos = at + 1;
        }
        ASSERT_EQ(ord.substr(ord.size() - names.back().size() - 12), "and finally " + names.back());
    }
}

TEST(DomainKnowledge, SlotsAndJson) {
    const auto slots = dk_slots();
    ASSERT_EQ(slots.size(), 7u);
    EXPECT_EQ(slots[0].id, "dk0");
    EXPECT_EQ(slots[0].kind, DkKind::none);
    EXPECT_EQ(slots[5].id, "dk5");
    EXPECT_EQ(slots[5].kind, DkKind::mlfi);
    EXPECT_EQ(slots[5].source, ml::Family::GBT);
    EXPECT_EQ(slots[6].kind, DkKind::mlfi_ord);

    EXPECT_EQ(dk_kind_label(DkKind::mlfi_ord), "MLFI-ord");
    EXPECT_EQ(parse_dk_kind("MLFI"), DkKind::mlfi);
    EXPECT_THROW(parse_dk_kind("other"), ValidationError);
    const auto dk = render_dk(ts::lr_ranking(), DkKind::mlfi, heart_schema());
    EXPECT_EQ(dk_from_json(to_json(dk)), dk);
}
