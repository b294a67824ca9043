#include <gtest/gtest.h>

#include "healthprompt/llm/cache.hpp"
#include "healthprompt/llm/mock.hpp"
#include "healthprompt/llm/sha256.hpp"
#include "healthprompt/llm/verdict.hpp"
#include "support/fixtures.hpp"

using namespace healthprompt;
using namespace healthprompt::llm;
namespace ts = healthprompt::test_support;

TEST(ParseLabel, Examples) {
    EXPECT_EQ(parse_label("1").label, 1);
    EXPECT_EQ(parse_label("0").label, 0);
    EXPECT_EQ(parse_label("The answer is 1.").label, 1);
    EXPECT_EQ(parse_label("<Answer>: 0").label, 0);
    EXPECT_EQ(parse_label("Risk level 10 of 100, so 0").label, 0);
    EXPECT_EQ(parse_label("1 or 0").label, 1);
    EXPECT_FALSE(parse_label("").parseable());
    EXPECT_FALSE(parse_label("high risk").parseable());
    EXPECT_FALSE(parse_label("2").parseable());
    EXPECT_FALSE(parse_label("101").parseable());
    EXPECT_EQ(parse_label("x").raw, "x");
}

// Randomized: the result is the first 0/1 with no digit neighbour, checked
// against a scan over a character-class split.
TEST(ParseLabelProperty, AgreesWithTokenScan) {
    const std::string alphabet = "0123 a.:\n1";
    Rng rng = make_rng(12);
    for (int trial = 0; trial < 2000; ++trial) {
        std::string s;
        const auto len = uniform_int(rng, 0, 12);
        for (int i = 0; i < len; ++i) s += alphabet[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(alphabet.size()) - 1))];
        std::optional<int> expect;
        std::size_t i = 0;
        while (i < s.size() && !expect) {
            if (std::isdigit(static_cast<unsigned char>(s[i]))) {
                std::size_t j = i;
                while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
                if (j - i == 1 && (s[i] == '0' || s[i] == '1')) expect = s[i] - '0';
                i = j;
            } else {
                ++i;
            }
        }
        ASSERT_EQ(parse_label(s).label, expect) << '"' << s << '"';
    }
}

TEST(Sha256, MatchesIndependentDigests) {
    // Reference digests of "abc\0" and "gpt-3.5-turbo\0hello\0" from an
    // independent implementation.
    EXPECT_EQ(sha256_hex(std::string("abc")), "dc1114cd074914bd872cc1f9a23ec910ea2203bc79779ab2e17da25782a624fc");
    EXPECT_EQ(prompt_hash("hello", "gpt-3.5-turbo"), "4ade641a105eab5317a2892b41ecd1b7fe5feb751f7c29dfa013606b1d4d0da9");
    EXPECT_NE(sha256_hex(std::string("ab"), std::string("c")), sha256_hex(std::string("a"), std::string("bc")));
    EXPECT_NE(prompt_hash("hello", "gpt-4"), prompt_hash("hello", "gpt-3.5-turbo"));
}

TEST(CompletionCache, RoundTripThroughFile) {
    const auto path = std::filesystem::temp_directory_path() / "hp_cache_test.jsonl";
    std::filesystem::remove(path);
    {
        CompletionCache c(path);
        EXPECT_EQ(c.size(), 0u);
        c.put({"h1", "m", "1", 100, 1});
        c.put({"h2", "m", "no idea", 101, 3});
        c.put({"h1", "m", "0", 102, 2});  // later line wins
    }
    CompletionCache back(path);
    EXPECT_EQ(back.size(), 2u);
    ASSERT_TRUE(back.find("h1"));
    EXPECT_EQ(back.find("h1")->raw_response, "0");
    EXPECT_EQ(back.find("h2")->attempt_count, 3u);
    EXPECT_FALSE(back.find("h3"));
    std::filesystem::remove(path);
}

TEST(CompletionCache, CorruptLineReported) {
    const auto path = std::filesystem::temp_directory_path() / "hp_cache_bad.jsonl";
    {
        std::ofstream out(path);
        out << R"({"prompt_hash":"a","model_name":"m","raw_response":"1"})" << "\n{not json\n";
    }
    try {
        CompletionCache c(path);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST(CompletionCache, InMemoryWhenPathEmpty) {
    CompletionCache c;
    c.put({"k", "m", "1", 0, 1});
    EXPECT_EQ(c.find("k")->raw_response, "1");
}

TEST(Mocks, OracleAnswersTruth) {
    const Prompt p = assemble_prompt(heart_schema(), {}, {}, ts::paper_query());
    OracleMock m({0, 1});
    EXPECT_EQ(m.complete({p, 1}).text, "1");
    EXPECT_EQ(m.complete({p, 0}).text, "0");
    EXPECT_THROW(m.complete({p, 2}), ValidationError);
}

TEST(Mocks, ScriptedReplaysInOrder) {
    const Prompt p = assemble_prompt(heart_schema(), {}, {}, ts::paper_query());
    ScriptedMock m({"1", "maybe"});
    EXPECT_TRUE(m.sequential());
    EXPECT_EQ(m.complete({p, 5}).text, "1");
    EXPECT_EQ(m.remaining(), 1u);
    EXPECT_EQ(m.complete({p, 0}).text, "maybe");
    EXPECT_THROW(m.complete({p, 0}), Error);
}

TEST(Mocks, RuleReadsQueryLine) {
    auto q = ts::paper_query();
    std::vector<Example> ex = {{std::vector<double>(13, 5.0), 1}};
    PromptSpec spec;
    spec.n_ex = 1;
    q[9] = 0.9;
    const auto low = assemble_prompt(heart_schema(), spec, ex, q);
    EXPECT_EQ(query_value(low, "oldpeak"), 0.9);  // example values are not consulted
    EXPECT_EQ(query_value(low, "thal"), 6.2);
    EXPECT_FALSE(query_value(low, "nope"));
    RuleMock m("oldpeak", 1.0);
    EXPECT_EQ(m.complete({low, 0}).text, "0");
    q[9] = 1.0;
    EXPECT_EQ(m.complete({assemble_prompt(heart_schema(), spec, ex, q), 0}).text, "1");
    RuleMock missing("cholesterol", 1.0);
    EXPECT_THROW(missing.complete({low, 0}), ValidationError);
}
