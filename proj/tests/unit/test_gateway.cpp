#include <gtest/gtest.h>

#include "healthprompt/llm/gateway.hpp"
#include "healthprompt/preprocess.hpp"
#include "support/fixtures.hpp"
#include "support/stub_server.hpp"
#include "support/synthetic.hpp"

using namespace healthprompt;
using namespace healthprompt::llm;
namespace ts = healthprompt::test_support;

namespace {

// Replays a list of statuses; 200 replies answer "1".
class FakeTransport : public Transport {
public:
    explicit FakeTransport(std::vector<int> statuses) : statuses_(std::move(statuses)) {}
    HttpResult post_json(const std::string&, const std::string&, const Headers&) override {
        const int s = calls < statuses_.size() ? statuses_[calls] : 200;
        ++calls;
        if (s == 200) return {200, R"({"choices":[{"message":{"content":"1"}}]})", {}};
        return {s, "{}", s == 0 ? "connection refused" : ""};
    }
    std::size_t calls = 0;

private:
    std::vector<int> statuses_;
};

struct Recorded {
    std::vector<std::chrono::milliseconds> sleeps;
    Sleeper sleeper() {
        return [this](std::chrono::milliseconds d) { sleeps.push_back(d); };
    }
};

LlmConfig config_for(const std::string& url) {
    LlmConfig c;
    c.base_url = url;
    c.backoff_base = std::chrono::milliseconds(1);
    c.timeout = std::chrono::milliseconds(5000);
    c.api_key_env = "HEALTHPROMPT_TEST_UNSET_KEY";
    return c;
}

std::shared_ptr<Gateway> stub_gateway(const ts::StubServer& s, std::shared_ptr<CompletionCache> cache = {},
                                      std::size_t max_retries = 5) {
    auto cfg = config_for(s.base_url());
    cfg.max_retries = max_retries;
    auto g = std::make_shared<Gateway>(cfg, std::make_shared<HttpTransport>(cfg.base_url, cfg.timeout), std::move(cache),
                                       [](std::chrono::milliseconds) {});
    g->set_api_key("test-key");
    return g;
}

const Dataset& small_test() {
    static const Dataset d = [] {
        auto ds = knn_impute(binarize_target(ts::synthetic_heart(9, {40, 0.5, true})));
        return ds;
    }();
    return d;
}

}  // namespace

TEST(Gateway, RetriesAfterRateLimit) {
    ts::StubServer s([](std::size_t call, const std::string&) {
        return call == 0 ? ts::StubReply{429, "{}"} : ts::StubReply{200, "1"};
    });
    auto g = stub_gateway(s);
    const auto c = g->complete_text("hello");
    EXPECT_EQ(c.text, "1");
    EXPECT_EQ(c.attempts, 2u);
    EXPECT_FALSE(c.from_cache);
    EXPECT_EQ(s.calls(), 2u);
    EXPECT_EQ(s.auth_headers().front(), "Bearer test-key");
    const auto body = s.bodies().front();
    EXPECT_EQ(body["model"], "gpt-3.5-turbo");
    EXPECT_EQ(body["temperature"], 0.0);
    ASSERT_EQ(body["messages"].size(), 1u);
    EXPECT_EQ(body["messages"][0]["role"], "user");
    EXPECT_EQ(body["messages"][0]["content"], "hello");
}

TEST(Gateway, UnauthorizedFailsWithoutRetry) {
    ts::StubServer s([](std::size_t, const std::string&) { return ts::StubReply{401, R"({"error":"bad key"})"}; });
    auto g = stub_gateway(s);
    EXPECT_THROW(g->complete_text("hello"), AuthError);
    EXPECT_EQ(s.calls(), 1u);
}

TEST(Gateway, MissingKeyIsAuthError) {
    auto t = std::make_shared<FakeTransport>(std::vector<int>{});
    Gateway g(config_for("http://unused"), t, nullptr, [](auto) {});
    EXPECT_THROW(g.complete_text("x"), AuthError);
    EXPECT_EQ(t->calls, 0u);
}

TEST(Gateway, OtherClientErrorsAreProtocolErrors) {
    auto t = std::make_shared<FakeTransport>(std::vector<int>{400});
    Gateway g(config_for("http://unused"), t, nullptr, [](auto) {});
    g.set_api_key("k");
    EXPECT_THROW(g.complete_text("x"), ProtocolError);
    EXPECT_EQ(t->calls, 1u);
}

TEST(Gateway, MalformedReplyIsProtocolError) {
    EXPECT_THROW(response_content("not json"), ProtocolError);
    EXPECT_THROW(response_content(R"({"choices":[]})"), ProtocolError);
    EXPECT_THROW(response_content(R"({"choices":[{"message":{}}]})"), ProtocolError);
    EXPECT_EQ(response_content(R"({"choices":[{"message":{"content":"0"}}]})"), "0");
}

TEST(Gateway, ExhaustedRetriesRaiseTransportError) {
    auto t = std::make_shared<FakeTransport>(std::vector<int>(10, 503));
    auto cfg = config_for("http://unused");
    cfg.max_retries = 3;
    Recorded rec;
    Gateway g(cfg, t, nullptr, rec.sleeper());
    g.set_api_key("k");
    EXPECT_THROW(g.complete_text("x"), TransportError);
    EXPECT_EQ(t->calls, 4u);
    EXPECT_EQ(rec.sleeps.size(), 3u);
}

TEST(Gateway, TransientStatusesRetried) {
    for (int status : {0, 408, 429, 500, 502, 503}) {
        auto t = std::make_shared<FakeTransport>(std::vector<int>{status, status});
        Gateway g(config_for("http://unused"), t, nullptr, [](auto) {});
        g.set_api_key("k");
        EXPECT_EQ(g.complete_text("x").attempts, 3u) << status;
    }
}

// Every jittered delay lies in [0, base * 2^attempt] and the sequence is a
// function of the jitter seed.
TEST(GatewayProperty, BackoffWithinEnvelope) {
    EXPECT_EQ(backoff_envelope(std::chrono::milliseconds(500), 0).count(), 500);
    EXPECT_EQ(backoff_envelope(std::chrono::milliseconds(500), 3).count(), 4000);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto cfg = config_for("http://unused");
        cfg.backoff_base = std::chrono::milliseconds(100);
        cfg.max_retries = 6;
        cfg.jitter_seed = seed;
        std::vector<std::chrono::milliseconds> first;
        for (int run = 0; run < 2; ++run) {
            Recorded rec;
            Gateway g(cfg, std::make_shared<FakeTransport>(std::vector<int>(6, 429)), nullptr, rec.sleeper());
            g.set_api_key("k");
            EXPECT_EQ(g.complete_text("prompt " + std::to_string(seed)).attempts, 7u);
            ASSERT_EQ(rec.sleeps.size(), 6u);
            for (std::size_t a = 0; a < rec.sleeps.size(); ++a) {
                ASSERT_GE(rec.sleeps[a].count(), 0);
                ASSERT_LE(rec.sleeps[a], backoff_envelope(cfg.backoff_base, a));
            }
            if (run == 0) first = rec.sleeps;
            else EXPECT_EQ(rec.sleeps, first);
        }
    }
}

TEST(Gateway, WarmCacheMakesNoCalls) {
    const auto path = std::filesystem::temp_directory_path() / "hp_gateway_cache.jsonl";
    std::filesystem::remove(path);
    ts::StubServer s([](std::size_t, const std::string& prompt) {
        return ts::StubReply{200, prompt.find("oldpeak: 0,") != std::string::npos ? "0" : "1"};
    });
    const auto& test = small_test();
    PromptSpec spec;
    BatchResult cold, warm;
    {
        auto g = stub_gateway(s, std::make_shared<CompletionCache>(path));
        cold = classify_batch(test, spec, {}, *g, {4});
    }
    const auto calls = s.calls();
    EXPECT_EQ(calls, test.size());
    {
        auto g = stub_gateway(s, std::make_shared<CompletionCache>(path));
        warm = classify_batch(test, spec, {}, *g, {4});
        EXPECT_EQ(g->network_calls(), 0u);
    }
    EXPECT_EQ(s.calls(), calls);
    EXPECT_EQ(warm.labels(), cold.labels());
    for (std::size_t i = 0; i < test.size(); ++i) EXPECT_EQ(warm.records[i].prompt_hash, cold.records[i].prompt_hash);

    // Without a transport, a warm cache still answers everything.
    Gateway offline(config_for("http://unused"), nullptr, std::make_shared<CompletionCache>(path));
    EXPECT_EQ(classify_batch(test, spec, {}, offline).labels(), cold.labels());
    std::filesystem::remove(path);
}

TEST(Gateway, ConcurrencyDoesNotChangeResults) {
    ts::StubServer s([](std::size_t, const std::string& prompt) {
        return ts::StubReply{200, std::hash<std::string>{}(prompt) % 3 == 0 ? "0" : "The answer is 1"};
    });
    s.set_delay(std::chrono::milliseconds(5));
    const auto& test = small_test();
    PromptSpec spec;
    auto g1 = stub_gateway(s);
    const auto a = classify_batch(test, spec, {}, *g1, {1});
    EXPECT_EQ(s.peak_in_flight(), 1);
    auto g8 = stub_gateway(s);
    const auto b = classify_batch(test, spec, {}, *g8, {8});
    EXPECT_LE(s.peak_in_flight(), 8);
    EXPECT_GT(s.peak_in_flight(), 1);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        EXPECT_EQ(a.records[i].index, i);
        EXPECT_EQ(a.records[i].verdict, b.records[i].verdict);
        EXPECT_EQ(a.records[i].prompt_hash, b.records[i].prompt_hash);
    }
}

TEST(ClassifyBatch, FallbackPolicies) {
    const auto& test = small_test();
    PromptSpec spec;
    std::vector<std::string> replies(test.size(), "unsure");
    replies[0] = "0";
    {
        ScriptedMock m(replies);
        const auto r = classify_batch(test, spec, {}, m, {8, FallbackPolicy::positive});
        EXPECT_EQ(r.n_unparseable, test.size() - 1);
        EXPECT_EQ(r.records[0].label, 0);
        EXPECT_FALSE(r.records[0].fallback);
        EXPECT_EQ(r.records[1].label, 1);
        EXPECT_TRUE(r.records[1].fallback);
    }
    {
        ScriptedMock m(replies);
        EXPECT_EQ(classify_batch(test, spec, {}, m, {8, FallbackPolicy::majority, 0}).records[1].label, 0);
    }
    {
        ScriptedMock m(replies);
        EXPECT_THROW(classify_batch(test, spec, {}, m, {8, FallbackPolicy::error}), ProtocolError);
    }
    EXPECT_EQ(parse_fallback("majority"), FallbackPolicy::majority);
    EXPECT_THROW(parse_fallback("coin"), ValidationError);
}

TEST(ClassifyBatch, TransportFailureAborts) {
    auto t = std::make_shared<FakeTransport>(std::vector<int>(100, 503));
    auto cfg = config_for("http://unused");
    cfg.max_retries = 1;
    Gateway g(cfg, t, nullptr, [](auto) {});
    g.set_api_key("k");
    try {
        classify_batch(small_test(), {}, {}, g, {1});
        FAIL() << "expected BatchAborted";
    } catch (const BatchAborted& e) {
        EXPECT_LT(e.completed(), small_test().size());
    }
}

TEST(LlmConfig, JsonRoundTripAndValidation) {
    LlmConfig c;
    c.system_message = "be brief";
    c.max_in_flight = 3;
    const auto back = llm_config_from_json(to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));
    c.max_in_flight = 0;
    EXPECT_THROW(c.validate(), ValidationError);
    const auto body = nlohmann::json::parse(request_body(back, "q"));
    EXPECT_EQ(body["messages"][0]["role"], "system");
    EXPECT_EQ(body["messages"][1]["content"], "q");
}
