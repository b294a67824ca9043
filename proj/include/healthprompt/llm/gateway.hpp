#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "healthprompt/dataset.hpp"
#include "healthprompt/error.hpp"
#include "healthprompt/llm/cache.hpp"
#include "healthprompt/llm/mock.hpp"
#include "healthprompt/llm/sha256.hpp"
#include "healthprompt/llm/transport.hpp"
#include "healthprompt/llm/verdict.hpp"
#include "healthprompt/parallel.hpp"
#include "healthprompt/prompt.hpp"
#include "healthprompt/random.hpp"

namespace healthprompt::llm {

struct LlmConfig {
    std::string base_url = "https://api.openai.com";
    std::string model_name = "gpt-3.5-turbo";
    double temperature = 0.0;
    std::size_t max_retries = 5;
    std::chrono::milliseconds backoff_base{500};
    std::chrono::milliseconds timeout{60000};
    std::size_t max_in_flight = 8;
    std::string api_key_env = "OPENAI_API_KEY";
    std::optional<std::string> system_message;  // off by default
    std::uint64_t jitter_seed = 0;

    void validate() const {
        if (!(temperature >= 0.0)) throw ValidationError("llm: temperature must be >= 0");
        if (max_in_flight < 1) throw ValidationError("llm: max_in_flight must be >= 1");
        if (backoff_base.count() < 0) throw ValidationError("llm: backoff_base must be >= 0");
    }
};

inline nlohmann::json to_json(const LlmConfig& c) {
    nlohmann::json j = {{"base_url", c.base_url},
                        {"model_name", c.model_name},
                        {"temperature", c.temperature},
                        {"max_retries", c.max_retries},
                        {"backoff_base_ms", c.backoff_base.count()},
                        {"timeout_ms", c.timeout.count()},
                        {"max_in_flight", c.max_in_flight},
                        {"api_key_env", c.api_key_env},
                        {"jitter_seed", c.jitter_seed}};
    j["system_message"] = c.system_message ? nlohmann::json(*c.system_message) : nlohmann::json(nullptr);
    return j;
}

inline LlmConfig llm_config_from_json(const nlohmann::json& j) {
    LlmConfig c;
    c.base_url = j.value("base_url", c.base_url);
    c.model_name = j.value("model_name", c.model_name);
    c.temperature = j.value("temperature", c.temperature);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.backoff_base = std::chrono::milliseconds(j.value("backoff_base_ms", c.backoff_base.count()));
    c.timeout = std::chrono::milliseconds(j.value("timeout_ms", c.timeout.count()));
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.jitter_seed = j.value("jitter_seed", c.jitter_seed);
    if (j.contains("system_message") && j["system_message"].is_string()) c.system_message = j["system_message"].get<std::string>();
    c.validate();
    return c;
}

// Upper bound of the delay before retry `attempt` (0-based): base * 2^attempt.
inline std::chrono::milliseconds backoff_envelope(std::chrono::milliseconds base, std::size_t attempt) {
    const auto shift = std::min<std::size_t>(attempt, 30);
    return base * (std::int64_t{1} << shift);
}

inline std::string request_body(const LlmConfig& cfg, const std::string& prompt_text) {
    nlohmann::json messages = nlohmann::json::array();
    if (cfg.system_message) messages.push_back({{"role", "system"}, {"content", *cfg.system_message}});
    messages.push_back({{"role", "user"}, {"content", prompt_text}});
    return nlohmann::json{{"model", cfg.model_name}, {"messages", messages}, {"temperature", cfg.temperature}}.dump();
}

// choices[0].message.content of a chat-completions reply.
inline std::string response_content(const std::string& body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
        throw ProtocolError("response is not JSON");
    }
    const auto* choices = j.is_object() && j.contains("choices") ? &j["choices"] : nullptr;
    if (!choices || !choices->is_array() || choices->empty()) throw ProtocolError("response has no choices");
    const auto& msg = (*choices)[0];
    if (!msg.contains("message") || !msg["message"].contains("content") || !msg["message"]["content"].is_string()) {
        throw ProtocolError("response has no message content");
    }
    return msg["message"]["content"].get<std::string>();
}

using Sleeper = std::function<void(std::chrono::milliseconds)>;

// Chat-completions client with cache in front and jittered exponential retry.
class Gateway : public Backend {
public:
    Gateway(LlmConfig cfg, std::shared_ptr<Transport> transport, std::shared_ptr<CompletionCache> cache,
            Sleeper sleeper = {})
        : cfg_(std::move(cfg)), transport_(std::move(transport)), cache_(std::move(cache)), sleep_(std::move(sleeper)) {
        cfg_.validate();
        if (!cache_) cache_ = std::make_shared<CompletionCache>();
        if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
        if (const char* key = std::getenv(cfg_.api_key_env.c_str())) api_key_ = key;
    }

    // Overrides the key read from the environment.
    void set_api_key(std::string key) { api_key_ = std::move(key); }

    Completion complete(const Request& req) override { return complete_text(req.prompt.text()); }

    Completion complete_text(const std::string& prompt_text) {
        const auto hash = prompt_hash(prompt_text, cfg_.model_name);
        if (auto hit = cache_->find(hash)) return {hit->raw_response, 0, true};
        if (!transport_) throw TransportError("no transport configured and prompt not cached");
        if (api_key_.empty()) throw AuthError("API key not set (environment variable " + cfg_.api_key_env + ")");

        const auto body = request_body(cfg_, prompt_text);
        const Headers headers{{"Authorization", "Bearer " + api_key_}};
        Rng jitter = make_rng(derive_seed(cfg_.jitter_seed, std::hash<std::string>{}(hash)));
        std::string last_error;
        for (std::size_t attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
            if (attempt > 0) {
                const auto env = backoff_envelope(cfg_.backoff_base, attempt - 1);
                const auto d = std::chrono::milliseconds(
                    static_cast<std::int64_t>(uniform01(jitter) * static_cast<double>(env.count())));
                sleep_(d);
            }
            ++network_calls_;
            const auto res = transport_->post_json("/v1/chat/completions", body, headers);
            if (res.status == 200) {
                CompletionRecord rec{hash, cfg_.model_name, response_content(res.body), unix_now(), attempt + 1};
                cache_->put(rec);
                return {rec.raw_response, attempt + 1, false};
            }
            if (res.status == 401 || res.status == 403) {
                throw AuthError("HTTP " + std::to_string(res.status) + " from " + cfg_.base_url);
            }
            const bool transient = res.status == 0 || res.status == 408 || res.status == 429 || res.status >= 500;
            if (!transient) throw ProtocolError("HTTP " + std::to_string(res.status) + ": " + res.body.substr(0, 200));
            last_error = res.status == 0 ? res.error : "HTTP " + std::to_string(res.status);
        }
        throw TransportError("gave up after " + std::to_string(cfg_.max_retries + 1) + " attempts: " + last_error);
    }

    std::string model_name() const override { return cfg_.model_name; }
    std::size_t network_calls() const noexcept { return network_calls_.load(); }
    const LlmConfig& config() const noexcept { return cfg_; }

private:
    LlmConfig cfg_;
    std::shared_ptr<Transport> transport_;
    std::shared_ptr<CompletionCache> cache_;
    Sleeper sleep_;
    std::string api_key_;
    std::atomic<std::size_t> network_calls_{0};
};

// What an unparseable reply becomes in the metrics.
enum class FallbackPolicy { positive, majority, error };

inline FallbackPolicy parse_fallback(std::string_view s) {
    if (s == "positive") return FallbackPolicy::positive;
    if (s == "majority") return FallbackPolicy::majority;
    if (s == "error") return FallbackPolicy::error;
    throw ValidationError("unknown fallback policy '" + std::string(s) + "'");
}

struct BatchOptions {
    std::size_t max_in_flight = 8;
    FallbackPolicy fallback = FallbackPolicy::positive;
    int majority_label = 1;  // used by FallbackPolicy::majority
};

struct PredictionRecord {
    std::size_t index = 0;
    Verdict verdict;
    std::string prompt_hash;
    int label = 0;          // label used for metrics
    bool fallback = false;  // label came from the fallback policy
};

struct BatchResult {
    std::vector<PredictionRecord> records;
    std::size_t n_unparseable = 0;

    std::vector<int> labels() const {
        std::vector<int> out;
        out.reserve(records.size());
        for (const auto& r : records) out.push_back(r.label);
        return out;
    }
};

// The run stopped on a transport failure; completed replies are cached.
class BatchAborted : public Error {
public:
    BatchAborted(const std::string& what, std::size_t completed) : Error(what), completed_(completed) {}
    std::size_t completed() const noexcept { return completed_; }

private:
    std::size_t completed_;
};

// Builds one prompt per test row (same spec and examples) and classifies
// them with at most `max_in_flight` outstanding requests. Records come back
// in row order whatever the completion order.
inline BatchResult classify_batch(const Dataset& test, const PromptSpec& spec, std::span<const Example> examples,
                                  Backend& backend, const BatchOptions& opt = {}) {
    if (opt.max_in_flight < 1) throw ValidationError("batch: max_in_flight must be >= 1");
    std::vector<Prompt> prompts;
    prompts.reserve(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) prompts.push_back(assemble_prompt(test.schema, spec, examples, test.rows[i]));

    const auto model = backend.model_name();
    std::vector<std::optional<PredictionRecord>> slots(test.size());
    const std::size_t workers = backend.sequential() ? 1 : opt.max_in_flight;
    try {
        parallel_for(test.size(), workers, [&](std::size_t i) {
            const auto c = backend.complete({prompts[i], i});
            PredictionRecord r{i, parse_label(c.text), prompt_hash(prompts[i].text(), model), 0, false};
            if (r.verdict.label) {
                r.label = *r.verdict.label;
            } else {
                if (opt.fallback == FallbackPolicy::error) throw ProtocolError("row " + std::to_string(i) + ": unparseable reply '" + c.text + "'");
                r.label = opt.fallback == FallbackPolicy::positive ? 1 : opt.majority_label;
                r.fallback = true;
            }
            slots[i] = std::move(r);
        });
    } catch (const TransportError& e) {
        std::size_t done = 0;
        for (const auto& s : slots) done += s.has_value();
        throw BatchAborted(e.what(), done);
    }
    BatchResult out;
    out.records.reserve(slots.size());
    for (auto& s : slots) {
        out.n_unparseable += s->fallback;
        out.records.push_back(std::move(*s));
    }
    return out;
}

}  // namespace healthprompt::llm
