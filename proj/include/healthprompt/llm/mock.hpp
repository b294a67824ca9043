#pragma once

#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "healthprompt/error.hpp"
#include "healthprompt/format.hpp"
#include "healthprompt/prompt.hpp"

namespace healthprompt::llm {

// One prompt to answer; `index` is the test-row position.
struct Request {
    const Prompt& prompt;
    std::size_t index = 0;
};

struct Completion {
    std::string text;
    std::size_t attempts = 0;  // 0 when served from cache
    bool from_cache = false;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual Completion complete(const Request& req) = 0;
    virtual std::string model_name() const = 0;
    // True when answers depend on call order, forcing one request at a time.
    virtual bool sequential() const { return false; }
};

// Answers each test row with its true label.
class OracleMock : public Backend {
public:
    explicit OracleMock(std::vector<int> truth) : truth_(std::move(truth)) {}

    Completion complete(const Request& req) override {
        if (req.index >= truth_.size()) throw ValidationError("oracle mock: no truth for row " + std::to_string(req.index));
        return {std::to_string(truth_[req.index]), 1, false};
    }
    std::string model_name() const override { return "mock-oracle"; }

private:
    std::vector<int> truth_;
};

// Replays a fixed list of replies in call order.
class ScriptedMock : public Backend {
public:
    explicit ScriptedMock(std::vector<std::string> replies) : queue_(replies.begin(), replies.end()) {}

    Completion complete(const Request&) override {
        std::lock_guard lock(mu_);
        if (queue_.empty()) throw Error("scripted mock: reply queue exhausted");
        std::string s = std::move(queue_.front());
        queue_.pop_front();
        return {std::move(s), 1, false};
    }
    std::string model_name() const override { return "mock-scripted"; }
    bool sequential() const override { return true; }

    std::size_t remaining() const {
        std::lock_guard lock(mu_);
        return queue_.size();
    }

private:
    mutable std::mutex mu_;
    std::deque<std::string> queue_;
};

// Value of `feature` on the "<Inputs>:" line of the final question.
inline std::optional<double> query_value(const Prompt& p, std::string_view feature) {
    const std::string_view text = p.part5_question;
    const auto at = text.find("<Inputs>: ");
    if (at == std::string_view::npos) return std::nullopt;
    auto line = text.substr(at + 10);
    line = line.substr(0, line.find('\n'));
    while (!line.empty()) {
        const auto comma = line.find(", ");
        const auto item = line.substr(0, comma);
        const auto colon = item.find(": ");
        if (colon != std::string_view::npos && item.substr(0, colon) == feature) {
            double v = 0.0;
            if (parse_double(item.substr(colon + 2), v)) return v;
            return std::nullopt;
        }
        if (comma == std::string_view::npos) break;
        line.remove_prefix(comma + 2);
    }
    return std::nullopt;
}

// "1" iff the query's `feature` is at least `threshold`.
class RuleMock : public Backend {
public:
    RuleMock(std::string feature, double threshold) : feature_(std::move(feature)), threshold_(threshold) {}

    Completion complete(const Request& req) override {
        const auto v = query_value(req.prompt, feature_);
        if (!v) throw ValidationError("rule mock: query has no value for '" + feature_ + "'");
        return {*v >= threshold_ ? "1" : "0", 1, false};
    }
    std::string model_name() const override { return "mock-rule"; }

private:
    std::string feature_;
    double threshold_;
};

}  // namespace healthprompt::llm
