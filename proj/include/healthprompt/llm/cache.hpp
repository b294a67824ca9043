#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "healthprompt/error.hpp"

namespace healthprompt::llm {

struct CompletionRecord {
    std::string prompt_hash;
    std::string model_name;
    std::string raw_response;
    std::int64_t timestamp = 0;  // unix seconds
    std::size_t attempt_count = 0;
};

inline nlohmann::json to_json(const CompletionRecord& r) {
    return {{"prompt_hash", r.prompt_hash},
            {"model_name", r.model_name},
            {"raw_response", r.raw_response},
            {"timestamp", r.timestamp},
            {"attempt_count", r.attempt_count}};
}

inline CompletionRecord record_from_json(const nlohmann::json& j) {
    return {j.at("prompt_hash").get<std::string>(), j.at("model_name").get<std::string>(),
            j.at("raw_response").get<std::string>(), j.value("timestamp", std::int64_t{0}),
            j.value("attempt_count", std::size_t{1})};
}

inline std::int64_t unix_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

// Append-only JSON-lines store keyed by prompt hash. An empty path keeps the
// cache in memory only. Later lines win over earlier ones with the same key.
class CompletionCache {
public:
    CompletionCache() = default;

    explicit CompletionCache(std::filesystem::path path) : path_(std::move(path)) {
        if (path_.empty() || !std::filesystem::exists(path_)) return;
        std::ifstream in(path_, std::ios::binary);
        if (!in) throw IoError("cannot read cache " + path_.string());
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (line.empty()) continue;
            try {
                auto r = record_from_json(nlohmann::json::parse(line));
                entries_[r.prompt_hash] = std::move(r);
            } catch (const nlohmann::json::exception& e) {
                throw ParseError(n, e.what(), path_.string());
            }
        }
    }

    std::optional<CompletionRecord> find(const std::string& hash) const {
        std::lock_guard lock(mu_);
        const auto it = entries_.find(hash);
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    void put(const CompletionRecord& r) {
        std::lock_guard lock(mu_);
        if (!path_.empty()) {
            if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
            std::ofstream out(path_, std::ios::binary | std::ios::app);
            if (!out) throw IoError("cannot append to cache " + path_.string());
            out << to_json(r).dump() << '\n';
            out.flush();
            if (!out) throw IoError("write to cache " + path_.string() + " failed");
        }
        entries_[r.prompt_hash] = r;
    }

    std::size_t size() const {
        std::lock_guard lock(mu_);
        return entries_.size();
    }

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, CompletionRecord> entries_;
};

}  // namespace healthprompt::llm
