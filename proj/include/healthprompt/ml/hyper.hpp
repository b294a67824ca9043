#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "healthprompt/error.hpp"
#include "healthprompt/random.hpp"

namespace healthprompt::ml {

using ParamValue = std::variant<bool, std::int64_t, double, std::string>;
using HyperAssignment = std::map<std::string, ParamValue>;

struct IntRange {
    std::int64_t lo, hi;  // inclusive
};

struct RealRange {
    double lo, hi;
    bool log_scale = false;
};

struct Choice {
    std::vector<ParamValue> options;
};

struct HyperParam {
    std::string name;
    std::variant<IntRange, RealRange, Choice> domain;
};

using HyperSpace = std::vector<HyperParam>;

// Draws one assignment; parameters are sampled in space order.
inline HyperAssignment sample_assignment(const HyperSpace& space, Rng& rng) {
    HyperAssignment out;
    for (const auto& p : space) {
        ParamValue v = std::visit(
            [&](const auto& d) -> ParamValue {
                using D = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<D, IntRange>) {
                    return uniform_int(rng, d.lo, d.hi);
                } else if constexpr (std::is_same_v<D, RealRange>) {
                    if (d.log_scale) return std::exp(uniform_real(rng, std::log(d.lo), std::log(d.hi)));
                    return uniform_real(rng, d.lo, d.hi);
                } else {
                    if (d.options.empty()) throw ValidationError("hyper: empty choice for " + p.name);
                    return d.options[uniform_index(rng, d.options.size())];
                }
            },
            p.domain);
        out.emplace(p.name, std::move(v));
    }
    return out;
}

inline bool contains(const HyperParam& p, const ParamValue& v) {
    return std::visit(
        [&](const auto& d) {
            using D = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<D, IntRange>) {
                const auto* i = std::get_if<std::int64_t>(&v);
                return i && *i >= d.lo && *i <= d.hi;
            } else if constexpr (std::is_same_v<D, RealRange>) {
                const auto* x = std::get_if<double>(&v);
                return x && *x >= d.lo && *x <= d.hi;
            } else {
                for (const auto& o : d.options) {
                    if (o == v) return true;
                }
                return false;
            }
        },
        p.domain);
}

inline nlohmann::json to_json(const ParamValue& v) {
    return std::visit([](const auto& x) { return nlohmann::json(x); }, v);
}

inline ParamValue param_from_json(const nlohmann::json& j) {
    if (j.is_boolean()) return j.get<bool>();
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number_float()) return j.get<double>();
    if (j.is_string()) return j.get<std::string>();
    throw ValidationError("hyper: unsupported parameter value " + j.dump());
}

inline nlohmann::json to_json(const HyperAssignment& h) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : h) j[k] = to_json(v);
    return j;
}

inline HyperAssignment assignment_from_json(const nlohmann::json& j) {
    HyperAssignment h;
    for (const auto& [k, v] : j.items()) h.emplace(k, param_from_json(v));
    return h;
}

inline std::string to_string(const ParamValue& v) { return to_json(v).dump(); }

// Typed lookups with a fallback for parameters the caller left out.
inline std::int64_t get_int(const HyperAssignment& h, const std::string& key, std::int64_t fallback) {
    const auto it = h.find(key);
    if (it == h.end()) return fallback;
    if (const auto* i = std::get_if<std::int64_t>(&it->second)) return *i;
    if (const auto* d = std::get_if<double>(&it->second); d && std::floor(*d) == *d) return static_cast<std::int64_t>(*d);
    throw ValidationError("hyper: '" + key + "' must be an integer");
}

inline double get_real(const HyperAssignment& h, const std::string& key, double fallback) {
    const auto it = h.find(key);
    if (it == h.end()) return fallback;
    if (const auto* d = std::get_if<double>(&it->second)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
    throw ValidationError("hyper: '" + key + "' must be a number");
}

inline bool get_bool(const HyperAssignment& h, const std::string& key, bool fallback) {
    const auto it = h.find(key);
    if (it == h.end()) return fallback;
    if (const auto* b = std::get_if<bool>(&it->second)) return *b;
    throw ValidationError("hyper: '" + key + "' must be a boolean");
}

inline std::string get_string(const HyperAssignment& h, const std::string& key, const std::string& fallback) {
    const auto it = h.find(key);
    if (it == h.end()) return fallback;
    if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
    throw ValidationError("hyper: '" + key + "' must be a string");
}

}  // namespace healthprompt::ml
