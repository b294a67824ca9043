#pragma once

#include <array>
#include <memory>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "healthprompt/error.hpp"

namespace healthprompt::llm {

// Lowercase hex SHA-256 over the concatenation of `parts`, each followed by a
// NUL separator so ("ab","c") and ("a","bc") hash differently.
template <typename... Parts>
std::string sha256_hex(const Parts&... parts) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256: init failed");
    auto feed = [&](std::string_view s) {
        static constexpr char sep = '\0';
        if (EVP_DigestUpdate(ctx.get(), s.data(), s.size()) != 1 || EVP_DigestUpdate(ctx.get(), &sep, 1) != 1) {
            throw Error("sha256: update failed");
        }
    };
    (feed(std::string_view(parts)), ...);
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) throw Error("sha256: final failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

// Cache key of a prompt under a given model.
inline std::string prompt_hash(std::string_view prompt_text, std::string_view model_name) {
    return sha256_hex(model_name, prompt_text);
}

}  // namespace healthprompt::llm
