#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>

namespace veilmod::server {

std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view text);

// 256 random bits from the OS CSPRNG, hex encoded.
std::string random_token();

// Constant-time comparison for secrets of equal length.
bool secret_equal(std::string_view a, std::string_view b);

struct TokenEntry {
    std::string session_id;
    std::int64_t expires_at_ms = 0;
};

// Bearer tokens by SHA-256 digest, persisted one JSON object per line in
// tokens.jsonl next to the event log. The plaintext is never stored.
class TokenStore {
public:
    static constexpr const char* file_name = "tokens.jsonl";

    TokenStore(std::filesystem::path file, bool durable);

    // Hashes the token and records it.
    void add(std::string_view token, TokenEntry entry);
    std::optional<TokenEntry> lookup(std::string_view token) const;
    std::size_t size() const;

private:
    std::filesystem::path path_;
    bool durable_;
    std::unordered_map<std::string, TokenEntry> by_hash_;
    mutable std::mutex mutex_;
};

} // namespace veilmod::server
