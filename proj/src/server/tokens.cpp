#include "veilmod/server/tokens.hpp"

#include <fcntl.h>
#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/rand.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "veilmod/error.hpp"

namespace veilmod::server {

namespace {

std::string to_hex(std::span<const std::uint8_t> bytes) {
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes)
        out += fmt::format("{:02x}", b);
    return out;
}

} // namespace

std::string sha256_hex(std::span<const std::uint8_t> data) {
    std::array<std::uint8_t, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorKind::io, "SHA-256 failed");
    return to_hex(std::span(md.data(), len));
}

std::string sha256_hex(std::string_view text) {
    return sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string random_token() {
    std::array<std::uint8_t, 32> bytes{};
    if (RAND_bytes(bytes.data(), static_cast<int>(bytes.size())) != 1)
        throw Error(ErrorKind::io, "RAND_bytes failed");
    return to_hex(bytes);
}

bool secret_equal(std::string_view a, std::string_view b) {
    return a.size() == b.size() && CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

TokenStore::TokenStore(std::filesystem::path file, bool durable) : path_(std::move(file)), durable_(durable) {
    std::ifstream in(path_);
    std::string line;
    while (std::getline(in, line)) {
        // a torn final line just loses that token; its session stays in the log
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("token_sha256"))
            continue;
        by_hash_[j.value("token_sha256", "")] = {j.value("session_id", ""), j.value("expires_at_ms", std::int64_t{0})};
    }
}

void TokenStore::add(std::string_view token, TokenEntry entry) {
    const std::string hash = sha256_hex(token);
    const nlohmann::json j = {
        {"token_sha256", hash}, {"session_id", entry.session_id}, {"expires_at_ms", entry.expires_at_ms}};
    const std::string line = j.dump() + "\n";

    std::lock_guard lock(mutex_);
    const int fd = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0600);
    if (fd < 0)
        throw Error(ErrorKind::io, fmt::format("cannot open {}: {}", path_.string(), std::strerror(errno)));
    const bool ok = ::write(fd, line.data(), line.size()) == static_cast<ssize_t>(line.size()) &&
                    (!durable_ || ::fsync(fd) == 0);
    ::close(fd);
    if (!ok)
        throw Error(ErrorKind::io, fmt::format("cannot append to {}", path_.string()));
    by_hash_[hash] = std::move(entry);
}

std::optional<TokenEntry> TokenStore::lookup(std::string_view token) const {
    const std::string hash = sha256_hex(token);
    std::lock_guard lock(mutex_);
    const auto it = by_hash_.find(hash);
    if (it == by_hash_.end())
        return std::nullopt;
    return it->second;
}

std::size_t TokenStore::size() const {
    std::lock_guard lock(mutex_);
    return by_hash_.size();
}

} // namespace veilmod::server
