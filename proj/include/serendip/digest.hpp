#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace serendip {

/// Incremental SHA-256. Used for cache keys and provenance digests; replies
/// and credentials never feed into anything weaker than this.
class Sha256 {
public:
    Sha256();

    void update(const void* data, std::size_t len);
    void update(std::string_view s) { update(s.data(), s.size()); }

    std::array<std::uint8_t, 32> finish();
    std::string finish_hex();

    static std::string hex(std::string_view data);
    static std::string file_hex(const std::filesystem::path& path);

private:
    void compress(const std::uint8_t* chunk);

    std::array<std::uint32_t, 8> state_{};
    std::array<std::uint8_t, 64> buffer_{};
    std::size_t buffered_ = 0;
    std::uint64_t total_bytes_ = 0;
};

}  // namespace serendip
