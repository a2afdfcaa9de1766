#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace mendkit {

// FNV-1a 64-bit, used for config content hashes.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t seed = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}
inline uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

std::string toHex(uint64_t v);

// CRC-32 (IEEE 802.3), used as the checkpoint integrity checksum.
uint32_t crc32(const void* data, size_t n, uint32_t crc = 0);

}  // namespace mendkit
