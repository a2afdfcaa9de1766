#include "mendkit/hash.hpp"

#include <array>
#include <cstdio>

namespace mendkit {

std::string toHex(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

namespace {
std::array<uint32_t, 256> makeCrcTable() {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
        uint32_t c = i;
        for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320U ^ (c >> 1) : c >> 1;
        t[i] = c;
    }
    return t;
}
}  // namespace

uint32_t crc32(const void* data, size_t n, uint32_t crc) {
    static const std::array<uint32_t, 256> table = makeCrcTable();
    const auto* p = static_cast<const unsigned char*>(data);
    uint32_t c = crc ^ 0xffffffffU;
    for (size_t i = 0; i < n; ++i) c = table[(c ^ p[i]) & 0xffU] ^ (c >> 8);
    return c ^ 0xffffffffU;
}

}  // namespace mendkit
