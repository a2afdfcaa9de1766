#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mendkit {

// Little-endian binary writer into a memory buffer. All file formats in this
// project are little-endian; the host is assumed little-endian (checked once
// at startup of any reader/writer).
class BinWriter {
public:
    template <typename T>
    void put(const T& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        const auto* p = reinterpret_cast<const char*>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }
    void putBytes(const void* data, size_t n) {
        const auto* p = static_cast<const char*>(data);
        buf_.insert(buf_.end(), p, p + n);
    }
    void putString(const std::string& s) {
        put<uint32_t>(static_cast<uint32_t>(s.size()));
        putBytes(s.data(), s.size());
    }
    const std::vector<char>& bytes() const { return buf_; }
    std::vector<char>& bytes() { return buf_; }

private:
    std::vector<char> buf_;
};

class BinReader {
public:
    BinReader(const void* data, size_t n)
        : p_(static_cast<const char*>(data)), end_(p_ + n) {}
    explicit BinReader(const std::vector<char>& v) : BinReader(v.data(), v.size()) {}

    template <typename T>
    T get() {
        static_assert(std::is_trivially_copyable_v<T>);
        need(sizeof(T));
        T v;
        std::memcpy(&v, p_, sizeof(T));
        p_ += sizeof(T);
        return v;
    }
    void getBytes(void* out, size_t n) {
        need(n);
        std::memcpy(out, p_, n);
        p_ += n;
    }
    std::string getString() {
        uint32_t n = get<uint32_t>();
        need(n);
        std::string s(p_, p_ + n);
        p_ += n;
        return s;
    }
    size_t remaining() const { return static_cast<size_t>(end_ - p_); }

private:
    void need(size_t n) const {
        if (static_cast<size_t>(end_ - p_) < n)
            throw std::runtime_error("binary read past end of buffer (truncated file?)");
    }
    const char* p_;
    const char* end_;
};

// Write-temp-then-rename so concurrent readers never see partial files.
void atomicWriteFile(const std::filesystem::path& path, const void* data, size_t n);
inline void atomicWriteFile(const std::filesystem::path& path, const std::vector<char>& bytes) {
    atomicWriteFile(path, bytes.data(), bytes.size());
}
void atomicWriteFile(const std::filesystem::path& path, const std::string& text);

std::vector<char> readFileBytes(const std::filesystem::path& path);
std::string readFileText(const std::filesystem::path& path);

}  // namespace mendkit
