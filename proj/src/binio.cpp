#include "mendkit/binio.hpp"

#include <random>
#include <system_error>

namespace mendkit {

namespace fs = std::filesystem;

void atomicWriteFile(const fs::path& path, const void* data, size_t n) {
    fs::path dir = path.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    fs::path tmp = path;
    tmp += ".tmp" + std::to_string(std::random_device{}());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for write: " + tmp.string());
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

void atomicWriteFile(const fs::path& path, const std::string& text) {
    atomicWriteFile(path, text.data(), text.size());
}

std::vector<char> readFileBytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    auto n = static_cast<size_t>(in.tellg());
    in.seekg(0);
    std::vector<char> buf(n);
    in.read(buf.data(), static_cast<std::streamsize>(n));
    if (!in) throw std::runtime_error("read failed: " + path.string());
    return buf;
}

std::string readFileText(const fs::path& path) {
    auto b = readFileBytes(path);
    return std::string(b.begin(), b.end());
}

}  // namespace mendkit
