#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

// Little-endian byte packing helpers shared by the on-disk formats.

namespace eventline::binio {

inline void put_u16(std::string& b, uint16_t v) {
    b.push_back(char(v & 0xff));
    b.push_back(char((v >> 8) & 0xff));
}

inline void put_u32(std::string& b, uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(char((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& b, uint64_t v) {
    for (int i = 0; i < 8; ++i) b.push_back(char((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& b, double v) {
    uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    __builtin_memcpy(&bits, &v, 8);
    put_u64(b, bits);
}

inline uint16_t get_u16(const unsigned char* p) { return uint16_t(p[0] | (p[1] << 8)); }

inline uint32_t get_u32(const unsigned char* p) {
    return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) |
           (uint32_t(p[3]) << 24);
}

inline uint64_t get_u64(const unsigned char* p) {
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

inline double get_f64(const unsigned char* p) {
    const uint64_t bits = get_u64(p);
    double v;
    __builtin_memcpy(&v, &bits, 8);
    return v;
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f.write(bytes.data(), std::streamsize(bytes.size()));
    if (!f) throw std::runtime_error("short write to " + path);
}

// Cursor for sequential parsing with bounds checks.
struct Reader {
    const unsigned char* p;
    size_t n;
    size_t pos = 0;
    std::string origin;

    explicit Reader(const std::string& bytes, std::string origin_ = "")
        : p(reinterpret_cast<const unsigned char*>(bytes.data())), n(bytes.size()),
          origin(std::move(origin_)) {}

    void need(size_t k) const {
        if (pos + k > n) throw std::runtime_error(origin + ": truncated input");
    }
    uint16_t u16() { need(2); auto v = get_u16(p + pos); pos += 2; return v; }
    uint32_t u32() { need(4); auto v = get_u32(p + pos); pos += 4; return v; }
    uint64_t u64() { need(8); auto v = get_u64(p + pos); pos += 8; return v; }
    double f64() { need(8); auto v = get_f64(p + pos); pos += 8; return v; }
    void skip(size_t k) { need(k); pos += k; }
    bool done() const { return pos == n; }
};

} // namespace eventline::binio
