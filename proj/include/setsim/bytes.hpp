#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace setsim {

using Bytes = std::vector<uint8_t>;
using ByteSpan = std::span<const uint8_t>;

inline void put_u16le(Bytes& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xFF));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

inline void put_u32le(Bytes& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

inline void put_u64le(Bytes& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

inline uint16_t get_u16le(ByteSpan in, size_t off) {
    return static_cast<uint16_t>(in[off] | (in[off + 1] << 8));
}

inline uint32_t get_u32le(ByteSpan in, size_t off) {
    return static_cast<uint32_t>(in[off]) | (static_cast<uint32_t>(in[off + 1]) << 8) |
           (static_cast<uint32_t>(in[off + 2]) << 16) | (static_cast<uint32_t>(in[off + 3]) << 24);
}

inline uint64_t get_u64le(ByteSpan in, size_t off) {
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | in[off + static_cast<size_t>(i)];
    return v;
}

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

inline std::string to_hex(ByteSpan data) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (uint8_t b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xF]);
    }
    return out;
}

inline Bytes from_hex(std::string_view hex) {
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    Bytes out;
    int hi = -1;
    for (char c : hex) {
        if (c == ' ' || c == '\t') continue;
        int n = nibble(c);
        if (n < 0) throw std::invalid_argument("bad hex digit");
        if (hi < 0) {
            hi = n;
        } else {
            out.push_back(static_cast<uint8_t>((hi << 4) | n));
            hi = -1;
        }
    }
    if (hi >= 0) throw std::invalid_argument("odd-length hex string");
    return out;
}

// hexdump in the classic 16-bytes-per-row, offset-prefixed layout with an
// ASCII gutter. `base` is the address printed for the first byte.
inline std::string hexdump(ByteSpan data, uint32_t base = 0) {
    std::string out;
    char line[128];
    for (size_t row = 0; row < data.size(); row += 16) {
        size_t n = std::min<size_t>(16, data.size() - row);
        int pos = std::snprintf(line, sizeof line, "%08x  ", base + static_cast<uint32_t>(row));
        for (size_t i = 0; i < 16; ++i) {
            if (i < n)
                pos += std::snprintf(line + pos, sizeof line - pos, "%02x ", data[row + i]);
            else
                pos += std::snprintf(line + pos, sizeof line - pos, "   ");
            if (i == 7) pos += std::snprintf(line + pos, sizeof line - pos, " ");
        }
        pos += std::snprintf(line + pos, sizeof line - pos, " |");
        for (size_t i = 0; i < n; ++i) {
            uint8_t c = data[row + i];
            pos += std::snprintf(line + pos, sizeof line - pos, "%c",
                                 (c >= 0x20 && c < 0x7F) ? static_cast<char>(c) : '.');
        }
        std::snprintf(line + pos, sizeof line - pos, "|");
        out += line;
        out += '\n';
    }
    return out;
}

}  // namespace setsim
