#pragma once

// Shared test utilities: independent oracles (a from-scratch SHA-256, a
// brute-force run scanner) and generators for random images and programs.
// Oracles here deliberately do not call into the library paths they check.

#include <random>
#include <string>
#include <vector>

#include "setsim/assembler.hpp"
#include "setsim/image.hpp"
#include "setsim/scenario.hpp"

namespace testutil {

using setsim::Bytes;
using setsim::ByteSpan;

inline setsim::scenario::SampleSet& samples() {
    static setsim::scenario::SampleSet s = setsim::scenario::SampleSet::load(SETSIM_SAMPLES_DIR);
    return s;
}

// ---------------------------------------------------------------------------
// Reference SHA-256, implemented straight from the algorithm description.

namespace refsha {

inline uint32_t rotr(uint32_t x, unsigned n) { return (x >> n) | (x << (32 - n)); }

inline std::array<uint8_t, 32> sha256(ByteSpan data) {
    static constexpr uint32_t k[64] = {
        0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
        0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
        0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
        0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
        0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
        0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
        0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
        0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
        0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
        0xc67178f2};
    uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                     0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};

    Bytes msg(data.begin(), data.end());
    uint64_t bitlen = static_cast<uint64_t>(msg.size()) * 8;
    msg.push_back(0x80);
    while (msg.size() % 64 != 56) msg.push_back(0);
    for (int i = 7; i >= 0; --i) msg.push_back(static_cast<uint8_t>(bitlen >> (8 * i)));

    for (size_t block = 0; block < msg.size(); block += 64) {
        uint32_t w[64];
        for (int i = 0; i < 16; ++i) {
            w[i] = (static_cast<uint32_t>(msg[block + 4 * i]) << 24) |
                   (static_cast<uint32_t>(msg[block + 4 * i + 1]) << 16) |
                   (static_cast<uint32_t>(msg[block + 4 * i + 2]) << 8) |
                   static_cast<uint32_t>(msg[block + 4 * i + 3]);
        }
        for (int i = 16; i < 64; ++i) {
            uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4], f = h[5], g = h[6], hh = h[7];
        for (int i = 0; i < 64; ++i) {
            uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            uint32_t ch = (e & f) ^ (~e & g);
            uint32_t t1 = hh + s1 + ch + k[i] + w[i];
            uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            uint32_t t2 = s0 + maj;
            hh = g; g = f; f = e; e = d + t1;
            d = c; c = b; b = a; a = t1 + t2;
        }
        h[0] += a; h[1] += b; h[2] += c; h[3] += d;
        h[4] += e; h[5] += f; h[6] += g; h[7] += hh;
    }
    std::array<uint8_t, 32> out{};
    for (int i = 0; i < 8; ++i) {
        out[4 * i] = static_cast<uint8_t>(h[i] >> 24);
        out[4 * i + 1] = static_cast<uint8_t>(h[i] >> 16);
        out[4 * i + 2] = static_cast<uint8_t>(h[i] >> 8);
        out[4 * i + 3] = static_cast<uint8_t>(h[i]);
    }
    return out;
}

}  // namespace refsha

// ---------------------------------------------------------------------------
// Brute-force maximal-run scanner (free-chunk oracle): classify every byte,
// then collect maximal same-class runs of length >= 8, dropping any run that
// touches the entry slot.

struct OracleRun {
    uint32_t offset;
    uint32_t length;
    uint8_t fill;
};

inline std::vector<OracleRun> chunk_oracle(const setsim::EnclaveImage& img) {
    const Bytes& code = img.code();
    std::vector<int> cls(code.size(), -1);
    for (size_t i = 0; i < code.size(); ++i) {
        if (code[i] == 0x00) cls[i] = 0;
        if (code[i] == 0xFF) cls[i] = 1;
    }
    std::vector<OracleRun> runs;
    size_t i = 0;
    while (i < code.size()) {
        if (cls[i] < 0) { ++i; continue; }
        size_t j = i;
        while (j < code.size() && cls[j] == cls[i]) ++j;
        if (j - i >= 8) runs.push_back({static_cast<uint32_t>(i), static_cast<uint32_t>(j - i),
                                        cls[i] == 0 ? uint8_t{0x00} : uint8_t{0xFF}});
        i = j;
    }
    uint32_t slot = img.header.entry_offset / 8 * 8;
    std::vector<OracleRun> kept;
    for (const OracleRun& r : runs)
        if (!(r.offset < slot + 8 && r.offset + r.length > slot)) kept.push_back(r);
    return kept;
}

// ---------------------------------------------------------------------------
// Random structurally-valid images (not necessarily runnable).

inline setsim::EnclaveImage random_image(std::mt19937_64& rng, size_t max_code_instrs = 64) {
    setsim::EnclaveImage img;
    size_t instrs = 1 + rng() % max_code_instrs;
    img.code().resize(instrs * 8);
    for (auto& b : img.code()) b = static_cast<uint8_t>(rng());
    auto rand_section = [&](size_t maxlen) {
        Bytes b(rng() % maxlen, 0);
        for (auto& x : b) x = static_cast<uint8_t>(rng());
        return b;
    };
    img.rodata() = rand_section(96);
    img.rwdata() = rand_section(64);
    img.meta() = rand_section(32);
    img.header.sdk_version = static_cast<uint16_t>(rng());
    img.header.entry_offset = static_cast<uint32_t>((rng() % instrs) * 8);
    return img;
}

// ---------------------------------------------------------------------------
// Random runnable programs: 1..16 ecalls with register-only bodies, fenced
// free space, occasional data sections.

inline std::string random_program(std::mt19937_64& rng, unsigned min_ecalls = 1,
                                  unsigned max_ecalls = 16) {
    unsigned k = min_ecalls + static_cast<unsigned>(rng() % (max_ecalls - min_ecalls + 1));
    std::string src = "# generated program\n";
    src += ".entry gen_entry\n";
    for (unsigned i = 0; i < k; ++i) src += ".ecall fn_" + std::to_string(i) + "\n";

    auto emit_freespace = [&](std::string& s) {
        unsigned words = 6 + static_cast<unsigned>(rng() % 11);  // 48..128 bytes
        const char* fill = rng() % 2 ? "00" : "ff";
        s += "    LOADI r9, 0xDEADBEEF\n";
        s += "    .freespace " + std::to_string(words * 8) + " " + fill + "\n";
        s += "    LOADI r9, 0xDEADBEEF\n";
    };

    for (unsigned i = 0; i < k; ++i) {
        src += "fn_" + std::to_string(i) + ":\n";
        unsigned body = 1 + static_cast<unsigned>(rng() % 6);
        for (unsigned j = 0; j < body; ++j) {
            unsigned reg = 4 + static_cast<unsigned>(rng() % 4);
            switch (rng() % 3) {
                case 0:
                    src += "    LOADI r" + std::to_string(reg) + ", " + std::to_string(rng() % 100000) + "\n";
                    break;
                case 1:
                    src += "    ADDI r" + std::to_string(reg) + ", r" + std::to_string(4 + rng() % 4) +
                           ", " + std::to_string(rng() % 1000) + "\n";
                    break;
                case 2:
                    src += "    STORE r" + std::to_string(reg) + ", r11, -" +
                           std::to_string(28 + 4 * (rng() % 8)) + "\n";
                    break;
            }
        }
        src += rng() % 4 == 0 ? "    HALT\n" : "    RET\n";
        if (i == 0 || rng() % 2) emit_freespace(src);
    }
    if (rng() % 2) {
        src += ".rodata ";
        unsigned n = 4 + static_cast<unsigned>(rng() % 12);
        for (unsigned i = 0; i < n; ++i) {
            char b[4];
            std::snprintf(b, sizeof b, "%02x", static_cast<unsigned>(rng() % 0x40));  // no 'E'
            src += b;
        }
        src += "\n";
    }
    if (rng() % 2) src += ".rwdata " + std::to_string(8 + 4 * (rng() % 8)) + "\n";
    return src;
}

}  // namespace testutil
