#pragma once

// Fixed-width instruction set for the toy enclave container.
//
// Every instruction is exactly 8 bytes:
//   opcode : u8
//   a      : u8   (usually a register number 0..15)
//   b      : u16 LE (usually a register number; ADDI packs two sources)
//   imm    : u32 LE
//
// Program-counter offsets (CALL/JMP/BRZ/CALLIND targets) are CODE-relative;
// data addresses (LOAD/STORE/COPY/CMPB) are absolute VM addresses.

#include <cstdint>
#include <optional>
#include <string>

#include "setsim/bytes.hpp"

namespace setsim {

inline constexpr size_t kInstrSize = 8;
inline constexpr unsigned kRegisterCount = 16;

enum class Op : uint8_t {
    HALT = 0x00,     // stop; imm is reported as the exit code
    LOADI = 0x01,    // r[a] = imm
    LOAD = 0x02,     // r[a] = mem32[r[b] + imm]
    STORE = 0x03,    // mem32[r[b] + imm] = r[a]
    CALL = 0x10,     // push pc+8; pc = imm
    CALLIND = 0x11,  // push pc+8; pc = mem32[rodata + imm + 4*r[a]]
    RET = 0x12,      // pc = pop()
    JMP = 0x13,      // pc = imm
    BRZ = 0x14,      // if r[a] == 0: pc = imm
    COPY = 0x20,     // copy r[b] bytes from mem[r[a]] to mem[r[imm & 0xF]]
    CMPB = 0x21,     // r[a] = (mem8[r[b]] == (imm & 0xFF)) ? 1 : 0
    ADDI = 0x22,     // r[a] = r[b.lo] + (b.hi < 16 ? r[b.hi] : 0) + imm
};

// ADDI with no second source register encodes 0xFF in b's high byte.
inline constexpr uint8_t kNoReg = 0xFF;

// Patch payloads mark in-payload branches with this bit in the a field; the
// patch planner rewrites their payload-relative imm to a final CODE offset
// and clears the bit. The VM never sees it.
inline constexpr uint8_t kRelocFlag = 0x80;

struct Instruction {
    uint8_t opcode = 0;
    uint8_t a = 0;
    uint16_t b = 0;
    uint32_t imm = 0;

    bool operator==(const Instruction&) const = default;

    Op op() const { return static_cast<Op>(opcode); }

    void encode_to(Bytes& out) const {
        out.push_back(opcode);
        out.push_back(a);
        put_u16le(out, b);
        put_u32le(out, imm);
    }

    Bytes encode() const {
        Bytes out;
        out.reserve(kInstrSize);
        encode_to(out);
        return out;
    }

    static Instruction decode(ByteSpan bytes, size_t off = 0) {
        Instruction ins;
        ins.opcode = bytes[off];
        ins.a = bytes[off + 1];
        ins.b = get_u16le(bytes, off + 2);
        ins.imm = get_u32le(bytes, off + 4);
        return ins;
    }
};

inline bool is_known_opcode(uint8_t op) {
    switch (static_cast<Op>(op)) {
        case Op::HALT:
        case Op::LOADI:
        case Op::LOAD:
        case Op::STORE:
        case Op::CALL:
        case Op::CALLIND:
        case Op::RET:
        case Op::JMP:
        case Op::BRZ:
        case Op::COPY:
        case Op::CMPB:
        case Op::ADDI:
            return true;
    }
    return false;
}

inline const char* mnemonic(uint8_t op) {
    switch (static_cast<Op>(op)) {
        case Op::HALT: return "HALT";
        case Op::LOADI: return "LOADI";
        case Op::LOAD: return "LOAD";
        case Op::STORE: return "STORE";
        case Op::CALL: return "CALL";
        case Op::CALLIND: return "CALLIND";
        case Op::RET: return "RET";
        case Op::JMP: return "JMP";
        case Op::BRZ: return "BRZ";
        case Op::COPY: return "COPY";
        case Op::CMPB: return "CMPB";
        case Op::ADDI: return "ADDI";
    }
    return ".raw";
}

inline std::string disassemble(const Instruction& ins) {
    char buf[96];
    switch (ins.op()) {
        case Op::HALT:
            std::snprintf(buf, sizeof buf, "HALT 0x%x", ins.imm);
            break;
        case Op::LOADI:
            std::snprintf(buf, sizeof buf, "LOADI r%u, 0x%x", ins.a, ins.imm);
            break;
        case Op::LOAD:
            std::snprintf(buf, sizeof buf, "LOAD r%u, r%u, 0x%x", ins.a, ins.b, ins.imm);
            break;
        case Op::STORE:
            std::snprintf(buf, sizeof buf, "STORE r%u, r%u, 0x%x", ins.a, ins.b, ins.imm);
            break;
        case Op::CALL:
            std::snprintf(buf, sizeof buf, "CALL 0x%x", ins.imm);
            break;
        case Op::CALLIND:
            std::snprintf(buf, sizeof buf, "CALLIND r%u, 0x%x", ins.a, ins.imm);
            break;
        case Op::RET:
            std::snprintf(buf, sizeof buf, "RET");
            break;
        case Op::JMP:
            std::snprintf(buf, sizeof buf, "JMP 0x%x", ins.imm);
            break;
        case Op::BRZ:
            std::snprintf(buf, sizeof buf, "BRZ r%u, 0x%x", ins.a, ins.imm);
            break;
        case Op::COPY:
            std::snprintf(buf, sizeof buf, "COPY r%u, r%u, r%u", ins.a, ins.b, ins.imm & 0xF);
            break;
        case Op::CMPB:
            std::snprintf(buf, sizeof buf, "CMPB r%u, r%u, 0x%x", ins.a, ins.b, ins.imm & 0xFF);
            break;
        case Op::ADDI: {
            uint8_t rs1 = static_cast<uint8_t>(ins.b & 0xFF);
            uint8_t rs2 = static_cast<uint8_t>(ins.b >> 8);
            if (rs2 < kRegisterCount)
                std::snprintf(buf, sizeof buf, "ADDI r%u, r%u, r%u, 0x%x", ins.a, rs1, rs2, ins.imm);
            else
                std::snprintf(buf, sizeof buf, "ADDI r%u, r%u, 0x%x", ins.a, rs1, ins.imm);
            break;
        }
        default:
            std::snprintf(buf, sizeof buf, ".raw 0x%02x a=%u b=%u imm=0x%x", ins.opcode, ins.a,
                          ins.b, ins.imm);
    }
    return buf;
}

// Convenience constructors; these keep the assembler and the patch payload
// builders readable.
namespace ins {

inline Instruction halt(uint32_t code = 0) { return {0x00, 0, 0, code}; }
inline Instruction loadi(uint8_t rd, uint32_t imm) { return {0x01, rd, 0, imm}; }
inline Instruction load(uint8_t rd, uint8_t raddr, uint32_t off = 0) { return {0x02, rd, raddr, off}; }
inline Instruction store(uint8_t rs, uint8_t raddr, uint32_t off = 0) { return {0x03, rs, raddr, off}; }
inline Instruction call(uint32_t target) { return {0x10, 0, 0, target}; }
inline Instruction callind(uint8_t ridx, uint32_t table_off) { return {0x11, ridx, 0, table_off}; }
inline Instruction ret() { return {0x12, 0, 0, 0}; }
inline Instruction jmp(uint32_t target) { return {0x13, 0, 0, target}; }
inline Instruction brz(uint8_t r, uint32_t target) { return {0x14, r, 0, target}; }
inline Instruction copy(uint8_t rsrc, uint8_t rlen, uint8_t rdst) { return {0x20, rsrc, rlen, rdst}; }
inline Instruction cmpb(uint8_t rd, uint8_t raddr, uint8_t value) { return {0x21, rd, raddr, value}; }
inline Instruction addi(uint8_t rd, uint8_t rs1, uint32_t imm) {
    return {0x22, rd, static_cast<uint16_t>(rs1 | (kNoReg << 8)), imm};
}
inline Instruction addrr(uint8_t rd, uint8_t rs1, uint8_t rs2, uint32_t imm = 0) {
    return {0x22, rd, static_cast<uint16_t>(rs1 | (rs2 << 8)), imm};
}

}  // namespace ins

}  // namespace setsim
