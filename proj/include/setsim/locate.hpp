#pragma once

// Ecall-table discovery: the adversary-side heuristic walk.
//
// Starting from the exported entry offset, scan forward; follow every CALL;
// the first table-indexing instruction (CALLIND) names the RODATA offset of
// the entry array. Validate the "ECTB" tag sitting 6 bytes before it, read
// the count and entries, then skip the fixed wrapper stub in front of each
// entry to resolve the developer function.
//
// The walk is the discovery mechanism; the tag is only checked once the walk
// arrives there. Heuristic parameters are keyed by the sdk_version marker in
// the header: only version 1 exists today, the table is where future sets
// would go.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "setsim/image.hpp"
#include "setsim/isa.hpp"

namespace setsim {

class LocateError : public std::runtime_error {
  public:
    enum class Kind {
        UnsupportedSdkVersion,
        WalkOutOfBounds,
        WalkStepLimit,
        NoTableIndexing,
        SentinelMismatch,
        EntryOutOfBounds,
    };

    LocateError(Kind kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
    Kind kind() const { return kind_; }

  private:
    Kind kind_;
};

struct HeuristicSet {
    uint32_t max_walk_steps = 64;
    uint32_t wrapper_instructions = 3;
};

inline const std::map<uint16_t, HeuristicSet>& heuristic_sets() {
    static const std::map<uint16_t, HeuristicSet> sets = {
        {1, HeuristicSet{64, 3}},
    };
    return sets;
}

struct LocatedTable {
    EcallTable table;
    std::vector<uint32_t> resolved_offsets;  // developer functions, one per entry
};

inline LocatedTable locate_ecall_table(const EnclaveImage& img) {
    auto hs_it = heuristic_sets().find(img.header.sdk_version);
    if (hs_it == heuristic_sets().end())
        throw LocateError(LocateError::Kind::UnsupportedSdkVersion,
                          "no heuristics for sdk_version " +
                              std::to_string(img.header.sdk_version));
    const HeuristicSet& hs = hs_it->second;

    const Bytes& code = img.code();
    const Bytes& ro = img.rodata();

    // (1) exported entry, (2)-(4) follow the call chain until something
    // indexes into RODATA.
    uint32_t pc = img.header.entry_offset;
    uint32_t table_imm = 0;
    bool found = false;
    for (uint32_t step = 0; step < hs.max_walk_steps; ++step) {
        if (pc % kInstrSize != 0 || pc + kInstrSize > code.size())
            throw LocateError(LocateError::Kind::WalkOutOfBounds,
                              "walk left CODE at offset " + std::to_string(pc));
        Instruction ins = Instruction::decode(code, pc);
        if (ins.op() == Op::CALL) {
            pc = ins.imm;
        } else if (ins.op() == Op::CALLIND) {
            table_imm = ins.imm;
            found = true;
            break;
        } else {
            pc += kInstrSize;
        }
    }
    if (!found)
        throw LocateError(LocateError::Kind::NoTableIndexing,
                          "no table-indexing instruction within " +
                              std::to_string(hs.max_walk_steps) + " walk steps");

    // (5) tag + count live just before the entry array the indexing named.
    if (table_imm < 6 || table_imm > ro.size())
        throw LocateError(LocateError::Kind::SentinelMismatch,
                          "walked-to table offset outside RODATA");
    if (std::memcmp(ro.data() + table_imm - 6, kEcallSentinel, 4) != 0)
        throw LocateError(LocateError::Kind::SentinelMismatch,
                          "table tag mismatch at walked-to offset " + std::to_string(table_imm));
    uint16_t count = get_u16le(ro, table_imm - 2);
    if (table_imm + 4u * count > ro.size())
        throw LocateError(LocateError::Kind::SentinelMismatch, "entry array exceeds RODATA");

    LocatedTable out;
    out.table.rodata_offset = table_imm;
    for (uint16_t i = 0; i < count; ++i) {
        uint32_t entry = get_u32le(ro, table_imm + 4u * i);
        if (entry % kInstrSize != 0 || entry + kInstrSize > code.size())
            throw LocateError(LocateError::Kind::EntryOutOfBounds,
                              "table entry " + std::to_string(i) + " outside CODE");
        out.table.entries.push_back(entry);
        // (6)-(7) hop over the fixed wrapper stub to the developer function.
        uint32_t body = entry + hs.wrapper_instructions * kInstrSize;
        if (body + kInstrSize > code.size())
            throw LocateError(LocateError::Kind::EntryOutOfBounds,
                              "resolved function for entry " + std::to_string(i) +
                                  " outside CODE");
        out.resolved_offsets.push_back(body);
    }
    return out;
}

}  // namespace setsim
