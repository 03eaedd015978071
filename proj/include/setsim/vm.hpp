#pragma once

// Deterministic interpreter for loaded enclaves.
//
// Address space:
//   [0, untrusted_len)                      untrusted memory
//   [kEnclaveBase, kEnclaveBase+enclave_len) enclave memory:
//       CODE at +0, RODATA after it, RWDATA after that, the remainder is
//       zeroed scratch including the data stack below stack_top.
//
// Executing (trusted) code may read both ranges and write everything except
// CODE/RODATA. The harness and the scripted agent act in untrusted context
// and may touch only the untrusted range; violations fault, never silently
// succeed.
//
// Ecall entry convention: r0 = index, r1..r6 = args, r7 = arg count,
// r11 = stack_top, r13/r14/r15 = enclave base/length, untrusted length
// (an enclave knows its own extent). r8/r9 are runtime scratch. Arguments
// are also mirrored into the stack frame, one 32-bit slot per argument at
// stack_top-4*(i+1), unused slots zeroed, so by-value args and locals exist
// in memory for anything that walks the stack.
//
// Scheduling with an agent is cooperative and fixed: the VM executes up to
// 64 instructions, then the agent may complete one ready action, repeating
// until done or the step budget runs out.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "setsim/assembler.hpp"
#include "setsim/image.hpp"
#include "setsim/isa.hpp"
#include "setsim/signing.hpp"

namespace setsim::vm {

inline constexpr uint32_t kAgentQuantum = 64;
inline constexpr uint64_t kDefaultStepBudget = 1'000'000;
inline constexpr uint32_t kMaxUntrustedLen = 0x0100'0000;  // keeps pointer-class heuristics exact
inline constexpr uint32_t kMaxCallDepth = 4096;
inline constexpr size_t kMaxEcallArgs = 6;

class VmError : public std::runtime_error {
  public:
    explicit VmError(const std::string& what) : std::runtime_error(what) {}
};

struct MemoryLayout {
    uint32_t untrusted_len = 0x10000;  // untrusted base is fixed at 0
    uint32_t enclave_len = 0x10000;    // enclave base is fixed at kEnclaveBase
    uint32_t stack_top = 0;            // absolute address within the enclave range
    std::vector<std::pair<uint32_t, uint32_t>> out_buffers;  // (addr, len) in untrusted range

    static MemoryLayout standard(uint32_t untrusted = 0x10000, uint32_t enclave = 0x10000) {
        MemoryLayout l;
        l.untrusted_len = untrusted;
        l.enclave_len = enclave;
        l.stack_top = kEnclaveBase + enclave - 64;
        return l;
    }

    void validate() const {
        if (untrusted_len == 0 || untrusted_len > kMaxUntrustedLen)
            throw VmError("untrusted_len out of range");
        if (enclave_len == 0) throw VmError("enclave_len must be positive");
        if (stack_top <= kEnclaveBase || stack_top > kEnclaveBase + enclave_len)
            throw VmError("stack_top outside enclave range");
        for (auto [addr, len] : out_buffers) {
            if (addr + static_cast<uint64_t>(len) > untrusted_len)
                throw VmError("out buffer outside untrusted range");
        }
    }
};

enum class PtrClass : uint8_t { TRUSTED, UNTRUSTED, INVALID };

inline PtrClass classify_pointer(const MemoryLayout& layout, uint32_t addr) {
    if (addr < layout.untrusted_len) return PtrClass::UNTRUSTED;
    if (addr >= kEnclaveBase && addr - kEnclaveBase < layout.enclave_len) return PtrClass::TRUSTED;
    return PtrClass::INVALID;
}

enum class FaultKind : uint8_t {
    OutOfBoundsAccess,
    BadOpcode,
    DispatchFault,
    WriteProtected,
    StackOverflow,
};

inline const char* fault_name(FaultKind k) {
    switch (k) {
        case FaultKind::OutOfBoundsAccess: return "OutOfBoundsAccess";
        case FaultKind::BadOpcode: return "BadOpcode";
        case FaultKind::DispatchFault: return "DispatchFault";
        case FaultKind::WriteProtected: return "WriteProtected";
        case FaultKind::StackOverflow: return "StackOverflow";
    }
    return "?";
}

struct Completion {
    enum class Kind : uint8_t { Returned, Halted } kind = Kind::Returned;
    uint32_t exit_code = 0;
};

struct Fault {
    FaultKind kind = FaultKind::OutOfBoundsAccess;
    uint32_t pc = 0;
    std::string detail;
};

struct Deadlock {
    std::string detail;
};

using Outcome = std::variant<Completion, Fault, Deadlock>;

inline bool completed(const Outcome& o) { return std::holds_alternative<Completion>(o); }
inline bool deadlocked(const Outcome& o) { return std::holds_alternative<Deadlock>(o); }

struct VmState {
    MemoryLayout layout;
    Bytes untrusted;
    Bytes enclave;
    uint32_t code_len = 0;
    uint32_t rodata_len = 0;
    uint32_t rwdata_len = 0;
    uint32_t entry_offset = 0;
    uint32_t table_entries_off = 0;  // within RODATA
    uint16_t table_count = 0;

    std::array<uint32_t, kRegisterCount> regs{};
    uint32_t pc = 0;
    std::vector<uint32_t> call_stack;
    uint64_t steps_executed = 0;
    bool halted = false;

    uint32_t ro_end() const { return code_len + rodata_len; }  // write protection boundary
};

// The frame region below stack_top that the ecall entry mirror writes into.
inline constexpr uint32_t kStackFrameReserve = 64;

// Copies the accepted enclave into a fresh state.
inline VmState load(const LoadedEnclave& enclave, const MemoryLayout& layout) {
    layout.validate();
    const EnclaveImage& img = enclave.image;
    size_t needed = img.code().size() + img.rodata().size() + img.rwdata().size();
    if (needed > layout.enclave_len)
        throw VmError("image does not fit: needs " + std::to_string(needed) + " bytes, enclave_len is " +
                      std::to_string(layout.enclave_len));
    // The entry frame mirror must not overlap the image's initialized data.
    if (layout.stack_top - kEnclaveBase < needed + kStackFrameReserve)
        throw VmError("stack_top leaves no frame clearance above the image data");

    VmState st;
    st.layout = layout;
    st.untrusted.assign(layout.untrusted_len, 0);
    st.enclave.assign(layout.enclave_len, 0);
    st.code_len = static_cast<uint32_t>(img.code().size());
    st.rodata_len = static_cast<uint32_t>(img.rodata().size());
    st.rwdata_len = static_cast<uint32_t>(img.rwdata().size());
    st.entry_offset = img.header.entry_offset;
    std::copy(img.code().begin(), img.code().end(), st.enclave.begin());
    std::copy(img.rodata().begin(), img.rodata().end(), st.enclave.begin() + st.code_len);
    std::copy(img.rwdata().begin(), img.rwdata().end(), st.enclave.begin() + st.ro_end());

    if (auto table = read_ecall_table(img)) {
        st.table_entries_off = table->rodata_offset;
        st.table_count = table->count();
    }
    return st;
}

// Untrusted-context accessors for the harness. Out-of-range access throws:
// the harness stands for untrusted code and gets no enclave view.
inline void write_untrusted(VmState& st, uint32_t addr, ByteSpan data) {
    if (addr + static_cast<uint64_t>(data.size()) > st.layout.untrusted_len)
        throw VmError("untrusted write out of range");
    std::copy(data.begin(), data.end(), st.untrusted.begin() + addr);
}

inline Bytes read_untrusted(const VmState& st, uint32_t addr, uint32_t len) {
    if (addr + static_cast<uint64_t>(len) > st.layout.untrusted_len)
        throw VmError("untrusted read out of range");
    return Bytes(st.untrusted.begin() + addr, st.untrusted.begin() + addr + len);
}

struct AgentAction {
    enum class Kind : uint8_t { WaitForMarker, Read, WriteFlag, Record } kind = Kind::Record;
    uint32_t addr = 0;
    uint32_t len = 0;
    uint32_t value = 0;
    std::array<uint8_t, 4> marker{{'M', 'A', 'L', 'W'}};
    std::string label;

    static AgentAction wait_for_marker(uint32_t addr,
                                       std::array<uint8_t, 4> marker = {{'M', 'A', 'L', 'W'}}) {
        AgentAction a;
        a.kind = Kind::WaitForMarker;
        a.addr = addr;
        a.marker = marker;
        return a;
    }
    static AgentAction read(uint32_t addr, uint32_t len) {
        AgentAction a;
        a.kind = Kind::Read;
        a.addr = addr;
        a.len = len;
        return a;
    }
    static AgentAction write_flag(uint32_t addr, uint32_t value) {
        AgentAction a;
        a.kind = Kind::WriteFlag;
        a.addr = addr;
        a.value = value;
        return a;
    }
    static AgentAction record(std::string label) {
        AgentAction a;
        a.kind = Kind::Record;
        a.label = std::move(label);
        return a;
    }
};

struct UntrustedAgent {
    std::vector<AgentAction> script;
};

struct TranscriptEvent {
    std::string kind;   // "read", "write-flag", "record", "probe"
    uint32_t addr = 0;
    Bytes bytes;
    uint32_t value = 0;
    std::string label;
};

struct EcallRequest {
    uint16_t index = 0;
    std::vector<uint32_t> args;
};

struct Transcript {
    EcallRequest request;
    std::vector<TranscriptEvent> events;
    Outcome outcome = Completion{};
    uint64_t steps = 0;
    Bytes untrusted_snapshot;

    std::string text() const;
};

// Debug facility: when the VM first reaches `pc`, record `len` bytes at
// absolute address `addr` into the transcript as a "probe" event.
struct DebugProbe {
    uint32_t pc = 0;
    uint32_t addr = 0;
    uint32_t len = 0;
};

namespace detail {

enum class Region : uint8_t { Untrusted, Enclave, None };

inline Region region_for(const VmState& st, uint32_t addr, uint32_t len) {
    uint64_t end = static_cast<uint64_t>(addr) + len;
    if (end <= st.layout.untrusted_len) return Region::Untrusted;
    if (addr >= kEnclaveBase && end <= static_cast<uint64_t>(kEnclaveBase) + st.layout.enclave_len)
        return Region::Enclave;
    return Region::None;
}

struct AccessResult {
    bool ok = true;
    Fault fault;
};

inline AccessResult fail(FaultKind kind, uint32_t pc, std::string detail) {
    return {false, Fault{kind, pc, std::move(detail)}};
}

inline AccessResult read_mem(const VmState& st, uint32_t addr, uint32_t len, uint8_t* out) {
    Region r = region_for(st, addr, len);
    if (r == Region::None)
        return fail(FaultKind::OutOfBoundsAccess, st.pc,
                    "read of " + std::to_string(len) + " bytes at 0x" + to_hex(Bytes{
                        static_cast<uint8_t>(addr >> 24), static_cast<uint8_t>(addr >> 16),
                        static_cast<uint8_t>(addr >> 8), static_cast<uint8_t>(addr)}));
    const Bytes& mem = r == Region::Untrusted ? st.untrusted : st.enclave;
    uint32_t base = r == Region::Untrusted ? 0 : kEnclaveBase;
    std::copy(mem.begin() + (addr - base), mem.begin() + (addr - base) + len, out);
    return {};
}

inline AccessResult write_mem(VmState& st, uint32_t addr, ByteSpan data) {
    Region r = region_for(st, addr, static_cast<uint32_t>(data.size()));
    if (r == Region::None)
        return fail(FaultKind::OutOfBoundsAccess, st.pc, "write out of range");
    if (r == Region::Enclave) {
        uint32_t off = addr - kEnclaveBase;
        if (off < st.ro_end())
            return fail(FaultKind::WriteProtected, st.pc, "write into CODE/RODATA");
        std::copy(data.begin(), data.end(), st.enclave.begin() + off);
    } else {
        std::copy(data.begin(), data.end(), st.untrusted.begin() + addr);
    }
    return {};
}

inline uint32_t load_u32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

}  // namespace detail

// Executes one instruction. Returns nullopt to continue, an Outcome to stop.
inline std::optional<Outcome> step(VmState& st) {
    if (st.pc % kInstrSize != 0 || st.pc + kInstrSize > st.code_len)
        return Fault{FaultKind::OutOfBoundsAccess, st.pc, "pc outside CODE"};
    Instruction ins = Instruction::decode(st.enclave, st.pc);
    ++st.steps_executed;
    uint32_t next = st.pc + kInstrSize;

    auto& regs = st.regs;
    switch (ins.op()) {
        case Op::HALT:
            st.halted = true;
            return Completion{Completion::Kind::Halted, ins.imm};
        case Op::LOADI:
            regs[ins.a & 0xF] = ins.imm;
            break;
        case Op::LOAD: {
            uint8_t buf[4];
            auto r = detail::read_mem(st, regs[ins.b & 0xF] + ins.imm, 4, buf);
            if (!r.ok) return r.fault;
            regs[ins.a & 0xF] = detail::load_u32(buf);
            break;
        }
        case Op::STORE: {
            uint32_t v = regs[ins.a & 0xF];
            uint8_t buf[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                              static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
            auto r = detail::write_mem(st, regs[ins.b & 0xF] + ins.imm, ByteSpan(buf, 4));
            if (!r.ok) return r.fault;
            break;
        }
        case Op::CALL:
            if (st.call_stack.size() >= kMaxCallDepth)
                return Fault{FaultKind::StackOverflow, st.pc, "call depth limit"};
            st.call_stack.push_back(next);
            next = ins.imm;
            break;
        case Op::CALLIND: {
            if (st.call_stack.size() >= kMaxCallDepth)
                return Fault{FaultKind::StackOverflow, st.pc, "call depth limit"};
            uint64_t slot = static_cast<uint64_t>(ins.imm) + 4ull * regs[ins.a & 0xF];
            if (slot + 4 > st.rodata_len)
                return Fault{FaultKind::OutOfBoundsAccess, st.pc, "table slot outside RODATA"};
            uint32_t target =
                detail::load_u32(st.enclave.data() + st.code_len + static_cast<uint32_t>(slot));
            st.call_stack.push_back(next);
            next = target;
            break;
        }
        case Op::RET:
            if (st.call_stack.empty()) {
                st.halted = true;
                return Completion{Completion::Kind::Returned, 0};
            }
            next = st.call_stack.back();
            st.call_stack.pop_back();
            break;
        case Op::JMP:
            next = ins.imm;
            break;
        case Op::BRZ:
            if (regs[ins.a & 0xF] == 0) next = ins.imm;
            break;
        case Op::COPY: {
            uint32_t src = regs[ins.a & 0xF];
            uint32_t len = regs[ins.b & 0xF];
            uint32_t dst = regs[ins.imm & 0xF];
            if (len > 0) {
                Bytes tmp(len);
                auto r = detail::read_mem(st, src, len, tmp.data());
                if (!r.ok) return r.fault;
                auto w = detail::write_mem(st, dst, tmp);
                if (!w.ok) return w.fault;
            }
            break;
        }
        case Op::CMPB: {
            uint8_t b = 0;
            auto r = detail::read_mem(st, regs[ins.b & 0xF], 1, &b);
            if (!r.ok) return r.fault;
            regs[ins.a & 0xF] = (b == (ins.imm & 0xFF)) ? 1 : 0;
            break;
        }
        case Op::ADDI: {
            uint8_t rs1 = static_cast<uint8_t>(ins.b & 0xFF);
            uint8_t rs2 = static_cast<uint8_t>(ins.b >> 8);
            uint32_t v = regs[rs1 & 0xF] + ins.imm;
            if (rs2 < kRegisterCount) v += regs[rs2];
            regs[ins.a & 0xF] = v;
            break;
        }
        default:
            return Fault{FaultKind::BadOpcode, st.pc,
                         "opcode 0x" + to_hex(Bytes{ins.opcode})};
    }
    st.pc = next;
    return std::nullopt;
}

// Full cooperative run. `agent` may be null (plain ecall).
inline Transcript run_ecall(VmState& st, const EcallRequest& req, const UntrustedAgent* agent,
                            uint64_t step_budget = kDefaultStepBudget,
                            const DebugProbe* probe = nullptr) {
    if (step_budget == 0) throw VmError("step budget must be positive");
    if (req.args.size() > kMaxEcallArgs) throw VmError("too many ecall arguments");

    Transcript tr;
    tr.request = req;

    if (req.index >= st.table_count) {
        tr.outcome = Fault{FaultKind::DispatchFault, st.entry_offset,
                           "ecall index " + std::to_string(req.index) + " >= table count " +
                               std::to_string(st.table_count)};
        return tr;
    }

    st.regs.fill(0);
    st.regs[0] = req.index;
    for (size_t i = 0; i < req.args.size(); ++i) st.regs[1 + i] = req.args[i];
    st.regs[7] = static_cast<uint32_t>(req.args.size());
    st.regs[11] = st.layout.stack_top;
    st.regs[13] = kEnclaveBase;
    st.regs[14] = st.layout.enclave_len;
    st.regs[15] = st.layout.untrusted_len;
    st.pc = st.entry_offset;
    st.call_stack.clear();
    st.halted = false;

    // Mirror the arguments into the stack frame, zeroing unused slots.
    for (size_t i = 0; i < kMaxEcallArgs; ++i) {
        uint32_t v = i < req.args.size() ? req.args[i] : 0;
        uint32_t addr = st.layout.stack_top - 4 * static_cast<uint32_t>(i + 1);
        uint8_t buf[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                          static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
        auto w = detail::write_mem(st, addr, ByteSpan(buf, 4));
        if (!w.ok) {
            tr.outcome = w.fault;
            return tr;
        }
    }

    size_t agent_cursor = 0;
    uint64_t executed = 0;
    bool probe_fired = false;
    std::optional<Outcome> done;

    auto agent_turn = [&]() -> std::optional<Outcome> {
        if (!agent || agent_cursor >= agent->script.size()) return std::nullopt;
        const AgentAction& a = agent->script[agent_cursor];
        // Every agent touch is untrusted context: range-check against the
        // untrusted region and fault on violation.
        auto in_untrusted = [&](uint32_t addr, uint32_t len) {
            return static_cast<uint64_t>(addr) + len <= st.layout.untrusted_len;
        };
        switch (a.kind) {
            case AgentAction::Kind::WaitForMarker: {
                if (!in_untrusted(a.addr, 4))
                    return Fault{FaultKind::OutOfBoundsAccess, st.pc,
                                 "agent wait outside untrusted range"};
                if (std::memcmp(st.untrusted.data() + a.addr, a.marker.data(), 4) == 0)
                    ++agent_cursor;  // marker present: the wait completes
                break;
            }
            case AgentAction::Kind::Read: {
                if (!in_untrusted(a.addr, a.len))
                    return Fault{FaultKind::OutOfBoundsAccess, st.pc,
                                 "agent read outside untrusted range"};
                TranscriptEvent ev;
                ev.kind = "read";
                ev.addr = a.addr;
                ev.bytes.assign(st.untrusted.begin() + a.addr, st.untrusted.begin() + a.addr + a.len);
                tr.events.push_back(std::move(ev));
                ++agent_cursor;
                break;
            }
            case AgentAction::Kind::WriteFlag: {
                if (!in_untrusted(a.addr, 4))
                    return Fault{FaultKind::OutOfBoundsAccess, st.pc,
                                 "agent write outside untrusted range"};
                uint32_t v = a.value;
                st.untrusted[a.addr] = static_cast<uint8_t>(v);
                st.untrusted[a.addr + 1] = static_cast<uint8_t>(v >> 8);
                st.untrusted[a.addr + 2] = static_cast<uint8_t>(v >> 16);
                st.untrusted[a.addr + 3] = static_cast<uint8_t>(v >> 24);
                TranscriptEvent ev;
                ev.kind = "write-flag";
                ev.addr = a.addr;
                ev.value = v;
                tr.events.push_back(std::move(ev));
                ++agent_cursor;
                break;
            }
            case AgentAction::Kind::Record: {
                TranscriptEvent ev;
                ev.kind = "record";
                ev.label = a.label;
                tr.events.push_back(std::move(ev));
                ++agent_cursor;
                break;
            }
        }
        return std::nullopt;
    };

    while (true) {
        // VM quantum
        uint32_t quantum = kAgentQuantum;
        while (!done && quantum > 0 && executed < step_budget) {
            if (probe && !probe_fired && st.pc == probe->pc) {
                probe_fired = true;
                Bytes snap(probe->len);
                auto r = detail::read_mem(st, probe->addr, probe->len, snap.data());
                if (r.ok) {
                    TranscriptEvent ev;
                    ev.kind = "probe";
                    ev.addr = probe->addr;
                    ev.bytes = std::move(snap);
                    tr.events.push_back(std::move(ev));
                }
            }
            done = step(st);
            ++executed;
            --quantum;
        }
        // Agent turn
        if (auto fault = agent_turn()) {
            done = *fault;
            break;
        }
        if (done) {
            if (!agent || agent_cursor >= agent->script.size()) break;
            // VM finished but the agent still has script: let it drain, but a
            // wait that can never complete is a deadlock.
            const AgentAction& a = agent->script[agent_cursor];
            if (a.kind == AgentAction::Kind::WaitForMarker &&
                (static_cast<uint64_t>(a.addr) + 4 > st.layout.untrusted_len ||
                 std::memcmp(st.untrusted.data() + a.addr, a.marker.data(), 4) != 0)) {
                done = Deadlock{"agent waiting on marker after enclave finished"};
                break;
            }
            continue;
        }
        if (executed >= step_budget) {
            done = Deadlock{"step budget exhausted after " + std::to_string(executed) + " steps"};
            break;
        }
    }

    tr.outcome = *done;
    tr.steps = executed;
    tr.untrusted_snapshot = st.untrusted;
    return tr;
}

inline Transcript ecall(VmState& st, uint16_t index, const std::vector<uint32_t>& args,
                        uint64_t step_budget = kDefaultStepBudget) {
    return run_ecall(st, EcallRequest{index, args}, nullptr, step_budget);
}

inline Transcript run_with_agent(VmState& st, const EcallRequest& req, const UntrustedAgent& agent,
                                 uint64_t step_budget = kDefaultStepBudget,
                                 const DebugProbe* probe = nullptr) {
    return run_ecall(st, req, &agent, step_budget, probe);
}

inline std::string outcome_text(const Outcome& o) {
    if (auto* c = std::get_if<Completion>(&o)) {
        char buf[64];
        if (c->kind == Completion::Kind::Returned)
            std::snprintf(buf, sizeof buf, "returned");
        else
            std::snprintf(buf, sizeof buf, "halted (code 0x%x)", c->exit_code);
        return buf;
    }
    if (auto* f = std::get_if<Fault>(&o)) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "fault %s at pc 0x%x: %s", fault_name(f->kind), f->pc,
                      f->detail.c_str());
        return buf;
    }
    return "deadlock: " + std::get<Deadlock>(o).detail;
}

// All-zero rows collapse to "*" so full snapshots stay readable.
inline std::string hexdump_elided(ByteSpan data, uint32_t base) {
    std::string out;
    bool eliding = false;
    for (size_t row = 0; row < data.size(); row += 16) {
        size_t n = std::min<size_t>(16, data.size() - row);
        bool all_zero = true;
        for (size_t i = 0; i < n; ++i)
            if (data[row + i] != 0) {
                all_zero = false;
                break;
            }
        if (all_zero) {
            if (!eliding) {
                out += "*\n";
                eliding = true;
            }
            continue;
        }
        eliding = false;
        out += hexdump(data.subspan(row, n), base + static_cast<uint32_t>(row));
    }
    return out;
}

inline std::string Transcript::text() const {
    std::string out = "== transcript ==\n";
    char buf[128];
    std::snprintf(buf, sizeof buf, "ecall %u, %zu args\n", request.index, request.args.size());
    out += buf;
    for (size_t i = 0; i < request.args.size(); ++i) {
        std::snprintf(buf, sizeof buf, "  arg%zu = 0x%08x\n", i, request.args[i]);
        out += buf;
    }
    for (const TranscriptEvent& ev : events) {
        if (ev.kind == "read" || ev.kind == "probe") {
            std::snprintf(buf, sizeof buf, "[agent] %s @0x%08x len %zu\n", ev.kind.c_str(), ev.addr,
                          ev.bytes.size());
            out += buf;
            out += hexdump(ev.bytes, ev.addr);
        } else if (ev.kind == "write-flag") {
            std::snprintf(buf, sizeof buf, "[agent] write-flag @0x%08x = %u\n", ev.addr, ev.value);
            out += buf;
        } else {
            out += "[agent] record: " + ev.label + "\n";
        }
    }
    out += "outcome: " + outcome_text(outcome) + " (steps " + std::to_string(steps) + ")\n";
    out += "== untrusted memory ==\n";
    out += hexdump_elided(untrusted_snapshot, 0);
    return out;
}

}  // namespace setsim::vm
