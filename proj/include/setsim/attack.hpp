#pragma once

// The malware side: signer-process identification, interception of the
// pre-signing window, patch planning into free chunks with hook/trampoline
// rewiring, and the two payload generators (stack leak, decrypt tamper).
//
// Payload convention: a payload is raw instruction bytes, a multiple of 8,
// that re-emits the displaced (saved) instruction somewhere before control
// returns. In-payload branches carry kRelocFlag with a payload-relative imm;
// plan_patch resolves them to final CODE offsets when it places fragments
// (that is what keeps split fragments semantically identical to the unsplit
// program). The planner appends one JMP per split (label-H link) and a final
// JMP to BACK = hook_site + 8.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "setsim/image.hpp"
#include "setsim/isa.hpp"
#include "setsim/locate.hpp"
#include "setsim/pipeline.hpp"
#include "setsim/vm.hpp"

namespace setsim::attack {

// Exit code the leak payload aborts with when no argument classifies as an
// untrusted pointer.
inline constexpr uint32_t kNoLeakVectorExit = 0xE0;
inline constexpr uint32_t kTamperScanWindow = 64;
inline constexpr uint32_t kMaxStackLeakBytes = 64;  // the VM's mirrored frame region

class AttackError : public std::runtime_error {
  public:
    enum class Kind {
        AlreadyIntercepted,
        PipelineHardened,
        BadHookSite,
        BadPayload,
        InsufficientFreeSpace,
        PlanImageMismatch,
        BadEcallIndex,
        HookSiteNotFound,
        NeedleLongerThanBuffer,
        BadSpec,
    };

    AttackError(Kind kind, std::string msg, uint32_t shortfall = 0)
        : std::runtime_error(std::move(msg)), kind_(kind), shortfall_(shortfall) {}

    Kind kind() const { return kind_; }
    // For InsufficientFreeSpace: bytes missing after exhausting every window.
    uint32_t shortfall() const { return shortfall_; }

  private:
    Kind kind_;
    uint32_t shortfall_;
};

// ---------------------------------------------------------------------------
// Signer identification

struct ProcessDescriptor {
    std::string name;
    std::vector<std::string> argv;
    uint64_t memory_bytes = 0;
    Hash code_hash{};
    std::optional<std::string> signer_cert_id;
};

struct SignerMatcher {
    std::optional<std::string> name_glob;
    std::optional<std::string> argv_substring;
    std::optional<std::pair<uint64_t, uint64_t>> memory_range;  // inclusive
    std::optional<Hash> code_hash;
    std::optional<std::string> cert_id;
};

namespace detail {

inline bool glob_match(const char* pat, const char* str) {
    if (*pat == '\0') return *str == '\0';
    if (*pat == '*') return glob_match(pat + 1, str) || (*str && glob_match(pat, str + 1));
    if (*str == '\0') return false;
    if (*pat == '?' || *pat == *str) return glob_match(pat + 1, str + 1);
    return false;
}

}  // namespace detail

// First descriptor matching all enabled heuristics; nullopt when nothing does.
inline std::optional<size_t> identify_signer(std::span<const ProcessDescriptor> processes,
                                             const SignerMatcher& m) {
    for (size_t i = 0; i < processes.size(); ++i) {
        const ProcessDescriptor& p = processes[i];
        if (m.name_glob && !detail::glob_match(m.name_glob->c_str(), p.name.c_str())) continue;
        if (m.argv_substring) {
            bool hit = false;
            for (const std::string& a : p.argv)
                if (a.find(*m.argv_substring) != std::string::npos) {
                    hit = true;
                    break;
                }
            if (!hit) continue;
        }
        if (m.memory_range &&
            (p.memory_bytes < m.memory_range->first || p.memory_bytes > m.memory_range->second))
            continue;
        if (m.code_hash && p.code_hash != *m.code_hash) continue;
        if (m.cert_id && (!p.signer_cert_id || *p.signer_cert_id != *m.cert_id)) continue;
        return i;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Interception

class InterceptionHandle {
  public:
    explicit InterceptionHandle(PlainPipeline* p) : pipeline_(p) {}

    const Bytes& image_bytes() const { return pipeline_->inflight_image_bytes(); }
    void write_image_bytes(Bytes bytes) {
        pipeline_->replace_inflight_image_bytes(std::move(bytes));
    }
    SignedEnclave resume() { return pipeline_->resume(); }

  private:
    PlainPipeline* pipeline_;
};

inline InterceptionHandle intercept(SigningPipeline& pipeline) {
    if (!pipeline.interceptable())
        throw AttackError(AttackError::Kind::PipelineHardened,
                          std::string("pipeline '") + pipeline.kind() +
                              "' exposes no pre-material window");
    auto* plain = dynamic_cast<PlainPipeline*>(&pipeline);
    if (!plain)
        throw AttackError(AttackError::Kind::PipelineHardened, "pipeline is not interceptable");
    if (plain->suspended())
        throw AttackError(AttackError::Kind::AlreadyIntercepted, "pipeline already intercepted");
    plain->suspend_at_interception();
    return InterceptionHandle(plain);
}

// ---------------------------------------------------------------------------
// Patch planning

struct PatchFragment {
    uint32_t code_offset = 0;  // aligned placement inside a free chunk
    Bytes bytes;               // payload slice plus the trailing link/back JMP
    FreeChunk chunk;           // the chunk that hosts it
};

struct PatchPlan {
    uint32_t hook_site = 0;
    std::array<uint8_t, kInstrSize> saved_instruction{};
    uint32_t back_offset = 0;
    std::vector<PatchFragment> fragments;

    uint32_t bytes_consumed() const {
        uint32_t n = 0;
        for (const auto& f : fragments) n += static_cast<uint32_t>(f.bytes.size());
        return n;
    }
};

namespace detail {

struct Window {
    uint32_t start = 0;
    uint32_t size = 0;
    FreeChunk chunk;
};

inline std::vector<Window> usable_windows(const EnclaveImage& image, uint32_t hook_site) {
    std::vector<Window> windows;
    for (const FreeChunk& c : find_free_chunks(image)) {
        uint32_t start = (c.code_offset + kInstrSize - 1) & ~static_cast<uint32_t>(kInstrSize - 1);
        uint32_t end = (c.code_offset + c.length) & ~static_cast<uint32_t>(kInstrSize - 1);
        if (end <= start) continue;
        // Fragments may not overlap the hook slot.
        const uint32_t islot = static_cast<uint32_t>(kInstrSize);
        if (hook_site >= start && hook_site < end) {
            if (hook_site > start) windows.push_back({start, hook_site - start, c});
            if (hook_site + islot < end)
                windows.push_back({hook_site + islot, end - hook_site - islot, c});
        } else {
            windows.push_back({start, end - start, c});
        }
    }
    return windows;
}

}  // namespace detail

// Greedy first-fit placement in offset order, splitting at chunk boundaries
// with one linking JMP per split and a final JMP back to hook_site + 8.
inline PatchPlan plan_patch(const EnclaveImage& image, const Bytes& payload, uint32_t hook_site) {
    if (payload.empty() || payload.size() % kInstrSize != 0)
        throw AttackError(AttackError::Kind::BadPayload,
                          "payload length must be a positive multiple of 8");
    if (hook_site % kInstrSize != 0 || hook_site + kInstrSize > image.code().size())
        throw AttackError(AttackError::Kind::BadHookSite, "hook site outside CODE");

    PatchPlan plan;
    plan.hook_site = hook_site;
    plan.back_offset = hook_site + kInstrSize;
    std::copy(image.code().begin() + hook_site, image.code().begin() + hook_site + kInstrSize,
              plan.saved_instruction.begin());

    // Trampoline discipline: the displaced instruction must be re-emitted
    // somewhere in the payload.
    bool saved_present = false;
    for (size_t off = 0; off + kInstrSize <= payload.size(); off += kInstrSize) {
        if (std::memcmp(payload.data() + off, plan.saved_instruction.data(), kInstrSize) == 0) {
            saved_present = true;
            break;
        }
    }
    if (!saved_present)
        throw AttackError(AttackError::Kind::BadPayload,
                          "payload does not re-emit the displaced instruction");

    // Place payload slices.
    struct Placement {
        detail::Window window;
        uint32_t payload_off = 0;
        uint32_t take = 0;
        bool final_fragment = false;
    };
    std::vector<Placement> placements;
    uint32_t remaining = static_cast<uint32_t>(payload.size());
    uint32_t consumed = 0;
    for (const detail::Window& w : detail::usable_windows(image, hook_site)) {
        if (remaining == 0) break;
        if (remaining + kInstrSize <= w.size) {
            placements.push_back({w, consumed, remaining, true});
            consumed += remaining;
            remaining = 0;
            break;
        }
        if (w.size < 2 * kInstrSize) continue;  // no room for progress plus a link
        uint32_t take = std::min(w.size - static_cast<uint32_t>(kInstrSize), remaining);
        take &= ~static_cast<uint32_t>(kInstrSize - 1);
        if (take == 0) continue;
        placements.push_back({w, consumed, take, false});
        consumed += take;
        remaining -= take;
    }
    if (remaining > 0)
        throw AttackError(AttackError::Kind::InsufficientFreeSpace,
                          "insufficient free space: " + std::to_string(remaining + kInstrSize) +
                              " more bytes needed",
                          remaining + kInstrSize);

    // Map payload offsets to final code offsets for relocation.
    auto map_offset = [&placements](uint32_t payload_off) -> std::optional<uint32_t> {
        for (const Placement& p : placements) {
            if (payload_off >= p.payload_off && payload_off < p.payload_off + p.take)
                return p.window.start + (payload_off - p.payload_off);
        }
        return std::nullopt;
    };

    for (size_t i = 0; i < placements.size(); ++i) {
        const Placement& p = placements[i];
        PatchFragment frag;
        frag.code_offset = p.window.start;
        frag.chunk = p.window.chunk;
        frag.bytes.assign(payload.begin() + p.payload_off,
                          payload.begin() + p.payload_off + p.take);
        // Resolve in-payload branches.
        for (size_t off = 0; off + kInstrSize <= frag.bytes.size(); off += kInstrSize) {
            Instruction ins = Instruction::decode(frag.bytes, off);
            if (!(ins.a & kRelocFlag)) continue;
            Op op = ins.op();
            if (op != Op::JMP && op != Op::BRZ && op != Op::CALL)
                throw AttackError(AttackError::Kind::BadPayload,
                                  "relocation flag on a non-branch instruction");
            auto target = map_offset(ins.imm);
            if (!target)
                throw AttackError(AttackError::Kind::BadPayload,
                                  "relocated branch target outside payload");
            ins.a &= static_cast<uint8_t>(~kRelocFlag);
            ins.imm = *target;
            Bytes enc = ins.encode();
            std::copy(enc.begin(), enc.end(), frag.bytes.begin() + static_cast<ptrdiff_t>(off));
        }
        // Trailing jump: link to the next fragment, or back to the hook's
        // successor from the last one.
        uint32_t jump_target =
            p.final_fragment ? plan.back_offset : placements[i + 1].window.start;
        ins::jmp(jump_target).encode_to(frag.bytes);
        plan.fragments.push_back(std::move(frag));
    }
    return plan;
}

// Writes the plan: one JMP at the hook site plus the fragments. Everything
// else is untouched, which the byte-diff tests pin down.
inline EnclaveImage apply_patch(const EnclaveImage& image, const PatchPlan& plan) {
    const Bytes& code = image.code();
    if (plan.hook_site + kInstrSize > code.size())
        throw AttackError(AttackError::Kind::PlanImageMismatch, "hook site outside CODE");
    if (std::memcmp(code.data() + plan.hook_site, plan.saved_instruction.data(), kInstrSize) != 0)
        throw AttackError(AttackError::Kind::PlanImageMismatch,
                          "hook site no longer holds the saved instruction");
    for (const PatchFragment& f : plan.fragments) {
        if (f.code_offset + f.bytes.size() > code.size())
            throw AttackError(AttackError::Kind::PlanImageMismatch, "fragment outside CODE");
        for (size_t i = 0; i < f.bytes.size(); ++i) {
            uint8_t b = code[f.code_offset + i];
            if (b != 0x00 && b != 0xFF)
                throw AttackError(AttackError::Kind::PlanImageMismatch,
                                  "fragment range no longer free");
        }
    }

    EnclaveImage patched = image;
    Bytes& out = patched.code();
    Bytes hook = ins::jmp(plan.fragments.empty() ? plan.back_offset : plan.fragments[0].code_offset)
                     .encode();
    std::copy(hook.begin(), hook.end(), out.begin() + plan.hook_site);
    for (const PatchFragment& f : plan.fragments)
        std::copy(f.bytes.begin(), f.bytes.end(), out.begin() + f.code_offset);
    return patched;
}

inline std::string plan_report(const PatchPlan& plan) {
    char buf[160];
    std::string out = "patch plan\n";
    std::snprintf(buf, sizeof buf, "  hook site   0x%06x (saved: %s)\n", plan.hook_site,
                  disassemble(Instruction::decode(plan.saved_instruction)).c_str());
    out += buf;
    std::snprintf(buf, sizeof buf, "  back label  0x%06x\n", plan.back_offset);
    out += buf;
    for (size_t i = 0; i < plan.fragments.size(); ++i) {
        const PatchFragment& f = plan.fragments[i];
        std::snprintf(buf, sizeof buf,
                      "  fragment %zu  0x%06x..0x%06x (%zu bytes, chunk 0x%06x+%u %s)\n", i,
                      f.code_offset, f.code_offset + static_cast<uint32_t>(f.bytes.size()),
                      f.bytes.size(), f.chunk.code_offset, f.chunk.length,
                      f.chunk.fill == FreeChunk::Fill::ZEROES ? "00" : "ff");
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "  total       %u bytes across %zu fragments\n",
                  plan.bytes_consumed(), plan.fragments.size());
    out += buf;
    return out;
}

// ---------------------------------------------------------------------------
// Payload builder

class PayloadBuilder {
  public:
    void label(const std::string& name) {
        labels_[name] = static_cast<uint32_t>(instrs_.size() * kInstrSize);
    }

    void emit(Instruction ins) { instrs_.push_back(ins); }

    // Branch to a payload-local label; resolved by plan_patch at placement.
    void emit_rel(Instruction ins, const std::string& target) {
        ins.a |= kRelocFlag;
        fixups_.push_back({instrs_.size(), target});
        instrs_.push_back(ins);
    }

    Bytes finish() {
        for (const auto& [idx, name] : fixups_) {
            auto it = labels_.find(name);
            if (it == labels_.end())
                throw AttackError(AttackError::Kind::BadPayload, "unresolved payload label");
            instrs_[idx].imm = it->second;
        }
        Bytes out;
        out.reserve(instrs_.size() * kInstrSize);
        for (const Instruction& i : instrs_) i.encode_to(out);
        return out;
    }

  private:
    std::vector<Instruction> instrs_;
    std::map<std::string, uint32_t> labels_;
    std::vector<std::pair<size_t, std::string>> fixups_;
};

// ---------------------------------------------------------------------------
// Payload generators

struct LeakPatchSpec {
    uint16_t ecall_index = 0;
    uint16_t stack_bytes = 16;
    std::array<uint8_t, 4> marker{{'M', 'A', 'L', 'W'}};
    uint16_t flag_offset_in_outbuf = 24;

    static LeakPatchSpec make(uint16_t ecall_index, uint16_t stack_bytes,
                              uint16_t flag_offset_in_outbuf) {
        if (stack_bytes == 0 || stack_bytes > kMaxStackLeakBytes)
            throw AttackError(AttackError::Kind::BadSpec,
                              "stack_bytes must be in 1.." + std::to_string(kMaxStackLeakBytes));
        LeakPatchSpec s;
        s.ecall_index = ecall_index;
        s.stack_bytes = stack_bytes;
        s.flag_offset_in_outbuf = flag_offset_in_outbuf;
        return s;
    }
};

struct TamperPatchSpec {
    enum class Placement : uint8_t { AFTER_DECRYPT };

    uint16_t ecall_index = 0;
    Bytes needle;
    Bytes replacement;
    Placement placement = Placement::AFTER_DECRYPT;

    static TamperPatchSpec make(uint16_t ecall_index, Bytes needle, Bytes replacement) {
        if (needle.size() != replacement.size())
            throw AttackError(AttackError::Kind::BadSpec,
                              "needle and replacement must have the same length");
        if (needle.empty() || needle.size() % 4 != 0)
            throw AttackError(AttackError::Kind::BadSpec,
                              "needle length must be a positive multiple of 4");
        if (needle.size() > kTamperScanWindow)
            throw AttackError(AttackError::Kind::NeedleLongerThanBuffer,
                              "needle exceeds the " + std::to_string(kTamperScanWindow) +
                                  "-byte buffer scan window");
        TamperPatchSpec s;
        s.ecall_index = ecall_index;
        s.needle = std::move(needle);
        s.replacement = std::move(replacement);
        return s;
    }
};

struct GeneratedPatch {
    Bytes payload;
    uint32_t hook_site = 0;
};

namespace detail {

// Shared prologue: find the first argument slot whose value is a plausible
// untrusted pointer (nonzero, high byte 0x00: exactly the untrusted range,
// since layouts cap it at 16 MiB). On success r10 holds the pointer and
// control reaches `found`; otherwise control reaches `no_vector`.
// Clobbers r8, r9, r10, r12. r11 is the entry stack pointer.
inline void emit_arg_scan(PayloadBuilder& b, const char* found, const char* no_vector) {
    b.emit(ins::loadi(8, vm::kMaxEcallArgs));
    b.emit(ins::addi(9, 11, static_cast<uint32_t>(-4)));
    b.label("arg_scan");
    b.emit(ins::load(10, 9, 0));
    b.emit_rel(ins::brz(10, 0), "arg_next");
    b.emit(ins::addi(12, 9, 3));
    b.emit(ins::cmpb(12, 12, 0x00));
    b.emit_rel(ins::brz(12, 0), "arg_next");
    b.emit_rel(ins::jmp(0), found);
    b.label("arg_next");
    b.emit(ins::addi(9, 9, static_cast<uint32_t>(-4)));
    b.emit(ins::addi(8, 8, static_cast<uint32_t>(-1)));
    b.emit_rel(ins::brz(8, 0), no_vector);
    b.emit_rel(ins::jmp(0), "arg_scan");
}

inline Instruction saved_at(const EnclaveImage& image, uint32_t hook_site) {
    return Instruction::decode(image.code(), hook_site);
}

}  // namespace detail

// Leak payload: find the output buffer among the arguments, prepend the
// marker, copy stack_bytes of the frame behind it, spin on the flag until
// the untrusted agent releases it, then run the displaced instruction and
// return to BACK. Hooked at the beginning of the developer function.
inline GeneratedPatch make_leak_patch(const EnclaveImage& image, const LeakPatchSpec& spec) {
    if (spec.marker != std::array<uint8_t, 4>{{'M', 'A', 'L', 'W'}})
        throw AttackError(AttackError::Kind::BadSpec, "marker must be MALW");
    LocatedTable located = locate_ecall_table(image);
    if (spec.ecall_index >= located.resolved_offsets.size())
        throw AttackError(AttackError::Kind::BadEcallIndex, "no such ecall");
    uint32_t hook = located.resolved_offsets[spec.ecall_index];

    PayloadBuilder b;
    detail::emit_arg_scan(b, "leak", "no_vector");
    b.label("leak");
    b.emit(ins::loadi(12, 0x574C414D));  // "MALW", little-endian
    b.emit(ins::store(12, 10, 0));
    b.emit(ins::addi(12, 10, 4));
    b.emit(ins::addi(9, 11, static_cast<uint32_t>(0) - spec.stack_bytes));
    b.emit(ins::loadi(8, spec.stack_bytes));
    b.emit(ins::copy(9, 8, 12));
    b.label("spin");
    b.emit(ins::addi(12, 10, spec.flag_offset_in_outbuf));
    b.emit(ins::load(12, 12, 0));
    b.emit_rel(ins::brz(12, 0), "spin");
    b.emit_rel(ins::jmp(0), "epilogue");
    b.label("no_vector");
    b.emit(ins::halt(kNoLeakVectorExit));
    b.label("epilogue");
    b.emit(detail::saved_at(image, hook));
    return {b.finish(), hook};
}

// Tamper payload: find the plaintext buffer, scan up to the window (or a 0
// terminator) for the needle, overwrite it in place with the replacement,
// then displaced instruction + BACK. Hooked just before the final RET of the
// ecall body, i.e. after decryption has written the buffer.
inline GeneratedPatch make_tamper_patch(const EnclaveImage& image, const TamperPatchSpec& spec) {
    LocatedTable located = locate_ecall_table(image);
    if (spec.ecall_index >= located.resolved_offsets.size())
        throw AttackError(AttackError::Kind::BadEcallIndex, "no such ecall");
    uint32_t body = located.resolved_offsets[spec.ecall_index];

    // Placement AFTER_DECRYPT: the instruction before the body's final RET.
    const Bytes& code = image.code();
    std::optional<uint32_t> ret_off;
    for (uint32_t off = body; off + kInstrSize <= code.size(); off += kInstrSize) {
        if (Instruction::decode(code, off).op() == Op::RET) {
            ret_off = off;
            break;
        }
    }
    if (!ret_off || *ret_off == body)
        throw AttackError(AttackError::Kind::HookSiteNotFound,
                          "ecall body has no hookable pre-RET instruction");
    uint32_t hook = *ret_off - kInstrSize;

    PayloadBuilder b;
    detail::emit_arg_scan(b, "have_buffer", "epilogue");  // no buffer: benign
    b.label("have_buffer");
    b.emit(ins::loadi(8, kTamperScanWindow));
    b.emit(ins::addi(9, 10, 0));  // scan pointer
    b.label("buf_scan");
    b.emit(ins::cmpb(12, 9, 0x00));
    b.emit_rel(ins::brz(12, 0), "check_needle");
    b.emit_rel(ins::jmp(0), "epilogue");  // hit the terminator: needle absent
    b.label("check_needle");
    for (size_t i = 0; i < spec.needle.size(); ++i) {
        if (i == 0) {
            b.emit(ins::cmpb(12, 9, spec.needle[0]));
        } else {
            b.emit(ins::addi(12, 9, static_cast<uint32_t>(i)));
            b.emit(ins::cmpb(12, 12, spec.needle[i]));
        }
        b.emit_rel(ins::brz(12, 0), "advance");
    }
    for (size_t w = 0; w < spec.replacement.size(); w += 4) {
        uint32_t word = get_u32le(spec.replacement, w);
        b.emit(ins::loadi(12, word));
        b.emit(ins::store(12, 9, static_cast<uint32_t>(w)));
    }
    b.emit_rel(ins::jmp(0), "epilogue");
    b.label("advance");
    b.emit(ins::addi(9, 9, 1));
    b.emit(ins::addi(8, 8, static_cast<uint32_t>(-1)));
    b.emit_rel(ins::brz(8, 0), "epilogue");
    b.emit_rel(ins::jmp(0), "buf_scan");
    b.label("epilogue");
    b.emit(detail::saved_at(image, hook));
    return {b.finish(), hook};
}

enum class LeakOutcome : uint8_t { Leaked, NoUntrustedPointerArg, Deadlock, Other };

// Interprets a VM run of a leak-patched enclave.
inline LeakOutcome classify_leak_outcome(const vm::Transcript& tr) {
    if (auto* c = std::get_if<vm::Completion>(&tr.outcome)) {
        if (c->kind == vm::Completion::Kind::Halted && c->exit_code == kNoLeakVectorExit)
            return LeakOutcome::NoUntrustedPointerArg;
        for (const auto& ev : tr.events) {
            if (ev.kind == "read" && ev.bytes.size() >= 4 &&
                std::memcmp(ev.bytes.data(), "MALW", 4) == 0)
                return LeakOutcome::Leaked;
        }
        return LeakOutcome::Other;
    }
    if (vm::deadlocked(tr.outcome)) return LeakOutcome::Deadlock;
    return LeakOutcome::Other;
}

}  // namespace setsim::attack
