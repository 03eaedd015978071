#pragma once

// Two-pass assembler for the enclave assembly language (".seta").
//
// Grammar (line oriented, '#' starts a comment):
//
//   label:                      bind a CODE offset (may precede an instruction)
//   .entry <label>              expand the runtime preamble here and export it
//                               as the image entry point; exactly one required
//   .ecall <label>              register <label> as the next ecall table entry
//   .freespace <n> <00|ff>      emit n fill bytes into CODE (n multiple of 8)
//   .rodata <hex bytes>|"text"  append bytes to RODATA
//   .rwdata <n>                 reserve n zeroed bytes of RWDATA
//   <MNEMONIC> operands         one 8-byte instruction
//
// Operands: registers r0..r15; immediates are decimal, 0x hex, 'c' char
// literals, code labels, or the builtin symbols `rodata` / `rwdata`
// (absolute VM addresses of those sections) and `ecalltable` (RODATA offset
// of the entry array), combined with +/-.
//
// The expanded preamble is the toolchain runtime every image shares:
//
//   entry:  ADDI r8, r0, 0
//           CALL dispatch1
//           RET
//   dispatch1:
//           ADDI r9, r8, 0
//           CALL dispatch2
//           RET
//   dispatch2:
//           CALLIND r0, <table offset>
//           RET
//
// Every label named in a .ecall directive additionally grows a fixed
// 3-instruction wrapper stub at its definition site:
//
//   wrapper_k:  LOADI r9, -k
//               ADDI  r9, r9, r0, 0        # r9 = requested index - k
//               LOAD  r9, r9, <table tag>  # wildly wrong index faults here
//
// The ecall table entry points at the wrapper; the check falls through into
// the developer function, which therefore starts exactly 24 bytes past the
// table entry.
//
// Register conventions the emitted runtime relies on (see vm.hpp): r0 holds
// the ecall index, r1..r6 the arguments, r8/r9 are runtime scratch.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "setsim/image.hpp"
#include "setsim/isa.hpp"

namespace setsim {

// The toolchain targets the VM's fixed load address: CODE at kEnclaveBase,
// RODATA and RWDATA mapped immediately after, in that order.
inline constexpr uint32_t kUntrustedBase = 0x00000000;
inline constexpr uint32_t kEnclaveBase = 0x10000000;

inline constexpr uint16_t kSdkVersion = 1;
inline constexpr uint32_t kWrapperInstructions = 3;
inline constexpr uint32_t kWrapperBytes = kWrapperInstructions * kInstrSize;
inline constexpr uint32_t kPreambleStubBytes = 8 * kInstrSize;  // entry + 2 dispatch hops

class AsmError : public std::runtime_error {
  public:
    AsmError(int line, int column, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line) + ", col " + std::to_string(column) +
                             ": " + msg),
          line_(line),
          column_(column) {}

    int line() const { return line_; }
    int column() const { return column_; }

  private:
    int line_;
    int column_;
};

struct EcallSymbol {
    std::string label;
    uint16_t index = 0;
    uint32_t wrapper_offset = 0;  // what the table entry points at
    uint32_t body_offset = 0;     // developer function, wrapper_offset + 24
};

struct SymbolMap {
    std::map<std::string, uint32_t> labels;  // label -> CODE offset
    std::vector<EcallSymbol> ecalls;
    uint32_t entry_offset = 0;
    uint32_t table_rodata_offset = 0;  // offset of the entry array in RODATA
};

struct AssemblyOutput {
    EnclaveImage image;
    SymbolMap symbols;
};

namespace detail {

struct Operand {
    enum class Kind { Reg, Expr } kind = Kind::Expr;
    uint8_t reg = 0;
    std::string expr;  // resolved in the emit pass
    int column = 1;
};

struct SourceInstr {
    std::string mnemonic;
    std::vector<Operand> operands;
    int line = 0;
    int column = 1;
};

struct Item {
    enum class Kind { Instr, Entry, Freespace } kind = Kind::Instr;
    SourceInstr instr;          // Kind::Instr
    uint32_t freespace_len = 0; // Kind::Freespace
    uint8_t freespace_fill = 0;
    int line = 0;
};

inline std::optional<uint8_t> parse_register(const std::string& tok) {
    if (tok.size() < 2 || (tok[0] != 'r' && tok[0] != 'R')) return std::nullopt;
    uint32_t n = 0;
    for (size_t i = 1; i < tok.size(); ++i) {
        if (!isdigit(static_cast<unsigned char>(tok[i]))) return std::nullopt;
        n = n * 10 + static_cast<uint32_t>(tok[i] - '0');
        if (n >= 100) return std::nullopt;
    }
    if (n >= kRegisterCount) return std::nullopt;
    return static_cast<uint8_t>(n);
}

class ExprResolver {
  public:
    ExprResolver(const std::map<std::string, uint32_t>& labels, uint32_t code_len,
                 uint32_t rodata_user_len, uint32_t table_entries_off)
        : labels_(labels), code_len_(code_len) {
        builtins_["rodata"] = kEnclaveBase + code_len;
        builtins_["rwdata"] = kEnclaveBase + code_len + rodata_user_len + 6 +
                              4 * 0;  // patched below by set_rodata_total
        builtins_["ecalltable"] = table_entries_off;
    }

    void set_rodata_total(uint32_t rodata_total_len) {
        builtins_["rwdata"] = kEnclaveBase + code_len_ + rodata_total_len;
    }

    // expr := term (('+'|'-') term)* ; term := number | 'c' | label | builtin
    uint32_t resolve(const std::string& expr, int line, int col, bool* is_label_target) const {
        if (is_label_target) *is_label_target = false;
        size_t pos = 0;
        uint64_t acc = 0;
        int sign = 1;
        bool first = true;
        while (pos < expr.size()) {
            if (!first) {
                char c = expr[pos];
                if (c == '+') {
                    sign = 1;
                } else if (c == '-') {
                    sign = -1;
                } else {
                    throw AsmError(line, col, "bad expression '" + expr + "'");
                }
                ++pos;
            } else if (expr[pos] == '-') {
                sign = -1;
                ++pos;
            }
            size_t start = pos;
            uint64_t term = 0;
            if (pos < expr.size() && expr[pos] == '\'') {
                if (pos + 2 >= expr.size() || expr[pos + 2] != '\'')
                    throw AsmError(line, col, "bad char literal in '" + expr + "'");
                term = static_cast<uint8_t>(expr[pos + 1]);
                pos += 3;
            } else {
                while (pos < expr.size() && expr[pos] != '+' && expr[pos] != '-') ++pos;
                std::string tok = expr.substr(start, pos - start);
                if (tok.empty()) throw AsmError(line, col, "bad expression '" + expr + "'");
                if (isdigit(static_cast<unsigned char>(tok[0]))) {
                    try {
                        term = std::stoull(tok, nullptr, 0);
                    } catch (...) {
                        throw AsmError(line, col, "bad number '" + tok + "'");
                    }
                } else if (auto it = builtins_.find(tok); it != builtins_.end()) {
                    term = it->second;
                } else if (auto lt = labels_.find(tok); lt != labels_.end()) {
                    term = lt->second;
                    if (is_label_target) *is_label_target = true;
                } else {
                    throw AsmError(line, col, "unknown symbol '" + tok + "'");
                }
            }
            acc = sign >= 0 ? acc + term : acc - term;
            sign = 1;
            first = false;
        }
        return static_cast<uint32_t>(acc & 0xFFFFFFFFu);
    }

  private:
    const std::map<std::string, uint32_t>& labels_;
    uint32_t code_len_;
    std::map<std::string, uint32_t> builtins_;
};

}  // namespace detail

// Deterministic: identical source yields a byte-identical image.
inline AssemblyOutput assemble_with_symbols(const std::string& source,
                                            const std::string& source_name = "") {
    using detail::Item;
    using detail::Operand;
    using detail::SourceInstr;

    std::vector<Item> items;
    std::vector<std::pair<std::string, int>> pending_labels;  // bound at next located item
    std::map<std::string, int> label_lines;                   // for duplicate reporting
    std::vector<std::pair<std::string, int>> ecall_decls;
    std::optional<int> entry_line;
    std::string entry_label;
    Bytes rodata_user;
    uint32_t rwdata_len = 0;

    // ---- pass 1: parse ------------------------------------------------
    struct LabelBind {
        std::string name;
        size_t item_index;  // label binds to the offset of items[item_index]
    };
    std::vector<LabelBind> label_binds;

    int lineno = 0;
    size_t line_start = 0;
    while (line_start <= source.size()) {
        size_t line_end = source.find('\n', line_start);
        if (line_end == std::string::npos) line_end = source.size();
        std::string line = source.substr(line_start, line_end - line_start);
        line_start = line_end + 1;
        ++lineno;
        if (line_start > source.size() && line.empty()) break;

        // strip comment (quotes respected for .rodata strings)
        bool in_quote = false;
        for (size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_quote = !in_quote;
            if (line[i] == '#' && !in_quote) {
                line.resize(i);
                break;
            }
        }

        // tokenize: whitespace separated; ',' is a separator too
        std::vector<std::pair<std::string, int>> toks;  // token, column
        {
            size_t i = 0;
            while (i < line.size()) {
                if (isspace(static_cast<unsigned char>(line[i])) || line[i] == ',') {
                    ++i;
                    continue;
                }
                size_t start = i;
                if (line[i] == '"') {
                    ++i;
                    while (i < line.size() && line[i] != '"') ++i;
                    if (i >= line.size()) throw AsmError(lineno, static_cast<int>(start + 1),
                                                         "unterminated string");
                    ++i;
                } else {
                    while (i < line.size() && !isspace(static_cast<unsigned char>(line[i])) &&
                           line[i] != ',')
                        ++i;
                }
                toks.emplace_back(line.substr(start, i - start), static_cast<int>(start + 1));
            }
        }
        if (toks.empty()) continue;

        size_t t = 0;
        // leading labels
        while (t < toks.size() && toks[t].first.size() > 1 && toks[t].first.back() == ':') {
            std::string name = toks[t].first.substr(0, toks[t].first.size() - 1);
            if (label_lines.count(name))
                throw AsmError(lineno, toks[t].second,
                               "duplicate label '" + name + "' (first defined on line " +
                                   std::to_string(label_lines[name]) + ")");
            label_lines[name] = lineno;
            label_binds.push_back({name, items.size()});
            ++t;
        }
        if (t >= toks.size()) continue;

        const std::string& head = toks[t].first;
        int head_col = toks[t].second;

        if (head[0] == '.') {
            if (head == ".entry") {
                if (t + 1 >= toks.size()) throw AsmError(lineno, head_col, ".entry needs a label");
                if (entry_line)
                    throw AsmError(lineno, head_col, "duplicate .entry (first on line " +
                                                         std::to_string(*entry_line) + ")");
                entry_line = lineno;
                entry_label = toks[t + 1].first;
                if (label_lines.count(entry_label))
                    throw AsmError(lineno, toks[t + 1].second,
                                   "duplicate label '" + entry_label + "'");
                label_lines[entry_label] = lineno;
                label_binds.push_back({entry_label, items.size()});
                Item it;
                it.kind = Item::Kind::Entry;
                it.line = lineno;
                items.push_back(std::move(it));
            } else if (head == ".ecall") {
                if (t + 1 >= toks.size()) throw AsmError(lineno, head_col, ".ecall needs a label");
                ecall_decls.emplace_back(toks[t + 1].first, lineno);
            } else if (head == ".freespace") {
                if (t + 2 >= toks.size())
                    throw AsmError(lineno, head_col, ".freespace needs <n> <00|ff>");
                uint64_t n = 0;
                try {
                    n = std::stoull(toks[t + 1].first, nullptr, 0);
                } catch (...) {
                    throw AsmError(lineno, toks[t + 1].second, "bad .freespace size");
                }
                if (n == 0 || n % kInstrSize != 0)
                    throw AsmError(lineno, toks[t + 1].second,
                                   ".freespace size must be a positive multiple of 8");
                const std::string& fill = toks[t + 2].first;
                uint8_t b;
                if (fill == "00")
                    b = 0x00;
                else if (fill == "ff" || fill == "FF")
                    b = 0xFF;
                else
                    throw AsmError(lineno, toks[t + 2].second, ".freespace fill must be 00 or ff");
                Item it;
                it.kind = Item::Kind::Freespace;
                it.freespace_len = static_cast<uint32_t>(n);
                it.freespace_fill = b;
                it.line = lineno;
                items.push_back(std::move(it));
            } else if (head == ".rodata") {
                if (t + 1 >= toks.size()) throw AsmError(lineno, head_col, ".rodata needs bytes");
                if (toks[t + 1].first.front() == '"') {
                    const std::string& q = toks[t + 1].first;
                    rodata_user.insert(rodata_user.end(), q.begin() + 1, q.end() - 1);
                } else {
                    std::string hex;
                    for (size_t i = t + 1; i < toks.size(); ++i) hex += toks[i].first;
                    Bytes b;
                    try {
                        b = from_hex(hex);
                    } catch (const std::exception& e) {
                        throw AsmError(lineno, toks[t + 1].second, e.what());
                    }
                    rodata_user.insert(rodata_user.end(), b.begin(), b.end());
                }
            } else if (head == ".rwdata") {
                if (t + 1 >= toks.size()) throw AsmError(lineno, head_col, ".rwdata needs a size");
                uint64_t n = 0;
                try {
                    n = std::stoull(toks[t + 1].first, nullptr, 0);
                } catch (...) {
                    throw AsmError(lineno, toks[t + 1].second, "bad .rwdata size");
                }
                rwdata_len += static_cast<uint32_t>(n);
            } else {
                throw AsmError(lineno, head_col, "unknown directive '" + head + "'");
            }
            continue;
        }

        // instruction
        SourceInstr si;
        si.mnemonic = head;
        for (auto& c : si.mnemonic) c = static_cast<char>(toupper(static_cast<unsigned char>(c)));
        si.line = lineno;
        si.column = head_col;
        for (size_t i = t + 1; i < toks.size(); ++i) {
            Operand op;
            op.column = toks[i].second;
            if (auto r = detail::parse_register(toks[i].first)) {
                op.kind = Operand::Kind::Reg;
                op.reg = *r;
            } else {
                op.kind = Operand::Kind::Expr;
                op.expr = toks[i].first;
            }
            si.operands.push_back(std::move(op));
        }
        Item it;
        it.kind = Item::Kind::Instr;
        it.instr = std::move(si);
        it.line = lineno;
        items.push_back(std::move(it));
    }

    if (!entry_line) throw AsmError(lineno, 1, "entry missing: no .entry directive");
    if (ecall_decls.empty()) throw AsmError(lineno, 1, "no .ecall directives");

    const uint32_t ecall_count = static_cast<uint32_t>(ecall_decls.size());

    std::map<std::string, uint16_t> ecall_index;
    for (uint16_t i = 0; i < ecall_count; ++i) {
        if (!ecall_index.emplace(ecall_decls[i].first, i).second)
            throw AsmError(ecall_decls[i].second, 1,
                           "label '" + ecall_decls[i].first + "' declared .ecall twice");
    }

    // ---- pass 2: layout ------------------------------------------------
    // A label declared .ecall reserves its 3-instruction wrapper stub at the
    // definition site; the label names the wrapper start.
    std::map<size_t, std::vector<std::string>> binds_at;
    for (const auto& lb : label_binds) binds_at[lb.item_index].push_back(lb.name);

    std::vector<uint32_t> item_offsets(items.size() + 1, 0);
    std::map<std::string, uint32_t> label_offsets;
    uint32_t off = 0;
    uint32_t entry_offset = 0;
    auto bind_labels_at = [&](size_t index) {
        auto it = binds_at.find(index);
        if (it == binds_at.end()) return;
        for (const std::string& name : it->second) {
            label_offsets[name] = off;
            if (ecall_index.count(name)) off += kWrapperBytes;
        }
    };
    for (size_t i = 0; i < items.size(); ++i) {
        bind_labels_at(i);
        item_offsets[i] = off;
        switch (items[i].kind) {
            case Item::Kind::Instr: off += kInstrSize; break;
            case Item::Kind::Entry:
                entry_offset = off;
                off += kPreambleStubBytes;
                break;
            case Item::Kind::Freespace: off += items[i].freespace_len; break;
        }
    }
    bind_labels_at(items.size());
    item_offsets[items.size()] = off;
    const uint32_t code_len = off;

    SymbolMap symbols;
    symbols.entry_offset = entry_offset;
    symbols.labels = label_offsets;

    for (uint16_t i = 0; i < ecall_count; ++i) {
        const auto& [label, decl_line] = ecall_decls[i];
        auto it = label_offsets.find(label);
        if (it == label_offsets.end())
            throw AsmError(decl_line, 1, "unknown ecall label '" + label + "'");
        EcallSymbol sym;
        sym.label = label;
        sym.index = i;
        sym.wrapper_offset = it->second;
        sym.body_offset = it->second + kWrapperBytes;
        if (sym.body_offset + kInstrSize > code_len)
            throw AsmError(decl_line, 1, "ecall label '" + label + "' has no function body");
        symbols.ecalls.push_back(std::move(sym));
    }

    // RODATA: user bytes, then tag + count + entries. Entries point at the
    // wrappers. The tag is reserved.
    for (size_t i = 0; i + 4 <= rodata_user.size(); ++i) {
        if (std::memcmp(rodata_user.data() + i, kEcallSentinel, 4) == 0)
            throw AsmError(*entry_line, 1, ".rodata contains the reserved table tag");
    }
    const uint32_t rodata_user_len = static_cast<uint32_t>(rodata_user.size());
    const uint32_t entries_off = rodata_user_len + 6;
    symbols.table_rodata_offset = entries_off;

    Bytes rodata = rodata_user;
    rodata.insert(rodata.end(), kEcallSentinel, kEcallSentinel + 4);
    put_u16le(rodata, static_cast<uint16_t>(ecall_count));
    for (const auto& e : symbols.ecalls) put_u32le(rodata, e.wrapper_offset);

    const uint32_t sentinel_addr = kEnclaveBase + code_len + rodata_user_len;

    // ---- pass 3: emit --------------------------------------------------
    detail::ExprResolver resolver(symbols.labels, code_len, rodata_user_len, entries_off);
    resolver.set_rodata_total(static_cast<uint32_t>(rodata.size()));

    Bytes code;
    code.reserve(code_len);

    auto emit = [&code](const Instruction& ins) { ins.encode_to(code); };

    auto emit_wrappers_at = [&](size_t index) {
        auto it = binds_at.find(index);
        if (it == binds_at.end()) return;
        for (const std::string& name : it->second) {
            auto ei = ecall_index.find(name);
            if (ei == ecall_index.end()) continue;
            emit(ins::loadi(9, static_cast<uint32_t>(0) - ei->second));
            emit(ins::addrr(9, 9, 0, 0));          // r9 = requested index - own index
            emit(ins::load(9, 9, sentinel_addr));  // guarded table touch
        }
    };

    auto check_code_target = [&](uint32_t target, int line, int col) {
        if (target >= code_len || target % kInstrSize != 0)
            throw AsmError(line, col,
                           "jump target out of range (0x" + to_hex(Bytes{
                               static_cast<uint8_t>(target >> 24), static_cast<uint8_t>(target >> 16),
                               static_cast<uint8_t>(target >> 8), static_cast<uint8_t>(target)}) +
                               ")");
    };

    for (size_t item_idx = 0; item_idx < items.size(); ++item_idx) {
        const Item& item = items[item_idx];
        emit_wrappers_at(item_idx);
        switch (item.kind) {
            case Item::Kind::Entry: {
                const uint32_t p = entry_offset;
                emit(ins::addi(8, 0, 0));  // stash the requested index
                emit(ins::call(p + 24));   // into the dispatch chain
                emit(ins::ret());          // ecall completed
                emit(ins::addi(9, 8, 0));
                emit(ins::call(p + 48));
                emit(ins::ret());
                emit(ins::callind(0, entries_off));
                emit(ins::ret());
                break;
            }
            case Item::Kind::Freespace:
                code.insert(code.end(), item.freespace_len, item.freespace_fill);
                break;
            case Item::Kind::Instr: {
                const SourceInstr& si = item.instr;
                auto need = [&](size_t n) {
                    if (si.operands.size() != n)
                        throw AsmError(si.line, si.column,
                                       si.mnemonic + " expects " + std::to_string(n) +
                                           " operands, got " + std::to_string(si.operands.size()));
                };
                auto reg_at = [&](size_t i) -> uint8_t {
                    if (si.operands[i].kind != Operand::Kind::Reg)
                        throw AsmError(si.line, si.operands[i].column,
                                       si.mnemonic + ": operand " + std::to_string(i + 1) +
                                           " must be a register");
                    return si.operands[i].reg;
                };
                auto expr_at = [&](size_t i, bool* is_label = nullptr) -> uint32_t {
                    const Operand& op = si.operands[i];
                    if (op.kind != Operand::Kind::Expr)
                        throw AsmError(si.line, op.column,
                                       si.mnemonic + ": operand " + std::to_string(i + 1) +
                                           " must be a value");
                    return resolver.resolve(op.expr, si.line, op.column, is_label);
                };

                if (si.mnemonic == "HALT") {
                    if (si.operands.empty())
                        emit(ins::halt());
                    else {
                        need(1);
                        emit(ins::halt(expr_at(0)));
                    }
                } else if (si.mnemonic == "LOADI") {
                    need(2);
                    emit(ins::loadi(reg_at(0), expr_at(1)));
                } else if (si.mnemonic == "LOAD" || si.mnemonic == "STORE") {
                    uint32_t imm = 0;
                    if (si.operands.size() == 3)
                        imm = expr_at(2);
                    else
                        need(2);
                    if (si.mnemonic == "LOAD")
                        emit(ins::load(reg_at(0), reg_at(1), imm));
                    else
                        emit(ins::store(reg_at(0), reg_at(1), imm));
                } else if (si.mnemonic == "CALL" || si.mnemonic == "JMP") {
                    need(1);
                    uint32_t target = expr_at(0);
                    check_code_target(target, si.line, si.operands[0].column);
                    emit(si.mnemonic == "CALL" ? ins::call(target) : ins::jmp(target));
                } else if (si.mnemonic == "CALLIND") {
                    need(2);
                    emit(ins::callind(reg_at(0), expr_at(1)));
                } else if (si.mnemonic == "RET") {
                    need(0);
                    emit(ins::ret());
                } else if (si.mnemonic == "BRZ") {
                    need(2);
                    uint32_t target = expr_at(1);
                    check_code_target(target, si.line, si.operands[1].column);
                    emit(ins::brz(reg_at(0), target));
                } else if (si.mnemonic == "COPY") {
                    need(3);
                    emit(ins::copy(reg_at(0), reg_at(1), reg_at(2)));
                } else if (si.mnemonic == "CMPB") {
                    need(3);
                    emit(ins::cmpb(reg_at(0), reg_at(1), static_cast<uint8_t>(expr_at(2))));
                } else if (si.mnemonic == "ADDI") {
                    if (si.operands.size() == 4) {
                        emit(ins::addrr(reg_at(0), reg_at(1), reg_at(2), expr_at(3)));
                    } else if (si.operands.size() == 3 &&
                               si.operands[2].kind == Operand::Kind::Reg) {
                        emit(ins::addrr(reg_at(0), reg_at(1), reg_at(2)));
                    } else {
                        need(3);
                        emit(ins::addi(reg_at(0), reg_at(1), expr_at(2)));
                    }
                } else {
                    throw AsmError(si.line, si.column, "unknown mnemonic '" + si.mnemonic + "'");
                }
                break;
            }
        }
    }
    emit_wrappers_at(items.size());

    if (code.size() != code_len) throw AsmError(lineno, 1, "internal layout mismatch");

    AssemblyOutput out;
    out.image.header.sdk_version = kSdkVersion;
    out.image.header.entry_offset = entry_offset;
    out.image.code() = std::move(code);
    out.image.rodata() = std::move(rodata);
    out.image.rwdata().assign(rwdata_len, 0);
    out.image.source_name = source_name;
    out.symbols = std::move(symbols);
    validate(out.image);
    return out;
}

inline EnclaveImage assemble(const std::string& source, const std::string& source_name = "") {
    return assemble_with_symbols(source, source_name).image;
}

}  // namespace setsim
