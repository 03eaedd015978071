#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "setsim/assembler.hpp"

using namespace setsim;

namespace {

const std::string kMinimal = R"(.entry start
.ecall nop
nop:
    HALT
)";

}  // namespace

TEST_SUITE("assembler") {
    TEST_CASE("smallest legal program has one table entry") {
        AssemblyOutput out = assemble_with_symbols(kMinimal);
        auto table = read_ecall_table(out.image);
        REQUIRE(table.has_value());
        CHECK(table->count() == 1);
        CHECK(out.image.header.entry_offset == 0);
        CHECK(out.image.header.sdk_version == 1);
        // wrapper sits right after the 8-instruction entry/dispatch stub
        CHECK(table->entries[0] == 64);
        CHECK(out.symbols.ecalls[0].body_offset == 64 + 24);
    }

    TEST_CASE("assembling the same source twice is byte-identical") {
        CHECK(serialize(assemble(kMinimal)) == serialize(assemble(kMinimal)));
        CHECK(serialize(assemble(testutil::samples().fintx)) ==
              serialize(assemble(testutil::samples().fintx)));
    }

    TEST_CASE("remote-decrypt sample: two ecalls, one 64-byte zero chunk, one 40-byte one chunk") {
        AssemblyOutput out = assemble_with_symbols(testutil::samples().remote_decrypt);
        CHECK(out.symbols.ecalls.size() == 2);

        // independent byte-scan oracle over the emitted CODE
        auto runs = testutil::chunk_oracle(out.image);
        REQUIRE(runs.size() == 2);
        CHECK(runs[0].length == 64);
        CHECK(runs[0].fill == 0x00);
        CHECK(runs[1].length == 40);
        CHECK(runs[1].fill == 0xFF);

        auto chunks = find_free_chunks(out.image);
        REQUIRE(chunks.size() == 2);
        CHECK(chunks[0].length == 64);
        CHECK(chunks[0].fill == FreeChunk::Fill::ZEROES);
        CHECK(chunks[1].length == 40);
        CHECK(chunks[1].fill == FreeChunk::Fill::ONES);
    }

    TEST_CASE("syntax errors carry line and column") {
        try {
            assemble(".entry e\n.ecall f\nf:\n    FROB r1\n");
            FAIL("expected an error");
        } catch (const AsmError& e) {
            CHECK(e.line() == 4);
            CHECK(e.column() >= 1);
            CHECK(std::string(e.what()).find("FROB") != std::string::npos);
        }
    }

    TEST_CASE("duplicate labels are rejected") {
        CHECK_THROWS_AS(assemble(".entry e\n.ecall f\nf:\n RET\nf:\n RET\n"), AsmError);
    }

    TEST_CASE("jump targets outside CODE are rejected") {
        CHECK_THROWS_AS(assemble(".entry e\n.ecall f\nf:\n JMP 0x10000\n"), AsmError);
        CHECK_THROWS_AS(assemble(".entry e\n.ecall f\nf:\n JMP 12\n"), AsmError);  // unaligned
    }

    TEST_CASE("a program without .entry or without .ecall is rejected") {
        CHECK_THROWS_AS(assemble(".ecall f\nf:\n RET\n"), AsmError);
        CHECK_THROWS_AS(assemble(".entry e\ne2:\n RET\n"), AsmError);
    }

    TEST_CASE("unknown ecall label is rejected") {
        CHECK_THROWS_AS(assemble(".entry e\n.ecall nothere\nf:\n RET\n"), AsmError);
    }

    TEST_CASE(".freespace must be a positive multiple of 8") {
        CHECK_THROWS_AS(assemble(".entry e\n.ecall f\nf:\n RET\n.freespace 12 00\n"), AsmError);
        CHECK_THROWS_AS(assemble(".entry e\n.ecall f\nf:\n RET\n.freespace 0 00\n"), AsmError);
        CHECK_THROWS_AS(assemble(".entry e\n.ecall f\nf:\n RET\n.freespace 16 aa\n"), AsmError);
    }

    TEST_CASE(".rodata may not contain the reserved table tag") {
        CHECK_THROWS_AS(assemble(".entry e\n.ecall f\nf:\n RET\n.rodata 45 43 54 42\n"), AsmError);
        CHECK_THROWS_AS(assemble(".entry e\n.ecall f\nf:\n RET\n.rodata \"xxECTBxx\"\n"), AsmError);
    }

    TEST_CASE("duplicate .entry is rejected") {
        CHECK_THROWS_AS(assemble(".entry a\n.entry b\n.ecall f\nf:\n RET\n"), AsmError);
    }

    TEST_CASE("the entry preamble walks: stub, dispatch chain, wrappers") {
        AssemblyOutput out = assemble_with_symbols(kMinimal);
        const Bytes& code = out.image.code();
        // entry stub
        CHECK(Instruction::decode(code, 0).op() == Op::ADDI);
        CHECK(Instruction::decode(code, 8).op() == Op::CALL);
        CHECK(Instruction::decode(code, 16).op() == Op::RET);
        // dispatch hops
        CHECK(Instruction::decode(code, 24).op() == Op::ADDI);
        CHECK(Instruction::decode(code, 32).op() == Op::CALL);
        CHECK(Instruction::decode(code, 48).op() == Op::CALLIND);
        // wrapper stub for ecall 0
        CHECK(Instruction::decode(code, 64).op() == Op::LOADI);
        CHECK(Instruction::decode(code, 72).op() == Op::ADDI);
        CHECK(Instruction::decode(code, 80).op() == Op::LOAD);
    }

    TEST_CASE("data symbols resolve to the fixed load addresses") {
        AssemblyOutput out = assemble_with_symbols(
            ".entry e\n.ecall f\nf:\n    LOADI r1, rwdata+4\n    LOADI r2, rodata\n    RET\n");
        const Bytes& code = out.image.code();
        uint32_t code_len = static_cast<uint32_t>(code.size());
        uint32_t ro_len = static_cast<uint32_t>(out.image.rodata().size());
        uint32_t f_off = out.symbols.ecalls[0].body_offset;
        CHECK(Instruction::decode(code, f_off).imm == kEnclaveBase + code_len + ro_len + 4);
        CHECK(Instruction::decode(code, f_off + 8).imm == kEnclaveBase + code_len);
    }

    TEST_CASE("generated programs assemble and re-assemble deterministically") {
        std::mt19937_64 rng(2024);
        for (int i = 0; i < 50; ++i) {
            std::string src = testutil::random_program(rng);
            CAPTURE(src);
            Bytes a = serialize(assemble(src));
            Bytes b = serialize(assemble(src));
            CHECK(a == b);
        }
    }
}
