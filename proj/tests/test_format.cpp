#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "setsim/image.hpp"
#include "setsim/isa.hpp"

using namespace setsim;

TEST_SUITE("container format") {
    TEST_CASE("instruction encoding is 8 bytes and round-trips") {
        std::mt19937_64 rng(7);
        for (int i = 0; i < 500; ++i) {
            Instruction ins{static_cast<uint8_t>(rng()), static_cast<uint8_t>(rng()),
                            static_cast<uint16_t>(rng()), static_cast<uint32_t>(rng())};
            Bytes enc = ins.encode();
            REQUIRE(enc.size() == 8);
            CHECK(Instruction::decode(enc) == ins);
        }
    }

    TEST_CASE("serialized length of an image with empty data sections") {
        EnclaveImage img;
        img.code() = ins::halt().encode();
        img.header.entry_offset = 0;
        // header(13) + 4 section prefixes(5 each) + CODE payload
        CHECK(serialize(img).size() == 13 + 4 * 5 + 8);
    }

    TEST_CASE("parse rejects a bad magic") {
        EnclaveImage img;
        img.code() = ins::halt().encode();
        Bytes b = serialize(img);
        b[0] = 'X'; b[1] = 'X'; b[2] = 'X'; b[3] = 'X';
        CHECK_THROWS_AS(parse(b), FormatError);
        try {
            parse(b);
        } catch (const FormatError& e) {
            CHECK(e.kind() == FormatError::Kind::BadMagic);
        }
    }

    TEST_CASE("parse rejects a wrong section count") {
        EnclaveImage img;
        img.code() = ins::halt().encode();
        Bytes b = serialize(img);
        b[12] = 3;
        CHECK_THROWS_AS(parse(b), FormatError);
    }

    TEST_CASE("every strict prefix of a serialization fails to parse") {
        std::mt19937_64 rng(11);
        EnclaveImage img = testutil::random_image(rng, 8);
        Bytes full = serialize(img);
        for (size_t len = 0; len < full.size(); ++len) {
            Bytes prefix(full.begin(), full.begin() + static_cast<ptrdiff_t>(len));
            CHECK_THROWS_AS(parse(prefix), FormatError);
        }
        // truncation mid-RODATA names the section
        if (!img.rodata().empty()) {
            size_t cut = 13 + 5 + img.code().size() + 5 + img.rodata().size() / 2;
            try {
                parse(Bytes(full.begin(), full.begin() + static_cast<ptrdiff_t>(cut)));
                FAIL("expected a truncation error");
            } catch (const FormatError& e) {
                CHECK(e.kind() == FormatError::Kind::Truncated);
                CHECK(std::string(e.what()).find("RODATA") != std::string::npos);
            }
        }
    }

    TEST_CASE("trailing bytes after META are rejected") {
        EnclaveImage img;
        img.code() = ins::halt().encode();
        Bytes b = serialize(img);
        b.push_back(0x00);
        CHECK_THROWS_AS(parse(b), FormatError);
    }

    TEST_CASE("parse(serialize(x)) == x over randomized images") {
        std::mt19937_64 rng(1234);
        for (int i = 0; i < 300; ++i) {
            EnclaveImage img = testutil::random_image(rng);
            EnclaveImage back = parse(serialize(img));
            CHECK(back == img);
            CHECK(serialize(back) == serialize(img));
        }
    }

    TEST_CASE("invariant violations refuse to serialize") {
        EnclaveImage img;
        img.code() = ins::halt().encode();
        img.header.entry_offset = 4;  // unaligned
        CHECK_THROWS_AS(serialize(img), FormatError);
        img.header.entry_offset = 8;  // outside CODE
        CHECK_THROWS_AS(serialize(img), FormatError);
        img.header.entry_offset = 0;
        img.code().push_back(0);  // breaks the 8-byte multiple
        CHECK_THROWS_AS(serialize(img), FormatError);
    }
}

TEST_SUITE("free chunks") {
    TEST_CASE("code without fill bytes yields nothing") {
        EnclaveImage img;
        for (int i = 0; i < 4; ++i)
            for (uint8_t b : ins::loadi(1, 0xDEADBEEF).encode()) img.code().push_back(b);
        CHECK(find_free_chunks(img).empty());
    }

    TEST_CASE("adjacent zero and one runs stay separate") {
        EnclaveImage img;
        Bytes& code = img.code();
        for (uint8_t b : ins::loadi(1, 0xDEADBEEF).encode()) code.push_back(b);
        for (uint8_t b : ins::loadi(2, 0xDEADBEEF).encode()) code.push_back(b);
        code.insert(code.end(), 24, 0x00);
        code.insert(code.end(), 8, 0xFF);
        auto chunks = find_free_chunks(img);
        REQUIRE(chunks.size() == 2);
        CHECK(chunks[0] == FreeChunk{16, 24, FreeChunk::Fill::ZEROES});
        CHECK(chunks[1] == FreeChunk{40, 8, FreeChunk::Fill::ONES});
    }

    TEST_CASE("runs under 8 bytes are not chunks") {
        EnclaveImage img;
        Bytes& code = img.code();
        for (uint8_t b : ins::loadi(1, 0xDEADBEEF).encode()) code.push_back(b);
        code.insert(code.end(), 7, 0x00);
        code.push_back(0xAB);
        CHECK(find_free_chunks(img).empty());
    }

    TEST_CASE("a run overlapping the entry slot is dropped") {
        EnclaveImage img;
        Bytes& code = img.code();
        code.insert(code.end(), 16, 0x00);  // covers the entry slot at 0
        for (uint8_t b : ins::loadi(1, 0xDEADBEEF).encode()) code.push_back(b);
        code.insert(code.end(), 8, 0x00);
        img.header.entry_offset = 0;
        auto chunks = find_free_chunks(img);
        REQUIRE(chunks.size() == 1);
        CHECK(chunks[0].code_offset == 24);
    }

    TEST_CASE("matches the brute-force maximal-run oracle on random images") {
        std::mt19937_64 rng(99);
        for (int iter = 0; iter < 500; ++iter) {
            EnclaveImage img = testutil::random_image(rng, 32);
            // salt with real fill runs so the comparison is not vacuous
            if (iter % 2 == 0) {
                img.code().insert(img.code().end(), 8 + 8 * (rng() % 4), iter % 4 ? 0x00 : 0xFF);
            }
            auto got = find_free_chunks(img);
            auto want = testutil::chunk_oracle(img);
            REQUIRE(got.size() == want.size());
            for (size_t i = 0; i < got.size(); ++i) {
                CHECK(got[i].code_offset == want[i].offset);
                CHECK(got[i].length == want[i].length);
                CHECK((got[i].fill == FreeChunk::Fill::ZEROES ? 0x00 : 0xFF) == want[i].fill);
            }
        }
    }
}
