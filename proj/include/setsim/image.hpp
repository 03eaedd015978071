#pragma once

// The toy enclave container ("SET1").
//
// Serialized layout, bit exact, little-endian throughout:
//
//   Header   magic            4    ASCII "SET1"
//            format_version   u16  = 1
//            sdk_version      u16  preserved verbatim; discovery heuristics key on it
//            entry_offset     u32  byte offset within CODE, multiple of 8
//            section_count    u8   = 4
//   then 4 sections, fixed order CODE, RODATA, RWDATA, META:
//            kind             u8   CODE=1 RODATA=2 RWDATA=3 META=4
//            declared_length  u32
//            payload          declared_length bytes
//
// No padding anywhere. serialize() output is exactly what gets measured.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "setsim/bytes.hpp"
#include "setsim/isa.hpp"

namespace setsim {

inline constexpr char kImageMagic[4] = {'S', 'E', 'T', '1'};
inline constexpr uint16_t kFormatVersion = 1;
inline constexpr size_t kHeaderSize = 13;
inline constexpr size_t kSectionPrefixSize = 5;

// 4-byte tag preceding the ecall table in RODATA; a validation aid for the
// discovery walk, required to occur exactly once.
inline constexpr char kEcallSentinel[4] = {'E', 'C', 'T', 'B'};

class FormatError : public std::runtime_error {
  public:
    enum class Kind {
        BadMagic,
        BadFormatVersion,
        BadSectionCount,
        BadSectionOrder,
        Truncated,
        LengthMismatch,
        TrailingBytes,
        InvariantViolation,
    };

    FormatError(Kind kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
    Kind kind() const { return kind_; }

  private:
    Kind kind_;
};

enum class SectionKind : uint8_t { CODE = 1, RODATA = 2, RWDATA = 3, META = 4 };

inline const char* section_name(SectionKind k) {
    switch (k) {
        case SectionKind::CODE: return "CODE";
        case SectionKind::RODATA: return "RODATA";
        case SectionKind::RWDATA: return "RWDATA";
        case SectionKind::META: return "META";
    }
    return "?";
}

struct Section {
    SectionKind kind = SectionKind::CODE;
    Bytes payload;

    uint32_t declared_length() const { return static_cast<uint32_t>(payload.size()); }
    bool operator==(const Section&) const = default;
};

struct Header {
    uint16_t format_version = kFormatVersion;
    uint16_t sdk_version = 1;
    uint32_t entry_offset = 0;

    bool operator==(const Header&) const = default;
};

struct EnclaveImage {
    Header header;
    // Fixed order: CODE, RODATA, RWDATA, META.
    std::array<Section, 4> sections{
        Section{SectionKind::CODE, {}},
        Section{SectionKind::RODATA, {}},
        Section{SectionKind::RWDATA, {}},
        Section{SectionKind::META, {}},
    };
    // Provenance label for reports; not serialized and excluded from equality.
    std::string source_name;

    const Bytes& code() const { return sections[0].payload; }
    Bytes& code() { return sections[0].payload; }
    const Bytes& rodata() const { return sections[1].payload; }
    Bytes& rodata() { return sections[1].payload; }
    const Bytes& rwdata() const { return sections[2].payload; }
    Bytes& rwdata() { return sections[2].payload; }
    const Bytes& meta() const { return sections[3].payload; }
    Bytes& meta() { return sections[3].payload; }

    bool operator==(const EnclaveImage& other) const {
        return header == other.header && sections == other.sections;
    }
};

struct EcallTable {
    uint32_t rodata_offset = 0;  // offset of the entry array within RODATA
    std::vector<uint32_t> entries;

    uint16_t count() const { return static_cast<uint16_t>(entries.size()); }
};

struct FreeChunk {
    enum class Fill : uint8_t { ZEROES, ONES };

    uint32_t code_offset = 0;
    uint32_t length = 0;
    Fill fill = Fill::ZEROES;

    bool operator==(const FreeChunk&) const = default;
};

inline void validate(const EnclaveImage& img) {
    for (size_t i = 0; i < 4; ++i) {
        if (img.sections[i].kind != static_cast<SectionKind>(i + 1))
            throw FormatError(FormatError::Kind::BadSectionOrder, "sections out of order");
    }
    if (img.code().size() % kInstrSize != 0)
        throw FormatError(FormatError::Kind::InvariantViolation,
                          "CODE length is not a multiple of 8");
    if (img.header.entry_offset % kInstrSize != 0)
        throw FormatError(FormatError::Kind::InvariantViolation, "entry_offset not aligned");
    if (img.header.entry_offset >= img.code().size())
        throw FormatError(FormatError::Kind::InvariantViolation, "entry_offset outside CODE");
}

inline Bytes serialize(const EnclaveImage& img) {
    validate(img);
    Bytes out;
    out.reserve(kHeaderSize + 4 * kSectionPrefixSize + img.code().size() + img.rodata().size() +
                img.rwdata().size() + img.meta().size());
    out.insert(out.end(), kImageMagic, kImageMagic + 4);
    put_u16le(out, img.header.format_version);
    put_u16le(out, img.header.sdk_version);
    put_u32le(out, img.header.entry_offset);
    out.push_back(4);
    for (const Section& s : img.sections) {
        out.push_back(static_cast<uint8_t>(s.kind));
        put_u32le(out, s.declared_length());
        out.insert(out.end(), s.payload.begin(), s.payload.end());
    }
    return out;
}

inline EnclaveImage parse(ByteSpan bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kImageMagic, 4) != 0)
        throw FormatError(FormatError::Kind::BadMagic, "bad magic");
    if (bytes.size() < kHeaderSize)
        throw FormatError(FormatError::Kind::Truncated, "truncated header");

    EnclaveImage img;
    img.header.format_version = get_u16le(bytes, 4);
    if (img.header.format_version != kFormatVersion)
        throw FormatError(FormatError::Kind::BadFormatVersion,
                          "unsupported format version " + std::to_string(img.header.format_version));
    img.header.sdk_version = get_u16le(bytes, 6);
    img.header.entry_offset = get_u32le(bytes, 8);
    uint8_t section_count = bytes[12];
    if (section_count != 4)
        throw FormatError(FormatError::Kind::BadSectionCount,
                          "section_count must be 4, got " + std::to_string(section_count));

    size_t off = kHeaderSize;
    for (size_t i = 0; i < 4; ++i) {
        auto expected = static_cast<SectionKind>(i + 1);
        if (off + kSectionPrefixSize > bytes.size())
            throw FormatError(FormatError::Kind::Truncated,
                              std::string("truncated in ") + section_name(expected) + " prefix");
        auto kind = bytes[off];
        if (kind != static_cast<uint8_t>(expected))
            throw FormatError(FormatError::Kind::BadSectionOrder,
                              std::string("expected section ") + section_name(expected));
        uint32_t len = get_u32le(bytes, off + 1);
        off += kSectionPrefixSize;
        if (off + len > bytes.size())
            throw FormatError(FormatError::Kind::Truncated,
                              std::string("truncated in ") + section_name(expected) + " payload");
        img.sections[i].payload.assign(bytes.begin() + static_cast<ptrdiff_t>(off),
                                       bytes.begin() + static_cast<ptrdiff_t>(off + len));
        off += len;
    }
    if (off != bytes.size())
        throw FormatError(FormatError::Kind::TrailingBytes, "trailing bytes after META");

    validate(img);
    return img;
}

// All maximal runs of 0x00 or 0xFF bytes in CODE with length >= 8, sorted by
// offset. A run overlapping the instruction slot that holds entry_offset is
// dropped entirely: patching over the entry would break dispatch.
inline std::vector<FreeChunk> find_free_chunks(const EnclaveImage& img) {
    validate(img);
    const Bytes& code = img.code();
    std::vector<FreeChunk> chunks;
    const uint32_t entry_slot = img.header.entry_offset & ~static_cast<uint32_t>(kInstrSize - 1);

    size_t i = 0;
    while (i < code.size()) {
        uint8_t v = code[i];
        if (v != 0x00 && v != 0xFF) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j < code.size() && code[j] == v) ++j;
        if (j - i >= kInstrSize) {
            bool overlaps_entry = i < entry_slot + kInstrSize && j > entry_slot;
            if (!overlaps_entry) {
                chunks.push_back({static_cast<uint32_t>(i), static_cast<uint32_t>(j - i),
                                  v == 0x00 ? FreeChunk::Fill::ZEROES : FreeChunk::Fill::ONES});
            }
        }
        i = j;
    }
    return chunks;
}

// Locates the "ECTB" tag in RODATA. This is the loader-side route (the
// format is trusted to contain the tag exactly once); the adversarial
// discovery walk in locate.hpp must not take this shortcut.
inline std::optional<uint32_t> find_sentinel(const EnclaveImage& img) {
    const Bytes& ro = img.rodata();
    if (ro.size() < 4) return std::nullopt;
    for (size_t i = 0; i + 4 <= ro.size(); ++i) {
        if (std::memcmp(ro.data() + i, kEcallSentinel, 4) == 0) return static_cast<uint32_t>(i);
    }
    return std::nullopt;
}

// Reads the ecall table via the sentinel. Returns nullopt when the tag is
// missing or the table does not fit.
inline std::optional<EcallTable> read_ecall_table(const EnclaveImage& img) {
    auto s = find_sentinel(img);
    if (!s) return std::nullopt;
    const Bytes& ro = img.rodata();
    if (*s + 6 > ro.size()) return std::nullopt;
    uint16_t count = get_u16le(ro, *s + 4);
    uint32_t entries_off = *s + 6;
    if (entries_off + 4u * count > ro.size()) return std::nullopt;
    EcallTable table;
    table.rodata_offset = entries_off;
    table.entries.reserve(count);
    for (uint16_t i = 0; i < count; ++i) table.entries.push_back(get_u32le(ro, entries_off + 4u * i));
    return table;
}

}  // namespace setsim
