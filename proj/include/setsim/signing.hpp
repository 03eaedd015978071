#pragma once

// Measurement, signing material, the two signing flows, load-time
// verification and local attestation.
//
// ".sgxs1" bundle layout: magic "SGB1" | image_len u32 LE | image bytes |
// material (64) | rsa signature (384) | public key modulus (384).

#include <array>
#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "setsim/crypto.hpp"
#include "setsim/image.hpp"

namespace setsim {

inline constexpr size_t kMaterialSize = 64;
inline constexpr char kBundleMagic[4] = {'S', 'G', 'B', '1'};

class SigningError : public std::runtime_error {
  public:
    explicit SigningError(const std::string& what) : std::runtime_error(what) {}
};

struct MeasurementHash {
    Hash digest{};

    bool operator==(const MeasurementHash&) const = default;
    std::string hex() const { return to_hex(digest); }
};

inline MeasurementHash measure_bytes(ByteSpan serialized) { return {sha256(serialized)}; }

// SHA-256 over the canonical serialization: the enclave identity.
inline MeasurementHash measure(const EnclaveImage& image) {
    return measure_bytes(serialize(image));
}

struct VendorMetadata {
    std::array<uint8_t, 16> vendor_id{};
    uint32_t date = 0;  // YYYYMMDD as decimal
    uint64_t attributes = 0;
    uint32_t version = 0;
};

// Fixed 64-byte record; its canonical bytes are exactly what gets signed.
struct SigningMaterial {
    std::array<uint8_t, 16> vendor_id{};
    uint32_t date = 0;
    uint64_t attributes = 0;
    uint32_t version = 0;
    MeasurementHash measurement;

    bool operator==(const SigningMaterial&) const = default;

    Bytes canonical_bytes() const {
        Bytes out;
        out.reserve(kMaterialSize);
        out.insert(out.end(), vendor_id.begin(), vendor_id.end());
        put_u32le(out, date);
        put_u64le(out, attributes);
        put_u32le(out, version);
        out.insert(out.end(), measurement.digest.begin(), measurement.digest.end());
        return out;
    }

    static SigningMaterial from_bytes(ByteSpan b) {
        if (b.size() != kMaterialSize) throw SigningError("signing material must be 64 bytes");
        SigningMaterial m;
        std::copy(b.begin(), b.begin() + 16, m.vendor_id.begin());
        m.date = get_u32le(b, 16);
        m.attributes = get_u64le(b, 20);
        m.version = get_u32le(b, 28);
        std::copy(b.begin() + 32, b.begin() + 64, m.measurement.digest.begin());
        return m;
    }
};

struct EnclaveSignature {
    std::array<uint8_t, kRsaBytes> rsa_signature{};
    std::array<uint8_t, kRsaBytes> public_key_modulus{};

    bool operator==(const EnclaveSignature&) const = default;
};

// May be internally inconsistent on purpose; verify_and_load is the judge.
struct SignedEnclave {
    Bytes image_bytes;
    SigningMaterial material;
    EnclaveSignature signature;

    bool operator==(const SignedEnclave&) const = default;
};

inline SigningMaterial generate_signing_material(const EnclaveImage& image,
                                                 const VendorMetadata& meta) {
    SigningMaterial m;
    m.vendor_id = meta.vendor_id;
    m.date = meta.date;
    m.attributes = meta.attributes;
    m.version = meta.version;
    m.measurement = measure(image);
    return m;
}

inline SigningMaterial generate_signing_material_for_bytes(ByteSpan image_bytes,
                                                           const VendorMetadata& meta) {
    SigningMaterial m;
    m.vendor_id = meta.vendor_id;
    m.date = meta.date;
    m.attributes = meta.attributes;
    m.version = meta.version;
    m.measurement = measure_bytes(image_bytes);
    return m;
}

inline EnclaveSignature sign_material(const SigningMaterial& material, const RsaSigningKey& key) {
    if (!key.valid()) throw SigningError("invalid key");
    EnclaveSignature sig;
    sig.rsa_signature = key.sign(material.canonical_bytes());
    sig.public_key_modulus = key.modulus();
    return sig;
}

// No consistency check here, deliberately: the bundle is assembled verbatim.
inline SignedEnclave append_signature(Bytes image_bytes, const SigningMaterial& material,
                                      const EnclaveSignature& signature) {
    return SignedEnclave{std::move(image_bytes), material, signature};
}

inline SignedEnclave sign_single_step(const EnclaveImage& image, const VendorMetadata& meta,
                                      const RsaSigningKey& key) {
    SigningMaterial material = generate_signing_material(image, meta);
    EnclaveSignature sig = sign_material(material, key);
    return append_signature(serialize(image), material, sig);
}

enum class Rejection : uint8_t {
    MeasurementMismatch,  // image bytes no longer hash to the signed measurement
    BadSignature,         // material fails under the embedded public key
};

inline const char* rejection_name(Rejection r) {
    return r == Rejection::MeasurementMismatch ? "MeasurementMismatch" : "BadSignature";
}

struct LoadedEnclave {
    EnclaveImage image;
    MeasurementHash measurement;
    uint64_t platform_token = 0;
};

using LoadResult = std::variant<LoadedEnclave, Rejection>;

inline bool accepted(const LoadResult& r) { return std::holds_alternative<LoadedEnclave>(r); }

// Recompute the measurement over the bundled bytes and check the signature
// over the material. Accept only if both hold.
inline LoadResult verify_and_load(const SignedEnclave& bundle) {
    MeasurementHash actual = measure_bytes(bundle.image_bytes);
    if (!(actual == bundle.material.measurement)) return Rejection::MeasurementMismatch;
    if (!rsa_verify(bundle.signature.public_key_modulus, bundle.material.canonical_bytes(),
                    bundle.signature.rsa_signature))
        return Rejection::BadSignature;
    LoadedEnclave loaded;
    loaded.image = parse(bundle.image_bytes);
    loaded.measurement = actual;
    return loaded;
}

struct AttestationReport {
    MeasurementHash target_measurement;
    MeasurementHash attester_measurement;
    std::array<uint8_t, 16> auxiliary{};
    Hash mac{};
};

// One simulated platform: owns the hidden report key. Reports it issues
// can only be checked here, and only by the attester they were bound to.
class Platform {
  public:
    Platform() = default;

    static Platform with_random_secret() {
        Platform p;
        Bytes s = random_bytes(kHashSize);
        std::copy(s.begin(), s.end(), p.secret_.begin());
        p.initialized_ = true;
        p.token_ = next_token();
        return p;
    }

    // Deterministic secret for reproducible scenario runs.
    static Platform from_seed(uint64_t seed) {
        Platform p;
        Bytes seed_bytes = to_bytes("platform-secret:");
        put_u64le(seed_bytes, seed);
        p.secret_ = sha256(seed_bytes);
        p.initialized_ = true;
        p.token_ = next_token();
        return p;
    }

    bool initialized() const { return initialized_; }
    uint64_t token() const { return token_; }

    LoadResult verify_and_load(const SignedEnclave& bundle) const {
        LoadResult r = setsim::verify_and_load(bundle);
        if (auto* loaded = std::get_if<LoadedEnclave>(&r)) loaded->platform_token = token_;
        return r;
    }

    AttestationReport attest_local(const LoadedEnclave& target,
                                   const MeasurementHash& attester_measurement) const {
        if (!initialized_) throw SigningError("platform not initialized");
        if (target.platform_token != token_)
            throw SigningError("target was not loaded on this platform");
        return attest_measurement(target.measurement, attester_measurement);
    }

    // Report over a bare measurement; local attestation of non-enclave
    // identities (e.g. a pipeline manifest) goes through here.
    AttestationReport attest_measurement(const MeasurementHash& target_measurement,
                                         const MeasurementHash& attester_measurement) const {
        if (!initialized_) throw SigningError("platform not initialized");
        AttestationReport r;
        r.target_measurement = target_measurement;
        r.attester_measurement = attester_measurement;
        r.mac = report_mac(r, attester_measurement);
        return r;
    }

    bool check_report(const AttestationReport& report,
                      const MeasurementHash& attester_measurement) const {
        if (!initialized_) throw SigningError("platform not initialized");
        return report_mac(report, attester_measurement) == report.mac;
    }

  private:
    static uint64_t next_token() {
        static std::atomic<uint64_t> counter{1};
        return counter.fetch_add(1);
    }

    // MAC key is the platform secret bound to the attester identity, so the
    // report only checks out for (this platform, that attester).
    Hash report_mac(const AttestationReport& r, const MeasurementHash& attester) const {
        Bytes key(secret_.begin(), secret_.end());
        key.insert(key.end(), attester.digest.begin(), attester.digest.end());
        Bytes msg(r.target_measurement.digest.begin(), r.target_measurement.digest.end());
        msg.insert(msg.end(), attester.digest.begin(), attester.digest.end());
        msg.insert(msg.end(), r.auxiliary.begin(), r.auxiliary.end());
        return hmac_sha256(key, msg);
    }

    Hash secret_{};
    bool initialized_ = false;
    uint64_t token_ = 0;
};

inline Bytes write_bundle(const SignedEnclave& bundle) {
    Bytes out;
    out.insert(out.end(), kBundleMagic, kBundleMagic + 4);
    put_u32le(out, static_cast<uint32_t>(bundle.image_bytes.size()));
    out.insert(out.end(), bundle.image_bytes.begin(), bundle.image_bytes.end());
    Bytes material = bundle.material.canonical_bytes();
    out.insert(out.end(), material.begin(), material.end());
    out.insert(out.end(), bundle.signature.rsa_signature.begin(),
               bundle.signature.rsa_signature.end());
    out.insert(out.end(), bundle.signature.public_key_modulus.begin(),
               bundle.signature.public_key_modulus.end());
    return out;
}

inline SignedEnclave read_bundle(ByteSpan bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kBundleMagic, 4) != 0)
        throw SigningError("bad bundle magic");
    uint32_t image_len = get_u32le(bytes, 4);
    size_t expect = 8 + static_cast<size_t>(image_len) + kMaterialSize + 2 * kRsaBytes;
    if (bytes.size() != expect) throw SigningError("bundle length mismatch");
    SignedEnclave b;
    b.image_bytes.assign(bytes.begin() + 8, bytes.begin() + 8 + image_len);
    size_t off = 8 + image_len;
    b.material = SigningMaterial::from_bytes(bytes.subspan(off, kMaterialSize));
    off += kMaterialSize;
    std::copy(bytes.begin() + static_cast<ptrdiff_t>(off),
              bytes.begin() + static_cast<ptrdiff_t>(off + kRsaBytes),
              b.signature.rsa_signature.begin());
    off += kRsaBytes;
    std::copy(bytes.begin() + static_cast<ptrdiff_t>(off),
              bytes.begin() + static_cast<ptrdiff_t>(off + kRsaBytes),
              b.signature.public_key_modulus.begin());
    return b;
}

}  // namespace setsim
