#pragma once

// Thin RAII layer over libcrypto: SHA-256, HMAC-SHA-256, RSA-3072 (public
// exponent 3, PKCS#1 v1.5: deterministic signatures), AES-256-GCM.

#include <openssl/core_names.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/param_build.h>
#include <openssl/pem.h>
#include <openssl/rand.h>
#include <openssl/rsa.h>

#include <array>
#include <memory>
#include <optional>
#include <string>

#include "setsim/bytes.hpp"

namespace setsim {

inline constexpr size_t kHashSize = 32;
inline constexpr int kRsaBits = 3072;
inline constexpr size_t kRsaBytes = 384;
inline constexpr unsigned long kRsaPublicExponent = 3;
inline constexpr size_t kAeadKeySize = 32;
inline constexpr size_t kAeadNonceSize = 12;
inline constexpr size_t kAeadTagSize = 16;

using Hash = std::array<uint8_t, kHashSize>;

class CryptoError : public std::runtime_error {
  public:
    explicit CryptoError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

[[noreturn]] inline void throw_openssl(const std::string& where) {
    char buf[256] = {0};
    ERR_error_string_n(ERR_get_error(), buf, sizeof buf);
    throw CryptoError(where + ": " + buf);
}

struct EvpPkeyDeleter {
    void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct EvpPkeyCtxDeleter {
    void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
struct EvpCipherCtxDeleter {
    void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};
struct BioDeleter {
    void operator()(BIO* b) const { BIO_free(b); }
};
struct BnDeleter {
    void operator()(BIGNUM* b) const { BN_free(b); }
};

using PkeyPtr = std::unique_ptr<EVP_PKEY, EvpPkeyDeleter>;
using PkeyCtxPtr = std::unique_ptr<EVP_PKEY_CTX, EvpPkeyCtxDeleter>;

}  // namespace detail

inline Hash sha256(ByteSpan data) {
    Hash out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != kHashSize)
        detail::throw_openssl("sha256");
    return out;
}

inline Hash hmac_sha256(ByteSpan key, ByteSpan msg) {
    Hash out{};
    unsigned int len = 0;
    if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), msg.data(), msg.size(),
             out.data(), &len) == nullptr ||
        len != kHashSize)
        detail::throw_openssl("hmac_sha256");
    return out;
}

inline Bytes random_bytes(size_t n) {
    Bytes out(n);
    if (n > 0 && RAND_bytes(out.data(), static_cast<int>(n)) != 1)
        detail::throw_openssl("random_bytes");
    return out;
}

// RSA-3072 private key handle. Signatures are PKCS#1 v1.5 over SHA-256, so a
// fixed (key, message) pair always produces the same 384 bytes.
class RsaSigningKey {
  public:
    RsaSigningKey() = default;

    static RsaSigningKey generate() {
        detail::PkeyCtxPtr ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_RSA, nullptr));
        if (!ctx || EVP_PKEY_keygen_init(ctx.get()) != 1) detail::throw_openssl("keygen init");
        if (EVP_PKEY_CTX_set_rsa_keygen_bits(ctx.get(), kRsaBits) != 1)
            detail::throw_openssl("keygen bits");
        std::unique_ptr<BIGNUM, detail::BnDeleter> e(BN_new());
        if (!e || BN_set_word(e.get(), kRsaPublicExponent) != 1)
            detail::throw_openssl("keygen exponent");
        if (EVP_PKEY_CTX_set1_rsa_keygen_pubexp(ctx.get(), e.get()) != 1)
            detail::throw_openssl("keygen exponent");
        EVP_PKEY* raw = nullptr;
        if (EVP_PKEY_keygen(ctx.get(), &raw) != 1) detail::throw_openssl("keygen");
        RsaSigningKey key;
        key.pkey_.reset(raw);
        return key;
    }

    static RsaSigningKey from_pem(const std::string& pem) {
        std::unique_ptr<BIO, detail::BioDeleter> bio(
            BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size())));
        if (!bio) detail::throw_openssl("pem bio");
        EVP_PKEY* raw = PEM_read_bio_PrivateKey(bio.get(), nullptr, nullptr, nullptr);
        if (!raw) throw CryptoError("invalid key: not a PEM private key");
        RsaSigningKey key;
        key.pkey_.reset(raw);
        key.check();
        return key;
    }

    std::string to_pem() const {
        std::unique_ptr<BIO, detail::BioDeleter> bio(BIO_new(BIO_s_mem()));
        if (!bio || PEM_write_bio_PrivateKey(bio.get(), pkey_.get(), nullptr, nullptr, 0, nullptr,
                                             nullptr) != 1)
            detail::throw_openssl("pem write");
        char* data = nullptr;
        long len = BIO_get_mem_data(bio.get(), &data);
        return std::string(data, static_cast<size_t>(len));
    }

    bool valid() const { return pkey_ != nullptr; }

    std::array<uint8_t, kRsaBytes> modulus() const {
        BIGNUM* n = nullptr;
        if (EVP_PKEY_get_bn_param(pkey_.get(), OSSL_PKEY_PARAM_RSA_N, &n) != 1)
            detail::throw_openssl("modulus");
        std::unique_ptr<BIGNUM, detail::BnDeleter> guard(n);
        std::array<uint8_t, kRsaBytes> out{};
        if (BN_bn2binpad(n, out.data(), kRsaBytes) != static_cast<int>(kRsaBytes))
            detail::throw_openssl("modulus pad");
        return out;
    }

    std::array<uint8_t, kRsaBytes> sign(ByteSpan message) const {
        if (!valid()) throw CryptoError("invalid key: empty");
        Hash digest = sha256(message);
        detail::PkeyCtxPtr ctx(EVP_PKEY_CTX_new(pkey_.get(), nullptr));
        if (!ctx || EVP_PKEY_sign_init(ctx.get()) != 1) detail::throw_openssl("sign init");
        if (EVP_PKEY_CTX_set_rsa_padding(ctx.get(), RSA_PKCS1_PADDING) != 1 ||
            EVP_PKEY_CTX_set_signature_md(ctx.get(), EVP_sha256()) != 1)
            detail::throw_openssl("sign setup");
        std::array<uint8_t, kRsaBytes> sig{};
        size_t siglen = kRsaBytes;
        if (EVP_PKEY_sign(ctx.get(), sig.data(), &siglen, digest.data(), digest.size()) != 1 ||
            siglen != kRsaBytes)
            detail::throw_openssl("sign");
        return sig;
    }

  private:
    void check() const {
        if (EVP_PKEY_get_base_id(pkey_.get()) != EVP_PKEY_RSA)
            throw CryptoError("invalid key: not RSA");
        if (EVP_PKEY_get_bits(pkey_.get()) != kRsaBits)
            throw CryptoError("invalid key: expected RSA-" + std::to_string(kRsaBits) + ", got " +
                              std::to_string(EVP_PKEY_get_bits(pkey_.get())) + " bits");
    }

    detail::PkeyPtr pkey_;
};

// Verify a PKCS#1 v1.5 / SHA-256 signature against a bare 384-byte modulus
// (the public exponent is fixed at 3 by convention).
inline bool rsa_verify(ByteSpan modulus, ByteSpan message, ByteSpan signature) {
    if (modulus.size() != kRsaBytes || signature.size() != kRsaBytes) return false;
    std::unique_ptr<BIGNUM, detail::BnDeleter> n(
        BN_bin2bn(modulus.data(), static_cast<int>(modulus.size()), nullptr));
    std::unique_ptr<BIGNUM, detail::BnDeleter> e(BN_new());
    if (!n || !e || BN_set_word(e.get(), kRsaPublicExponent) != 1) return false;

    OSSL_PARAM_BLD* bld = OSSL_PARAM_BLD_new();
    if (!bld) return false;
    OSSL_PARAM_BLD_push_BN(bld, OSSL_PKEY_PARAM_RSA_N, n.get());
    OSSL_PARAM_BLD_push_BN(bld, OSSL_PKEY_PARAM_RSA_E, e.get());
    OSSL_PARAM* params = OSSL_PARAM_BLD_to_param(bld);
    OSSL_PARAM_BLD_free(bld);
    if (!params) return false;

    detail::PkeyCtxPtr fctx(EVP_PKEY_CTX_new_id(EVP_PKEY_RSA, nullptr));
    EVP_PKEY* raw = nullptr;
    bool ok = fctx && EVP_PKEY_fromdata_init(fctx.get()) == 1 &&
              EVP_PKEY_fromdata(fctx.get(), &raw, EVP_PKEY_PUBLIC_KEY, params) == 1;
    OSSL_PARAM_free(params);
    if (!ok) return false;
    detail::PkeyPtr pkey(raw);

    Hash digest = sha256(message);
    detail::PkeyCtxPtr vctx(EVP_PKEY_CTX_new(pkey.get(), nullptr));
    if (!vctx || EVP_PKEY_verify_init(vctx.get()) != 1) return false;
    if (EVP_PKEY_CTX_set_rsa_padding(vctx.get(), RSA_PKCS1_PADDING) != 1 ||
        EVP_PKEY_CTX_set_signature_md(vctx.get(), EVP_sha256()) != 1)
        return false;
    return EVP_PKEY_verify(vctx.get(), signature.data(), signature.size(), digest.data(),
                           digest.size()) == 1;
}

// AES-256-GCM. Output layout: nonce(12) || ciphertext || tag(16).
inline Bytes aead_seal(ByteSpan key, ByteSpan plaintext, ByteSpan nonce_in = {}) {
    if (key.size() != kAeadKeySize) throw CryptoError("aead key must be 32 bytes");
    Bytes nonce = nonce_in.empty() ? random_bytes(kAeadNonceSize)
                                   : Bytes(nonce_in.begin(), nonce_in.end());
    if (nonce.size() != kAeadNonceSize) throw CryptoError("aead nonce must be 12 bytes");

    std::unique_ptr<EVP_CIPHER_CTX, detail::EvpCipherCtxDeleter> ctx(EVP_CIPHER_CTX_new());
    if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(),
                                   nonce.data()) != 1)
        detail::throw_openssl("aead seal init");

    Bytes out = nonce;
    out.resize(kAeadNonceSize + plaintext.size() + kAeadTagSize);
    int len = 0;
    if (!plaintext.empty() &&
        EVP_EncryptUpdate(ctx.get(), out.data() + kAeadNonceSize, &len, plaintext.data(),
                          static_cast<int>(plaintext.size())) != 1)
        detail::throw_openssl("aead seal update");
    int fin = 0;
    if (EVP_EncryptFinal_ex(ctx.get(), out.data() + kAeadNonceSize + len, &fin) != 1)
        detail::throw_openssl("aead seal final");
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kAeadTagSize,
                            out.data() + kAeadNonceSize + plaintext.size()) != 1)
        detail::throw_openssl("aead seal tag");
    return out;
}

// Returns nullopt on any authentication failure.
inline std::optional<Bytes> aead_open(ByteSpan key, ByteSpan sealed) {
    if (key.size() != kAeadKeySize || sealed.size() < kAeadNonceSize + kAeadTagSize)
        return std::nullopt;
    const uint8_t* nonce = sealed.data();
    const uint8_t* ct = sealed.data() + kAeadNonceSize;
    size_t ct_len = sealed.size() - kAeadNonceSize - kAeadTagSize;
    const uint8_t* tag = sealed.data() + sealed.size() - kAeadTagSize;

    std::unique_ptr<EVP_CIPHER_CTX, detail::EvpCipherCtxDeleter> ctx(EVP_CIPHER_CTX_new());
    if (!ctx ||
        EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), nonce) != 1)
        return std::nullopt;
    Bytes out(ct_len);
    int len = 0;
    if (ct_len > 0 &&
        EVP_DecryptUpdate(ctx.get(), out.data(), &len, ct, static_cast<int>(ct_len)) != 1)
        return std::nullopt;
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kAeadTagSize,
                            const_cast<uint8_t*>(tag)) != 1)
        return std::nullopt;
    int fin = 0;
    if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &fin) != 1) return std::nullopt;
    out.resize(static_cast<size_t>(len + fin));
    return out;
}

}  // namespace setsim
