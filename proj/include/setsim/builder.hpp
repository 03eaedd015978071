#pragma once

// The atomic build-and-sign service: an attested pipeline that accepts
// source and key over an encrypted channel and returns a signed enclave,
// with no reachable state between compilation and material generation.
//
// Channel establishment is a simulated attestation handshake: the client
// sends a nonce and its expected builder measurement, the builder returns
// its manifest measurement, a platform report over it, and its own nonce;
// the session key is SHA-256(client_nonce || builder_nonce). Everything
// after the handshake is AES-256-GCM under that key.
//
// Wire framing (builder-serve / isv-client): frame = len u32 LE | payload,
// payload = one type byte ('H' hello, 'A' attest, 'Q' request, 'R' response)
// followed by the body. Hello/attest bodies are plaintext JSON; request and
// response bodies are sealed.

#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>

#include <json.hpp>

#include "setsim/assembler.hpp"
#include "setsim/pipeline.hpp"
#include "setsim/signing.hpp"

namespace setsim::builder {

class BuilderError : public std::runtime_error {
  public:
    enum class Kind {
        AttestationMismatch,
        MacFailure,
        RemoteError,  // the builder relayed a build/key failure, encrypted
        Protocol,
    };

    BuilderError(Kind kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
    Kind kind() const { return kind_; }

  private:
    Kind kind_;
};

struct BuilderManifest {
    std::string assembler_version = "1.0";
    uint16_t isa_version = 1;
    std::string module_version = "1.0";

    Bytes canonical() const {
        std::string s = "builder-manifest\nassembler=" + assembler_version +
                        "\nisa=" + std::to_string(isa_version) + "\nmodule=" + module_version +
                        "\n";
        return to_bytes(s);
    }

    MeasurementHash measurement() const { return {sha256(canonical())}; }
};

struct ProvisioningChannel {
    uint64_t id = 0;
    std::array<uint8_t, kAeadKeySize> session_key{};
    std::string peer;
    MeasurementHash attested_measurement;

    Bytes key_bytes() const { return Bytes(session_key.begin(), session_key.end()); }
};

struct BuildRequest {
    std::string source;
    VendorMetadata metadata;
    std::string private_key_pem;
};

// The pipeline object the hardening property is stated over: it refuses
// interception by construction.
class AtomicBuilderPipeline final : public SigningPipeline {
  public:
    bool interceptable() const override { return false; }
    const char* kind() const override { return "builder-atomic"; }
};

namespace detail {

inline std::array<uint8_t, kAeadKeySize> derive_session_key(ByteSpan client_nonce,
                                                            ByteSpan builder_nonce) {
    Bytes mix(client_nonce.begin(), client_nonce.end());
    mix.insert(mix.end(), builder_nonce.begin(), builder_nonce.end());
    return sha256(mix);
}

inline nlohmann::json request_to_json(const BuildRequest& req) {
    return nlohmann::json{
        {"source", req.source},
        {"vendor_id", to_hex(ByteSpan(req.metadata.vendor_id.data(), 16))},
        {"date", req.metadata.date},
        {"attributes", req.metadata.attributes},
        {"version", req.metadata.version},
        {"key_pem", req.private_key_pem},
    };
}

inline BuildRequest request_from_json(const nlohmann::json& j) {
    BuildRequest req;
    req.source = j.at("source").get<std::string>();
    Bytes vid = from_hex(j.at("vendor_id").get<std::string>());
    if (vid.size() != 16) throw BuilderError(BuilderError::Kind::Protocol, "vendor_id length");
    std::copy(vid.begin(), vid.end(), req.metadata.vendor_id.begin());
    req.metadata.date = j.at("date").get<uint32_t>();
    req.metadata.attributes = j.at("attributes").get<uint64_t>();
    req.metadata.version = j.at("version").get<uint32_t>();
    req.private_key_pem = j.at("key_pem").get<std::string>();
    return req;
}

}  // namespace detail

class BuilderService {
  public:
    explicit BuilderService(uint64_t seed = 0)
        : platform_(Platform::from_seed(seed ^ 0x6275696c64657221ull)), seed_(seed) {}

    const BuilderManifest& manifest() const { return manifest_; }
    MeasurementHash manifest_measurement() const { return manifest_.measurement(); }
    const Platform& platform() const { return platform_; }

    // Handshake, builder side: bind a fresh channel to the client nonce and
    // report the manifest measurement.
    struct AttestReply {
        uint64_t channel_id = 0;
        MeasurementHash measurement;
        AttestationReport report;
        Bytes builder_nonce;
    };

    AttestReply open_channel(ByteSpan client_nonce, const std::string& isv_identity) {
        std::lock_guard<std::mutex> lock(*mu_);
        AttestReply reply;
        reply.channel_id = next_channel_id_++;
        reply.measurement = manifest_measurement();
        Bytes nonce_seed = to_bytes("builder-nonce:");
        put_u64le(nonce_seed, seed_);
        put_u64le(nonce_seed, reply.channel_id);
        Hash h = sha256(nonce_seed);
        reply.builder_nonce.assign(h.begin(), h.begin() + 16);
        MeasurementHash isv_m{sha256(to_bytes(isv_identity))};
        reply.report = platform_.attest_measurement(reply.measurement, isv_m);
        session_keys_[reply.channel_id] =
            detail::derive_session_key(client_nonce, reply.builder_nonce);
        return reply;
    }

    // The atomic window: decrypt, build, sign, append, encrypt: nothing in
    // between is observable. Build failures are relayed inside the sealed
    // response, never in the clear.
    Bytes build_and_sign_atomic(uint64_t channel_id, ByteSpan sealed_request) {
        std::array<uint8_t, kAeadKeySize> key_copy{};
        {
            std::lock_guard<std::mutex> lock(*mu_);
            auto key_it = session_keys_.find(channel_id);
            if (key_it == session_keys_.end())
                throw BuilderError(BuilderError::Kind::Protocol, "unknown channel");
            key_copy = key_it->second;
        }
        ByteSpan key(key_copy.data(), key_copy.size());
        auto plain = aead_open(key, sealed_request);
        if (!plain)
            throw BuilderError(BuilderError::Kind::MacFailure, "request failed authentication");

        nlohmann::json response;
        try {
            BuildRequest req = detail::request_from_json(nlohmann::json::parse(*plain));
            RsaSigningKey signing_key = RsaSigningKey::from_pem(req.private_key_pem);
            PlainPipeline pipeline(req.source, req.metadata, &signing_key);
            SignedEnclave bundle = pipeline.run();
            response = {{"ok", true}, {"bundle", to_hex(write_bundle(bundle))}};
        } catch (const AsmError& e) {
            response = {{"ok", false}, {"error", std::string("assembly: ") + e.what()}};
        } catch (const CryptoError& e) {
            response = {{"ok", false}, {"error", std::string("key: ") + e.what()}};
        } catch (const std::exception& e) {
            response = {{"ok", false}, {"error", e.what()}};
        }
        return aead_seal(key, to_bytes(response.dump()));
    }

    // Serves the framed stdio protocol until EOF.
    void serve(std::istream& in, std::ostream& out);

  private:
    std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
    BuilderManifest manifest_;
    Platform platform_;
    uint64_t seed_ = 0;
    uint64_t next_channel_id_ = 1;
    std::map<uint64_t, std::array<uint8_t, kAeadKeySize>> session_keys_;
};

// ISV side of the handshake. Fails closed when the builder's attested
// measurement is not the expected one.
inline ProvisioningChannel establish_channel(BuilderService& service,
                                             const std::string& isv_identity,
                                             const MeasurementHash& expected_builder_measurement,
                                             ByteSpan client_nonce_in = {}) {
    Bytes client_nonce = client_nonce_in.empty()
                             ? random_bytes(16)
                             : Bytes(client_nonce_in.begin(), client_nonce_in.end());
    BuilderService::AttestReply reply = service.open_channel(client_nonce, isv_identity);
    MeasurementHash isv_m{sha256(to_bytes(isv_identity))};
    if (!(reply.measurement == expected_builder_measurement) ||
        !service.platform().check_report(reply.report, isv_m))
        throw BuilderError(BuilderError::Kind::AttestationMismatch,
                           "builder measurement " + reply.measurement.hex() +
                               " does not match expected " + expected_builder_measurement.hex());
    ProvisioningChannel ch;
    ch.id = reply.channel_id;
    ch.session_key = detail::derive_session_key(client_nonce, reply.builder_nonce);
    ch.peer = isv_identity;
    ch.attested_measurement = reply.measurement;
    return ch;
}

inline Bytes seal_build_request(const ProvisioningChannel& channel, const BuildRequest& request) {
    return aead_seal(channel.key_bytes(), to_bytes(detail::request_to_json(request).dump()));
}

inline SignedEnclave open_build_response(const ProvisioningChannel& channel,
                                         ByteSpan sealed_response) {
    auto plain = aead_open(channel.key_bytes(), sealed_response);
    if (!plain)
        throw BuilderError(BuilderError::Kind::MacFailure, "response failed authentication");
    nlohmann::json j = nlohmann::json::parse(*plain);
    if (!j.at("ok").get<bool>())
        throw BuilderError(BuilderError::Kind::RemoteError, j.at("error").get<std::string>());
    return read_bundle(from_hex(j.at("bundle").get<std::string>()));
}

// Convenience: full ISV round trip against an in-process service.
inline SignedEnclave build_via_channel(BuilderService& service, const ProvisioningChannel& channel,
                                       const BuildRequest& request) {
    Bytes sealed = seal_build_request(channel, request);
    Bytes response = service.build_and_sign_atomic(channel.id, sealed);
    return open_build_response(channel, response);
}

// Residual surface: mutate image bytes after the signed response exists.
// Tests use it to show the mutation is caught at load.
template <typename Mutation>
SignedEnclave adversary_post_hook_tamper(const SignedEnclave& bundle, Mutation&& mutate) {
    SignedEnclave out = bundle;
    mutate(out.image_bytes);
    return out;
}

// ---------------------------------------------------------------------------
// Frame codec for the stdio protocol

inline void write_frame(std::ostream& out, char type, ByteSpan body) {
    Bytes frame;
    put_u32le(frame, static_cast<uint32_t>(body.size() + 1));
    frame.push_back(static_cast<uint8_t>(type));
    frame.insert(frame.end(), body.begin(), body.end());
    out.write(reinterpret_cast<const char*>(frame.data()), static_cast<std::streamsize>(frame.size()));
    out.flush();
}

inline bool read_frame(std::istream& in, char& type, Bytes& body) {
    uint8_t len_buf[4];
    if (!in.read(reinterpret_cast<char*>(len_buf), 4)) return false;
    uint32_t len = get_u32le(ByteSpan(len_buf, 4), 0);
    if (len == 0) return false;
    Bytes payload(len);
    if (!in.read(reinterpret_cast<char*>(payload.data()), len)) return false;
    type = static_cast<char>(payload[0]);
    body.assign(payload.begin() + 1, payload.end());
    return true;
}

inline void BuilderService::serve(std::istream& in, std::ostream& out) {
    char type = 0;
    Bytes body;
    uint64_t current_channel = 0;
    while (read_frame(in, type, body)) {
        if (type == 'H') {
            nlohmann::json hello = nlohmann::json::parse(body);
            Bytes client_nonce = from_hex(hello.at("client_nonce").get<std::string>());
            AttestReply reply =
                open_channel(client_nonce, hello.at("isv_identity").get<std::string>());
            current_channel = reply.channel_id;
            nlohmann::json attest = {
                {"channel_id", reply.channel_id},
                {"measurement", reply.measurement.hex()},
                {"builder_nonce", to_hex(reply.builder_nonce)},
                {"report_mac", to_hex(reply.report.mac)},
            };
            write_frame(out, 'A', to_bytes(attest.dump()));
        } else if (type == 'Q') {
            if (current_channel == 0) return;  // protocol violation: drop the peer
            Bytes response;
            try {
                response = build_and_sign_atomic(current_channel, body);
            } catch (const BuilderError&) {
                return;  // unauthenticated request: no output at all
            }
            write_frame(out, 'R', response);
        } else {
            return;
        }
    }
}

// isv-client side of the framed protocol.
inline SignedEnclave client_exchange(std::istream& in, std::ostream& out,
                                     const std::string& isv_identity,
                                     const MeasurementHash& expected_builder_measurement,
                                     const BuildRequest& request) {
    Bytes client_nonce = random_bytes(16);
    nlohmann::json hello = {{"isv_identity", isv_identity},
                            {"client_nonce", to_hex(client_nonce)}};
    write_frame(out, 'H', to_bytes(hello.dump()));

    char type = 0;
    Bytes body;
    if (!read_frame(in, type, body) || type != 'A')
        throw BuilderError(BuilderError::Kind::Protocol, "expected attest frame");
    nlohmann::json attest = nlohmann::json::parse(body);
    MeasurementHash measured;
    Bytes mh = from_hex(attest.at("measurement").get<std::string>());
    std::copy(mh.begin(), mh.end(), measured.digest.begin());
    if (!(measured == expected_builder_measurement))
        throw BuilderError(BuilderError::Kind::AttestationMismatch,
                           "builder measurement mismatch");

    ProvisioningChannel ch;
    ch.id = attest.at("channel_id").get<uint64_t>();
    ch.session_key = detail::derive_session_key(
        client_nonce, from_hex(attest.at("builder_nonce").get<std::string>()));
    ch.peer = isv_identity;
    ch.attested_measurement = measured;

    write_frame(out, 'Q', seal_build_request(ch, request));
    if (!read_frame(in, type, body) || type != 'R')
        throw BuilderError(BuilderError::Kind::Protocol, "expected response frame");
    return open_build_response(ch, body);
}

}  // namespace setsim::builder
