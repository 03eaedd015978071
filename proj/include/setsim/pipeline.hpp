#pragma once

// Build-and-sign pipelines.
//
// PlainPipeline models the ordinary manufacturing chain: compile, generate
// signing material, sign, append. Between compile and material generation
// there is a window where the in-flight image bytes exist outside any
// protection: that is the surface attack::intercept suspends into. The
// hardened pipeline in builder.hpp exposes no such window.

#include <chrono>
#include <memory>
#include <optional>
#include <string>

#include "setsim/assembler.hpp"
#include "setsim/signing.hpp"

namespace setsim {

enum class SigningFlow : uint8_t {
    SingleStep,  // key lives on the build system
    TwoStep,     // material generated locally, signed at a separate facility
};

// The production signing service of the two-step flow: signs whatever
// well-formed material it is handed, blindly.
class SignerFacility {
  public:
    explicit SignerFacility(RsaSigningKey key) : key_(std::move(key)) {}

    EnclaveSignature sign(const SigningMaterial& material) const {
        return sign_material(material, key_);
    }

    const RsaSigningKey& key() const { return key_; }

  private:
    RsaSigningKey key_;
};

struct PhaseTimings {
    double prepare_s = 0;
    double compile_s = 0;
    double patch_s = 0;  // zero unless an interception wrote bytes
    double sign_s = 0;

    double total() const { return prepare_s + compile_s + patch_s + sign_s; }
};

class SigningPipeline {
  public:
    virtual ~SigningPipeline() = default;
    virtual bool interceptable() const = 0;
    virtual const char* kind() const = 0;
};

class PipelineError : public std::runtime_error {
  public:
    explicit PipelineError(const std::string& what) : std::runtime_error(what) {}
};

class PlainPipeline final : public SigningPipeline {
  public:
    PlainPipeline(std::string source, VendorMetadata meta, const RsaSigningKey* key,
                  SigningFlow flow = SigningFlow::SingleStep,
                  const SignerFacility* facility = nullptr)
        : source_(std::move(source)),
          meta_(meta),
          key_(key),
          facility_(facility),
          flow_(flow) {}

    bool interceptable() const override { return true; }
    const char* kind() const override { return "plain"; }

    bool suspended() const { return stage_ == Stage::Suspended; }
    bool finished() const { return stage_ == Stage::Done; }
    const PhaseTimings& timings() const { return timings_; }

    SignedEnclave run() {
        if (stage_ == Stage::Done) throw PipelineError("pipeline already ran");
        if (stage_ == Stage::Idle) compile();
        return finish();
    }

    // Runs the pipeline only up to material generation. This is the builder
    // node's half of the two-step flow when the signature is produced
    // elsewhere (the signer facility, or the majority arbitration).
    SigningMaterial produce_material() {
        if (stage_ == Stage::Done) throw PipelineError("pipeline already ran");
        if (stage_ == Stage::Idle) compile();
        stage_ = Stage::Done;
        return generate_signing_material_for_bytes(image_bytes_, meta_);
    }

    // The bytes the pipeline last operated on; what a node appends the
    // signature to.
    const Bytes& final_image_bytes() const { return image_bytes_; }

    // -- interception surface (driven by attack::intercept) ---------------

    // Runs the compiler, then suspends just before material generation.
    void suspend_at_interception() {
        if (stage_ == Stage::Suspended) throw PipelineError("already intercepted");
        if (stage_ != Stage::Idle) throw PipelineError("pipeline already past the window");
        compile();
        stage_ = Stage::Suspended;
    }

    const Bytes& inflight_image_bytes() const {
        require_suspended();
        return image_bytes_;
    }

    void replace_inflight_image_bytes(Bytes bytes) {
        require_suspended();
        auto t0 = clock_now();
        image_bytes_ = std::move(bytes);
        timings_.patch_s += seconds_since(t0);
    }

    SignedEnclave resume() {
        require_suspended();
        return finish();
    }

  private:
    enum class Stage : uint8_t { Idle, Compiled, Suspended, Done };

    static std::chrono::steady_clock::time_point clock_now() {
        return std::chrono::steady_clock::now();
    }
    static double seconds_since(std::chrono::steady_clock::time_point t0) {
        return std::chrono::duration<double>(clock_now() - t0).count();
    }

    void require_suspended() const {
        if (stage_ != Stage::Suspended) throw PipelineError("pipeline is not suspended");
    }

    void compile() {
        auto t0 = clock_now();
        std::string normalized = source_;  // sources arrive ready-to-build
        timings_.prepare_s = seconds_since(t0);

        auto t1 = clock_now();
        image_bytes_ = serialize(assemble(normalized));
        timings_.compile_s = seconds_since(t1);
        stage_ = Stage::Compiled;
    }

    SignedEnclave finish() {
        auto t0 = clock_now();
        SigningMaterial material = generate_signing_material_for_bytes(image_bytes_, meta_);
        EnclaveSignature sig;
        if (flow_ == SigningFlow::TwoStep) {
            if (!facility_) throw PipelineError("two-step flow needs a signer facility");
            sig = facility_->sign(material);
        } else {
            if (!key_) throw PipelineError("single-step flow needs a private key");
            sig = sign_material(material, *key_);
        }
        SignedEnclave bundle = append_signature(image_bytes_, material, sig);
        timings_.sign_s = seconds_since(t0);
        stage_ = Stage::Done;
        return bundle;
    }

    std::string source_;
    VendorMetadata meta_;
    const RsaSigningKey* key_;
    const SignerFacility* facility_;
    SigningFlow flow_;
    Stage stage_ = Stage::Idle;
    Bytes image_bytes_;
    PhaseTimings timings_;
};

}  // namespace setsim
