#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "setsim/attack.hpp"

using namespace setsim;

namespace {

const RsaSigningKey& isv_key() {
    static RsaSigningKey k = RsaSigningKey::from_pem(testutil::samples().isv_key_pem);
    return k;
}

VendorMetadata meta() { return scenario::demo_metadata(); }

// Synthetic image with fenced fill runs at known offsets for planner tests.
EnclaveImage chunky_image(const std::vector<uint32_t>& chunk_sizes, uint8_t fill = 0x00) {
    EnclaveImage img;
    Bytes& code = img.code();
    auto fence = [&] {
        for (uint8_t b : ins::loadi(1, 0xDEADBEEF).encode()) code.push_back(b);
    };
    fence();  // also hosts the hook site
    for (uint32_t n : chunk_sizes) {
        code.insert(code.end(), n, fill);
        fence();
    }
    return img;
}

// Independent re-simulation of the greedy first-fit policy over the chunk
// list: aligned windows, one 8-byte link reserved per split, final back jump.
struct ExpectedFragment {
    uint32_t offset;
    uint32_t size;  // including the trailing jump
};
std::vector<ExpectedFragment> packing_oracle(const EnclaveImage& img, uint32_t payload_len,
                                             uint32_t hook) {
    struct Win {
        uint32_t start, size;
    };
    std::vector<Win> wins;
    for (const auto& run : testutil::chunk_oracle(img)) {
        uint32_t start = (run.offset + 7) & ~7u;
        uint32_t end = (run.offset + run.length) & ~7u;
        if (end <= start) continue;
        if (hook >= start && hook < end) {
            if (hook > start) wins.push_back({start, hook - start});
            if (hook + 8 < end) wins.push_back({hook + 8, end - hook - 8});
        } else {
            wins.push_back({start, end - start});
        }
    }
    std::vector<ExpectedFragment> out;
    uint32_t remaining = payload_len;
    for (const Win& w : wins) {
        if (remaining == 0) break;
        if (remaining + 8 <= w.size) {
            out.push_back({w.start, remaining + 8});
            remaining = 0;
            break;
        }
        if (w.size < 16) continue;
        uint32_t take = std::min(w.size - 8, remaining) & ~7u;
        if (take == 0) continue;
        out.push_back({w.start, take + 8});
        remaining -= take;
    }
    if (remaining > 0) return {};  // insufficient
    return out;
}

Bytes noop_payload(const EnclaveImage& img, uint32_t hook) {
    return Bytes(img.code().begin() + hook, img.code().begin() + hook + 8);
}

}  // namespace

TEST_SUITE("signer identification") {
    TEST_CASE("a planted signer is matched by name and code hash") {
        Hash h = sha256(to_bytes("signer-bin"));
        std::vector<attack::ProcessDescriptor> procs(1);
        procs[0].name = "enclave_sign";
        procs[0].code_hash = h;
        attack::SignerMatcher m;
        m.name_glob = "enclave?sign";
        m.code_hash = h;
        auto r = attack::identify_signer(procs, m);
        REQUIRE(r.has_value());
        CHECK(*r == 0);
    }

    TEST_CASE("an empty process list matches nothing") {
        attack::SignerMatcher m;
        m.name_glob = "*";
        CHECK(!attack::identify_signer({}, m).has_value());
    }

    TEST_CASE("one planted signer among 100 decoys is found exactly") {
        std::mt19937_64 rng(515);
        Hash signer_hash = sha256(to_bytes("the-signer"));
        for (int round = 0; round < 20; ++round) {
            std::vector<attack::ProcessDescriptor> procs(100);
            for (auto& p : procs) {
                p.name = "decoy-" + std::to_string(rng() % 1000);
                Bytes hb;
                put_u64le(hb, rng());
                p.code_hash = sha256(hb);  // cannot collide with the planted hash
                p.memory_bytes = rng() % (1u << 30);
            }
            size_t planted = rng() % 101;
            attack::ProcessDescriptor signer;
            signer.name = "enclave-signer";
            signer.code_hash = signer_hash;
            procs.insert(procs.begin() + static_cast<ptrdiff_t>(planted), signer);

            attack::SignerMatcher m;
            m.name_glob = "*signer*";
            m.code_hash = signer_hash;
            auto r = attack::identify_signer(procs, m);
            REQUIRE(r.has_value());
            CHECK(*r == planted);
        }
    }

    TEST_CASE("all enabled heuristics must hold at once") {
        attack::ProcessDescriptor p;
        p.name = "enclave-signer";
        p.code_hash = sha256(to_bytes("x"));
        p.memory_bytes = 1000;
        p.signer_cert_id = "cert-1";
        std::vector<attack::ProcessDescriptor> procs = {p};

        attack::SignerMatcher m;
        m.name_glob = "*signer*";
        m.memory_range = {{500, 2000}};
        m.cert_id = "cert-1";
        CHECK(attack::identify_signer(procs, m).has_value());
        m.cert_id = "cert-2";
        CHECK(!attack::identify_signer(procs, m).has_value());
        m.cert_id = "cert-1";
        m.memory_range = {{2000, 3000}};
        CHECK(!attack::identify_signer(procs, m).has_value());
    }
}

TEST_SUITE("interception") {
    TEST_CASE("a no-op interception leaves the output byte-identical") {
        PlainPipeline p1(testutil::samples().fintx, meta(), &isv_key());
        SignedEnclave plain = p1.run();

        PlainPipeline p2(testutil::samples().fintx, meta(), &isv_key());
        attack::InterceptionHandle h = attack::intercept(p2);
        SignedEnclave resumed = h.resume();

        CHECK(write_bundle(plain) == write_bundle(resumed));
    }

    TEST_CASE("a pre-material byte flip sails through verification") {
        PlainPipeline p(testutil::samples().fintx, meta(), &isv_key());
        attack::InterceptionHandle h = attack::intercept(p);
        Bytes bytes = h.image_bytes();
        size_t code_len = parse(bytes).code().size();
        bytes[13 + 5 + code_len - 1] ^= 0x5A;  // last CODE byte: trailing free space
        h.write_image_bytes(bytes);
        SignedEnclave bundle = h.resume();
        LoadResult r = verify_and_load(bundle);
        REQUIRE(accepted(r));
        CHECK(std::get<LoadedEnclave>(r).measurement == measure_bytes(bytes));
    }

    TEST_CASE("intercepting twice is reported") {
        PlainPipeline p(testutil::samples().minimal, meta(), &isv_key());
        attack::InterceptionHandle h = attack::intercept(p);
        try {
            attack::intercept(p);
            FAIL("expected AlreadyIntercepted");
        } catch (const attack::AttackError& e) {
            CHECK(e.kind() == attack::AttackError::Kind::AlreadyIntercepted);
        }
        h.resume();
    }
}

TEST_SUITE("patch planning") {
    TEST_CASE("a 24-byte payload in a 64-byte chunk uses one 32-byte fragment") {
        EnclaveImage img = chunky_image({64});
        uint32_t hook = 0;  // the leading fence instruction
        Bytes payload;
        for (uint8_t b : ins::loadi(2, 1).encode()) payload.push_back(b);
        for (uint8_t b : ins::loadi(3, 2).encode()) payload.push_back(b);
        Bytes saved = noop_payload(img, hook);
        payload.insert(payload.end(), saved.begin(), saved.end());

        attack::PatchPlan plan = attack::plan_patch(img, payload, hook);
        REQUIRE(plan.fragments.size() == 1);
        CHECK(plan.fragments[0].bytes.size() == 32);  // 24 payload + back jump
        CHECK(plan.back_offset == hook + 8);
        // the final instruction is the back jump
        Instruction last = Instruction::decode(plan.fragments[0].bytes,
                                               plan.fragments[0].bytes.size() - 8);
        CHECK(last.op() == Op::JMP);
        CHECK(last.imm == plan.back_offset);
    }

    TEST_CASE("a 48-byte payload splits over 32- and 40-byte chunks with one link") {
        EnclaveImage img = chunky_image({32, 40});
        uint32_t hook = 0;
        Bytes payload;
        for (int i = 0; i < 5; ++i)
            for (uint8_t b : ins::loadi(2, static_cast<uint32_t>(i)).encode())
                payload.push_back(b);
        Bytes saved = noop_payload(img, hook);
        payload.insert(payload.end(), saved.begin(), saved.end());
        REQUIRE(payload.size() == 48);

        attack::PatchPlan plan = attack::plan_patch(img, payload, hook);
        REQUIRE(plan.fragments.size() == 2);
        CHECK(plan.bytes_consumed() == 48 + 8 + 8);  // payload + link + back
        CHECK(plan.bytes_consumed() <= 72);
        // fragment 1 ends with a jump into fragment 2
        Instruction link = Instruction::decode(plan.fragments[0].bytes,
                                               plan.fragments[0].bytes.size() - 8);
        CHECK(link.op() == Op::JMP);
        CHECK(link.imm == plan.fragments[1].code_offset);
    }

    TEST_CASE("too little free space reports the shortfall") {
        EnclaveImage img = chunky_image({24});
        uint32_t hook = 0;
        Bytes payload;
        for (int i = 0; i < 7; ++i)
            for (uint8_t b : ins::loadi(2, 1).encode()) payload.push_back(b);
        Bytes saved = noop_payload(img, hook);
        payload.insert(payload.end(), saved.begin(), saved.end());
        try {
            attack::plan_patch(img, payload, hook);
            FAIL("expected InsufficientFreeSpace");
        } catch (const attack::AttackError& e) {
            CHECK(e.kind() == attack::AttackError::Kind::InsufficientFreeSpace);
            CHECK(e.shortfall() > 0);
        }
    }

    TEST_CASE("payloads must re-emit the displaced instruction") {
        EnclaveImage img = chunky_image({64});
        Bytes payload = ins::loadi(2, 1).encode();  // no saved re-emission
        try {
            attack::plan_patch(img, payload, 0);
            FAIL("expected BadPayload");
        } catch (const attack::AttackError& e) {
            CHECK(e.kind() == attack::AttackError::Kind::BadPayload);
        }
    }

    TEST_CASE("planned fragments match the independent packing oracle") {
        std::mt19937_64 rng(808);
        for (int iter = 0; iter < 200; ++iter) {
            std::vector<uint32_t> sizes;
            size_t n = 1 + rng() % 4;
            for (size_t i = 0; i < n; ++i) sizes.push_back(8 * (2 + rng() % 14));
            EnclaveImage img = chunky_image(sizes, rng() % 2 ? 0x00 : 0xFF);
            uint32_t hook = 0;
            uint32_t payload_instrs = 1 + rng() % 30;
            Bytes payload;
            for (uint32_t i = 0; i < payload_instrs; ++i)
                for (uint8_t b : ins::loadi(2, i).encode()) payload.push_back(b);
            Bytes saved = noop_payload(img, hook);
            payload.insert(payload.end(), saved.begin(), saved.end());

            auto expected =
                packing_oracle(img, static_cast<uint32_t>(payload.size()), hook);
            if (expected.empty()) {
                CHECK_THROWS_AS(attack::plan_patch(img, payload, hook), attack::AttackError);
                continue;
            }
            attack::PatchPlan plan = attack::plan_patch(img, payload, hook);
            REQUIRE(plan.fragments.size() == expected.size());
            for (size_t i = 0; i < expected.size(); ++i) {
                CHECK(plan.fragments[i].code_offset == expected[i].offset);
                CHECK(plan.fragments[i].bytes.size() == expected[i].size);
            }
        }
    }
}

TEST_SUITE("patch application") {
    TEST_CASE("apply touches exactly the hook slot and the fragment ranges") {
        EnclaveImage img = assemble(testutil::samples().fintx);
        LocatedTable located = locate_ecall_table(img);
        uint32_t hook = located.resolved_offsets[1];
        Bytes payload = noop_payload(img, hook);
        attack::PatchPlan plan = attack::plan_patch(img, payload, hook);
        EnclaveImage patched = attack::apply_patch(img, plan);

        const Bytes& before = img.code();
        const Bytes& after = patched.code();
        REQUIRE(before.size() == after.size());
        std::vector<bool> allowed(before.size(), false);
        for (size_t i = 0; i < 8; ++i) allowed[hook + i] = true;
        for (const auto& f : plan.fragments)
            for (size_t i = 0; i < f.bytes.size(); ++i) allowed[f.code_offset + i] = true;
        for (size_t i = 0; i < before.size(); ++i) {
            if (before[i] != after[i]) CHECK(allowed[i]);
        }
        // sections other than CODE are untouched
        CHECK(patched.rodata() == img.rodata());
        CHECK(patched.rwdata() == img.rwdata());
    }

    TEST_CASE("applying a plan to the wrong image is caught") {
        EnclaveImage img = assemble(testutil::samples().fintx);
        LocatedTable located = locate_ecall_table(img);
        uint32_t hook = located.resolved_offsets[1];
        attack::PatchPlan plan = attack::plan_patch(img, noop_payload(img, hook), hook);
        EnclaveImage other = assemble(testutil::samples().remote_decrypt);
        CHECK_THROWS_AS(attack::apply_patch(other, plan), attack::AttackError);
        // and a reused (already patched) image no longer has the free ranges
        EnclaveImage patched = attack::apply_patch(img, plan);
        CHECK_THROWS_AS(attack::apply_patch(patched, plan), attack::AttackError);
    }

    TEST_CASE("a no-op patch is observationally equivalent to no patch") {
        RsaSigningKey key = RsaSigningKey::from_pem(testutil::samples().isv_key_pem);
        auto run_ecall0 = [&](const EnclaveImage& img) {
            SignedEnclave bundle = sign_single_step(img, meta(), key);
            LoadResult r = verify_and_load(bundle);
            REQUIRE(accepted(r));
            vm::VmState st =
                vm::load(std::get<LoadedEnclave>(r), vm::MemoryLayout::standard());
            vm::Transcript tr = vm::ecall(st, 0, {0x80, 11, 22});
            return std::make_pair(vm::outcome_text(tr.outcome), tr.untrusted_snapshot);
        };

        std::mt19937_64 rng(31337);
        size_t patched_count = 0;
        for (int iter = 0; iter < 203; ++iter) {
            EnclaveImage img = iter == 0   ? assemble(testutil::samples().minimal)
                               : iter == 1 ? assemble(testutil::samples().remote_decrypt)
                               : iter == 2 ? assemble(testutil::samples().fintx)
                                           : assemble(testutil::random_program(rng, 1, 6));
            LocatedTable located = locate_ecall_table(img);
            uint32_t hook = located.resolved_offsets[0];
            attack::PatchPlan plan;
            try {
                plan = attack::plan_patch(img, noop_payload(img, hook), hook);
            } catch (const attack::AttackError&) {
                continue;  // no usable free space in this generated program
            }
            EnclaveImage patched = attack::apply_patch(img, plan);
            CHECK(run_ecall0(img) == run_ecall0(patched));
            ++patched_count;
        }
        CHECK(patched_count >= 200);
    }
}

TEST_SUITE("leak patch") {
    TEST_CASE("the out buffer receives MALW plus the hook-time frame") {
        EnclaveImage img = assemble(testutil::samples().fintx);
        attack::LeakPatchSpec spec = attack::LeakPatchSpec::make(1, 16, 24);
        attack::GeneratedPatch gen = attack::make_leak_patch(img, spec);
        attack::PatchPlan plan = attack::plan_patch(img, gen.payload, gen.hook_site);
        EnclaveImage patched = attack::apply_patch(img, plan);

        RsaSigningKey key = RsaSigningKey::from_pem(testutil::samples().isv_key_pem);
        SignedEnclave bundle = sign_single_step(patched, meta(), key);
        LoadResult r = verify_and_load(bundle);
        REQUIRE(accepted(r));

        vm::MemoryLayout layout = vm::MemoryLayout::standard();
        layout.out_buffers = {{0x100, 64}};
        vm::VmState st = vm::load(std::get<LoadedEnclave>(r), layout);
        vm::UntrustedAgent agent;
        agent.script = {vm::AgentAction::wait_for_marker(0x100),
                        vm::AgentAction::read(0x100, 20),
                        vm::AgentAction::write_flag(0x100 + 24, 1)};
        vm::DebugProbe probe{gen.hook_site, layout.stack_top - 16, 16};
        vm::Transcript tr = vm::run_with_agent(st, vm::EcallRequest{1, {0x100, 0xAABBCCDD, 0x11223344}},
                                               agent, vm::kDefaultStepBudget, &probe);
        REQUIRE(vm::completed(tr.outcome));

        Bytes leaked, snapshot;
        for (const auto& ev : tr.events) {
            if (ev.kind == "read") leaked = ev.bytes;
            if (ev.kind == "probe") snapshot = ev.bytes;
        }
        REQUIRE(leaked.size() == 20);
        CHECK(std::memcmp(leaked.data(), "MALW", 4) == 0);
        REQUIRE(snapshot.size() == 16);
        CHECK(std::equal(snapshot.begin(), snapshot.end(), leaked.begin() + 4));
        // the frame holds the by-value arguments in declaration order
        CHECK(get_u32le(snapshot, 12) == 0x100);       // arg0: out pointer
        CHECK(get_u32le(snapshot, 8) == 0xAABBCCDD);   // arg1
        CHECK(get_u32le(snapshot, 4) == 0x11223344);   // arg2
        CHECK(attack::classify_leak_outcome(tr) == attack::LeakOutcome::Leaked);
    }

    TEST_CASE("an ecall with only by-value arguments has no leak vector") {
        EnclaveImage img = assemble(testutil::samples().fintx);
        attack::LeakPatchSpec spec = attack::LeakPatchSpec::make(0, 16, 24);  // provision_key
        attack::GeneratedPatch gen = attack::make_leak_patch(img, spec);
        attack::PatchPlan plan = attack::plan_patch(img, gen.payload, gen.hook_site);
        EnclaveImage patched = attack::apply_patch(img, plan);

        RsaSigningKey key = RsaSigningKey::from_pem(testutil::samples().isv_key_pem);
        SignedEnclave bundle = sign_single_step(patched, meta(), key);
        LoadResult r = verify_and_load(bundle);
        REQUIRE(accepted(r));
        vm::VmState st = vm::load(std::get<LoadedEnclave>(r), vm::MemoryLayout::standard());
        vm::Transcript tr = vm::ecall(st, 0, {0x5A17C3D9, 0x2B74E6F1});
        CHECK(attack::classify_leak_outcome(tr) == attack::LeakOutcome::NoUntrustedPointerArg);
    }

    TEST_CASE("an agent that never releases the flag deadlocks the run") {
        EnclaveImage img = assemble(testutil::samples().fintx);
        attack::GeneratedPatch gen =
            attack::make_leak_patch(img, attack::LeakPatchSpec::make(1, 16, 24));
        attack::PatchPlan plan = attack::plan_patch(img, gen.payload, gen.hook_site);
        EnclaveImage patched = attack::apply_patch(img, plan);

        RsaSigningKey key = RsaSigningKey::from_pem(testutil::samples().isv_key_pem);
        SignedEnclave bundle = sign_single_step(patched, meta(), key);
        LoadResult r = verify_and_load(bundle);
        vm::MemoryLayout layout = vm::MemoryLayout::standard();
        vm::VmState st = vm::load(std::get<LoadedEnclave>(r), layout);
        vm::UntrustedAgent agent;  // empty script: nobody ever sets the flag
        vm::Transcript tr = vm::run_with_agent(st, vm::EcallRequest{1, {0x100, 1, 2}}, agent, 20000);
        CHECK(vm::deadlocked(tr.outcome));
        CHECK(attack::classify_leak_outcome(tr) == attack::LeakOutcome::Deadlock);
    }

    TEST_CASE("spec validation") {
        CHECK_THROWS_AS(attack::LeakPatchSpec::make(0, 0, 24), attack::AttackError);
        CHECK_THROWS_AS(attack::LeakPatchSpec::make(0, 100, 24), attack::AttackError);
        EnclaveImage img = assemble(testutil::samples().fintx);
        CHECK_THROWS_AS(attack::make_leak_patch(img, attack::LeakPatchSpec::make(9, 16, 24)),
                        attack::AttackError);
    }
}

TEST_SUITE("tamper patch") {
    TEST_CASE("the needle is replaced in place after decryption") {
        const std::string message = "John;892157932877159;$100";
        const std::array<uint32_t, 2> key_words = {0x5A17C3D9, 0x2B74E6F1};
        Bytes plain = scenario::wordmask::pad_to_words(message);
        Bytes masked = scenario::wordmask::mask(plain, key_words);

        EnclaveImage img = assemble(testutil::samples().fintx);
        attack::TamperPatchSpec spec =
            attack::TamperPatchSpec::make(2, to_bytes("John"), to_bytes("Lary"));
        attack::GeneratedPatch gen = attack::make_tamper_patch(img, spec);
        attack::PatchPlan plan = attack::plan_patch(img, gen.payload, gen.hook_site);
        EnclaveImage patched = attack::apply_patch(img, plan);

        RsaSigningKey key = RsaSigningKey::from_pem(testutil::samples().isv_key_pem);
        SignedEnclave bundle = sign_single_step(patched, meta(), key);
        LoadResult r = verify_and_load(bundle);
        REQUIRE(accepted(r));
        vm::VmState st = vm::load(std::get<LoadedEnclave>(r), vm::MemoryLayout::standard());
        vm::write_untrusted(st, 0x200, masked);
        REQUIRE(vm::completed(vm::ecall(st, 0, {key_words[0], key_words[1]}).outcome));
        vm::Transcript tr =
            vm::ecall(st, 2, {0x100, 0x200, static_cast<uint32_t>(plain.size() / 4)});
        REQUIRE(vm::completed(tr.outcome));
        Bytes out = vm::read_untrusted(st, 0x100, static_cast<uint32_t>(message.size()));
        CHECK(std::string(out.begin(), out.end()) == "Lary;892157932877159;$100");
    }

    TEST_CASE("a needle that is absent leaves the buffer unchanged") {
        const std::string message = "Anna;1;$5";
        const std::array<uint32_t, 2> key_words = {0x5A17C3D9, 0x2B74E6F1};
        Bytes plain = scenario::wordmask::pad_to_words(message);
        Bytes masked = scenario::wordmask::mask(plain, key_words);

        EnclaveImage img = assemble(testutil::samples().fintx);
        attack::GeneratedPatch gen = attack::make_tamper_patch(
            img, attack::TamperPatchSpec::make(2, to_bytes("John"), to_bytes("Lary")));
        attack::PatchPlan plan = attack::plan_patch(img, gen.payload, gen.hook_site);
        EnclaveImage patched = attack::apply_patch(img, plan);

        RsaSigningKey key = RsaSigningKey::from_pem(testutil::samples().isv_key_pem);
        SignedEnclave bundle = sign_single_step(patched, meta(), key);
        LoadResult r = verify_and_load(bundle);
        vm::VmState st = vm::load(std::get<LoadedEnclave>(r), vm::MemoryLayout::standard());
        vm::write_untrusted(st, 0x200, masked);
        REQUIRE(vm::completed(vm::ecall(st, 0, {key_words[0], key_words[1]}).outcome));
        vm::Transcript tr =
            vm::ecall(st, 2, {0x100, 0x200, static_cast<uint32_t>(plain.size() / 4)});
        REQUIRE(vm::completed(tr.outcome));
        Bytes out = vm::read_untrusted(st, 0x100, static_cast<uint32_t>(plain.size()));
        CHECK(out == plain);
    }

    TEST_CASE("needle and replacement lengths must match at construction") {
        CHECK_THROWS_AS(attack::TamperPatchSpec::make(2, to_bytes("John"), to_bytes("Al")),
                        attack::AttackError);
        try {
            attack::TamperPatchSpec::make(2, Bytes(80, 'x'), Bytes(80, 'y'));
            FAIL("expected NeedleLongerThanBuffer");
        } catch (const attack::AttackError& e) {
            CHECK(e.kind() == attack::AttackError::Kind::NeedleLongerThanBuffer);
        }
    }
}

TEST_SUITE("attack transparency") {
    TEST_CASE("patched-then-signed enclaves verify across generated programs") {
        std::mt19937_64 rng(1807);
        int planned = 0;
        for (int iter = 0; iter < 40; ++iter) {
            std::string src = testutil::random_program(rng, 1, 8);
            PlainPipeline pipeline(src, meta(), &isv_key());
            attack::InterceptionHandle h = attack::intercept(pipeline);
            EnclaveImage img = parse(h.image_bytes());
            LocatedTable located = locate_ecall_table(img);
            uint32_t hook = located.resolved_offsets[0];
            attack::PatchPlan plan;
            try {
                plan = attack::plan_patch(img, noop_payload(img, hook), hook);
            } catch (const attack::AttackError&) {
                h.resume();
                continue;
            }
            h.write_image_bytes(serialize(attack::apply_patch(img, plan)));
            SignedEnclave bundle = h.resume();
            CHECK(accepted(verify_and_load(bundle)));
            ++planned;
        }
        CHECK(planned >= 30);
    }
}
