// setsim: enclave supply-chain simulator CLI.
//
// Buildable surface: assemble/measure/sign/verify for the toy container,
// the attack toolkit (plan/apply/leak/tamper), a VM runner, the atomic
// builder service and its client, the distributed round simulator, named
// end-to-end scenarios, and a phase benchmark.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "setsim/attack.hpp"
#include "setsim/builder.hpp"
#include "setsim/contract.hpp"
#include "setsim/distributed.hpp"
#include "setsim/scenario.hpp"

using namespace setsim;

namespace {

Bytes read_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_binary(const std::string& path, ByteSpan data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
}

std::string read_text(const std::string& path) {
    Bytes b = read_binary(path);
    return std::string(b.begin(), b.end());
}

struct MetadataFlags {
    std::string vendor_id = "ACME-ENCLAVES-01";
    uint32_t date = 20200815;
    uint64_t attributes = 0x3;
    uint32_t version = 1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--vendor-id", vendor_id, "vendor identifier (<= 16 chars, zero padded)");
        cmd->add_option("--date", date, "build date as YYYYMMDD");
        cmd->add_option("--attributes", attributes, "attribute bitfield");
        cmd->add_option("--version", version, "enclave version");
    }

    VendorMetadata to_metadata() const {
        VendorMetadata m;
        for (size_t i = 0; i < 16 && i < vendor_id.size(); ++i)
            m.vendor_id[i] = static_cast<uint8_t>(vendor_id[i]);
        m.date = date;
        m.attributes = attributes;
        m.version = version;
        return m;
    }
};

chain::GasModel gas_model_from_file(const std::string& path) {
    chain::GasModel m;
    if (path.empty()) return m;
    nlohmann::json j = nlohmann::json::parse(read_text(path));
    if (j.contains("first_submission_full")) m.first_submission_full = j["first_submission_full"];
    if (j.contains("other_submission_full")) m.other_submission_full = j["other_submission_full"];
    if (j.contains("first_submission_hash")) m.first_submission_hash = j["first_submission_hash"];
    if (j.contains("other_submission_hash")) m.other_submission_hash = j["other_submission_hash"];
    if (j.contains("block_gas_limit")) m.block_gas_limit = j["block_gas_limit"];
    if (j.contains("block_time_seconds")) m.block_time_seconds = j["block_time_seconds"];
    if (j.contains("gwei_per_gas")) m.gwei_per_gas = j["gwei_per_gas"];
    if (j.contains("usd_per_gwei")) m.usd_per_gwei = j["usd_per_gwei"];
    m.validate();
    return m;
}

vm::UntrustedAgent agent_from_file(const std::string& path) {
    vm::UntrustedAgent agent;
    if (path.empty()) return agent;
    nlohmann::json j = nlohmann::json::parse(read_text(path));
    for (const auto& a : j) {
        std::string op = a.at("op").get<std::string>();
        if (op == "wait-marker") {
            agent.script.push_back(vm::AgentAction::wait_for_marker(a.at("addr").get<uint32_t>()));
        } else if (op == "read") {
            agent.script.push_back(
                vm::AgentAction::read(a.at("addr").get<uint32_t>(), a.at("len").get<uint32_t>()));
        } else if (op == "write-flag") {
            agent.script.push_back(vm::AgentAction::write_flag(a.at("addr").get<uint32_t>(),
                                                               a.at("value").get<uint32_t>()));
        } else if (op == "record") {
            agent.script.push_back(vm::AgentAction::record(a.at("label").get<std::string>()));
        } else {
            throw std::runtime_error("unknown agent op '" + op + "'");
        }
    }
    return agent;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"setsim: enclave supply-chain simulator"};
    app.require_subcommand(1);

    uint64_t seed = 1;
    bool emit_json = false;
    std::string out_dir;
    std::string samples_dir = SETSIM_SAMPLES_DIR;
    app.add_option("--seed", seed, "deterministic seed")->capture_default_str();
    app.add_flag("--emit-json", emit_json, "machine-readable output");
    app.add_option("--out", out_dir, "directory for report artifacts");
    app.add_option("--samples", samples_dir, "bundled samples directory")->capture_default_str();

    int exit_code = 0;

    // --- assemble -------------------------------------------------------
    auto* cmd_assemble = app.add_subcommand("assemble", "assemble a .seta source into a .set1 image");
    std::string asm_src, asm_out;
    bool asm_symbols = false;
    cmd_assemble->add_option("source", asm_src)->required();
    cmd_assemble->add_option("-o,--output", asm_out, "output image (.set1)");
    cmd_assemble->add_flag("--symbols", asm_symbols, "print the symbol map");
    cmd_assemble->callback([&] {
        AssemblyOutput out = assemble_with_symbols(read_text(asm_src), asm_src);
        if (asm_out.empty()) {
            std::filesystem::path p(asm_src);
            asm_out = p.replace_extension(".set1").string();
        }
        write_binary(asm_out, serialize(out.image));
        std::cout << "wrote " << asm_out << " (" << serialize(out.image).size() << " bytes, "
                  << out.symbols.ecalls.size() << " ecalls)\n";
        if (asm_symbols) {
            std::cout << "entry offset 0x" << std::hex << out.symbols.entry_offset << std::dec
                      << "\n";
            for (const auto& e : out.symbols.ecalls) {
                std::printf("ecall %u  %-24s wrapper 0x%06x  function 0x%06x\n", e.index,
                            e.label.c_str(), e.wrapper_offset, e.body_offset);
            }
        }
    });

    // --- measure ----------------------------------------------------------
    auto* cmd_measure = app.add_subcommand("measure", "print the measurement of a .set1 image");
    std::string measure_file;
    cmd_measure->add_option("image", measure_file)->required();
    cmd_measure->callback([&] {
        Bytes bytes = read_binary(measure_file);
        parse(bytes);  // must be well formed
        std::cout << measure_bytes(bytes).hex() << "  " << measure_file << "\n";
    });

    // --- keygen ---------------------------------------------------------
    auto* cmd_keygen = app.add_subcommand("keygen", "generate an RSA-3072 (e=3) signing key");
    std::string keygen_out = "signing_key.pem";
    cmd_keygen->add_option("-o,--output", keygen_out)->capture_default_str();
    cmd_keygen->callback([&] {
        RsaSigningKey key = RsaSigningKey::generate();
        std::ofstream out(keygen_out);
        out << key.to_pem();
        std::cout << "wrote " << keygen_out << "\n";
    });

    // --- gen-material ------------------------------------------------------
    auto* cmd_genmat = app.add_subcommand("gen-material", "generate signing material for an image");
    std::string genmat_image, genmat_out = "material.bin";
    MetadataFlags genmat_meta;
    cmd_genmat->add_option("image", genmat_image)->required();
    cmd_genmat->add_option("-o,--output", genmat_out)->capture_default_str();
    genmat_meta.attach(cmd_genmat);
    cmd_genmat->callback([&] {
        Bytes bytes = read_binary(genmat_image);
        parse(bytes);
        SigningMaterial m = generate_signing_material_for_bytes(bytes, genmat_meta.to_metadata());
        write_binary(genmat_out, m.canonical_bytes());
        std::cout << "wrote " << genmat_out << " (measurement " << m.measurement.hex() << ")\n";
    });

    // --- sign-material -----------------------------------------------------
    auto* cmd_signmat = app.add_subcommand("sign-material", "sign material at the facility");
    std::string signmat_in, signmat_key, signmat_out = "signature.bin";
    cmd_signmat->add_option("material", signmat_in)->required();
    cmd_signmat->add_option("--key", signmat_key, "private key PEM")->required();
    cmd_signmat->add_option("-o,--output", signmat_out)->capture_default_str();
    cmd_signmat->callback([&] {
        SigningMaterial m = SigningMaterial::from_bytes(read_binary(signmat_in));
        RsaSigningKey key = RsaSigningKey::from_pem(read_text(signmat_key));
        EnclaveSignature sig = sign_material(m, key);
        Bytes out(sig.rsa_signature.begin(), sig.rsa_signature.end());
        out.insert(out.end(), sig.public_key_modulus.begin(), sig.public_key_modulus.end());
        write_binary(signmat_out, out);
        std::cout << "wrote " << signmat_out << " (768 bytes: signature, modulus)\n";
    });

    // --- append-sig ---------------------------------------------------------
    auto* cmd_append = app.add_subcommand("append-sig", "assemble a .sgxs1 bundle");
    std::string append_image, append_material, append_sig, append_out = "enclave.sgxs1";
    cmd_append->add_option("image", append_image)->required();
    cmd_append->add_option("material", append_material)->required();
    cmd_append->add_option("signature", append_sig)->required();
    cmd_append->add_option("-o,--output", append_out)->capture_default_str();
    cmd_append->callback([&] {
        Bytes sig_bytes = read_binary(append_sig);
        if (sig_bytes.size() != 2 * kRsaBytes)
            throw std::runtime_error("signature file must be 768 bytes");
        EnclaveSignature sig;
        std::copy(sig_bytes.begin(), sig_bytes.begin() + kRsaBytes, sig.rsa_signature.begin());
        std::copy(sig_bytes.begin() + kRsaBytes, sig_bytes.end(),
                  sig.public_key_modulus.begin());
        SignedEnclave bundle =
            append_signature(read_binary(append_image),
                             SigningMaterial::from_bytes(read_binary(append_material)), sig);
        write_binary(append_out, write_bundle(bundle));
        std::cout << "wrote " << append_out << "\n";
    });

    // --- sign-1step ---------------------------------------------------------
    auto* cmd_sign1 = app.add_subcommand("sign-1step", "single-step build-and-sign");
    std::string sign1_src, sign1_key, sign1_out = "enclave.sgxs1";
    MetadataFlags sign1_meta;
    cmd_sign1->add_option("source", sign1_src, ".seta source or .set1 image")->required();
    cmd_sign1->add_option("--key", sign1_key)->required();
    cmd_sign1->add_option("-o,--output", sign1_out)->capture_default_str();
    sign1_meta.attach(cmd_sign1);
    cmd_sign1->callback([&] {
        RsaSigningKey key = RsaSigningKey::from_pem(read_text(sign1_key));
        Bytes image_bytes;
        if (sign1_src.ends_with(".set1")) {
            image_bytes = read_binary(sign1_src);
            parse(image_bytes);
        } else {
            image_bytes = serialize(assemble(read_text(sign1_src), sign1_src));
        }
        SigningMaterial m =
            generate_signing_material_for_bytes(image_bytes, sign1_meta.to_metadata());
        SignedEnclave bundle = append_signature(image_bytes, m, sign_material(m, key));
        write_binary(sign1_out, write_bundle(bundle));
        std::cout << "wrote " << sign1_out << " (measurement " << m.measurement.hex() << ")\n";
    });

    // --- verify ---------------------------------------------------------------
    auto* cmd_verify = app.add_subcommand("verify", "verify a .sgxs1 bundle as the loader would");
    std::string verify_file;
    cmd_verify->add_option("bundle", verify_file)->required();
    cmd_verify->callback([&] {
        SignedEnclave bundle = read_bundle(read_binary(verify_file));
        LoadResult r = verify_and_load(bundle);
        if (accepted(r)) {
            std::cout << "ACCEPTED  measurement " << std::get<LoadedEnclave>(r).measurement.hex()
                      << "\n";
        } else {
            std::cout << "REJECTED  " << rejection_name(std::get<Rejection>(r)) << "\n";
            exit_code = 1;
        }
    });

    // --- attack ----------------------------------------------------------------
    auto* cmd_attack = app.add_subcommand("attack", "patch toolkit");
    cmd_attack->require_subcommand(1);

    auto* atk_plan = cmd_attack->add_subcommand("plan", "plan a payload into free chunks");
    std::string plan_image, plan_payload;
    uint32_t plan_hook = 0;
    atk_plan->add_option("image", plan_image)->required();
    atk_plan->add_option("--payload", plan_payload, "raw payload bytes")->required();
    atk_plan->add_option("--hook", plan_hook, "hook site (CODE offset)")->required();
    atk_plan->callback([&] {
        EnclaveImage img = parse(read_binary(plan_image));
        try {
            attack::PatchPlan plan = attack::plan_patch(img, read_binary(plan_payload), plan_hook);
            std::cout << attack::plan_report(plan);
        } catch (const attack::AttackError& e) {
            if (e.kind() == attack::AttackError::Kind::InsufficientFreeSpace) {
                std::cout << "insufficient free space: shortfall " << e.shortfall() << " bytes\n";
                exit_code = 1;
            } else {
                throw;
            }
        }
    });

    auto* atk_apply = cmd_attack->add_subcommand("apply", "plan and apply a payload");
    std::string apply_image, apply_payload, apply_out = "patched.set1";
    uint32_t apply_hook = 0;
    atk_apply->add_option("image", apply_image)->required();
    atk_apply->add_option("--payload", apply_payload)->required();
    atk_apply->add_option("--hook", apply_hook)->required();
    atk_apply->add_option("-o,--output", apply_out)->capture_default_str();
    atk_apply->callback([&] {
        EnclaveImage img = parse(read_binary(apply_image));
        attack::PatchPlan plan = attack::plan_patch(img, read_binary(apply_payload), apply_hook);
        write_binary(apply_out, serialize(attack::apply_patch(img, plan)));
        std::cout << attack::plan_report(plan);
        std::cout << "wrote " << apply_out << "\n";
    });

    auto* atk_leak = cmd_attack->add_subcommand("leak", "build and apply a stack-leak patch");
    std::string leak_image, leak_out = "patched.set1";
    uint16_t leak_ecall = 0, leak_stack = 16, leak_flag = 24;
    atk_leak->add_option("image", leak_image)->required();
    atk_leak->add_option("--ecall", leak_ecall)->capture_default_str();
    atk_leak->add_option("--stack-bytes", leak_stack)->capture_default_str();
    atk_leak->add_option("--flag-offset", leak_flag)->capture_default_str();
    atk_leak->add_option("-o,--output", leak_out)->capture_default_str();
    atk_leak->callback([&] {
        EnclaveImage img = parse(read_binary(leak_image));
        attack::GeneratedPatch gen = attack::make_leak_patch(
            img, attack::LeakPatchSpec::make(leak_ecall, leak_stack, leak_flag));
        attack::PatchPlan plan = attack::plan_patch(img, gen.payload, gen.hook_site);
        write_binary(leak_out, serialize(attack::apply_patch(img, plan)));
        std::cout << attack::plan_report(plan);
        std::cout << "wrote " << leak_out << "\n";
    });

    auto* atk_tamper = cmd_attack->add_subcommand("tamper", "build and apply a decrypt-tamper patch");
    std::string tamper_image, tamper_needle, tamper_replacement, tamper_out = "patched.set1";
    uint16_t tamper_ecall = 0;
    atk_tamper->add_option("image", tamper_image)->required();
    atk_tamper->add_option("--ecall", tamper_ecall)->capture_default_str();
    atk_tamper->add_option("--needle", tamper_needle)->required();
    atk_tamper->add_option("--replacement", tamper_replacement)->required();
    atk_tamper->add_option("-o,--output", tamper_out)->capture_default_str();
    atk_tamper->callback([&] {
        EnclaveImage img = parse(read_binary(tamper_image));
        attack::GeneratedPatch gen = attack::make_tamper_patch(
            img, attack::TamperPatchSpec::make(tamper_ecall, to_bytes(tamper_needle),
                                               to_bytes(tamper_replacement)));
        attack::PatchPlan plan = attack::plan_patch(img, gen.payload, gen.hook_site);
        write_binary(tamper_out, serialize(attack::apply_patch(img, plan)));
        std::cout << attack::plan_report(plan);
        std::cout << "wrote " << tamper_out << "\n";
    });

    // --- vm run -----------------------------------------------------------------
    auto* cmd_vm = app.add_subcommand("vm", "run enclaves");
    cmd_vm->require_subcommand(1);
    auto* vm_run = cmd_vm->add_subcommand("run", "verify, load and run one ecall");
    std::string vmr_bundle, vmr_agent, vmr_args;
    std::vector<std::string> vmr_pokes;
    uint16_t vmr_ecall = 0;
    uint64_t vmr_budget = vm::kDefaultStepBudget;
    vm_run->add_option("bundle", vmr_bundle, ".sgxs1 bundle")->required();
    vm_run->add_option("--ecall", vmr_ecall)->capture_default_str();
    vm_run->add_option("--args", vmr_args, "comma-separated 32-bit arguments");
    vm_run->add_option("--agent", vmr_agent, "agent script (JSON)");
    vm_run->add_option("--poke", vmr_pokes, "pre-write untrusted memory: addr:hexbytes");
    vm_run->add_option("--budget", vmr_budget)->capture_default_str();
    vm_run->callback([&] {
        SignedEnclave bundle = read_bundle(read_binary(vmr_bundle));
        LoadResult r = verify_and_load(bundle);
        if (!accepted(r)) {
            std::cout << "REJECTED  " << rejection_name(std::get<Rejection>(r)) << "\n";
            exit_code = 1;
            return;
        }
        vm::MemoryLayout layout = vm::MemoryLayout::standard();
        vm::VmState st = vm::load(std::get<LoadedEnclave>(r), layout);
        for (const std::string& poke : vmr_pokes) {
            size_t colon = poke.find(':');
            if (colon == std::string::npos) throw std::runtime_error("--poke wants addr:hex");
            vm::write_untrusted(st, static_cast<uint32_t>(std::stoul(poke.substr(0, colon), nullptr, 0)),
                                from_hex(poke.substr(colon + 1)));
        }
        std::vector<uint32_t> args;
        if (!vmr_args.empty()) {
            std::stringstream ss(vmr_args);
            std::string tok;
            while (std::getline(ss, tok, ','))
                args.push_back(static_cast<uint32_t>(std::stoul(tok, nullptr, 0)));
        }
        vm::UntrustedAgent agent = agent_from_file(vmr_agent);
        vm::Transcript tr =
            vm::run_with_agent(st, vm::EcallRequest{vmr_ecall, args}, agent, vmr_budget);
        std::cout << tr.text();
        if (!vm::completed(tr.outcome)) exit_code = 1;
    });

    // --- builder-serve / isv-client ------------------------------------------------
    auto* cmd_serve = app.add_subcommand("builder-serve", "atomic builder, framed stdio");
    cmd_serve->callback([&] {
        builder::BuilderService service(seed);
        std::cerr << "builder manifest measurement: " << service.manifest_measurement().hex()
                  << "\n";
        service.serve(std::cin, std::cout);
    });

    auto* cmd_client = app.add_subcommand("isv-client",
                                          "ISV side of the builder protocol over stdio pipes");
    std::string cli_source, cli_key, cli_expect, cli_bundle_out = "enclave.sgxs1";
    MetadataFlags cli_meta;
    cmd_client->add_option("--source", cli_source, ".seta source to build")->required();
    cmd_client->add_option("--key", cli_key, "private key PEM to provision")->required();
    cmd_client->add_option("--expect", cli_expect, "expected builder measurement (hex)")->required();
    cmd_client->add_option("--bundle-out", cli_bundle_out)->capture_default_str();
    cli_meta.attach(cmd_client);
    cmd_client->callback([&] {
        MeasurementHash expected;
        Bytes eh = from_hex(cli_expect);
        if (eh.size() != kHashSize) throw std::runtime_error("--expect wants 32 hex bytes");
        std::copy(eh.begin(), eh.end(), expected.digest.begin());
        builder::BuildRequest request{read_text(cli_source), cli_meta.to_metadata(),
                                      read_text(cli_key)};
        SignedEnclave bundle =
            builder::client_exchange(std::cin, std::cout, "isv-client", expected, request);
        write_binary(cli_bundle_out, write_bundle(bundle));
        std::cerr << "wrote " << cli_bundle_out << " (measurement "
                  << bundle.material.measurement.hex() << ")\n";
    });

    // --- dist-sim ----------------------------------------------------------------
    auto* cmd_dist = app.add_subcommand("dist-sim", "distributed mitigation round");
    size_t dist_nodes = 10, dist_adv = 1;
    std::string dist_mode = "full", dist_gas_config;
    double dist_lambda = 0.0;
    cmd_dist->add_option("--nodes", dist_nodes)->capture_default_str();
    cmd_dist->add_option("--adversaries", dist_adv)->capture_default_str();
    cmd_dist->add_option("--mode", dist_mode, "full|hash")->capture_default_str();
    cmd_dist->add_option("--lambda", dist_lambda, "ambient block load in [0,1)")
        ->capture_default_str();
    cmd_dist->add_option("--gas-config", dist_gas_config, "gas model overrides (JSON)");
    cmd_dist->callback([&] {
        scenario::Scenario sc;
        sc.name = scenario::ScenarioName::MITIGATE_DISTRIBUTED;
        sc.seed = seed;
        sc.parameters["nodes"] = std::to_string(dist_nodes);
        sc.parameters["adversaries"] = std::to_string(dist_adv);
        sc.parameters["mode"] = dist_mode == "hash" ? "hash" : "full";
        sc.parameters["lambda"] = std::to_string(dist_lambda);
        if (!dist_gas_config.empty()) {
            // rebuild the round here with the overridden model
            chain::GasModel model = gas_model_from_file(dist_gas_config);
            scenario::SampleSet samples = scenario::SampleSet::load(samples_dir);
            RsaSigningKey fkey = RsaSigningKey::from_pem(samples.facility_key_pem);
            SignerFacility facility(std::move(fkey));
            std::vector<chain::BuilderNode> nodes;
            std::vector<chain::AccountId> accounts;
            for (size_t i = 0; i < dist_nodes; ++i) {
                chain::BuilderNode node;
                node.account = chain::account_from_seed(seed, static_cast<uint32_t>(i));
                nodes.push_back(node);
                accounts.push_back(node.account);
            }
            for (size_t i = 0; i < dist_adv && i < nodes.size(); ++i) {
                nodes[i].honest = false;
                nodes[i].adversary_patch = attack::LeakPatchSpec::make(1, 16, 24);
            }
            chain::Mode mode =
                dist_mode == "hash" ? chain::Mode::HASH_ONLY : chain::Mode::FULL_MATERIAL;
            chain::Contract contract = chain::Contract::init(accounts, mode, model);
            uint64_t epoch = contract.epoch();
            chain::RoundOutcome outcome = chain::run_build_round(
                nodes, samples.fintx, scenario::demo_metadata(), contract, facility);
            std::cout << outcome.text() << "\n"
                      << chain::gas_and_fiat_report(contract, model, epoch).text() << "\n"
                      << chain::pack_blocks(contract.tx_log(), model, dist_lambda).text();
            return;
        }
        scenario::Report rep = scenario::run_scenario(sc, scenario::SampleSet::load(samples_dir));
        std::cout << (emit_json ? rep.json.dump(2) + "\n" : rep.text);
        if (!rep.ok) exit_code = 1;
    });

    // --- scenario -------------------------------------------------------------------
    auto* cmd_scenario = app.add_subcommand("scenario", "run a named end-to-end scenario");
    std::string scen_name;
    std::vector<std::string> scen_params;
    cmd_scenario->add_option("name", scen_name,
                             "attack-leak | attack-tamper | mitigate-central | mitigate-distributed")
        ->required();
    cmd_scenario->add_option("--param", scen_params, "scenario parameter key=value (repeatable)");
    cmd_scenario->callback([&] {
        auto name = scenario::scenario_from_string(scen_name);
        if (!name) throw std::runtime_error("unknown scenario '" + scen_name + "'");
        scenario::Scenario sc;
        sc.name = *name;
        sc.seed = seed;
        for (const std::string& kv : scen_params) {
            size_t eq = kv.find('=');
            if (eq == std::string::npos) throw std::runtime_error("--param wants key=value");
            sc.parameters[kv.substr(0, eq)] = kv.substr(eq + 1);
        }
        scenario::Report rep = scenario::run_scenario(sc, scenario::SampleSet::load(samples_dir));
        std::cout << (emit_json ? rep.json.dump(2) + "\n" : rep.text);
        if (!out_dir.empty()) {
            std::filesystem::create_directories(out_dir);
            std::ofstream(out_dir + "/" + scen_name + ".txt") << rep.text;
            std::ofstream(out_dir + "/" + scen_name + ".json") << rep.json.dump(2) << "\n";
        }
        if (!rep.ok) exit_code = 1;
    });

    // --- bench ------------------------------------------------------------------------
    auto* cmd_bench = app.add_subcommand("bench", "phase timings with 95% confidence intervals");
    std::string bench_kind = "plain";
    size_t bench_reps = 10;
    cmd_bench->add_option("--kind", bench_kind, "plain | intercepted | builder")
        ->capture_default_str();
    cmd_bench->add_option("--reps", bench_reps)->capture_default_str();
    cmd_bench->callback([&] {
        auto kind = scenario::bench_from_string(bench_kind);
        if (!kind) throw std::runtime_error("unknown bench kind '" + bench_kind + "'");
        scenario::BenchResult r =
            scenario::emit_benchmark(*kind, bench_reps, scenario::SampleSet::load(samples_dir));
        std::cout << r.text;
    });

    // global flags may appear after the subcommand name
    std::function<void(CLI::App*)> allow_fallthrough = [&](CLI::App* cmd) {
        for (CLI::App* sub : cmd->get_subcommands([](const CLI::App*) { return true; })) {
            sub->fallthrough();
            allow_fallthrough(sub);
        }
    };
    allow_fallthrough(&app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return exit_code;
}
