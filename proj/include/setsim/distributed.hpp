#pragma once

// The distributed build round: N nodes fetch the same source, build
// independently, submit material (or just the measurement) to the contract,
// the facility signs whatever the majority agreed on, and every node
// completes the two-step flow locally. A corrupted node's bundle pairs its
// own patched bytes with the majority material, so it fails verification at
// load: that is the mitigation.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "setsim/attack.hpp"
#include "setsim/contract.hpp"
#include "setsim/pipeline.hpp"

namespace setsim::chain {

struct BuilderNode {
    AccountId account{};
    std::string source_uri;  // label; delivery is byte-identical by contract
    bool honest = true;
    // Dishonest nodes run this at the pre-material interception point.
    std::optional<attack::LeakPatchSpec> adversary_patch;
    // Node-local state after the round: what it would serve / load.
    Bytes image_bytes;
    std::optional<SigningMaterial> material;
    bool reachable = true;  // HASH_ONLY fetch availability
};

struct NodeResult {
    AccountId account{};
    bool honest = true;
    MeasurementHash measurement;  // of the node's own build
    uint64_t gas_charged = 0;
    bool bundle_verified = false;
    std::string rejection;  // empty when verified
};

struct RoundOutcome {
    uint64_t epoch = 0;
    bool epoch_failed = false;  // no strict majority: zero signatures issued
    bool strict_majority = false;
    std::optional<Hash> winning_hash;
    std::vector<NodeResult> nodes;
    std::vector<AccountId> blacklisted;

    std::string text() const {
        std::string s = "round outcome (epoch " + std::to_string(epoch) + ")\n";
        char buf[200];
        for (const NodeResult& n : nodes) {
            std::snprintf(buf, sizeof buf, "  %s  %-9s  build %s  %s%s\n",
                          account_hex(n.account).c_str(), n.honest ? "honest" : "adversary",
                          n.measurement.hex().substr(0, 16).c_str(),
                          n.bundle_verified ? "bundle VERIFIED" : "bundle REJECTED",
                          n.rejection.empty() ? "" : (" (" + n.rejection + ")").c_str());
            s += buf;
        }
        if (epoch_failed) {
            s += "  no strict majority: epoch failed closed, zero signatures issued\n";
        } else if (winning_hash) {
            s += "  majority hash " + to_hex(*winning_hash).substr(0, 16) + "..., " +
                 std::to_string(blacklisted.size()) + " account(s) blacklisted\n";
        }
        return s;
    }
};

// Builds one node's enclave. Dishonest nodes hijack the window between the
// compiler and material generation, exactly like the attack on the plain
// pipeline.
inline void node_build(BuilderNode& node, const std::string& source, const VendorMetadata& meta) {
    PlainPipeline pipeline(source, meta, nullptr, SigningFlow::TwoStep);
    if (!node.honest && node.adversary_patch) {
        attack::InterceptionHandle handle = attack::intercept(pipeline);
        EnclaveImage image = parse(handle.image_bytes());
        attack::GeneratedPatch gen = attack::make_leak_patch(image, *node.adversary_patch);
        attack::PatchPlan plan = attack::plan_patch(image, gen.payload, gen.hook_site);
        handle.write_image_bytes(serialize(attack::apply_patch(image, plan)));
    }
    node.material = pipeline.produce_material();
    node.image_bytes = pipeline.final_image_bytes();
}

inline RoundOutcome run_build_round(std::vector<BuilderNode>& nodes, const std::string& source,
                                    const VendorMetadata& meta, Contract& contract,
                                    const SignerFacility& facility) {
    RoundOutcome outcome;
    outcome.epoch = contract.epoch();

    // Every node fetches the same source bytes and builds.
    for (BuilderNode& node : nodes) node_build(node, source, meta);

    // Submissions, in node order; the last one triggers the decision.
    std::map<AccountId, const BuilderNode*> by_account;
    for (BuilderNode& node : nodes) {
        by_account[node.account] = &node;
        Bytes payload = contract.mode() == Mode::FULL_MATERIAL
                            ? node.material->canonical_bytes()
                            : Bytes(node.material->measurement.digest.begin(),
                                    node.material->measurement.digest.end());
        TxRecord r = contract.submit(node.account, payload);
        NodeResult nr;
        nr.account = node.account;
        nr.honest = node.honest;
        nr.measurement = node.material->measurement;
        nr.gas_charged = r.gas_charged;
        outcome.nodes.push_back(nr);
    }

    const std::optional<Decision>& decision = contract.decision();
    if (!decision) throw ContractError(ContractError::Kind::NotReady, "no decision after round");
    outcome.strict_majority = decision->strict_majority;
    outcome.winning_hash = decision->winning_hash;
    if (!decision->strict_majority) {
        outcome.epoch_failed = true;  // fail closed: nothing is signed
        for (NodeResult& nr : outcome.nodes) nr.rejection = "epoch failed, no signature issued";
        return outcome;
    }

    // The facility retrieves the majority material (from storage, or from a
    // winner node in HASH_ONLY mode) and signs it: the only signature of
    // the round.
    Contract::FetchResult fetched = contract.fetch_majority_material(
        [&by_account](const AccountId& a) -> std::optional<SigningMaterial> {
            auto it = by_account.find(a);
            if (it == by_account.end() || !it->second->reachable) return std::nullopt;
            return it->second->material;
        });
    EnclaveSignature signature = facility.sign(fetched.material);

    // Two-step completion at every node: append the signature locally and
    // try to load.
    for (size_t i = 0; i < nodes.size(); ++i) {
        SignedEnclave bundle =
            append_signature(nodes[i].image_bytes, fetched.material, signature);
        LoadResult r = verify_and_load(bundle);
        if (accepted(r)) {
            outcome.nodes[i].bundle_verified = true;
        } else {
            outcome.nodes[i].rejection = rejection_name(std::get<Rejection>(r));
        }
    }

    // Contract calls come from a winner: losers are about to lose their
    // standing.
    const AccountId caller = *contract.decision()->winner_accounts.begin();
    contract.blacklist_losers(caller);
    for (const AccountId& a : contract.decision()->loser_accounts)
        outcome.blacklisted.push_back(a);
    contract.next_epoch(caller);
    return outcome;
}

}  // namespace setsim::chain
