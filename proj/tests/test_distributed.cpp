#include <doctest.h>

#include "helpers.hpp"
#include "setsim/distributed.hpp"

using namespace setsim;
using namespace setsim::chain;

namespace {

std::vector<BuilderNode> make_nodes(size_t n, const std::vector<size_t>& adversaries,
                                    uint64_t seed = 21) {
    std::vector<BuilderNode> nodes(n);
    for (size_t i = 0; i < n; ++i) {
        nodes[i].account = account_from_seed(seed, static_cast<uint32_t>(i));
        nodes[i].source_uri = "repo://fintx.seta";
    }
    for (size_t i : adversaries) {
        nodes[i].honest = false;
        nodes[i].adversary_patch = attack::LeakPatchSpec::make(1, 16, 24);
    }
    return nodes;
}

std::vector<AccountId> accounts_of(const std::vector<BuilderNode>& nodes) {
    std::vector<AccountId> a;
    for (const auto& n : nodes) a.push_back(n.account);
    return a;
}

SignerFacility make_facility() {
    return SignerFacility(RsaSigningKey::from_pem(testutil::samples().facility_key_pem));
}

}  // namespace

TEST_SUITE("distributed build round") {
    TEST_CASE("10 nodes, 1 tamperer: nine verify, one rejected and blacklisted") {
        for (Mode mode : {Mode::FULL_MATERIAL, Mode::HASH_ONLY}) {
            CAPTURE(mode_name(mode));
            auto nodes = make_nodes(10, {3});
            Contract contract = Contract::init(accounts_of(nodes), mode);
            SignerFacility facility = make_facility();
            RoundOutcome outcome = run_build_round(nodes, testutil::samples().fintx,
                                                   scenario::demo_metadata(), contract, facility);
            CHECK(!outcome.epoch_failed);
            REQUIRE(outcome.nodes.size() == 10);
            for (const NodeResult& nr : outcome.nodes) {
                if (nr.honest) {
                    CHECK(nr.bundle_verified);
                } else {
                    CHECK(!nr.bundle_verified);
                    CHECK(nr.rejection == "MeasurementMismatch");
                }
            }
            CHECK(outcome.blacklisted.size() == 1);
            CHECK(outcome.blacklisted[0] == nodes[3].account);
            CHECK(contract.epoch() == 2);
            CHECK(contract.expected_submissions() == 9);
        }
    }

    TEST_CASE("all honest: every bundle verifies, nobody is blacklisted") {
        auto nodes = make_nodes(10, {});
        Contract contract = Contract::init(accounts_of(nodes), Mode::FULL_MATERIAL);
        SignerFacility facility = make_facility();
        RoundOutcome outcome = run_build_round(nodes, testutil::samples().fintx,
                                               scenario::demo_metadata(), contract, facility);
        CHECK(!outcome.epoch_failed);
        for (const NodeResult& nr : outcome.nodes) CHECK(nr.bundle_verified);
        CHECK(outcome.blacklisted.empty());
        // the reference cost figures for this epoch
        CostReport costs = gas_and_fiat_report(contract, contract.gas_model(), 1);
        CHECK(costs.total_gas == 1'202'492);
        CHECK(costs.total_cents == 330);
    }

    TEST_CASE("2 colluding of 4 force a tie: epoch fails, zero signatures") {
        auto nodes = make_nodes(4, {1, 2});
        Contract contract = Contract::init(accounts_of(nodes), Mode::FULL_MATERIAL);
        SignerFacility facility = make_facility();
        RoundOutcome outcome = run_build_round(nodes, testutil::samples().fintx,
                                               scenario::demo_metadata(), contract, facility);
        CHECK(outcome.epoch_failed);
        for (const NodeResult& nr : outcome.nodes) CHECK(!nr.bundle_verified);
        CHECK(outcome.blacklisted.empty());
        CHECK_THROWS_AS(contract.fetch_majority_material(), ContractError);
    }

    TEST_CASE("hash-only fetch pulls the material from a winner node") {
        auto nodes = make_nodes(5, {4});
        Contract contract = Contract::init(accounts_of(nodes), Mode::HASH_ONLY);
        SignerFacility facility = make_facility();
        RoundOutcome outcome = run_build_round(nodes, testutil::samples().fintx,
                                               scenario::demo_metadata(), contract, facility);
        CHECK(!outcome.epoch_failed);
        size_t verified = 0;
        for (const NodeResult& nr : outcome.nodes) verified += nr.bundle_verified;
        CHECK(verified == 4);
    }

    TEST_CASE("adversary bundles fail precisely because their bytes differ from the majority") {
        auto nodes = make_nodes(3, {0});
        Contract contract = Contract::init(accounts_of(nodes), Mode::FULL_MATERIAL);
        SignerFacility facility = make_facility();
        RoundOutcome outcome = run_build_round(nodes, testutil::samples().fintx,
                                               scenario::demo_metadata(), contract, facility);
        REQUIRE(!outcome.epoch_failed);
        // the tamperer's own measurement differs from the winning hash
        CHECK(outcome.nodes[0].measurement.hex() != outcome.nodes[1].measurement.hex());
        CHECK(outcome.nodes[1].measurement.hex() == outcome.nodes[2].measurement.hex());
        // and its local bundle pairs patched bytes with the majority material
        SignedEnclave forged = append_signature(
            nodes[0].image_bytes, *nodes[1].material,
            sign_material(*nodes[1].material,
                          RsaSigningKey::from_pem(testutil::samples().facility_key_pem)));
        LoadResult r = verify_and_load(forged);
        REQUIRE(!accepted(r));
        CHECK(std::get<Rejection>(r) == Rejection::MeasurementMismatch);
    }

    TEST_CASE("the round's ledger replays and chains") {
        auto nodes = make_nodes(7, {2, 5});
        Contract contract = Contract::init(accounts_of(nodes), Mode::FULL_MATERIAL);
        SignerFacility facility = make_facility();
        run_build_round(nodes, testutil::samples().fintx, scenario::demo_metadata(), contract,
                        facility);
        CHECK(verify_chain(contract.tx_log()));
        CHECK(Contract::replay(contract.tx_log()).state_digest_text() ==
              contract.state_digest_text());
    }
}
