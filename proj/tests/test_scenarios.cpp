#include <doctest.h>

#include "helpers.hpp"
#include "setsim/scenario.hpp"

using namespace setsim;
using namespace setsim::scenario;

TEST_SUITE("scenarios") {
    TEST_CASE("attack-leak succeeds and is deterministic per seed") {
        Scenario sc{ScenarioName::ATTACK_LEAK, 7, {}};
        Report r1 = run_scenario(sc, testutil::samples());
        CHECK(r1.ok);
        CHECK(r1.text.find("MALW") != std::string::npos);
        Report r2 = run_scenario(sc, testutil::samples());
        CHECK(r1.text == r2.text);
        Scenario other{ScenarioName::ATTACK_LEAK, 8, {}};
        CHECK(run_scenario(other, testutil::samples()).ok);
    }

    TEST_CASE("attack-tamper shows the four substituted bytes in paired hexdumps") {
        Scenario sc{ScenarioName::ATTACK_TAMPER, 7, {}};
        Report r = run_scenario(sc, testutil::samples());
        CHECK(r.ok);
        // hexdump gutters show 16 chars per row
        CHECK(r.text.find("John;89215793287") != std::string::npos);
        CHECK(r.text.find("Lary;89215793287") != std::string::npos);
        std::string before_str, after_str;
        {
            Bytes b = from_hex(r.json.at("before").get<std::string>());
            Bytes a = from_hex(r.json.at("after").get<std::string>());
            before_str.assign(b.begin(), b.end());
            after_str.assign(a.begin(), a.end());
        }
        CHECK(before_str.find("John;892157932877159;$100") == 0);
        CHECK(after_str.find("Lary;892157932877159;$100") == 0);
        // byte-identical on re-run
        CHECK(run_scenario(sc, testutil::samples()).text == r.text);
        // the two dumps differ in exactly the needle bytes
        Bytes before = from_hex(r.json.at("before").get<std::string>());
        Bytes after = from_hex(r.json.at("after").get<std::string>());
        size_t diffs = 0;
        for (size_t i = 0; i < before.size(); ++i) diffs += before[i] != after[i];
        CHECK(diffs == 4);
    }

    TEST_CASE("mitigate-central holds across the corpus") {
        Scenario sc{ScenarioName::MITIGATE_CENTRAL, 7, {}};
        Report r = run_scenario(sc, testutil::samples());
        CHECK(r.ok);
        CHECK(r.text.find("PipelineHardened") != std::string::npos);
        CHECK(run_scenario(sc, testutil::samples()).text == r.text);
    }

    TEST_CASE("mitigate-distributed defaults print the headline cost line") {
        Scenario sc{ScenarioName::MITIGATE_DISTRIBUTED, 7, {}};
        Report r = run_scenario(sc, testutil::samples());
        CHECK(r.ok);
        // the all-honest 10-node baseline figure appears verbatim
        CHECK(r.text.find("$3.30") != std::string::npos);
        CHECK(r.text.find("$0.23") != std::string::npos);
        CHECK(run_scenario(sc, testutil::samples()).text == r.text);
    }

    TEST_CASE("mitigate-distributed with a forced tie fails closed") {
        Scenario sc{ScenarioName::MITIGATE_DISTRIBUTED, 7,
                    {{"nodes", "4"}, {"adversaries", "2"}}};
        Report r = run_scenario(sc, testutil::samples());
        CHECK(r.ok);
        CHECK(r.json.at("epoch_failed").get<bool>());
    }

    TEST_CASE("hash-only distributed run works end to end") {
        Scenario sc{ScenarioName::MITIGATE_DISTRIBUTED, 9, {{"mode", "hash"}}};
        Report r = run_scenario(sc, testutil::samples());
        CHECK(r.ok);
        CHECK(r.json.at("total_cents").get<uint64_t>() == 25 + 8 * 11 + 25);  // 9+1 distinct values
    }
}

TEST_SUITE("scenario plumbing") {
    TEST_CASE("missing samples are reported") {
        CHECK_THROWS_AS(SampleSet::load("/nonexistent-samples-dir"), ScenarioError);
    }
}

TEST_SUITE("benchmark") {
    TEST_CASE("fewer than 3 repetitions is rejected") {
        CHECK_THROWS_AS(emit_benchmark(BenchKind::Plain, 1, testutil::samples()), ScenarioError);
    }

    TEST_CASE("the CI half-width matches a hand-computed interval") {
        // {12, 11, 13, 10, 14}: mean 12, s = sqrt(2.5), t(4,.975) = 2.776445
        // half-width = 2.776445 * sqrt(2.5) / sqrt(5) = 1.96334
        std::vector<double> xs = {12, 11, 13, 10, 14};
        stats::Summary s = stats::summarize(xs);
        CHECK(s.mean == doctest::Approx(12.0));
        CHECK(s.ci95_halfwidth == doctest::Approx(1.96334).epsilon(1e-4));
    }

    TEST_CASE("intercepted pipelines do strictly more work than plain ones") {
        BenchResult plain = emit_benchmark(BenchKind::Plain, 16, testutil::samples());
        BenchResult intercepted = emit_benchmark(BenchKind::Intercepted, 16, testutil::samples());
        // the malware phase exists only when interception happened
        CHECK(plain.phases.at("patch(malware)").mean == 0.0);
        CHECK(intercepted.phases.at("patch(malware)").mean > 0.0);
        // compare best-case repetitions of the deterministic phases (the RSA
        // sign jitter dwarfs the patch cost, and scheduler hiccups only ever
        // add time, so minima are the stable work estimate)
        double plain_work = plain.min_of("prepare") + plain.min_of("compile");
        double intercepted_work = intercepted.min_of("prepare") + intercepted.min_of("compile") +
                                  intercepted.min_of("patch(malware)");
        CHECK(intercepted_work + 2e-6 >= plain_work);
    }

    TEST_CASE("builder benchmark reports the atomic phase") {
        BenchResult b = emit_benchmark(BenchKind::Builder, 3, testutil::samples());
        CHECK(b.phases.count("build+sign(atomic)") == 1);
        CHECK(b.phases.at("build+sign(atomic)").mean > 0.0);
    }
}
