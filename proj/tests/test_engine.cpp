#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <string>

#include "dci/analysis.hpp"
#include "dci/engine.hpp"
#include "dci/oracle.hpp"
#include "dci/rng.hpp"
#include "support/test_backends.hpp"

using namespace dci;
using dci::testing::AllNoneBackend;
using dci::testing::AllSurviveBackend;
using dci::testing::FlakyBackend;
using dci::testing::ScriptedBackend;

namespace {

LabelSet numbered(int count) {
  std::vector<std::string> out;
  for (int i = 0; i < count; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "label_%04d", i);
    out.emplace_back(buf);
  }
  return LabelSet(std::move(out));
}

DilutionOracleParams perfect_params(std::string truth) {
  DilutionOracleParams params;
  params.true_label = std::move(truth);
  params.signal_boost_delta = 1e9;
  params.p_none_when_absent = 1.0;
  return params;
}

EngineConfig config_with_k(int k) {
  EngineConfig config;
  config.k = GroupSize(k);
  return config;
}

/// Structural invariants every finished trace must satisfy.
void check_trace_invariants(const RunTrace& trace, std::size_t n, int k) {
  REQUIRE_FALSE(trace.iterations.empty());

  std::uint64_t calls = 0;
  for (const IterationRecord& record : trace.iterations) {
    calls += record.calls_made;
    CHECK(record.outcomes.size() == record.partition.group_count());
    CHECK(record.raw_responses.size() == record.partition.group_count());
    CHECK(record.survivors.size() <= record.partition.group_count());

    // Survivor soundness: every survivor was a match output this round.
    std::set<std::string> matches;
    for (const InferenceOutcome& outcome : record.outcomes) {
      if (outcome.is_match()) matches.insert(outcome.label());
    }
    CHECK(record.survivors.size() == matches.size());
    for (const std::string& survivor : record.survivors) {
      CHECK(matches.contains(survivor));
    }
  }
  CHECK(trace.total_calls == calls);

  // Strict shrinkage while above the base case, and the depth bound.
  std::int64_t shrinkage_levels = 0;
  for (std::size_t i = 0; i < trace.iterations.size(); ++i) {
    const std::size_t size = trace.iterations[i].input_set.size();
    if (i + 1 < trace.iterations.size()) {
      CHECK(size > static_cast<std::size_t>(k));
      CHECK(trace.iterations[i + 1].input_set.size() < size);
      ++shrinkage_levels;
    } else {
      // Final iteration either is the base case or ended by pruning.
    }
  }
  const std::int64_t depth_cap =
      analysis::ceil_log(static_cast<std::int64_t>(n), k);
  CHECK(shrinkage_levels <= depth_cap);
  CHECK(static_cast<std::int64_t>(trace.iterations.size()) <= depth_cap + 1);
}

}  // namespace

TEST_CASE("perfect oracle: N=100, K=10 resolves in exactly 10 calls") {
  const LabelSet labels = numbered(100);
  DilutionOracle oracle(perfect_params("label_0042"));
  const RunTrace trace =
      dci_classify("img://perfect", labels, config_with_k(10), oracle);

  CHECK(trace.final == FinalPrediction::predicted("label_0042"));
  CHECK(trace.total_calls == 10);
  CHECK(trace.iterations.size() == 1);
  check_trace_invariants(trace, 100, 10);
}

TEST_CASE("all-None backend: N=100, K=10 gives NonePrediction in 10 calls") {
  const LabelSet labels = numbered(100);
  AllNoneBackend backend;
  const RunTrace trace =
      dci_classify("img://none", labels, config_with_k(10), backend);

  CHECK(trace.final == FinalPrediction::none());
  CHECK(trace.total_calls == 10);
  CHECK(trace.iterations.size() == 1);
  CHECK(trace.iterations[0].survivors.empty());
}

TEST_CASE("all-survive adversary matches the layered-sum reference") {
  SUBCASE("N=100, K=10 -> 11 calls over two rounds") {
    const LabelSet labels = numbered(100);
    AllSurviveBackend backend;
    const RunTrace trace =
        dci_classify("img://adversary", labels, config_with_k(10), backend);

    REQUIRE(trace.iterations.size() == 2);
    CHECK(trace.iterations[0].calls_made == 10);
    CHECK(trace.iterations[0].survivors.size() == 10);
    CHECK(trace.iterations[1].calls_made == 1);
    CHECK(trace.total_calls == 11);
    CHECK(trace.total_calls == dci::testing::layered_sum_calls(100, 10));
    CHECK(trace.final.is_predicted());
  }

  SUBCASE("N=1000, K=10 -> 111 calls") {
    const LabelSet labels = numbered(1000);
    AllSurviveBackend backend;
    const RunTrace trace =
        dci_classify("img://adversary", labels, config_with_k(10), backend);
    CHECK(trace.total_calls == 111);
    CHECK(trace.total_calls == dci::testing::layered_sum_calls(1000, 10));
    check_trace_invariants(trace, 1000, 10);
  }
}

TEST_CASE("flat_classify asks one question over the whole list") {
  const LabelSet labels = numbered(64);
  DilutionOracle oracle(perfect_params("label_0001"));
  const RunTrace trace = flat_classify("img://flat", labels, oracle);

  CHECK(trace.final == FinalPrediction::predicted("label_0001"));
  CHECK(trace.total_calls == 1);
  REQUIRE(trace.iterations.size() == 1);
  CHECK(trace.iterations[0].partition.group_count() == 1);
  CHECK(trace.iterations[0].partition.groups[0].size() == 64);
}

TEST_CASE("flat accuracy under dilution matches the softmax expectation") {
  // delta = ln 99, N = 1000: P(correct) = 99/1098.
  const LabelSet labels = numbered(1000);
  DilutionOracleParams params;
  params.true_label = "label_0123";
  params.signal_boost_delta = std::log(99.0);
  params.p_none_when_absent = 1.0;
  DilutionOracle oracle(params);

  const int trials = 20000;
  int correct = 0;
  for (int trial = 0; trial < trials; ++trial) {
    char image[48];
    std::snprintf(image, sizeof(image), "img://flat/%d", trial);
    const RunTrace trace = flat_classify(image, labels, oracle);
    if (trace.final == FinalPrediction::predicted("label_0123")) {
      ++correct;
    }
  }
  const double accuracy = static_cast<double>(correct) / trials;
  CHECK(std::abs(accuracy - 99.0 / 1098.0) < 0.01);
}

TEST_CASE("N <= K makes dci and flat issue identical queries") {
  const LabelSet labels = numbered(7);
  DilutionOracle oracle(perfect_params("label_0003"));

  const RunTrace dci = dci_classify("img://base", labels, config_with_k(10), oracle);
  const RunTrace flat = flat_classify("img://base", labels, oracle);

  CHECK(dci.total_calls == 1);
  CHECK(flat.total_calls == 1);
  CHECK(dci.final == flat.final);
  CHECK(dci.iterations[0].partition == flat.iterations[0].partition);
  CHECK(dci.iterations[0].outcomes[0] == flat.iterations[0].outcomes[0]);
}

TEST_CASE("scripted multi-round pruning narrows to the answer") {
  // N=9, K=3. Round 1: two groups answer, one prunes. Round 2 (size 2,
  // base case): direct answer.
  const LabelSet labels = numbered(9);
  ScriptedBackend backend({
      "label_0001",  // group 1
      "None",        // group 2
      "label_0007",  // group 3
      "label_0007",  // base case over {label_0001, label_0007}
  });
  const RunTrace trace =
      dci_classify("img://script", labels, config_with_k(3), backend);

  REQUIRE(trace.iterations.size() == 2);
  CHECK(trace.iterations[0].survivors.labels() ==
        std::vector<std::string>{"label_0001", "label_0007"});
  CHECK(trace.final == FinalPrediction::predicted("label_0007"));
  CHECK(trace.total_calls == 4);
}

TEST_CASE("invalid replies are retried then coerced to None") {
  // One group (base case). Two garbage replies, then retries exhausted.
  const LabelSet labels = numbered(3);
  ScriptedBackend backend({"garbage one", "garbage two"});
  EngineConfig config = config_with_k(10);
  config.parse_policy = ParsePolicy(ParseMode::kStrict, 1);

  const RunTrace trace =
      dci_classify("img://invalid", labels, config, backend);
  CHECK(trace.final == FinalPrediction::none());
  CHECK(trace.total_calls == 2);  // original + one retry
  REQUIRE(trace.iterations.size() == 1);
  CHECK(trace.iterations[0].outcomes[0].is_none());  // coerced
  CHECK(trace.iterations[0].raw_responses[0] == "garbage two");
}

TEST_CASE("a retry that produces a valid reply is kept") {
  const LabelSet labels = numbered(3);
  ScriptedBackend backend({"garbage", "label_0002"});
  EngineConfig config = config_with_k(10);
  config.parse_policy = ParsePolicy(ParseMode::kStrict, 2);

  const RunTrace trace = dci_classify("img://retry", labels, config, backend);
  CHECK(trace.final == FinalPrediction::predicted("label_0002"));
  CHECK(trace.total_calls == 2);
}

TEST_CASE("backend failure aborts with a partial trace") {
  const LabelSet labels = numbered(9);
  FlakyBackend backend(1000, "unused");
  try {
    dci_classify("img://fail", labels, config_with_k(3), backend);
    FAIL("expected EngineError");
  } catch (const EngineError& e) {
    CHECK(e.partial_trace().iterations.empty());
    CHECK(std::string(e.what()).find("iteration 1") != std::string::npos);
  }
}

TEST_CASE("max_depth_override aborts instead of looping") {
  const LabelSet labels = numbered(100);
  AllSurviveBackend backend;
  EngineConfig config = config_with_k(10);
  config.max_depth_override = 1;
  try {
    dci_classify("img://depth", labels, config, backend);
    FAIL("expected EngineError");
  } catch (const EngineError& e) {
    CHECK(e.partial_trace().iterations.size() == 1);
  }
}

TEST_CASE("run_parallel_conquer wave accounting") {
  // 10 equal-latency queries.
  const LabelSet labels = numbered(100);
  DilutionOracleParams params = perfect_params("label_0000");
  params.latency_c0 = 0.0;
  params.latency_c2 = 1.0;  // L(10) = 100 simulated seconds
  DilutionOracle oracle(params);

  const Partition partition = partition_sequential(labels, GroupSize(10));
  std::vector<Query> queries;
  const PromptTemplate prompt_template = PromptTemplate::standard();
  for (std::size_t i = 0; i < partition.group_count(); ++i) {
    Query q;
    q.image_ref = "img://waves";
    q.group = partition.groups[i];
    q.iteration = 1;
    q.group_index = static_cast<int>(i) + 1;
    q.prompt = build_prompt(prompt_template, q.group);
    queries.push_back(std::move(q));
  }

  const ParsePolicy policy;
  SUBCASE("parallelism >= M: one wave of the max latency") {
    const ConquerOutput out = run_parallel_conquer(queries, 10, oracle, policy);
    CHECK(out.simulated_time_s == 100.0);
  }
  SUBCASE("parallelism 1: latencies add up") {
    const ConquerOutput out = run_parallel_conquer(queries, 1, oracle, policy);
    CHECK(out.simulated_time_s == 1000.0);
  }
  SUBCASE("parallelism 4: ceil(10/4) = 3 waves") {
    const ConquerOutput out = run_parallel_conquer(queries, 4, oracle, policy);
    CHECK(out.simulated_time_s == 300.0);
  }
  SUBCASE("outcomes are ordered by group index at any parallelism") {
    const ConquerOutput seq = run_parallel_conquer(queries, 1, oracle, policy);
    const ConquerOutput par = run_parallel_conquer(queries, 10, oracle, policy);
    REQUIRE(seq.results.size() == par.results.size());
    for (std::size_t i = 0; i < seq.results.size(); ++i) {
      CHECK(seq.results[i].outcome == par.results[i].outcome);
    }
  }
}

TEST_CASE("traces are schedule-independent under the oracle") {
  std::mt19937_64 gen(31337);
  for (int round = 0; round < 12; ++round) {
    const int n = 20 + static_cast<int>(rng::bounded(gen, 300));
    const int k = 2 + static_cast<int>(rng::bounded(gen, 14));
    const LabelSet labels = numbered(n);

    DilutionOracleParams params;
    params.true_label = labels[rng::bounded(gen, n)];
    params.signal_boost_delta = rng::uniform01(gen) * 5.0;
    params.p_none_when_absent = 0.4 + 0.6 * rng::uniform01(gen);
    params.latency_c0 = 0.5;
    params.latency_c2 = 0.01;
    params.seed = gen();
    DilutionOracle oracle(params);

    EngineConfig sequential = config_with_k(k);
    sequential.parallelism = 1;
    EngineConfig parallel = config_with_k(k);
    parallel.parallelism = 16;

    const RunTrace a = dci_classify("img://sched", labels, sequential, oracle);
    const RunTrace b = dci_classify("img://sched", labels, parallel, oracle);

    const TraceJsonOptions content_only{false, false, -1};
    CHECK(trace_to_json(a, content_only) == trace_to_json(b, content_only));
  }
}

TEST_CASE("randomized runs respect call-count and depth bounds") {
  std::mt19937_64 gen(271828);
  for (int round = 0; round < 150; ++round) {
    const int n = 2 + static_cast<int>(rng::bounded(gen, 400));
    const int k = 2 + static_cast<int>(rng::bounded(gen, 14));
    const LabelSet labels = numbered(n);

    DilutionOracleParams params;
    params.true_label = labels[rng::bounded(gen, n)];
    params.signal_boost_delta = rng::uniform01(gen) * 5.0;
    params.p_none_when_absent = rng::uniform01(gen);
    params.seed = gen();
    DilutionOracle oracle(params);

    char image[48];
    std::snprintf(image, sizeof(image), "img://rand/%d", round);
    const RunTrace trace =
        dci_classify(image, labels, config_with_k(k), oracle);

    check_trace_invariants(trace, n, k);
    CHECK(static_cast<double>(trace.total_calls) <=
          analysis::worst_case_calls(n, k) + 1e-9);
  }
}

TEST_CASE("ideal pruning always costs exactly ceil(N/K) calls") {
  std::mt19937_64 gen(161803);
  for (int round = 0; round < 60; ++round) {
    const int n = 2 + static_cast<int>(rng::bounded(gen, 400));
    const int k = 2 + static_cast<int>(rng::bounded(gen, 14));
    const LabelSet labels = numbered(n);

    DilutionOracleParams params;
    params.true_label = labels[rng::bounded(gen, n)];
    params.signal_boost_delta = rng::uniform01(gen) * 3.0;
    params.p_none_when_absent = 1.0;  // ideal pruning
    params.seed = gen();
    DilutionOracle oracle(params);

    const RunTrace trace =
        dci_classify("img://ideal", labels, config_with_k(k), oracle);
    CHECK(trace.total_calls ==
          static_cast<std::uint64_t>(analysis::best_case_calls(n, k)));
  }
}

TEST_CASE("grouping strategies are honored at every recursion level") {
  const LabelSet labels = numbered(40);
  auto matrix =
      std::make_shared<const SimilarityMatrix>(SimilarityMatrix::identity(labels));

  for (const GroupingStrategy strategy :
       {GroupingStrategy::kSequential, GroupingStrategy::kRandom,
        GroupingStrategy::kMostSimilar, GroupingStrategy::kLeastSimilar}) {
    AllSurviveBackend backend;
    EngineConfig config = config_with_k(4);
    config.grouping = strategy;
    config.grouping_seed = 5;
    config.similarity = matrix;
    const RunTrace trace =
        dci_classify("img://strategy", labels, config, backend);
    CHECK(trace.final.is_predicted());
    check_trace_invariants(trace, 40, 4);
  }

  EngineConfig missing = config_with_k(4);
  missing.grouping = GroupingStrategy::kMostSimilar;
  AllSurviveBackend backend;
  CHECK_THROWS_AS(dci_classify("img://strategy", labels, missing, backend),
                  std::invalid_argument);
}

TEST_CASE("trace JSON carries the schema and respects field toggles") {
  const LabelSet labels = numbered(12);
  DilutionOracleParams params = perfect_params("label_0005");
  params.latency_c0 = 1.0;
  DilutionOracle oracle(params);

  const RunTrace trace =
      dci_classify("img://json", labels, config_with_k(5), oracle);

  const std::string full = trace_to_json(trace);
  CHECK(full.find("\"schema_version\": 1") != std::string::npos);
  CHECK(full.find("\"total_calls\": 3") != std::string::npos);
  CHECK(full.find("wall_time_s") != std::string::npos);
  CHECK(full.find("simulated_time_s") != std::string::npos);
  CHECK(full.find("label_0005") != std::string::npos);

  const std::string no_wall = trace_to_json(trace, {false, true, 2});
  CHECK(no_wall.find("wall_time_s") == std::string::npos);
  CHECK(no_wall.find("simulated_time_s") != std::string::npos);

  const std::string content = trace_to_json(trace, {false, false, 2});
  CHECK(content.find("wall_time_s") == std::string::npos);
  CHECK(content.find("simulated_time_s") == std::string::npos);

  // Deterministic given identical traces.
  CHECK(trace_to_json(trace) == trace_to_json(trace));
}

TEST_CASE("engine rejects bad inputs") {
  DilutionOracle oracle(perfect_params("x"));
  CHECK_THROWS_AS(
      dci_classify("img://bad", LabelSet{}, config_with_k(10), oracle),
      std::invalid_argument);
  CHECK_THROWS_AS(flat_classify("img://bad", LabelSet{}, oracle),
                  std::invalid_argument);

  EngineConfig bad = config_with_k(10);
  bad.parallelism = 0;
  CHECK_THROWS_AS(
      dci_classify("img://bad", numbered(5), bad, oracle),
      std::invalid_argument);
}
