#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dci/backend.hpp"
#include "dci/label_space.hpp"
#include "dci/prompting.hpp"

namespace dci {

enum class GroupingStrategy { kSequential, kRandom, kMostSimilar, kLeastSimilar };

const char* to_string(GroupingStrategy strategy);
GroupingStrategy grouping_strategy_from_string(std::string_view name);

struct EngineConfig {
  GroupSize k{10};
  GroupingStrategy grouping = GroupingStrategy::kSequential;
  std::uint64_t grouping_seed = 0;
  /// Required by the similarity strategies; must cover every label the run
  /// can ever see (survivors are always a subset of the initial set).
  std::shared_ptr<const SimilarityMatrix> similarity;
  int parallelism = 1;
  ParsePolicy parse_policy{};
  /// Safety valve only: shrinkage makes the depth bound unreachable, so
  /// exceeding this aborts the run instead of truncating it.
  std::optional<int> max_depth_override;
  PromptTemplate prompt_template = PromptTemplate::standard();

  void validate() const;
};

/// One divide/conquer/combine cycle as recorded in the trace.
struct IterationRecord {
  int t = 1;
  LabelSet input_set;
  Partition partition;
  std::vector<InferenceOutcome> outcomes;  // one per group, by group index
  std::vector<std::string> raw_responses;  // last raw reply per group
  LabelSet survivors;
  std::uint64_t calls_made = 0;
  double wall_time_s = 0.0;
  double simulated_time_s = 0.0;
};

enum class FinalKind { kPredicted, kNonePrediction };

struct FinalPrediction {
  FinalKind kind = FinalKind::kNonePrediction;
  std::string label;

  static FinalPrediction predicted(std::string label) {
    return FinalPrediction{FinalKind::kPredicted, std::move(label)};
  }
  static FinalPrediction none() { return FinalPrediction{}; }

  bool is_predicted() const noexcept { return kind == FinalKind::kPredicted; }

  friend bool operator==(const FinalPrediction& a, const FinalPrediction& b) {
    return a.kind == b.kind && a.label == b.label;
  }
};

struct RunTrace {
  std::vector<IterationRecord> iterations;
  FinalPrediction final;
  std::uint64_t total_calls = 0;
  double total_wall_s = 0.0;
  double total_sim_s = 0.0;
};

/// JSON serialization knobs. Wall-clock fields vary run to run and
/// simulated-time fields vary with the parallelism setting, so both can be
/// dropped when a caller needs schedule- or run-independent bytes.
struct TraceJsonOptions {
  bool include_wall = true;
  bool include_sim = true;
  int indent = 2;
};

std::string trace_to_json(const RunTrace& trace,
                          const TraceJsonOptions& options = {});

/// Run failure carrying everything recorded before the abort.
class EngineError : public std::runtime_error {
 public:
  EngineError(const std::string& what, RunTrace partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}

  const RunTrace& partial_trace() const noexcept { return partial_; }

 private:
  RunTrace partial_;
};

/// Outcome of one group query after parse retries.
struct GroupQueryResult {
  InferenceOutcome outcome = InferenceOutcome::none();
  std::string raw_response;
  std::uint64_t calls = 0;
  double sim_latency_s = 0.0;
};

struct ConquerOutput {
  std::vector<GroupQueryResult> results;  // ordered by group index
  double simulated_time_s = 0.0;
};

/// Executes one wave-scheduled fan-out: at most `parallelism` queries in
/// flight, results ordered by group index regardless of completion order.
/// Simulated time is the sum over waves of the slowest query per wave, so
/// parallelism 1 degenerates to the plain sum of latencies. Invalid replies
/// are re-queried up to policy.max_retries and then coerced to the null
/// answer. The first backend failure (by group index) propagates after the
/// wave settles.
ConquerOutput run_parallel_conquer(const std::vector<Query>& queries,
                                   int parallelism, Backend& backend,
                                   const ParsePolicy& policy);

/// Recursive divide/conquer/combine classification over `labels`.
RunTrace dci_classify(const std::string& image_ref, const LabelSet& labels,
                      const EngineConfig& config, Backend& backend);

/// Single-query baseline over the full label list.
RunTrace flat_classify(const std::string& image_ref, const LabelSet& labels,
                       Backend& backend, const ParsePolicy& policy = {},
                       const PromptTemplate& prompt_template =
                           PromptTemplate::standard());

}  // namespace dci
