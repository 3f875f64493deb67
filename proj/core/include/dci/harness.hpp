#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dci/engine.hpp"
#include "dci/http_backend.hpp"
#include "dci/label_space.hpp"
#include "dci/oracle.hpp"

namespace dci::harness {

/// One evaluation instance: an image handle plus its ground-truth label.
struct DatasetRecord {
  std::string image_ref;
  std::string label;
};

struct LoadedLabels {
  LabelSet labels;
  std::size_t duplicates_dropped = 0;
};

/// Newline-separated UTF-8 label file; blank lines skipped, duplicates
/// dropped (first occurrence wins) and counted for the caller to warn about.
LoadedLabels load_labels(const std::filesystem::path& path);

/// JSON-lines dataset, one {"image": ..., "label": ...} object per line.
/// Malformed lines are reported with their line number.
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path);

enum class MissingLabelPolicy { kSkip, kAbort };

/// Drops (or rejects) records whose label is not in the experiment's set.
std::vector<DatasetRecord> filter_dataset(std::vector<DatasetRecord> records,
                                          const LabelSet& labels,
                                          MissingLabelPolicy policy);

/// Similarity matrix file: a header row of labels, then a dense numeric
/// square matrix, comma-separated.
SimilarityMatrix load_similarity_matrix(const std::filesystem::path& path);

enum class ExperimentKind { kPclsrSweep, kKAblation, kGroupingAblation };

struct OracleSettings {
  double delta = 0.0;
  double p_none_when_absent = 1.0;
  double latency_c0 = 0.0;
  double latency_c2 = 0.0;
};

/// Desk-scale experiment description. Synthetic instances draw the true
/// label uniformly from an N-label subset that always contains it
/// (closed-set protocol); the oracle backend keys on that label, so no
/// image pixels are involved.
struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::kPclsrSweep;
  std::vector<int> label_space_sizes;
  std::vector<int> k_values;
  int trials = 100;
  std::uint64_t seed = 0;
  std::string backend = "oracle";  // "oracle" is the only desk-scale choice
  OracleSettings oracle;

  GroupingStrategy grouping = GroupingStrategy::kSequential;
  int parallelism = 1;
  ParseMode parse_mode = ParseMode::kStrict;
  int max_retries = 2;

  std::string labels_file;      // optional; synthetic labels otherwise
  std::string sim_matrix_file;  // required for the grouping ablation

  void validate() const;
};

ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

struct EvalRow {
  int n = 0;
  int k = 0;
  std::string method;    // "flat" or "dci"
  std::string strategy;  // grouping strategy for dci rows, "-" for flat
  double accuracy = 0.0;
  double mean_calls = 0.0;
  double mean_sim_latency_s = 0.0;
  double mean_wall_s = 0.0;
};

struct EvalReport {
  std::uint64_t seed = 0;
  int trials = 0;
  std::string config_hash;
  std::vector<EvalRow> rows;
};

/// Accuracy collapse sweep over the label-space sizes: flat vs recursive
/// classification per N, all under the dilution oracle.
EvalReport run_pclsr_sweep(const ExperimentSpec& spec);

/// Fixed N (the first label-space size), swept group size, plus the flat
/// baseline row.
EvalReport run_k_ablation(const ExperimentSpec& spec);

/// Fixed N and K; one row per grouping strategy (random, most similar,
/// least similar) with identical seeds.
EvalReport run_grouping_ablation(const ExperimentSpec& spec);

/// Dispatch on spec.kind.
EvalReport run_experiment(const ExperimentSpec& spec);

/// Live-path driver: classifies real dataset records against a backend.
EvalReport run_dataset_eval(const std::vector<DatasetRecord>& records,
                            const LabelSet& labels, const EngineConfig& config,
                            Backend& backend, bool include_flat_baseline);

enum class ReportFormat { kCsv, kJson };

/// CSV: fixed column order, 4-decimal rounding, accuracy as a percentage.
/// JSON: full precision plus metadata. Both carry the config hash.
void emit_report(const EvalReport& report, ReportFormat format,
                 const std::filesystem::path& path);
std::string report_to_csv(const EvalReport& report);
std::string report_to_json(const EvalReport& report);
EvalReport load_report_json(const std::filesystem::path& path);

/// FNV-1a hash of the canonical spec serialization, as a hex string.
std::string config_hash(const ExperimentSpec& spec);

/// Synthetic label universe "class_00001".."class_n" used when no labels
/// file is supplied.
LabelSet make_synthetic_labels(int count);

/// Optional tool configuration file with sections engine, backend, oracle,
/// cost_model and grouping. Any field may be absent; CLI flags win.
struct ToolConfig {
  // engine
  std::optional<int> k;
  std::optional<int> parallelism;
  std::optional<std::string> parse_mode;
  std::optional<int> max_retries;
  std::optional<int> max_depth;
  std::optional<std::string> prompt_template_file;
  // grouping
  std::optional<std::string> grouping;
  std::optional<std::uint64_t> grouping_seed;
  std::optional<std::string> sim_matrix_file;
  // backend
  std::optional<std::string> backend_kind;
  HttpEndpointConfig http;
  // oracle
  std::optional<std::string> true_label;
  std::optional<double> oracle_delta;
  std::optional<double> oracle_p_none;
  std::optional<double> oracle_latency_c0;
  std::optional<double> oracle_latency_c2;
  std::optional<std::uint64_t> oracle_seed;
  // cost model
  std::optional<double> cost_c0;
  std::optional<double> cost_c2;
};

ToolConfig load_tool_config(const std::filesystem::path& path);

}  // namespace dci::harness
