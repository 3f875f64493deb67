// dci — divide-and-conquer classification over large label spaces.
//
// Subcommands:
//   classify  one image against a label file, oracle or http backend
//   evaluate  desk-scale experiment sweeps from a spec file
//   analyze   cost-model grids (closed form vs flat baseline, call bounds)
//   simulate  softmax-weight dilution Monte Carlo

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dci/analysis.hpp"
#include "dci/engine.hpp"
#include "dci/harness.hpp"
#include "dci/http_backend.hpp"
#include "dci/oracle.hpp"

namespace {

// Shipped cost-model defaults; a positive per-call cost is what gives the
// cost curves their U shape at large N. Override with --c0/--c2 or the
// cost_model config section.
constexpr double kDefaultCostC0 = 1000.0;
constexpr double kDefaultCostC2 = 0.01;

struct ClassifyOptions {
  std::string image;
  std::string labels_file;
  int k = 10;
  std::string backend = "oracle";
  std::string config_file;
  std::string grouping = "sequential";
  std::uint64_t grouping_seed = 0;
  std::string sim_matrix;
  int parallelism = 1;
  std::string parse_mode = "strict";
  int max_retries = 2;
  std::optional<int> max_depth;
  std::string prompt_template_file;
  bool flat = false;
  std::string trace_out;
  // oracle knobs
  std::string true_label;
  double delta = std::log(99.0);
  double p_none = 1.0;
  double latency_c0 = 0.5;
  double latency_c2 = 0.01;
  std::uint64_t oracle_seed = 0;
  // http knobs
  std::string base_url;
  std::string model;
  double timeout_s = 120.0;
  int max_attempts = 3;
  int max_in_flight = 4;
  std::optional<double> temperature;
};

// Config-file values fill in only where the user did not pass a flag.
void apply_tool_config(const dci::harness::ToolConfig& config,
                       const CLI::App& cmd, ClassifyOptions& options) {
  const auto unset = [&cmd](const std::string& flag) {
    return cmd.get_option(flag)->count() == 0;
  };
  if (config.k && unset("--k")) options.k = *config.k;
  if (config.parallelism && unset("--parallelism")) {
    options.parallelism = *config.parallelism;
  }
  if (config.parse_mode && unset("--parse-mode")) {
    options.parse_mode = *config.parse_mode;
  }
  if (config.max_retries && unset("--max-retries")) {
    options.max_retries = *config.max_retries;
  }
  if (config.max_depth && unset("--max-depth")) {
    options.max_depth = *config.max_depth;
  }
  if (config.prompt_template_file && unset("--prompt-template")) {
    options.prompt_template_file = *config.prompt_template_file;
  }
  if (config.grouping && unset("--grouping")) {
    options.grouping = *config.grouping;
  }
  if (config.grouping_seed && unset("--grouping-seed")) {
    options.grouping_seed = *config.grouping_seed;
  }
  if (config.sim_matrix_file && unset("--sim-matrix")) {
    options.sim_matrix = *config.sim_matrix_file;
  }
  if (config.backend_kind && unset("--backend")) {
    options.backend = *config.backend_kind;
  }
  if (!config.http.base_url.empty() && unset("--base-url")) {
    options.base_url = config.http.base_url;
  }
  if (!config.http.model.empty() && unset("--model")) {
    options.model = config.http.model;
  }
  if (unset("--timeout")) options.timeout_s = config.http.timeout_s;
  if (unset("--max-attempts")) options.max_attempts = config.http.max_attempts;
  if (unset("--max-in-flight")) {
    options.max_in_flight = config.http.max_in_flight;
  }
  if (config.http.temperature && unset("--temperature")) {
    options.temperature = config.http.temperature;
  }
  if (config.true_label && unset("--true-label")) {
    options.true_label = *config.true_label;
  }
  if (config.oracle_delta && unset("--delta")) {
    options.delta = *config.oracle_delta;
  }
  if (config.oracle_p_none && unset("--p-none")) {
    options.p_none = *config.oracle_p_none;
  }
  if (config.oracle_latency_c0 && unset("--latency-c0")) {
    options.latency_c0 = *config.oracle_latency_c0;
  }
  if (config.oracle_latency_c2 && unset("--latency-c2")) {
    options.latency_c2 = *config.oracle_latency_c2;
  }
  if (config.oracle_seed && unset("--oracle-seed")) {
    options.oracle_seed = *config.oracle_seed;
  }
}

dci::ParseMode parse_mode_of(const std::string& name) {
  if (name == "strict") return dci::ParseMode::kStrict;
  if (name == "normalized") return dci::ParseMode::kNormalized;
  throw CLI::ValidationError("--parse-mode must be strict or normalized");
}

int run_classify(const ClassifyOptions& options) {
  const dci::harness::LoadedLabels loaded =
      dci::harness::load_labels(options.labels_file);
  if (loaded.duplicates_dropped > 0) {
    std::cerr << "warning: dropped " << loaded.duplicates_dropped
              << " duplicate label(s) from " << options.labels_file << "\n";
  }
  if (loaded.labels.empty()) {
    std::cerr << "error: label file is empty\n";
    return 1;
  }

  std::unique_ptr<dci::Backend> backend;
  if (options.backend == "oracle") {
    if (options.true_label.empty()) {
      std::cerr << "error: the oracle backend needs --true-label (the label "
                   "the simulated model should see in the image)\n";
      return 1;
    }
    dci::DilutionOracleParams params;
    params.true_label = options.true_label;
    params.signal_boost_delta = options.delta;
    params.p_none_when_absent = options.p_none;
    params.latency_c0 = options.latency_c0;
    params.latency_c2 = options.latency_c2;
    params.seed = options.oracle_seed;
    backend = std::make_unique<dci::DilutionOracle>(params);
  } else if (options.backend == "http") {
    dci::HttpEndpointConfig config;
    config.base_url = options.base_url;
    config.model = options.model;
    config.timeout_s = options.timeout_s;
    config.max_attempts = options.max_attempts;
    config.max_in_flight = options.max_in_flight;
    config.temperature = options.temperature;
    backend = std::make_unique<dci::HttpBackend>(config);
  } else {
    std::cerr << "error: --backend must be oracle or http\n";
    return 1;
  }

  dci::EngineConfig engine;
  engine.k = dci::GroupSize(options.k);
  engine.grouping = dci::grouping_strategy_from_string(options.grouping);
  engine.grouping_seed = options.grouping_seed;
  engine.parallelism = options.parallelism;
  engine.parse_policy =
      dci::ParsePolicy(parse_mode_of(options.parse_mode), options.max_retries);
  engine.max_depth_override = options.max_depth;
  if (!options.sim_matrix.empty()) {
    engine.similarity = std::make_shared<const dci::SimilarityMatrix>(
        dci::harness::load_similarity_matrix(options.sim_matrix));
  }
  if (!options.prompt_template_file.empty()) {
    engine.prompt_template =
        dci::PromptTemplate::from_file(options.prompt_template_file);
  }

  const dci::RunTrace trace =
      options.flat
          ? dci::flat_classify(options.image, loaded.labels, *backend,
                               engine.parse_policy, engine.prompt_template)
          : dci::dci_classify(options.image, loaded.labels, engine, *backend);

  if (trace.final.is_predicted()) {
    std::cout << "prediction: " << trace.final.label << "\n";
  } else {
    std::cout << "prediction: None\n";
  }
  std::cout << "calls: " << trace.total_calls << "\n"
            << "iterations: " << trace.iterations.size() << "\n"
            << "simulated_time_s: " << trace.total_sim_s << "\n"
            << "wall_time_s: " << trace.total_wall_s << "\n";

  if (!options.trace_out.empty()) {
    std::ofstream out(options.trace_out, std::ios::binary);
    out << dci::trace_to_json(trace) << "\n";
    if (!out) {
      std::cerr << "error: cannot write trace to " << options.trace_out << "\n";
      return 1;
    }
    std::cout << "trace: " << options.trace_out << "\n";
  }
  return 0;
}

std::vector<std::int64_t> parse_int64_list(const std::string& csv) {
  std::vector<std::int64_t> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string cell =
        csv.substr(start, comma == std::string::npos ? comma : comma - start);
    if (!cell.empty()) out.push_back(std::stoll(cell));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  for (const std::int64_t v : parse_int64_list(csv)) {
    out.push_back(static_cast<int>(v));
  }
  return out;
}

void write_or_print(const std::string& content, const std::string& path) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) {
    throw std::runtime_error("cannot write '" + path + "'");
  }
  std::cerr << "wrote " << path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"divide-and-conquer classification over large label spaces"};
  app.require_subcommand(1);

  // ---- classify ----
  ClassifyOptions classify;
  CLI::App* classify_cmd =
      app.add_subcommand("classify", "classify one image against a label file");
  classify_cmd->add_option("--image", classify.image, "image path or URL")
      ->required();
  classify_cmd
      ->add_option("--labels", classify.labels_file,
                   "newline-separated label file")
      ->required();
  classify_cmd->add_option("--k", classify.k, "group size (>= 2)");
  classify_cmd->add_option("--backend", classify.backend, "oracle | http");
  classify_cmd->add_option("--config", classify.config_file,
                           "JSON config file (flags override it)");
  classify_cmd->add_option("--grouping", classify.grouping,
                           "sequential | random | most_similar | least_similar");
  classify_cmd->add_option("--grouping-seed", classify.grouping_seed,
                           "seed for random grouping");
  classify_cmd->add_option("--sim-matrix", classify.sim_matrix,
                           "similarity matrix CSV for similarity groupings");
  classify_cmd->add_option("--parallelism", classify.parallelism,
                           "max concurrent sub-queries");
  classify_cmd->add_option("--parse-mode", classify.parse_mode,
                           "strict | normalized");
  classify_cmd->add_option("--max-retries", classify.max_retries,
                           "re-queries for invalid replies (0..10)");
  int max_depth_flag = 0;
  CLI::Option* depth_opt = classify_cmd->add_option(
      "--max-depth", max_depth_flag, "abort beyond this recursion depth");
  classify_cmd->add_option("--prompt-template", classify.prompt_template_file,
                           "prompt layout file with {CANDIDATES}/{EXEMPLAR}");
  classify_cmd->add_flag("--flat", classify.flat,
                         "single-pass baseline instead of recursion");
  classify_cmd->add_option("--trace-out", classify.trace_out,
                           "write the JSON run trace here");
  classify_cmd->add_option("--true-label", classify.true_label,
                           "oracle: ground-truth label of the image");
  classify_cmd->add_option("--delta", classify.delta,
                           "oracle: logit advantage of the true label");
  classify_cmd->add_option("--p-none", classify.p_none,
                           "oracle: P(None) when the truth is absent");
  classify_cmd->add_option("--latency-c0", classify.latency_c0,
                           "oracle: fixed per-call latency");
  classify_cmd->add_option("--latency-c2", classify.latency_c2,
                           "oracle: quadratic latency coefficient");
  classify_cmd->add_option("--oracle-seed", classify.oracle_seed,
                           "oracle: base seed");
  classify_cmd->add_option("--base-url", classify.base_url,
                           "http: endpoint base URL");
  classify_cmd->add_option("--model", classify.model, "http: model id");
  classify_cmd->add_option("--timeout", classify.timeout_s,
                           "http: per-request timeout seconds");
  classify_cmd->add_option("--max-attempts", classify.max_attempts,
                           "http: transport attempts");
  classify_cmd->add_option("--max-in-flight", classify.max_in_flight,
                           "http: concurrent request cap");
  double temperature_flag = 0.0;
  CLI::Option* temp_opt = classify_cmd->add_option(
      "--temperature", temperature_flag, "http: sampling temperature");

  // ---- evaluate ----
  std::string eval_spec_path;
  std::string eval_out;
  std::string eval_format = "csv";
  CLI::App* evaluate_cmd = app.add_subcommand(
      "evaluate", "run a desk-scale experiment sweep from a spec file");
  evaluate_cmd->add_option("--spec", eval_spec_path, "experiment spec JSON")
      ->required();
  evaluate_cmd->add_option("--out", eval_out,
                           "output path (stdout when omitted)");
  evaluate_cmd->add_option("--format", eval_format, "csv | json");

  // ---- analyze ----
  std::string analyze_n_list = "100,1000,20000,50000";
  std::string analyze_k_list = "2,5,10,20,50,100,200,500,1000";
  double analyze_c0 = kDefaultCostC0;
  double analyze_c2 = kDefaultCostC2;
  bool analyze_parallel = false;
  bool analyze_bounds = false;
  std::string analyze_out;
  std::string analyze_format = "csv";
  std::string analyze_config;
  CLI::App* analyze_cmd =
      app.add_subcommand("analyze", "evaluate the cost model over (N, K) grids");
  analyze_cmd->add_option("--n-list", analyze_n_list, "comma-separated N grid");
  analyze_cmd->add_option("--k-list", analyze_k_list, "comma-separated K grid");
  analyze_cmd->add_option("--c0", analyze_c0, "fixed per-call cost");
  analyze_cmd->add_option("--c2", analyze_c2, "quadratic cost coefficient");
  analyze_cmd->add_flag("--parallel", analyze_parallel,
                        "ideal fully-parallel cost instead of sequential");
  analyze_cmd->add_flag("--bounds", analyze_bounds,
                        "emit call-count bounds instead of costs");
  analyze_cmd->add_option("--out", analyze_out, "output path");
  analyze_cmd->add_option("--format", analyze_format, "csv | json");
  analyze_cmd->add_option("--config", analyze_config,
                          "JSON config file (cost_model section)");

  // ---- simulate ----
  std::string simulate_k_list = "10,100,1000";
  std::int64_t simulate_trials = 100000;
  std::uint64_t simulate_seed = 42;
  bool simulate_dilution = false;
  std::string simulate_out;
  std::string simulate_format = "csv";
  CLI::App* simulate_cmd = app.add_subcommand(
      "simulate", "Monte Carlo simulation of softmax-weight dilution");
  simulate_cmd->add_flag("--dilution", simulate_dilution,
                         "sample per-candidate softmax weights");
  simulate_cmd->add_option("--k-list", simulate_k_list,
                           "comma-separated group sizes");
  simulate_cmd->add_option("--trials", simulate_trials, "trials per group size");
  simulate_cmd->add_option("--seed", simulate_seed, "sampler seed");
  simulate_cmd->add_option("--out", simulate_out, "output path");
  simulate_cmd->add_option("--format", simulate_format, "csv | json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (classify_cmd->parsed()) {
      if (depth_opt->count() > 0) classify.max_depth = max_depth_flag;
      if (temp_opt->count() > 0) classify.temperature = temperature_flag;
      if (!classify.config_file.empty()) {
        apply_tool_config(dci::harness::load_tool_config(classify.config_file),
                          *classify_cmd, classify);
      }
      return run_classify(classify);
    }

    if (evaluate_cmd->parsed()) {
      const dci::harness::ExperimentSpec spec =
          dci::harness::load_experiment_spec(eval_spec_path);
      const dci::harness::EvalReport report =
          dci::harness::run_experiment(spec);
      const std::string content =
          eval_format == "json" ? dci::harness::report_to_json(report)
                                : dci::harness::report_to_csv(report);
      write_or_print(content, eval_out);
      return 0;
    }

    if (analyze_cmd->parsed()) {
      if (!analyze_config.empty()) {
        const dci::harness::ToolConfig config =
            dci::harness::load_tool_config(analyze_config);
        if (config.cost_c0 && analyze_cmd->get_option("--c0")->count() == 0) {
          analyze_c0 = *config.cost_c0;
        }
        if (config.cost_c2 && analyze_cmd->get_option("--c2")->count() == 0) {
          analyze_c2 = *config.cost_c2;
        }
      }
      const std::vector<std::int64_t> n_values = parse_int64_list(analyze_n_list);
      const std::vector<int> k_values = parse_int_list(analyze_k_list);
      std::string content;
      if (analyze_bounds) {
        const dci::analysis::BoundsReport report =
            dci::analysis::bounds_grid(n_values, k_values);
        content = analyze_format == "json"
                      ? dci::analysis::bounds_report_json(report)
                      : dci::analysis::bounds_report_csv(report);
      } else {
        const dci::analysis::CostReport report = dci::analysis::cost_grid(
            n_values, k_values, analyze_c0, analyze_c2, analyze_parallel);
        content = analyze_format == "json"
                      ? dci::analysis::cost_report_json(report)
                      : dci::analysis::cost_report_csv(report);
      }
      write_or_print(content, analyze_out);
      return 0;
    }

    if (simulate_cmd->parsed()) {
      if (!simulate_dilution) {
        std::cerr << "error: simulate currently only supports --dilution\n";
        return 1;
      }
      const std::vector<int> k_values = parse_int_list(simulate_k_list);
      std::string csv = "k,trials,mean_weight,expected_1_over_k,variance\n";
      nlohmann::json rows = nlohmann::json::array();
      for (const int k : k_values) {
        const dci::analysis::DilutionStats stats =
            dci::analysis::dilution_monte_carlo(k, simulate_trials,
                                                simulate_seed);
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%d,%lld,%.6f,%.6f,%.8f\n", k,
                      static_cast<long long>(simulate_trials), stats.mean,
                      1.0 / k, stats.variance);
        csv += buf;
        rows.push_back({{"k", k},
                        {"trials", simulate_trials},
                        {"mean_weight", stats.mean},
                        {"expected_1_over_k", 1.0 / k},
                        {"variance", stats.variance}});
      }
      if (simulate_format == "json") {
        nlohmann::json doc;
        doc["schema_version"] = 1;
        doc["seed"] = simulate_seed;
        doc["rows"] = std::move(rows);
        write_or_print(doc.dump(2) + "\n", simulate_out);
      } else {
        write_or_print(csv, simulate_out);
      }
      return 0;
    }
  } catch (const dci::EngineError& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::cerr << "partial trace: " << e.partial_trace().iterations.size()
              << " completed iteration(s)\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
