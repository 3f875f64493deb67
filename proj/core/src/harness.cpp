#include "dci/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "dci/rng.hpp"
#include "dci/text.hpp"

namespace dci::harness {

namespace {

std::string read_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error(std::string(what) + ": cannot open '" +
                             path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.emplace_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace

LoadedLabels load_labels(const std::filesystem::path& path) {
  const std::string content = read_file(path, "load_labels");
  std::vector<std::string> lines;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= content.size(); ++i) {
    if (i == content.size() || content[i] == '\n') {
      lines.emplace_back(content.substr(start, i - start));
      start = i + 1;
    }
  }
  LoadedLabels out;
  out.labels = LabelSet(std::move(lines));
  out.duplicates_dropped = out.labels.duplicates_dropped();
  return out;
}

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("load_dataset: cannot open '" + path.string() +
                             "'");
  }
  std::vector<DatasetRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) {
      continue;
    }
    const nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw std::runtime_error("load_dataset: line " +
                               std::to_string(line_no) + " is not a JSON object");
    }
    if (!doc.contains("image") || !doc["image"].is_string()) {
      throw std::runtime_error("load_dataset: line " +
                               std::to_string(line_no) +
                               " is missing the \"image\" field");
    }
    if (!doc.contains("label") || !doc["label"].is_string()) {
      throw std::runtime_error("load_dataset: line " +
                               std::to_string(line_no) +
                               " is missing the \"label\" field");
    }
    DatasetRecord record;
    record.image_ref = doc["image"].get<std::string>();
    record.label = std::string(text::trim(doc["label"].get<std::string>()));
    if (record.label.empty()) {
      throw std::runtime_error("load_dataset: line " +
                               std::to_string(line_no) + " has an empty label");
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<DatasetRecord> filter_dataset(std::vector<DatasetRecord> records,
                                          const LabelSet& labels,
                                          MissingLabelPolicy policy) {
  std::unordered_set<std::string_view> known;
  known.reserve(labels.size());
  for (const std::string& label : labels) {
    known.insert(label);
  }
  std::vector<DatasetRecord> kept;
  kept.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (known.contains(records[i].label)) {
      kept.push_back(std::move(records[i]));
    } else if (policy == MissingLabelPolicy::kAbort) {
      throw std::runtime_error("filter_dataset: record " + std::to_string(i + 1) +
                               " has label '" + records[i].label +
                               "' which is not in the label set");
    }
  }
  return kept;
}

SimilarityMatrix load_similarity_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("load_similarity_matrix: cannot open '" +
                             path.string() + "'");
  }
  std::string header;
  if (!std::getline(in, header)) {
    throw std::runtime_error("load_similarity_matrix: '" + path.string() +
                             "' is empty");
  }
  std::vector<std::string> names;
  for (std::string& cell : split(header, ',')) {
    names.emplace_back(text::trim(cell));
  }
  LabelSet labels(names);
  if (labels.size() != names.size()) {
    throw std::runtime_error(
        "load_similarity_matrix: header labels must be unique and non-empty");
  }

  const std::size_t n = labels.size();
  std::vector<double> scores;
  scores.reserve(n * n);
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) {
      continue;
    }
    const std::vector<std::string> cells = split(line, ',');
    if (cells.size() != n) {
      throw std::runtime_error("load_similarity_matrix: line " +
                               std::to_string(line_no) + " has " +
                               std::to_string(cells.size()) +
                               " cells, expected " + std::to_string(n));
    }
    for (const std::string& cell : cells) {
      try {
        scores.push_back(std::stod(std::string(text::trim(cell))));
      } catch (const std::exception&) {
        throw std::runtime_error("load_similarity_matrix: line " +
                                 std::to_string(line_no) +
                                 " has a non-numeric cell '" + cell + "'");
      }
    }
  }
  if (scores.size() != n * n) {
    throw std::runtime_error(
        "load_similarity_matrix: expected a " + std::to_string(n) + "x" +
        std::to_string(n) + " matrix after the header");
  }
  return SimilarityMatrix(std::move(labels), std::move(scores));
}

void ExperimentSpec::validate() const {
  if (trials < 1) {
    throw std::invalid_argument("ExperimentSpec: trials must be >= 1");
  }
  if (label_space_sizes.empty()) {
    throw std::invalid_argument(
        "ExperimentSpec: label_space_sizes must not be empty");
  }
  for (const int n : label_space_sizes) {
    if (n < 1) {
      throw std::invalid_argument(
          "ExperimentSpec: label-space sizes must be >= 1");
    }
  }
  if (k_values.empty()) {
    throw std::invalid_argument("ExperimentSpec: k_values must not be empty");
  }
  for (const int k : k_values) {
    if (k < 2) {
      throw std::invalid_argument("ExperimentSpec: every K must be >= 2");
    }
  }
  if (backend != "oracle") {
    throw std::invalid_argument(
        "ExperimentSpec: desk-scale experiments require the oracle backend");
  }
  if (parallelism < 1) {
    throw std::invalid_argument("ExperimentSpec: parallelism must be >= 1");
  }
  if (kind == ExperimentKind::kGroupingAblation && sim_matrix_file.empty()) {
    throw std::invalid_argument(
        "ExperimentSpec: the grouping ablation needs sim_matrix_file");
  }
}

namespace {

ExperimentKind experiment_kind_from_string(std::string_view name) {
  if (name == "pclsr") return ExperimentKind::kPclsrSweep;
  if (name == "k_ablation") return ExperimentKind::kKAblation;
  if (name == "grouping") return ExperimentKind::kGroupingAblation;
  throw std::invalid_argument("unknown experiment kind '" +
                              std::string(name) + "'");
}

std::string experiment_kind_to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kPclsrSweep:
      return "pclsr";
    case ExperimentKind::kKAblation:
      return "k_ablation";
    case ExperimentKind::kGroupingAblation:
      return "grouping";
  }
  return "unknown";
}

ParseMode parse_mode_from_string(std::string_view name) {
  if (name == "strict") return ParseMode::kStrict;
  if (name == "normalized") return ParseMode::kNormalized;
  throw std::invalid_argument("unknown parse mode '" + std::string(name) +
                              "'");
}

nlohmann::json spec_to_canonical_json(const ExperimentSpec& spec) {
  nlohmann::json doc;
  doc["experiment"] = experiment_kind_to_string(spec.kind);
  doc["label_space_sizes"] = spec.label_space_sizes;
  doc["k_values"] = spec.k_values;
  doc["trials"] = spec.trials;
  doc["seed"] = spec.seed;
  doc["backend"] = spec.backend;
  doc["oracle"] = {{"delta", spec.oracle.delta},
                   {"p_none_when_absent", spec.oracle.p_none_when_absent},
                   {"latency_c0", spec.oracle.latency_c0},
                   {"latency_c2", spec.oracle.latency_c2}};
  doc["engine"] = {{"grouping", to_string(spec.grouping)},
                   {"parallelism", spec.parallelism},
                   {"parse_mode", spec.parse_mode == ParseMode::kStrict
                                      ? "strict"
                                      : "normalized"},
                   {"max_retries", spec.max_retries}};
  doc["labels_file"] = spec.labels_file;
  doc["sim_matrix"] = spec.sim_matrix_file;
  return doc;
}

}  // namespace

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  const std::string content = read_file(path, "load_experiment_spec");
  const nlohmann::json doc = nlohmann::json::parse(content, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw std::runtime_error("load_experiment_spec: '" + path.string() +
                             "' is not a JSON object");
  }

  ExperimentSpec spec;
  if (doc.contains("experiment")) {
    spec.kind = experiment_kind_from_string(doc["experiment"].get<std::string>());
  }
  if (doc.contains("label_space_sizes")) {
    spec.label_space_sizes = doc["label_space_sizes"].get<std::vector<int>>();
  }
  if (doc.contains("k_values")) {
    spec.k_values = doc["k_values"].get<std::vector<int>>();
  }
  if (doc.contains("trials")) spec.trials = doc["trials"].get<int>();
  if (doc.contains("seed")) spec.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("backend")) spec.backend = doc["backend"].get<std::string>();
  if (doc.contains("labels_file")) {
    spec.labels_file = doc["labels_file"].get<std::string>();
  }
  if (doc.contains("sim_matrix")) {
    spec.sim_matrix_file = doc["sim_matrix"].get<std::string>();
  }
  if (doc.contains("oracle")) {
    const nlohmann::json& oracle = doc["oracle"];
    if (oracle.contains("delta")) {
      spec.oracle.delta = oracle["delta"].get<double>();
    }
    if (oracle.contains("p_none_when_absent")) {
      spec.oracle.p_none_when_absent =
          oracle["p_none_when_absent"].get<double>();
    }
    if (oracle.contains("latency_c0")) {
      spec.oracle.latency_c0 = oracle["latency_c0"].get<double>();
    }
    if (oracle.contains("latency_c2")) {
      spec.oracle.latency_c2 = oracle["latency_c2"].get<double>();
    }
  }
  if (doc.contains("engine")) {
    const nlohmann::json& engine = doc["engine"];
    if (engine.contains("grouping")) {
      spec.grouping =
          grouping_strategy_from_string(engine["grouping"].get<std::string>());
    }
    if (engine.contains("parallelism")) {
      spec.parallelism = engine["parallelism"].get<int>();
    }
    if (engine.contains("parse_mode")) {
      spec.parse_mode =
          parse_mode_from_string(engine["parse_mode"].get<std::string>());
    }
    if (engine.contains("max_retries")) {
      spec.max_retries = engine["max_retries"].get<int>();
    }
  }
  spec.validate();
  return spec;
}

std::string config_hash(const ExperimentSpec& spec) {
  const std::string canonical = spec_to_canonical_json(spec).dump();
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(rng::fnv1a(canonical)));
  return buf;
}

LabelSet make_synthetic_labels(int count) {
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(count));
  char buf[32];
  for (int i = 1; i <= count; ++i) {
    std::snprintf(buf, sizeof(buf), "class_%05d", i);
    labels.emplace_back(buf);
  }
  return LabelSet(std::move(labels));
}

namespace {

struct CellStats {
  std::int64_t correct = 0;
  std::int64_t trials = 0;
  double calls = 0.0;
  double sim_s = 0.0;
  double wall_s = 0.0;

  void add(const RunTrace& trace, const std::string& truth) {
    if (trace.final.is_predicted() && trace.final.label == truth) {
      ++correct;
    }
    ++trials;
    calls += static_cast<double>(trace.total_calls);
    sim_s += trace.total_sim_s;
    wall_s += trace.total_wall_s;
  }

  EvalRow row(int n, int k, std::string method, std::string strategy) const {
    EvalRow out;
    out.n = n;
    out.k = k;
    out.method = std::move(method);
    out.strategy = std::move(strategy);
    const double denom = static_cast<double>(trials);
    out.accuracy = static_cast<double>(correct) / denom;
    out.mean_calls = calls / denom;
    out.mean_sim_latency_s = sim_s / denom;
    out.mean_wall_s = wall_s / denom;
    return out;
  }
};

LabelSet experiment_universe(const ExperimentSpec& spec) {
  if (!spec.sim_matrix_file.empty()) {
    SimilarityMatrix matrix = load_similarity_matrix(spec.sim_matrix_file);
    if (!spec.labels_file.empty()) {
      const LoadedLabels loaded = load_labels(spec.labels_file);
      if (loaded.labels.size() != matrix.labels().size()) {
        throw std::runtime_error(
            "experiment: labels file and similarity matrix disagree on the "
            "label count");
      }
      for (const std::string& label : loaded.labels) {
        if (!matrix.labels().contains(label)) {
          throw std::runtime_error(
              "experiment: similarity matrix is missing label '" + label +
              "'");
        }
      }
    }
    return matrix.labels();
  }
  if (!spec.labels_file.empty()) {
    return load_labels(spec.labels_file).labels;
  }
  int largest = 0;
  for (const int n : spec.label_space_sizes) {
    largest = std::max(largest, n);
  }
  return make_synthetic_labels(largest);
}

LabelSet sample_subset(const LabelSet& universe, int n, std::uint64_t seed) {
  if (static_cast<std::size_t>(n) > universe.size()) {
    throw std::runtime_error(
        "experiment: label-space size " + std::to_string(n) +
        " exceeds the universe of " + std::to_string(universe.size()) +
        " labels");
  }
  std::vector<std::string> order = universe.labels();
  std::mt19937_64 gen(seed);
  rng::shuffle(order, gen);
  order.resize(static_cast<std::size_t>(n));
  return LabelSet(std::move(order));
}

std::string trial_image_ref(int n, int trial) {
  return "synth://n=" + std::to_string(n) + "/trial=" + std::to_string(trial);
}

std::string trial_truth(const LabelSet& subset, std::uint64_t spec_seed,
                        int n, int trial) {
  std::mt19937_64 gen(rng::mix(spec_seed, rng::fnv1a("truth"),
                               rng::mix(static_cast<std::uint64_t>(n),
                                        static_cast<std::uint64_t>(trial))));
  return subset[rng::bounded(gen, subset.size())];
}

DilutionOracleParams oracle_params_for(const ExperimentSpec& spec,
                                       std::string truth, int n, int trial) {
  DilutionOracleParams params;
  params.true_label = std::move(truth);
  params.signal_boost_delta = spec.oracle.delta;
  params.p_none_when_absent = spec.oracle.p_none_when_absent;
  params.latency_c0 = spec.oracle.latency_c0;
  params.latency_c2 = spec.oracle.latency_c2;
  params.seed = rng::mix(spec.seed, rng::fnv1a("oracle"),
                         rng::mix(static_cast<std::uint64_t>(n),
                                  static_cast<std::uint64_t>(trial)));
  return params;
}

EngineConfig engine_config_for(const ExperimentSpec& spec, int k,
                               GroupingStrategy strategy,
                               std::shared_ptr<const SimilarityMatrix> sim) {
  EngineConfig config;
  config.k = GroupSize(k);
  config.grouping = strategy;
  config.grouping_seed = rng::mix(spec.seed, rng::fnv1a("grouping"));
  config.similarity = std::move(sim);
  config.parallelism = spec.parallelism;
  config.parse_policy = ParsePolicy(spec.parse_mode, spec.max_retries);
  return config;
}

}  // namespace

EvalReport run_pclsr_sweep(const ExperimentSpec& spec) {
  spec.validate();
  const LabelSet universe = experiment_universe(spec);

  EvalReport report;
  report.seed = spec.seed;
  report.trials = spec.trials;
  report.config_hash = config_hash(spec);

  for (const int n : spec.label_space_sizes) {
    const LabelSet subset = sample_subset(
        universe, n, rng::mix(spec.seed, rng::fnv1a("subset"),
                              static_cast<std::uint64_t>(n)));
    CellStats flat_stats;
    std::vector<CellStats> dci_stats(spec.k_values.size());

    for (int trial = 0; trial < spec.trials; ++trial) {
      const std::string truth = trial_truth(subset, spec.seed, n, trial);
      const std::string image = trial_image_ref(n, trial);
      DilutionOracle oracle(oracle_params_for(spec, truth, n, trial));

      const ParsePolicy policy(spec.parse_mode, spec.max_retries);
      flat_stats.add(flat_classify(image, subset, oracle, policy), truth);

      for (std::size_t ki = 0; ki < spec.k_values.size(); ++ki) {
        const EngineConfig config =
            engine_config_for(spec, spec.k_values[ki], spec.grouping, nullptr);
        dci_stats[ki].add(dci_classify(image, subset, config, oracle), truth);
      }
    }

    report.rows.push_back(flat_stats.row(n, n, "flat", "-"));
    for (std::size_t ki = 0; ki < spec.k_values.size(); ++ki) {
      report.rows.push_back(dci_stats[ki].row(n, spec.k_values[ki], "dci",
                                              to_string(spec.grouping)));
    }
  }
  return report;
}

EvalReport run_k_ablation(const ExperimentSpec& spec) {
  spec.validate();
  const LabelSet universe = experiment_universe(spec);
  const int n = spec.label_space_sizes.front();
  const LabelSet subset = sample_subset(
      universe, n, rng::mix(spec.seed, rng::fnv1a("subset"),
                            static_cast<std::uint64_t>(n)));

  EvalReport report;
  report.seed = spec.seed;
  report.trials = spec.trials;
  report.config_hash = config_hash(spec);

  CellStats flat_stats;
  std::vector<CellStats> dci_stats(spec.k_values.size());

  for (int trial = 0; trial < spec.trials; ++trial) {
    const std::string truth = trial_truth(subset, spec.seed, n, trial);
    const std::string image = trial_image_ref(n, trial);
    DilutionOracle oracle(oracle_params_for(spec, truth, n, trial));

    const ParsePolicy policy(spec.parse_mode, spec.max_retries);
    flat_stats.add(flat_classify(image, subset, oracle, policy), truth);

    for (std::size_t ki = 0; ki < spec.k_values.size(); ++ki) {
      const EngineConfig config =
          engine_config_for(spec, spec.k_values[ki], spec.grouping, nullptr);
      dci_stats[ki].add(dci_classify(image, subset, config, oracle), truth);
    }
  }

  report.rows.push_back(flat_stats.row(n, n, "flat", "-"));
  for (std::size_t ki = 0; ki < spec.k_values.size(); ++ki) {
    report.rows.push_back(dci_stats[ki].row(n, spec.k_values[ki], "dci",
                                            to_string(spec.grouping)));
  }
  return report;
}

EvalReport run_grouping_ablation(const ExperimentSpec& spec) {
  spec.validate();
  const auto matrix = std::make_shared<const SimilarityMatrix>(
      load_similarity_matrix(spec.sim_matrix_file));
  const LabelSet universe = experiment_universe(spec);
  const int n = spec.label_space_sizes.front();
  const int k = spec.k_values.front();
  const LabelSet subset = sample_subset(
      universe, n, rng::mix(spec.seed, rng::fnv1a("subset"),
                            static_cast<std::uint64_t>(n)));

  EvalReport report;
  report.seed = spec.seed;
  report.trials = spec.trials;
  report.config_hash = config_hash(spec);

  constexpr GroupingStrategy kStrategies[] = {GroupingStrategy::kRandom,
                                              GroupingStrategy::kMostSimilar,
                                              GroupingStrategy::kLeastSimilar};
  CellStats stats[3];

  for (int trial = 0; trial < spec.trials; ++trial) {
    const std::string truth = trial_truth(subset, spec.seed, n, trial);
    const std::string image = trial_image_ref(n, trial);
    DilutionOracle oracle(oracle_params_for(spec, truth, n, trial));

    for (int s = 0; s < 3; ++s) {
      const EngineConfig config =
          engine_config_for(spec, k, kStrategies[s], matrix);
      stats[s].add(dci_classify(image, subset, config, oracle), truth);
    }
  }

  for (int s = 0; s < 3; ++s) {
    report.rows.push_back(
        stats[s].row(n, k, "dci", to_string(kStrategies[s])));
  }
  return report;
}

EvalReport run_experiment(const ExperimentSpec& spec) {
  switch (spec.kind) {
    case ExperimentKind::kPclsrSweep:
      return run_pclsr_sweep(spec);
    case ExperimentKind::kKAblation:
      return run_k_ablation(spec);
    case ExperimentKind::kGroupingAblation:
      return run_grouping_ablation(spec);
  }
  throw std::logic_error("run_experiment: unhandled experiment kind");
}

EvalReport run_dataset_eval(const std::vector<DatasetRecord>& records,
                            const LabelSet& labels, const EngineConfig& config,
                            Backend& backend, bool include_flat_baseline) {
  if (records.empty()) {
    throw std::invalid_argument("run_dataset_eval: no records to evaluate");
  }
  EvalReport report;
  report.trials = static_cast<int>(records.size());

  CellStats dci_stats;
  CellStats flat_stats;
  for (const DatasetRecord& record : records) {
    dci_stats.add(dci_classify(record.image_ref, labels, config, backend),
                  record.label);
    if (include_flat_baseline) {
      flat_stats.add(
          flat_classify(record.image_ref, labels, backend, config.parse_policy,
                        config.prompt_template),
          record.label);
    }
  }

  const int n = static_cast<int>(labels.size());
  if (include_flat_baseline) {
    report.rows.push_back(flat_stats.row(n, n, "flat", "-"));
  }
  report.rows.push_back(
      dci_stats.row(n, config.k.value(), "dci", to_string(config.grouping)));
  return report;
}

std::string report_to_csv(const EvalReport& report) {
  std::string out = "# config_hash=" + report.config_hash + "\n";
  out +=
      "n,k,method,strategy,accuracy_pct,mean_calls,mean_sim_latency_s,"
      "mean_wall_s\n";
  char buf[256];
  for (const EvalRow& row : report.rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%s,%s,%.4f,%.4f,%.4f,%.4f\n",
                  row.n, row.k, row.method.c_str(), row.strategy.c_str(),
                  row.accuracy * 100.0, row.mean_calls,
                  row.mean_sim_latency_s, row.mean_wall_s);
    out += buf;
  }
  return out;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["metadata"] = {{"seed", report.seed},
                     {"trials", report.trials},
                     {"config_hash", report.config_hash}};
  nlohmann::json rows = nlohmann::json::array();
  for (const EvalRow& row : report.rows) {
    rows.push_back({{"n", row.n},
                    {"k", row.k},
                    {"method", row.method},
                    {"strategy", row.strategy},
                    {"accuracy", row.accuracy},
                    {"mean_calls", row.mean_calls},
                    {"mean_sim_latency_s", row.mean_sim_latency_s},
                    {"mean_wall_s", row.mean_wall_s}});
  }
  doc["rows"] = std::move(rows);
  return doc.dump(2);
}

void emit_report(const EvalReport& report, ReportFormat format,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("emit_report: cannot write '" + path.string() +
                             "'");
  }
  out << (format == ReportFormat::kCsv ? report_to_csv(report)
                                       : report_to_json(report));
  if (!out) {
    throw std::runtime_error("emit_report: write to '" + path.string() +
                             "' failed");
  }
}

EvalReport load_report_json(const std::filesystem::path& path) {
  const std::string content = read_file(path, "load_report_json");
  const nlohmann::json doc = nlohmann::json::parse(content, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw std::runtime_error("load_report_json: '" + path.string() +
                             "' is not a JSON object");
  }
  EvalReport report;
  const nlohmann::json& metadata = doc.at("metadata");
  report.seed = metadata.at("seed").get<std::uint64_t>();
  report.trials = metadata.at("trials").get<int>();
  report.config_hash = metadata.at("config_hash").get<std::string>();
  for (const nlohmann::json& row : doc.at("rows")) {
    EvalRow out;
    out.n = row.at("n").get<int>();
    out.k = row.at("k").get<int>();
    out.method = row.at("method").get<std::string>();
    out.strategy = row.at("strategy").get<std::string>();
    out.accuracy = row.at("accuracy").get<double>();
    out.mean_calls = row.at("mean_calls").get<double>();
    out.mean_sim_latency_s = row.at("mean_sim_latency_s").get<double>();
    out.mean_wall_s = row.at("mean_wall_s").get<double>();
    report.rows.push_back(std::move(out));
  }
  return report;
}

ToolConfig load_tool_config(const std::filesystem::path& path) {
  const std::string content = read_file(path, "load_tool_config");
  const nlohmann::json doc = nlohmann::json::parse(content, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw std::runtime_error("load_tool_config: '" + path.string() +
                             "' is not a JSON object");
  }

  ToolConfig config;
  if (doc.contains("engine")) {
    const nlohmann::json& engine = doc["engine"];
    if (engine.contains("k")) config.k = engine["k"].get<int>();
    if (engine.contains("parallelism")) {
      config.parallelism = engine["parallelism"].get<int>();
    }
    if (engine.contains("parse_mode")) {
      config.parse_mode = engine["parse_mode"].get<std::string>();
    }
    if (engine.contains("max_retries")) {
      config.max_retries = engine["max_retries"].get<int>();
    }
    if (engine.contains("max_depth")) {
      config.max_depth = engine["max_depth"].get<int>();
    }
    if (engine.contains("prompt_template")) {
      config.prompt_template_file = engine["prompt_template"].get<std::string>();
    }
  }
  if (doc.contains("grouping")) {
    const nlohmann::json& grouping = doc["grouping"];
    if (grouping.contains("strategy")) {
      config.grouping = grouping["strategy"].get<std::string>();
    }
    if (grouping.contains("seed")) {
      config.grouping_seed = grouping["seed"].get<std::uint64_t>();
    }
    if (grouping.contains("sim_matrix")) {
      config.sim_matrix_file = grouping["sim_matrix"].get<std::string>();
    }
  }
  if (doc.contains("backend")) {
    const nlohmann::json& backend = doc["backend"];
    if (backend.contains("kind")) {
      config.backend_kind = backend["kind"].get<std::string>();
    }
    if (backend.contains("base_url")) {
      config.http.base_url = backend["base_url"].get<std::string>();
    }
    if (backend.contains("chat_path")) {
      config.http.chat_path = backend["chat_path"].get<std::string>();
    }
    if (backend.contains("model")) {
      config.http.model = backend["model"].get<std::string>();
    }
    if (backend.contains("api_key_env")) {
      config.http.api_key_env = backend["api_key_env"].get<std::string>();
    }
    if (backend.contains("timeout_s")) {
      config.http.timeout_s = backend["timeout_s"].get<double>();
    }
    if (backend.contains("max_attempts")) {
      config.http.max_attempts = backend["max_attempts"].get<int>();
    }
    if (backend.contains("backoff_base_s")) {
      config.http.backoff_base_s = backend["backoff_base_s"].get<double>();
    }
    if (backend.contains("max_in_flight")) {
      config.http.max_in_flight = backend["max_in_flight"].get<int>();
    }
    if (backend.contains("temperature")) {
      config.http.temperature = backend["temperature"].get<double>();
    }
  }
  if (doc.contains("oracle")) {
    const nlohmann::json& oracle = doc["oracle"];
    if (oracle.contains("true_label")) {
      config.true_label = oracle["true_label"].get<std::string>();
    }
    if (oracle.contains("delta")) {
      config.oracle_delta = oracle["delta"].get<double>();
    }
    if (oracle.contains("p_none_when_absent")) {
      config.oracle_p_none = oracle["p_none_when_absent"].get<double>();
    }
    if (oracle.contains("latency_c0")) {
      config.oracle_latency_c0 = oracle["latency_c0"].get<double>();
    }
    if (oracle.contains("latency_c2")) {
      config.oracle_latency_c2 = oracle["latency_c2"].get<double>();
    }
    if (oracle.contains("seed")) {
      config.oracle_seed = oracle["seed"].get<std::uint64_t>();
    }
  }
  if (doc.contains("cost_model")) {
    const nlohmann::json& cost = doc["cost_model"];
    if (cost.contains("c0")) config.cost_c0 = cost["c0"].get<double>();
    if (cost.contains("c2")) config.cost_c2 = cost["c2"].get<double>();
  }
  return config;
}

}  // namespace dci::harness
