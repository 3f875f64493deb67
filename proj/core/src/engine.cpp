#include "dci/engine.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <future>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

namespace dci {

const char* to_string(GroupingStrategy strategy) {
  switch (strategy) {
    case GroupingStrategy::kSequential:
      return "sequential";
    case GroupingStrategy::kRandom:
      return "random";
    case GroupingStrategy::kMostSimilar:
      return "most_similar";
    case GroupingStrategy::kLeastSimilar:
      return "least_similar";
  }
  return "unknown";
}

GroupingStrategy grouping_strategy_from_string(std::string_view name) {
  if (name == "sequential") return GroupingStrategy::kSequential;
  if (name == "random") return GroupingStrategy::kRandom;
  if (name == "most_similar") return GroupingStrategy::kMostSimilar;
  if (name == "least_similar") return GroupingStrategy::kLeastSimilar;
  throw std::invalid_argument("unknown grouping strategy '" +
                              std::string(name) + "'");
}

void EngineConfig::validate() const {
  if (parallelism < 1) {
    throw std::invalid_argument("EngineConfig: parallelism must be >= 1");
  }
  if (max_depth_override && *max_depth_override < 1) {
    throw std::invalid_argument(
        "EngineConfig: max_depth_override must be >= 1");
  }
  if ((grouping == GroupingStrategy::kMostSimilar ||
       grouping == GroupingStrategy::kLeastSimilar) &&
      !similarity) {
    throw std::invalid_argument(
        "EngineConfig: similarity strategies need a similarity matrix");
  }
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

GroupQueryResult resolve_group_query(Backend& backend, const Query& query,
                                     const ParsePolicy& policy) {
  GroupQueryResult result;
  const int attempts = policy.max_retries + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    const BackendResult reply = backend.infer(query);
    result.calls += 1;
    result.sim_latency_s += reply.latency_s;
    result.raw_response = reply.raw_text;
    result.outcome = parse_response(reply.raw_text, query.group, policy);
    if (!result.outcome.is_invalid()) {
      return result;
    }
  }
  // Retries exhausted: prune conservatively instead of letting garbage
  // survive into the next round. The raw reply stays in the trace.
  result.outcome = InferenceOutcome::none();
  return result;
}

Partition make_partition(const EngineConfig& config, const LabelSet& labels) {
  switch (config.grouping) {
    case GroupingStrategy::kSequential:
      return partition_sequential(labels, config.k);
    case GroupingStrategy::kRandom:
      return group_random(labels, config.k, config.grouping_seed);
    case GroupingStrategy::kMostSimilar:
      return group_most_similar(labels, config.k,
                                config.similarity->restricted_to(labels));
    case GroupingStrategy::kLeastSimilar:
      return group_least_similar(labels, config.k,
                                 config.similarity->restricted_to(labels));
  }
  throw std::logic_error("make_partition: unhandled strategy");
}

std::vector<Query> make_queries(const std::string& image_ref,
                                const Partition& partition, int iteration,
                                const PromptTemplate& prompt_template) {
  std::vector<Query> queries;
  queries.reserve(partition.groups.size());
  for (std::size_t i = 0; i < partition.groups.size(); ++i) {
    Query q;
    q.image_ref = image_ref;
    q.group = partition.groups[i];
    q.iteration = iteration;
    q.group_index = static_cast<int>(i) + 1;
    q.prompt = build_prompt(prompt_template, q.group);
    queries.push_back(std::move(q));
  }
  return queries;
}

LabelSet collect_survivors(const std::vector<GroupQueryResult>& results) {
  std::vector<std::string> matched;
  for (const GroupQueryResult& r : results) {
    if (r.outcome.is_match()) {
      matched.push_back(r.outcome.label());
    }
  }
  return LabelSet(std::move(matched));  // the constructor deduplicates
}

IterationRecord make_record(int t, LabelSet input, Partition partition,
                            ConquerOutput& conquer, double wall_s) {
  IterationRecord record;
  record.t = t;
  record.input_set = std::move(input);
  record.partition = std::move(partition);
  record.survivors = collect_survivors(conquer.results);
  record.outcomes.reserve(conquer.results.size());
  record.raw_responses.reserve(conquer.results.size());
  for (GroupQueryResult& r : conquer.results) {
    record.calls_made += r.calls;
    record.outcomes.push_back(std::move(r.outcome));
    record.raw_responses.push_back(std::move(r.raw_response));
  }
  record.wall_time_s = wall_s;
  record.simulated_time_s = conquer.simulated_time_s;
  return record;
}

void append_record(RunTrace& trace, IterationRecord record) {
  trace.total_calls += record.calls_made;
  trace.total_wall_s += record.wall_time_s;
  trace.total_sim_s += record.simulated_time_s;
  trace.iterations.push_back(std::move(record));
}

}  // namespace

ConquerOutput run_parallel_conquer(const std::vector<Query>& queries,
                                   int parallelism, Backend& backend,
                                   const ParsePolicy& policy) {
  if (parallelism < 1) {
    throw std::invalid_argument("run_parallel_conquer: parallelism must be >= 1");
  }

  ConquerOutput output;
  output.results.resize(queries.size());

  const std::size_t stride = static_cast<std::size_t>(parallelism);
  std::exception_ptr failure;
  std::size_t failure_index = 0;

  for (std::size_t wave = 0; wave < queries.size() && !failure;
       wave += stride) {
    const std::size_t wave_end = std::min(queries.size(), wave + stride);

    if (wave_end - wave == 1) {
      try {
        output.results[wave] = resolve_group_query(backend, queries[wave], policy);
      } catch (...) {
        failure = std::current_exception();
        failure_index = wave;
      }
    } else {
      std::vector<std::future<GroupQueryResult>> inflight;
      inflight.reserve(wave_end - wave);
      for (std::size_t i = wave; i < wave_end; ++i) {
        inflight.push_back(std::async(std::launch::async, [&, i] {
          return resolve_group_query(backend, queries[i], policy);
        }));
      }
      // Let the whole wave settle before propagating anything.
      for (std::size_t i = wave; i < wave_end; ++i) {
        try {
          output.results[i] = inflight[i - wave].get();
        } catch (...) {
          if (!failure || i < failure_index) {
            failure = std::current_exception();
            failure_index = i;
          }
        }
      }
    }

    double wave_sim = 0.0;
    for (std::size_t i = wave; i < wave_end; ++i) {
      wave_sim = std::max(wave_sim, output.results[i].sim_latency_s);
    }
    output.simulated_time_s += wave_sim;
  }

  if (failure) {
    std::rethrow_exception(failure);
  }
  return output;
}

RunTrace dci_classify(const std::string& image_ref, const LabelSet& labels,
                      const EngineConfig& config, Backend& backend) {
  config.validate();
  if (labels.empty()) {
    throw std::invalid_argument("dci_classify: label set is empty");
  }

  RunTrace trace;
  LabelSet current = labels;
  const std::size_t group_size = static_cast<std::size_t>(config.k.value());

  for (int t = 1;; ++t) {
    if (config.max_depth_override && t > *config.max_depth_override) {
      throw EngineError(
          "dci_classify: exceeded max_depth_override = " +
              std::to_string(*config.max_depth_override) +
              " at iteration " + std::to_string(t),
          std::move(trace));
    }

    const bool base_case = current.size() <= group_size;
    Partition partition;
    if (base_case) {
      partition.source_size = current.size();
      partition.groups.push_back(current);
    } else {
      partition = make_partition(config, current);
    }

    const std::vector<Query> queries =
        make_queries(image_ref, partition, t, config.prompt_template);

    const auto started = Clock::now();
    ConquerOutput conquer;
    try {
      conquer = run_parallel_conquer(queries, config.parallelism, backend,
                                     config.parse_policy);
    } catch (const std::exception& e) {
      throw EngineError(std::string("dci_classify: backend failure at "
                                    "iteration ") +
                            std::to_string(t) + ": " + e.what(),
                        std::move(trace));
    }
    const double wall_s = seconds_since(started);

    IterationRecord record =
        make_record(t, std::move(current), std::move(partition), conquer, wall_s);
    const LabelSet survivors = record.survivors;
    const InferenceOutcome first_outcome = record.outcomes.front();
    append_record(trace, std::move(record));

    if (base_case) {
      trace.final = first_outcome.is_match()
                        ? FinalPrediction::predicted(first_outcome.label())
                        : FinalPrediction::none();
      return trace;
    }
    if (survivors.empty()) {
      trace.final = FinalPrediction::none();
      return trace;
    }
    if (survivors.size() == 1) {
      trace.final = FinalPrediction::predicted(survivors[0]);
      return trace;
    }
    current = survivors;
  }
}

RunTrace flat_classify(const std::string& image_ref, const LabelSet& labels,
                       Backend& backend, const ParsePolicy& policy,
                       const PromptTemplate& prompt_template) {
  if (labels.empty()) {
    throw std::invalid_argument("flat_classify: label set is empty");
  }

  RunTrace trace;
  Partition partition;
  partition.source_size = labels.size();
  partition.groups.push_back(labels);

  const std::vector<Query> queries =
      make_queries(image_ref, partition, 1, prompt_template);

  const auto started = Clock::now();
  ConquerOutput conquer;
  try {
    conquer = run_parallel_conquer(queries, 1, backend, policy);
  } catch (const std::exception& e) {
    throw EngineError(std::string("flat_classify: backend failure: ") +
                          e.what(),
                      std::move(trace));
  }
  const double wall_s = seconds_since(started);

  IterationRecord record =
      make_record(1, labels, std::move(partition), conquer, wall_s);
  const InferenceOutcome outcome = record.outcomes.front();
  append_record(trace, std::move(record));

  trace.final = outcome.is_match()
                    ? FinalPrediction::predicted(outcome.label())
                    : FinalPrediction::none();
  return trace;
}

namespace {

nlohmann::json outcome_to_json(const InferenceOutcome& outcome) {
  switch (outcome.kind()) {
    case OutcomeKind::kMatch:
      return {{"kind", "match"}, {"label", outcome.label()}};
    case OutcomeKind::kNoneAnswer:
      return {{"kind", "none"}};
    case OutcomeKind::kInvalid:
      return {{"kind", "invalid"}, {"raw", outcome.raw_text()}};
  }
  return {};
}

}  // namespace

std::string trace_to_json(const RunTrace& trace,
                          const TraceJsonOptions& options) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  if (trace.final.is_predicted()) {
    doc["final"] = {{"kind", "predicted"}, {"label", trace.final.label}};
  } else {
    doc["final"] = {{"kind", "none"}};
  }
  doc["total_calls"] = trace.total_calls;
  if (options.include_wall) {
    doc["total_wall_s"] = trace.total_wall_s;
  }
  if (options.include_sim) {
    doc["total_sim_s"] = trace.total_sim_s;
  }

  nlohmann::json iterations = nlohmann::json::array();
  for (const IterationRecord& record : trace.iterations) {
    nlohmann::json it;
    it["t"] = record.t;
    it["input"] = record.input_set.labels();
    nlohmann::json groups = nlohmann::json::array();
    for (const LabelSet& group : record.partition.groups) {
      groups.push_back(group.labels());
    }
    it["groups"] = std::move(groups);
    nlohmann::json outcomes = nlohmann::json::array();
    for (const InferenceOutcome& outcome : record.outcomes) {
      outcomes.push_back(outcome_to_json(outcome));
    }
    it["outcomes"] = std::move(outcomes);
    it["raw_responses"] = record.raw_responses;
    it["survivors"] = record.survivors.labels();
    it["calls_made"] = record.calls_made;
    if (options.include_wall) {
      it["wall_time_s"] = record.wall_time_s;
    }
    if (options.include_sim) {
      it["simulated_time_s"] = record.simulated_time_s;
    }
    iterations.push_back(std::move(it));
  }
  doc["iterations"] = std::move(iterations);

  return options.indent >= 0 ? doc.dump(options.indent) : doc.dump();
}

}  // namespace dci
