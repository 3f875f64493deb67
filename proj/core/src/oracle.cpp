#include "dci/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "dci/rng.hpp"

namespace dci {

void DilutionOracleParams::validate() const {
  if (signal_boost_delta < 0.0) {
    throw std::invalid_argument("oracle: signal_boost_delta must be >= 0");
  }
  if (p_none_when_absent < 0.0 || p_none_when_absent > 1.0) {
    throw std::invalid_argument("oracle: p_none_when_absent must be in [0, 1]");
  }
  if (latency_c0 < 0.0 || latency_c2 < 0.0) {
    throw std::invalid_argument("oracle: latency coefficients must be >= 0");
  }
}

double oracle_latency(const DilutionOracleParams& params, int group_size) {
  const double k = static_cast<double>(group_size);
  return params.latency_c0 + params.latency_c2 * k * k;
}

namespace {

constexpr std::string_view kSeedDomain = "dci-oracle-v1";
constexpr char kSep = '\x1f';

std::mt19937_64 generator_for(const DilutionOracleParams& params,
                              const std::vector<const std::string*>& sorted,
                              std::string_view image_ref, int iteration,
                              int group_index) {
  std::uint64_t h = rng::fnv1a(kSeedDomain);
  h = rng::fnv1a_u64(params.seed, h);
  h = rng::fnv1a(image_ref, h);
  h = rng::fnv1a(std::string_view(&kSep, 1), h);
  h = rng::fnv1a_u64(static_cast<std::uint64_t>(iteration), h);
  h = rng::fnv1a_u64(static_cast<std::uint64_t>(group_index), h);
  for (const std::string* label : sorted) {
    h = rng::fnv1a(*label, h);
    h = rng::fnv1a(std::string_view(&kSep, 1), h);
  }
  return std::mt19937_64(h);
}

}  // namespace

std::string oracle_answer(const DilutionOracleParams& params,
                          const LabelSet& group, std::string_view image_ref,
                          int iteration, int group_index) {
  if (group.empty()) {
    throw std::invalid_argument("oracle_answer: group is empty");
  }
  params.validate();

  // Sample over the sorted group so the in-group order cannot matter.
  std::vector<const std::string*> sorted;
  sorted.reserve(group.size());
  for (const std::string& label : group) {
    sorted.push_back(&label);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const std::string* a, const std::string* b) { return *a < *b; });

  std::mt19937_64 gen =
      generator_for(params, sorted, image_ref, iteration, group_index);

  std::ptrdiff_t true_pos = -1;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (*sorted[i] == params.true_label) {
      true_pos = static_cast<std::ptrdiff_t>(i);
      break;
    }
  }

  const std::size_t k = sorted.size();
  const double u = rng::uniform01(gen);

  if (true_pos >= 0) {
    if (k == 1) {
      return *sorted[0];
    }
    // p_true = e^d / (e^d + k - 1), evaluated as 1 / (1 + (k-1) e^{-d})
    // so it stays finite for arbitrarily large delta.
    const double distractors = static_cast<double>(k - 1);
    const double p_true =
        1.0 / (1.0 + distractors * std::exp(-params.signal_boost_delta));
    if (u < p_true) {
      return *sorted[static_cast<std::size_t>(true_pos)];
    }
    // Map the remaining mass uniformly over the distractors.
    const double rescaled = (u - p_true) / (1.0 - p_true);
    std::size_t pick = std::min(
        static_cast<std::size_t>(rescaled * distractors), k - 2);
    // Skip over the true label's slot.
    if (pick >= static_cast<std::size_t>(true_pos)) {
      ++pick;
    }
    return *sorted[pick];
  }

  if (u < params.p_none_when_absent) {
    return "None";
  }
  const std::size_t pick = rng::bounded(gen, k);
  return *sorted[pick];
}

DilutionOracle::DilutionOracle(DilutionOracleParams params)
    : params_(std::move(params)) {
  params_.validate();
}

BackendResult DilutionOracle::infer(const Query& query) {
  BackendResult result;
  result.raw_text = oracle_answer(params_, query.group, query.image_ref,
                                  query.iteration, query.group_index);
  result.latency_s =
      oracle_latency(params_, static_cast<int>(query.group.size()));
  result.token_estimate = query.prompt.size() / 4;
  return result;
}

}  // namespace dci
