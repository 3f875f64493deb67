#pragma once

#include <cstdint>
#include <string>

#include "dci/backend.hpp"
#include "dci/label_space.hpp"

namespace dci {

/// Parameters of the simulated attention-dilution backend.
///
/// When the true label is present in a queried group of size k, the oracle
/// samples an answer from a softmax over logits {delta for the true label,
/// 0 for every distractor}, so the true label is chosen with probability
/// e^delta / (e^delta + k - 1). When it is absent, the group answers "None"
/// with probability p_none_when_absent and a uniform distractor otherwise.
struct DilutionOracleParams {
  std::string true_label;
  double signal_boost_delta = 0.0;
  double p_none_when_absent = 1.0;
  double latency_c0 = 0.0;
  double latency_c2 = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Simulated per-call latency: c0 + c2 * k^2.
double oracle_latency(const DilutionOracleParams& params, int group_size);

/// Deterministic sampled answer for one query identity.
///
/// Randomness derives from (seed, image_ref, iteration, group_index, sorted
/// group contents) only, so the answer is independent of scheduling order
/// and of the in-group label order.
std::string oracle_answer(const DilutionOracleParams& params,
                          const LabelSet& group, std::string_view image_ref,
                          int iteration, int group_index);

/// Backend wrapper around oracle_answer/oracle_latency. Pure function of the
/// query identity; lock-free and safe for concurrent use.
class DilutionOracle final : public Backend {
 public:
  explicit DilutionOracle(DilutionOracleParams params);

  BackendResult infer(const Query& query) override;

  const DilutionOracleParams& params() const noexcept { return params_; }

 private:
  DilutionOracleParams params_;
};

}  // namespace dci
