#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dci::analysis {

enum class LogBase { kNatural, kBase2 };

/// Parameters of the information-theoretic calculators. `label_space_size`
/// is the number of candidate categories a flat prompt carries; `beta` the
/// dispersion constant of the label prior (p_max <= beta / K, beta >= 1);
/// `i_max` the attention-bandwidth information cap; `w_bandwidth` the
/// channel bandwidth of the capacity bound.
struct TheoryParams {
  int label_space_size = 2;
  double beta = 1.0;
  double i_max = 0.0;
  double w_bandwidth = 1.0;
  LogBase log_base = LogBase::kNatural;

  void validate() const;
};

/// Entropy demand of a dispersed label prior: log K - log beta.
double entropy_demand(const TheoryParams& p);

/// Effective attention SNR of a k-candidate prompt: 1 / (k - 1). k >= 2.
double attention_snr(int group_size);

/// Shannon-Hartley style capacity cap in bits: w * log2(1 + 1/(k-1)).
double capacity_bound(double bandwidth, int group_size);

/// Fano lower bound on the error probability of flat classification:
/// max(0, 1 - (i_max + log(2 beta)) / log K).
double fano_error_bound(const TheoryParams& p);

struct DilutionStats {
  double mean = 0.0;
  double variance = 0.0;
};

/// Empirical mean/variance of the softmax weight of a fixed index when all
/// k logits are i.i.d. uniform on [0, 1]. The mean is exactly 1/k by
/// symmetry; the sampler exists to certify the O(1/k) dilution numerically.
DilutionStats dilution_monte_carlo(int group_size, std::int64_t trials,
                                   std::uint64_t seed);

/// Cost-model inputs: N candidates split into groups of k, with per-call
/// latency L(x) = c0 + c2 * x^2 for a context of x labels.
struct CostParams {
  std::int64_t total_labels = 1;
  int group_size = 2;
  double c0 = 0.0;
  double c2 = 1.0;

  void validate() const;
};

/// L(x) = c0 + c2 * x^2.
double unit_latency(const CostParams& p, std::int64_t context_len);

/// Exact evaluation of the recursive cost: T(n) = L(n) for n <= k, else
/// ceil(n/k) * L(k) + T(ceil(n/k)).
double cost_recurrence(const CostParams& p);

/// Closed-form sequential cost (N/K + log_K N - 1) * L(K).
double cost_closed_form(const CostParams& p);

/// Ideal fully-parallel cost (log_K N) * L(K).
double cost_closed_form_parallel(const CostParams& p);

/// Flat single-pass cost over the whole label list: c0 + c2 * N^2.
double flat_cost(const CostParams& p);

/// Smallest integer m with k^m >= n (0 for n <= 1).
std::int64_t ceil_log(std::int64_t n, int k);

/// log_K N as a double; exact when n is an integer power of k.
double log_base_k(std::int64_t n, int k);

/// Worst-case model calls for one run: 1 when n <= k, else
/// n/(k-1) + ceil(log_k n).
double worst_case_calls(std::int64_t n, int k);

/// Best-case calls under ideal pruning: ceil(n/k).
std::int64_t best_case_calls(std::int64_t n, int k);

/// Calls when every group survives every round: sum of the layered
/// ceilings ceil(n/k), ceil(ceil(n/k)/k), ... plus the final base call.
std::int64_t exact_all_survive_calls(std::int64_t n, int k);

struct CostRow {
  std::int64_t n = 0;
  int k = 0;
  double cost = 0.0;
  double flat = 0.0;
  bool in_region = false;
};

struct CostReport {
  std::string formula;  // "sequential" or "parallel"
  double c0 = 0.0;
  double c2 = 1.0;
  std::vector<CostRow> rows;
};

/// Evaluates the closed-form cost over an (n, k) grid; `in_region` marks
/// points strictly below the flat baseline. Pairs with k > n degrade to a
/// flat single call and are marked accordingly.
CostReport cost_grid(const std::vector<std::int64_t>& n_values,
                     const std::vector<int>& k_values, double c0, double c2,
                     bool parallel = false);

/// Group sizes from `k_values` whose modeled cost beats flat inference at n.
std::vector<int> advantage_region(std::int64_t n,
                                  const std::vector<int>& k_values, double c0,
                                  double c2);

struct BoundsRow {
  std::int64_t n = 0;
  int k = 0;
  std::int64_t best = 0;
  std::int64_t exact_all_survive = 0;
  double worst = 0.0;
};

struct BoundsReport {
  std::vector<BoundsRow> rows;
};

BoundsReport bounds_grid(const std::vector<std::int64_t>& n_values,
                         const std::vector<int>& k_values);

/// CSV with the fixed column order n,k,cost,flat_cost,in_region.
std::string cost_report_csv(const CostReport& report);
std::string cost_report_json(const CostReport& report);

std::string bounds_report_csv(const BoundsReport& report);
std::string bounds_report_json(const BoundsReport& report);

}  // namespace dci::analysis
