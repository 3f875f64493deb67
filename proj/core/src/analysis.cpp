#include "dci/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "dci/rng.hpp"

namespace dci::analysis {

namespace {

double log_in_base(double x, LogBase base) {
  return base == LogBase::kNatural ? std::log(x) : std::log2(x);
}

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

void TheoryParams::validate() const {
  require(label_space_size >= 2, "TheoryParams: label_space_size must be >= 2");
  require(beta >= 1.0, "TheoryParams: beta must be >= 1");
  require(i_max >= 0.0, "TheoryParams: i_max must be >= 0");
  require(w_bandwidth > 0.0, "TheoryParams: w_bandwidth must be > 0");
}

double entropy_demand(const TheoryParams& p) {
  p.validate();
  return log_in_base(static_cast<double>(p.label_space_size), p.log_base) -
         log_in_base(p.beta, p.log_base);
}

double attention_snr(int group_size) {
  require(group_size >= 2, "attention_snr: group size must be >= 2");
  return 1.0 / (static_cast<double>(group_size) - 1.0);
}

double capacity_bound(double bandwidth, int group_size) {
  require(bandwidth > 0.0, "capacity_bound: bandwidth must be > 0");
  return bandwidth * std::log2(1.0 + attention_snr(group_size));
}

double fano_error_bound(const TheoryParams& p) {
  p.validate();
  const double demand =
      log_in_base(static_cast<double>(p.label_space_size), p.log_base);
  const double supply = p.i_max + log_in_base(2.0 * p.beta, p.log_base);
  return std::max(0.0, 1.0 - supply / demand);
}

DilutionStats dilution_monte_carlo(int group_size, std::int64_t trials,
                                   std::uint64_t seed) {
  require(group_size >= 1, "dilution_monte_carlo: group size must be >= 1");
  require(trials >= 1, "dilution_monte_carlo: trials must be >= 1");

  std::mt19937_64 gen(seed);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::int64_t t = 0; t < trials; ++t) {
    double tracked = 0.0;
    double total = 0.0;
    for (int i = 0; i < group_size; ++i) {
      const double weight = std::exp(rng::uniform01(gen));
      if (i == 0) tracked = weight;
      total += weight;
    }
    const double alpha = tracked / total;
    const double delta = alpha - mean;
    mean += delta / static_cast<double>(t + 1);
    m2 += delta * (alpha - mean);
  }
  DilutionStats stats;
  stats.mean = mean;
  stats.variance = trials > 1 ? m2 / static_cast<double>(trials - 1) : 0.0;
  return stats;
}

void CostParams::validate() const {
  require(total_labels >= 1, "CostParams: total_labels must be >= 1");
  require(group_size >= 2, "CostParams: group_size must be >= 2");
  require(c0 >= 0.0, "CostParams: c0 must be >= 0");
  require(c2 >= 0.0, "CostParams: c2 must be >= 0");
}

double unit_latency(const CostParams& p, std::int64_t context_len) {
  const double x = static_cast<double>(context_len);
  return p.c0 + p.c2 * x * x;
}

double cost_recurrence(const CostParams& p) {
  p.validate();
  const std::int64_t k = p.group_size;
  std::int64_t n = p.total_labels;
  if (n <= k) {
    return unit_latency(p, n);
  }
  double total = 0.0;
  while (n > k) {
    const std::int64_t groups = (n + k - 1) / k;
    total += static_cast<double>(groups) * unit_latency(p, k);
    n = groups;
  }
  return total + unit_latency(p, n);
}

std::int64_t ceil_log(std::int64_t n, int k) {
  require(n >= 1, "ceil_log: n must be >= 1");
  require(k >= 2, "ceil_log: k must be >= 2");
  std::int64_t m = 0;
  std::int64_t power = 1;
  while (power < n) {
    ++m;
    if (power > n / k) break;  // power * k would already reach past n
    power *= k;
  }
  return m;
}

double log_base_k(std::int64_t n, int k) {
  require(n >= 1, "log_base_k: n must be >= 1");
  require(k >= 2, "log_base_k: k must be >= 2");
  // Integer powers evaluate exactly so expressions like
  // (N/K + log_K N - 1) * K^2 hit their integer values on the nose.
  std::int64_t power = 1;
  for (std::int64_t m = 0; m <= 62; ++m) {
    if (power == n) return static_cast<double>(m);
    if (power > n / k) break;
    power *= k;
  }
  return std::log(static_cast<double>(n)) / std::log(static_cast<double>(k));
}

double cost_closed_form(const CostParams& p) {
  p.validate();
  const double n = static_cast<double>(p.total_labels);
  const double k = static_cast<double>(p.group_size);
  if (p.total_labels <= p.group_size) {
    return unit_latency(p, p.total_labels);
  }
  const double depth = log_base_k(p.total_labels, p.group_size);
  return (n / k + depth - 1.0) * unit_latency(p, p.group_size);
}

double cost_closed_form_parallel(const CostParams& p) {
  p.validate();
  if (p.total_labels <= p.group_size) {
    return unit_latency(p, p.total_labels);
  }
  const double depth = log_base_k(p.total_labels, p.group_size);
  return depth * unit_latency(p, p.group_size);
}

double flat_cost(const CostParams& p) {
  return unit_latency(p, p.total_labels);
}

double worst_case_calls(std::int64_t n, int k) {
  require(n >= 1, "worst_case_calls: n must be >= 1");
  require(k >= 2, "worst_case_calls: k must be >= 2");
  if (n <= k) return 1.0;
  return static_cast<double>(n) / (static_cast<double>(k) - 1.0) +
         static_cast<double>(ceil_log(n, k));
}

std::int64_t best_case_calls(std::int64_t n, int k) {
  require(n >= 1, "best_case_calls: n must be >= 1");
  require(k >= 2, "best_case_calls: k must be >= 2");
  return (n + k - 1) / k;
}

std::int64_t exact_all_survive_calls(std::int64_t n, int k) {
  require(n >= 1, "exact_all_survive_calls: n must be >= 1");
  require(k >= 2, "exact_all_survive_calls: k must be >= 2");
  if (n <= k) return 1;
  std::int64_t total = 0;
  while (n > k) {
    const std::int64_t groups = (n + k - 1) / k;
    total += groups;
    n = groups;
  }
  return total + 1;
}

CostReport cost_grid(const std::vector<std::int64_t>& n_values,
                     const std::vector<int>& k_values, double c0, double c2,
                     bool parallel) {
  CostReport report;
  report.formula = parallel ? "parallel" : "sequential";
  report.c0 = c0;
  report.c2 = c2;
  for (const std::int64_t n : n_values) {
    for (const int k : k_values) {
      CostParams p;
      p.total_labels = n;
      p.group_size = k;
      p.c0 = c0;
      p.c2 = c2;
      CostRow row;
      row.n = n;
      row.k = k;
      row.cost = parallel ? cost_closed_form_parallel(p) : cost_closed_form(p);
      row.flat = flat_cost(p);
      row.in_region = row.cost < row.flat;
      report.rows.push_back(row);
    }
  }
  return report;
}

std::vector<int> advantage_region(std::int64_t n,
                                  const std::vector<int>& k_values, double c0,
                                  double c2) {
  std::vector<int> region;
  for (const int k : k_values) {
    CostParams p;
    p.total_labels = n;
    p.group_size = k;
    p.c0 = c0;
    p.c2 = c2;
    if (cost_closed_form(p) < flat_cost(p)) {
      region.push_back(k);
    }
  }
  return region;
}

BoundsReport bounds_grid(const std::vector<std::int64_t>& n_values,
                         const std::vector<int>& k_values) {
  BoundsReport report;
  for (const std::int64_t n : n_values) {
    for (const int k : k_values) {
      BoundsRow row;
      row.n = n;
      row.k = k;
      row.best = best_case_calls(n, k);
      row.exact_all_survive = exact_all_survive_calls(n, k);
      row.worst = worst_case_calls(n, k);
      report.rows.push_back(row);
    }
  }
  return report;
}

std::string cost_report_csv(const CostReport& report) {
  std::string out = "n,k,cost,flat_cost,in_region\n";
  char buf[160];
  for (const CostRow& row : report.rows) {
    std::snprintf(buf, sizeof(buf), "%lld,%d,%.4f,%.4f,%d\n",
                  static_cast<long long>(row.n), row.k, row.cost, row.flat,
                  row.in_region ? 1 : 0);
    out += buf;
  }
  return out;
}

std::string cost_report_json(const CostReport& report) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["formula"] = report.formula;
  doc["cost_model"] = {{"c0", report.c0}, {"c2", report.c2}};
  nlohmann::json rows = nlohmann::json::array();
  for (const CostRow& row : report.rows) {
    rows.push_back({{"n", row.n},
                    {"k", row.k},
                    {"cost", row.cost},
                    {"flat_cost", row.flat},
                    {"in_region", row.in_region}});
  }
  doc["rows"] = std::move(rows);
  return doc.dump(2);
}

std::string bounds_report_csv(const BoundsReport& report) {
  std::string out = "n,k,best_calls,exact_all_survive_calls,worst_calls\n";
  char buf[160];
  for (const BoundsRow& row : report.rows) {
    std::snprintf(buf, sizeof(buf), "%lld,%d,%lld,%lld,%.4f\n",
                  static_cast<long long>(row.n), row.k,
                  static_cast<long long>(row.best),
                  static_cast<long long>(row.exact_all_survive), row.worst);
    out += buf;
  }
  return out;
}

std::string bounds_report_json(const BoundsReport& report) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  nlohmann::json rows = nlohmann::json::array();
  for (const BoundsRow& row : report.rows) {
    rows.push_back({{"n", row.n},
                    {"k", row.k},
                    {"best_calls", row.best},
                    {"exact_all_survive_calls", row.exact_all_survive},
                    {"worst_calls", row.worst}});
  }
  doc["rows"] = std::move(rows);
  return doc.dump(2);
}

}  // namespace dci::analysis
