#pragma once

// Scripted backends and independent reference computations shared by the
// unit suites and the acceptance suite. Everything here is test-side on
// purpose: the reference values must not depend on the code under test.

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "dci/backend.hpp"

namespace dci::testing {

/// Adversary: every group answers its first candidate, so every branch
/// survives and the run degenerates to the worst-case call count.
class AllSurviveBackend final : public Backend {
 public:
  BackendResult infer(const Query& query) override {
    ++calls;
    return BackendResult{query.group[0], fixed_latency_s, 0};
  }

  std::atomic<std::uint64_t> calls{0};
  double fixed_latency_s = 0.0;
};

/// Every query answers the null sentinel.
class AllNoneBackend final : public Backend {
 public:
  BackendResult infer(const Query&) override {
    ++calls;
    return BackendResult{"None", fixed_latency_s, 0};
  }

  std::atomic<std::uint64_t> calls{0};
  double fixed_latency_s = 0.0;
};

/// Replays a fixed list of raw replies in call order (not thread safe;
/// use with parallelism 1).
class ScriptedBackend final : public Backend {
 public:
  explicit ScriptedBackend(std::vector<std::string> replies)
      : replies_(std::move(replies)) {}

  BackendResult infer(const Query&) override {
    if (next_ >= replies_.size()) {
      throw BackendError("scripted backend ran out of replies", 1);
    }
    return BackendResult{replies_[next_++], 0.0, 0};
  }

  std::size_t calls_made() const { return next_; }

 private:
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
};

/// Fails the first `failures` calls, then answers `reply`.
class FlakyBackend final : public Backend {
 public:
  FlakyBackend(int failures, std::string reply)
      : failures_(failures), reply_(std::move(reply)) {}

  BackendResult infer(const Query&) override {
    const int call = ++calls;
    if (call <= failures_) {
      throw BackendError("flaky backend scripted failure", 1);
    }
    return BackendResult{reply_, 0.0, 0};
  }

  std::atomic<int> calls{0};

 private:
  int failures_;
  std::string reply_;
};

/// Reference all-survive call count: sum of the layered ceilings
/// ceil(n/k), ceil(ceil(n/k)/k), ... plus the final base-case call.
/// Independent of the implementation under test.
inline std::int64_t layered_sum_calls(std::int64_t n, std::int64_t k) {
  if (n <= k) return 1;
  std::int64_t total = 0;
  while (n > k) {
    n = (n + k - 1) / k;
    total += n;
  }
  return total + 1;
}

/// Reference depth: number of shrinking levels an all-survive run passes
/// through before the base case.
inline std::int64_t layered_depth(std::int64_t n, std::int64_t k) {
  std::int64_t depth = 1;
  while (n > k) {
    n = (n + k - 1) / k;
    ++depth;
  }
  return depth;
}

}  // namespace dci::testing
