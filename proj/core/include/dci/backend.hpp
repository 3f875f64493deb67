#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "dci/label_space.hpp"

namespace dci {

/// One sub-query: an image handle plus the rendered prompt for one
/// candidate group. `iteration` and `group_index` are 1-based and, together
/// with the image and the group contents, identify the query.
struct Query {
  std::string image_ref;
  std::string prompt;
  LabelSet group;
  int iteration = 1;
  int group_index = 1;
};

struct BackendResult {
  std::string raw_text;
  double latency_s = 0.0;
  std::uint64_t token_estimate = 0;
};

/// Transport-level failure (timeout, bad status, malformed reply) after the
/// backend exhausted its own retries. Distinct from an Invalid parse, which
/// is a value, not an error.
class BackendError : public std::runtime_error {
 public:
  BackendError(const std::string& what, int attempts)
      : std::runtime_error(what), attempts_(attempts) {}

  /// Number of transport attempts made before giving up.
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

/// Model backend contract: one image + one prompt -> raw answer text.
/// Implementations must tolerate concurrent invocation.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendResult infer(const Query& query) = 0;
};

}  // namespace dci
