#pragma once

#include <memory>
#include <optional>
#include <string>

#include "dci/backend.hpp"

namespace dci {

/// Connection settings for an OpenAI-compatible vision chat endpoint.
/// The credential is read from the environment variable named by
/// `api_key_env`; when unset the request is sent without authorization,
/// which is what local serving stacks expect.
struct HttpEndpointConfig {
  std::string base_url;  // e.g. "http://127.0.0.1:8000"
  std::string chat_path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env = "DCI_API_KEY";
  double timeout_s = 120.0;
  int max_attempts = 3;
  double backoff_base_s = 0.25;
  int max_in_flight = 4;
  std::optional<double> temperature;

  void validate() const;
};

/// Chat-completion client. One request per query: a user turn carrying an
/// image part (file contents base64-embedded, or a URL passed through) and
/// the prompt text. Transport failures, non-success statuses and replies
/// with no text are retried with exponential backoff up to `max_attempts`,
/// then surfaced as BackendError; answer-format problems are *not* handled
/// here, they belong to the parse layer.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpEndpointConfig config);
  ~HttpBackend() override;

  BackendResult infer(const Query& query) override;

  const HttpEndpointConfig& config() const noexcept { return config_; }

 private:
  struct InFlightGate;

  HttpEndpointConfig config_;
  std::unique_ptr<InFlightGate> gate_;
};

/// Request body for one query, exposed for tests and debugging.
std::string build_chat_request_body(const HttpEndpointConfig& config,
                                    const Query& query);

}  // namespace dci
