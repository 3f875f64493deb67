#include "dci/http_backend.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace dci {

void HttpEndpointConfig::validate() const {
  if (base_url.empty()) {
    throw std::invalid_argument("http backend: base_url is required");
  }
  if (timeout_s <= 0.0) {
    throw std::invalid_argument("http backend: timeout_s must be > 0");
  }
  if (max_attempts < 1) {
    throw std::invalid_argument("http backend: max_attempts must be >= 1");
  }
  if (max_in_flight < 1) {
    throw std::invalid_argument("http backend: max_in_flight must be >= 1");
  }
}

namespace {

std::string base64_encode(std::string_view bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 3 <= bytes.size()) {
    const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                       (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                       static_cast<unsigned char>(bytes[i + 2]);
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(kAlphabet[(v >> 6) & 63]);
    out.push_back(kAlphabet[v & 63]);
    i += 3;
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out += "==";
  } else if (rest == 2) {
    const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                       (static_cast<unsigned char>(bytes[i + 1]) << 8);
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(kAlphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

std::string mime_type_for(const std::string& path) {
  const auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == "png") return "image/png";
  if (ext == "gif") return "image/gif";
  if (ext == "webp") return "image/webp";
  if (ext == "bmp") return "image/bmp";
  return "image/jpeg";
}

std::string image_url_for(const std::string& image_ref) {
  if (image_ref.rfind("http://", 0) == 0 ||
      image_ref.rfind("https://", 0) == 0 ||
      image_ref.rfind("data:", 0) == 0) {
    return image_ref;
  }
  std::ifstream in(image_ref, std::ios::binary);
  if (!in) {
    throw std::runtime_error("http backend: cannot read image file '" +
                             image_ref + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return "data:" + mime_type_for(image_ref) +
         ";base64," + base64_encode(buffer.str());
}

/// Extracts the first text choice, or throws when the reply carries none.
std::string extract_reply_text(const std::string& body) {
  const nlohmann::json doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded()) {
    throw std::runtime_error("reply is not valid JSON");
  }
  const auto choices = doc.find("choices");
  if (choices == doc.end() || !choices->is_array() || choices->empty()) {
    throw std::runtime_error("reply has no choices");
  }
  const nlohmann::json& first = (*choices)[0];
  const auto message = first.find("message");
  if (message == first.end()) {
    throw std::runtime_error("reply choice has no message");
  }
  const auto content = message->find("content");
  if (content == message->end()) {
    throw std::runtime_error("reply message has no content");
  }
  if (content->is_string()) {
    return content->get<std::string>();
  }
  if (content->is_array()) {
    // Some servers reply with content parts; concatenate the text ones.
    std::string text;
    for (const nlohmann::json& part : *content) {
      if (part.contains("text") && part["text"].is_string()) {
        text += part["text"].get<std::string>();
      }
    }
    if (!text.empty()) return text;
  }
  throw std::runtime_error("reply content carries no text");
}

std::uint64_t extract_token_estimate(const std::string& body,
                                     std::size_t prompt_size) {
  const nlohmann::json doc = nlohmann::json::parse(body, nullptr, false);
  if (!doc.is_discarded() && doc.contains("usage") &&
      doc["usage"].contains("total_tokens") &&
      doc["usage"]["total_tokens"].is_number_unsigned()) {
    return doc["usage"]["total_tokens"].get<std::uint64_t>();
  }
  return prompt_size / 4;
}

}  // namespace

std::string build_chat_request_body(const HttpEndpointConfig& config,
                                    const Query& query) {
  nlohmann::json body;
  body["model"] = config.model;
  nlohmann::json content = nlohmann::json::array();
  content.push_back(
      {{"type", "image_url"},
       {"image_url", {{"url", image_url_for(query.image_ref)}}}});
  content.push_back({{"type", "text"}, {"text", query.prompt}});
  body["messages"] = nlohmann::json::array(
      {{{"role", "user"}, {"content", std::move(content)}}});
  if (config.temperature) {
    body["temperature"] = *config.temperature;
  }
  return body.dump();
}

/// Bounds the number of requests on the wire at once.
struct HttpBackend::InFlightGate {
  explicit InFlightGate(int limit) : slots(limit) {}

  void acquire() {
    std::unique_lock lock(mutex);
    released.wait(lock, [&] { return slots > 0; });
    --slots;
  }

  void release() {
    {
      std::lock_guard lock(mutex);
      ++slots;
    }
    released.notify_one();
  }

  std::mutex mutex;
  std::condition_variable released;
  int slots;
};

HttpBackend::HttpBackend(HttpEndpointConfig config)
    : config_(std::move(config)),
      gate_(std::make_unique<InFlightGate>(config_.max_in_flight)) {
  config_.validate();
}

HttpBackend::~HttpBackend() = default;

BackendResult HttpBackend::infer(const Query& query) {
  const std::string body = build_chat_request_body(config_, query);

  std::string api_key;
  if (const char* value = std::getenv(config_.api_key_env.c_str())) {
    api_key = value;
  }

  gate_->acquire();
  struct Release {
    InFlightGate* gate;
    ~Release() { gate->release(); }
  } release{gate_.get()};

  const auto started = std::chrono::steady_clock::now();
  std::string last_error;

  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    if (attempt > 1) {
      const double delay =
          config_.backoff_base_s * std::pow(2.0, attempt - 2);
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }

    // A fresh client per attempt keeps this trivially thread-safe;
    // connection reuse is not worth sharing mutable state across workers.
    httplib::Client client(config_.base_url);
    const auto timeout = std::chrono::duration<double>(config_.timeout_s);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers headers;
    if (!api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + api_key);
    }

    httplib::Result res =
        client.Post(config_.chat_path, headers, body, "application/json");

    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_error = "http status " + std::to_string(res->status);
      continue;
    }
    try {
      BackendResult result;
      result.raw_text = extract_reply_text(res->body);
      result.latency_s = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - started)
                             .count();
      result.token_estimate =
          extract_token_estimate(res->body, query.prompt.size());
      return result;
    } catch (const std::exception& e) {
      last_error = std::string("malformed reply: ") + e.what();
      continue;
    }
  }

  throw BackendError("http backend: giving up after " +
                         std::to_string(config_.max_attempts) +
                         " attempts; last error: " + last_error,
                     config_.max_attempts);
}

}  // namespace dci
