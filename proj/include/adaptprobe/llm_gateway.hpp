#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "adaptprobe/schema.hpp"
#include "adaptprobe/util.hpp"

namespace adaptprobe {

struct EndpointConfig {
  std::string base_url;
  std::string model_name;
  std::string api_key_ref;  // name of the environment variable holding the key
  int max_concurrency = 8;
  double timeout_s = 120.0;
  int retry_limit = 3;
  double backoff_base_s = 1.0;  // delay before retry i is base * 2^i
  bool schema_mode = true;      // send response_format; otherwise validate-and-retry only

  void validate() const;
  /// Concurrency key: endpoints sharing base_url and model share one limit.
  std::string key() const { return base_url + "|" + model_name; }
};

EndpointConfig endpoint_from_json(const json& j);
json to_json(const EndpointConfig& cfg);

struct ChatMessage {
  std::string role;
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  bool want_logprobs = false;
  int top_logprobs = 5;
  std::optional<OutputSchema> output_schema;
  std::optional<std::uint64_t> seed;

  void validate() const;
};

struct TokenAlternative {
  std::string token;
  double logprob = 0.0;
};

struct TokenInfo {
  int position = 0;
  std::string token;
  double logprob = 0.0;
  std::vector<TokenAlternative> alternatives;
};

struct ChatResponse {
  std::string text;
  std::vector<TokenInfo> token_logprobs;
  std::string finish_reason;
  int attempts = 1;  // HTTP attempts spent on this response, including retries
};

struct StructuredResult {
  json value;
  ChatResponse response;
  int attempts = 1;  // schema attempts (1 = first answer validated)
};

struct TwoPassResult {
  std::string reasoning_text;
  bool empty_reasoning = false;
  json value;
  ChatResponse response;
  int upstream_calls = 2;
};

/// Request body for POST {base_url}/v1/chat/completions.
json build_request_body(const EndpointConfig& cfg, const ChatRequest& req, bool constrain);
/// Parses an OpenAI-style completion payload; throws MalformedUpstreamPayload.
ChatResponse parse_response_body(const std::string& body, int top_logprobs);

/// Client for OpenAI-compatible chat endpoints. Shareable across threads;
/// in-flight calls per endpoint key never exceed that endpoint's
/// max_concurrency.
class Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::duration<double>)>;

  Gateway();
  explicit Gateway(Sleeper sleeper);
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  ChatResponse chat_complete(const EndpointConfig& cfg, const ChatRequest& req);

  /// Validate-and-retry on top of chat_complete. On a violation the raw reply
  /// and the violation are appended and the model is asked again, up to
  /// cfg.retry_limit times.
  StructuredResult complete_structured(const EndpointConfig& cfg, const ChatRequest& req);

  /// Pass one runs without the schema and captures free-form reasoning; pass
  /// two replays it as an assistant turn and asks for the structured answer.
  TwoPassResult two_pass_reason(const EndpointConfig& cfg, const ChatRequest& req);

 private:
  class Slots;
  std::shared_ptr<Slots> slots_for(const EndpointConfig& cfg);

  Sleeper sleeper_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Slots>> slots_;
};

}  // namespace adaptprobe
