#include "adaptprobe/llm_gateway.hpp"

#include <httplib.h>

#include <cmath>
#include <cstdlib>
#include <thread>

#include "adaptprobe/error.hpp"

namespace adaptprobe {

// ---------------------------------------------------------------- config

void EndpointConfig::validate() const {
  if (base_url.empty()) fail(ErrorCode::Config, "endpoint base_url is empty");
  if (model_name.empty()) fail(ErrorCode::Config, "endpoint model_name is empty");
  if (max_concurrency < 1) fail(ErrorCode::Config, "max_concurrency must be >= 1");
  if (retry_limit < 0) fail(ErrorCode::Config, "retry_limit must be >= 0");
  if (!(timeout_s > 0)) fail(ErrorCode::Config, "timeout must be positive");
}

EndpointConfig endpoint_from_json(const json& j) {
  EndpointConfig c;
  try {
    c.base_url = j.at("base_url").get<std::string>();
    c.model_name = j.at("model_name").get<std::string>();
    c.api_key_ref = j.value("api_key_ref", std::string{});
    c.max_concurrency = j.value("max_concurrency", 8);
    c.timeout_s = j.value("timeout", 120.0);
    c.retry_limit = j.value("retry_limit", 3);
    c.backoff_base_s = j.value("backoff_base", 1.0);
    c.schema_mode = j.value("schema_mode", true);
  } catch (const json::exception& e) {
    fail(ErrorCode::Config, std::string("endpoint config: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const EndpointConfig& c) {
  // The key itself is never serialized, only the variable name.
  return {{"base_url", c.base_url},         {"model_name", c.model_name},
          {"api_key_ref", c.api_key_ref},   {"max_concurrency", c.max_concurrency},
          {"timeout", c.timeout_s},         {"retry_limit", c.retry_limit},
          {"backoff_base", c.backoff_base_s}, {"schema_mode", c.schema_mode}};
}

void ChatRequest::validate() const {
  if (messages.empty()) fail(ErrorCode::PreconditionViolation, "chat request has no messages");
  if (top_logprobs < 1 || top_logprobs > 20) fail(ErrorCode::PreconditionViolation, "top_logprobs must be in [1, 20]");
  if (temperature < 0) fail(ErrorCode::PreconditionViolation, "temperature must be >= 0");
}

// ---------------------------------------------------------------- wire format

json build_request_body(const EndpointConfig& cfg, const ChatRequest& req, bool constrain) {
  json messages = json::array();
  for (const auto& m : req.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  json body = {{"model", cfg.model_name}, {"messages", messages}, {"temperature", req.temperature}};
  if (req.want_logprobs) {
    body["logprobs"] = true;
    body["top_logprobs"] = req.top_logprobs;
  }
  if (constrain && req.output_schema && cfg.schema_mode) {
    body["response_format"] = {
        {"type", "json_schema"},
        {"json_schema",
         {{"name", req.output_schema->name}, {"schema", req.output_schema->to_json_schema()}, {"strict", true}}}};
  }
  if (req.seed) body["seed"] = *req.seed;
  return body;
}

ChatResponse parse_response_body(const std::string& body, int top_logprobs) {
  auto payload = json::parse(body, nullptr, false);
  if (payload.is_discarded()) fail(ErrorCode::MalformedUpstreamPayload, "response is not JSON");
  try {
    const auto& choice = payload.at("choices").at(0);
    ChatResponse out;
    const auto& content = choice.at("message").at("content");
    out.text = content.is_null() ? std::string{} : content.get<std::string>();
    out.finish_reason = choice.value("finish_reason", std::string{});
    if (choice.contains("logprobs") && !choice.at("logprobs").is_null()) {
      const auto& lp = choice.at("logprobs");
      if (lp.contains("content") && lp.at("content").is_array()) {
        int pos = 0;
        for (const auto& t : lp.at("content")) {
          TokenInfo info;
          info.position = pos++;
          info.token = t.at("token").get<std::string>();
          info.logprob = t.at("logprob").get<double>();
          if (info.logprob > 0) fail(ErrorCode::MalformedUpstreamPayload, "positive logprob");
          if (t.contains("top_logprobs")) {
            for (const auto& a : t.at("top_logprobs")) {
              if (static_cast<int>(info.alternatives.size()) >= top_logprobs) break;
              double alt_lp = a.at("logprob").get<double>();
              if (alt_lp > 0) fail(ErrorCode::MalformedUpstreamPayload, "positive logprob");
              info.alternatives.push_back({a.at("token").get<std::string>(), alt_lp});
            }
          }
          out.token_logprobs.push_back(std::move(info));
        }
      }
    }
    return out;
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedUpstreamPayload, e.what());
  }
}

// ---------------------------------------------------------------- concurrency

class Gateway::Slots {
 public:
  explicit Slots(int capacity) : free_(capacity) {}
  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return free_ > 0; });
    --free_;
  }
  void release() {
    {
      std::lock_guard lock(mu_);
      ++free_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int free_;
};

namespace {

struct SlotGuard {
  explicit SlotGuard(std::function<void()> release) : release_(std::move(release)) {}
  ~SlotGuard() { release_(); }
  std::function<void()> release_;
};

struct Target {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix + /v1/chat/completions
};

Target split_url(const std::string& base_url) {
  auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) fail(ErrorCode::Config, "base_url needs a scheme: " + base_url);
  auto path_start = base_url.find('/', scheme_end + 3);
  Target t;
  t.origin = base_url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  t.path = prefix + "/v1/chat/completions";
  return t;
}

}  // namespace

Gateway::Gateway() : Gateway([](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); }) {}

Gateway::Gateway(Sleeper sleeper) : sleeper_(std::move(sleeper)) {}

std::shared_ptr<Gateway::Slots> Gateway::slots_for(const EndpointConfig& cfg) {
  std::lock_guard lock(mu_);
  auto& slot = slots_[cfg.key()];
  if (!slot) slot = std::make_shared<Slots>(cfg.max_concurrency);
  return slot;
}

// ---------------------------------------------------------------- calls

ChatResponse Gateway::chat_complete(const EndpointConfig& cfg, const ChatRequest& req) {
  cfg.validate();
  req.validate();
  const auto target = split_url(cfg.base_url);
  const std::string body = build_request_body(cfg, req, /*constrain=*/true).dump();

  httplib::Headers headers;
  if (!cfg.api_key_ref.empty()) {
    if (const char* key = std::getenv(cfg.api_key_ref.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  ErrorCode last_code = ErrorCode::Transport;
  std::string last_message;
  for (int attempt = 0; attempt <= cfg.retry_limit; ++attempt) {
    if (attempt > 0) sleeper_(std::chrono::duration<double>(cfg.backoff_base_s * std::pow(2.0, attempt - 1)));

    httplib::Result res;
    {
      auto slots = slots_for(cfg);
      slots->acquire();
      SlotGuard guard([&] { slots->release(); });
      httplib::Client client(target.origin);
      auto secs = static_cast<time_t>(cfg.timeout_s);
      auto usecs = static_cast<time_t>((cfg.timeout_s - static_cast<double>(secs)) * 1e6);
      client.set_connection_timeout(secs, usecs);
      client.set_read_timeout(secs, usecs);
      client.set_write_timeout(secs, usecs);
      res = client.Post(target.path, headers, body, "application/json");
    }

    if (!res) {
      last_code = ErrorCode::Transport;
      last_message = cfg.base_url + ": " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429) {
      last_code = ErrorCode::RateLimited;
      last_message = cfg.base_url + ": HTTP 429";
      continue;
    }
    if (res->status >= 500) {
      last_code = ErrorCode::Transport;
      last_message = cfg.base_url + ": HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      fail(ErrorCode::Transport, cfg.base_url + ": HTTP " + std::to_string(res->status) + " " + res->body);

    auto out = parse_response_body(res->body, req.top_logprobs);
    out.attempts = attempt + 1;
    return out;
  }
  fail(last_code, last_message + " after " + std::to_string(cfg.retry_limit + 1) + " attempts");
}

StructuredResult Gateway::complete_structured(const EndpointConfig& cfg, const ChatRequest& req) {
  if (!req.output_schema) fail(ErrorCode::PreconditionViolation, "complete_structured needs an output schema");
  ChatRequest conversation = req;
  std::string last_raw;
  for (int attempt = 0; attempt <= cfg.retry_limit; ++attempt) {
    auto response = chat_complete(cfg, conversation);
    last_raw = response.text;
    std::string problem;
    if (auto value = extract_json_object(response.text)) {
      auto v = req.output_schema->violation(*value);
      if (!v) return {std::move(*value), std::move(response), attempt + 1};
      problem = *v;
    } else {
      problem = "the reply is not a JSON object";
    }
    conversation.messages.push_back({"assistant", response.text});
    conversation.messages.push_back(
        {"user", "Your previous reply was invalid: " + problem +
                     ". Reply again with only a JSON object that matches the required format."});
  }
  throw StructuredOutputError("no valid '" + req.output_schema->name + "' object after " +
                                  std::to_string(cfg.retry_limit + 1) + " attempts",
                              last_raw);
}

TwoPassResult Gateway::two_pass_reason(const EndpointConfig& cfg, const ChatRequest& req) {
  if (!req.output_schema) fail(ErrorCode::PreconditionViolation, "two_pass_reason needs an output schema");
  ChatRequest first = req;
  first.output_schema.reset();
  first.want_logprobs = false;
  auto reasoning = chat_complete(cfg, first);

  TwoPassResult out;
  out.reasoning_text = reasoning.text;
  out.empty_reasoning = trim(reasoning.text).empty();

  ChatRequest second = req;
  second.messages.push_back({"assistant", reasoning.text});
  second.messages.push_back({"user", "Based on the reasoning above, give your final answer in the required JSON format."});
  try {
    auto structured = complete_structured(cfg, second);
    out.value = std::move(structured.value);
    out.response = std::move(structured.response);
    out.upstream_calls = 1 + structured.attempts;
  } catch (const StructuredOutputError& e) {
    throw StructuredOutputError(e.detail(), e.last_raw_text(), out.reasoning_text);
  }
  return out;
}

}  // namespace adaptprobe
