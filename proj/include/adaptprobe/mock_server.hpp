#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "adaptprobe/util.hpp"

namespace adaptprobe {

/// Scripted responder behind the mock chat-completions server.
///
/// Script document:
///   {"seed": 0,
///    "rules": [{"match": {"model": "...", "contains": "..."|[...], "not_contains": ...,
///                         "last_contains": ..., "system_contains": ..., "has_schema": bool},
///               "responses": [{"status": 200, "content": "...", "json": {...},
///                              "option_probs": [5 reals], "tokens": [...],
///                              "probe_auto": true, "delay_ms": 0}],
///               "cycle": false}]}
///
/// The first matching rule answers. Each rule walks its responses in order and
/// then repeats the last one (or wraps, with "cycle"). Requests matching no
/// rule get HTTP 404.
class MockScript {
 public:
  struct Reply {
    int status = 200;
    std::string body;
    int delay_ms = 0;
  };

  explicit MockScript(json script);
  static MockScript from_file(const std::filesystem::path& path);

  Reply respond(const json& request_body);

 private:
  json script_;
  std::uint64_t seed_ = 0;
  std::mutex mu_;
  std::vector<std::size_t> cursors_;
};

/// Builds the assistant payload for one scripted response entry; exposed for
/// tests. Token logprobs are synthesized when the request asks for them.
json mock_completion(const json& entry, const json& request_body, std::uint64_t seed);

/// Splits text the way the mock tokenizer does: letter runs, single digits and
/// single punctuation characters, with leading whitespace glued to the token.
std::vector<std::string> mock_tokenize(const std::string& text);

struct MockStats {
  int requests = 0;
  int max_in_flight = 0;
  std::vector<json> bodies;  // request bodies in arrival order
};

/// HTTP server speaking the chat-completions wire format on 127.0.0.1.
class MockServer {
 public:
  explicit MockServer(json script);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  /// Binds (port 0 = any free port) and serves on a background thread.
  void start(int port = 0);
  void stop();
  /// Serves on the calling thread until stopped.
  void run(const std::string& host, int port);

  int port() const noexcept { return port_; }
  std::string base_url() const;
  MockStats stats() const;
  void reset_stats();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace adaptprobe
