#include "adaptprobe/mock_server.hpp"

#include <httplib.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cmath>
#include <numeric>

#include "adaptprobe/error.hpp"

namespace adaptprobe {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> as_list(const json& v) {
  if (v.is_string()) return {v.get<std::string>()};
  std::vector<std::string> out;
  if (v.is_array())
    for (const auto& e : v) out.push_back(e.get<std::string>());
  return out;
}

bool matches(const json& match, const json& body) {
  if (match.is_null() || match.empty()) return true;
  const auto& messages = body.at("messages");
  std::string all, last, system;
  for (const auto& m : messages) {
    const auto content = m.value("content", std::string{});
    all += content;
    all += '\n';
    if (m.value("role", std::string{}) == "system") system += content;
  }
  if (!messages.empty()) last = messages.back().value("content", std::string{});

  if (match.contains("model") && body.value("model", std::string{}) != match.at("model").get<std::string>())
    return false;
  for (const auto& s : as_list(match.value("contains", json())))
    if (all.find(s) == std::string::npos) return false;
  for (const auto& s : as_list(match.value("not_contains", json())))
    if (all.find(s) != std::string::npos) return false;
  for (const auto& s : as_list(match.value("last_contains", json())))
    if (last.find(s) == std::string::npos) return false;
  for (const auto& s : as_list(match.value("system_contains", json())))
    if (system.find(s) == std::string::npos) return false;
  if (match.contains("has_schema") && match.at("has_schema").get<bool>() != body.contains("response_format"))
    return false;
  if (match.contains("message_count") &&
      match.at("message_count").get<std::size_t>() != messages.size())
    return false;
  return true;
}

json token_entry(const std::string& token, double logprob, const std::vector<std::pair<std::string, double>>& top,
                 int limit) {
  json alts = json::array();
  for (const auto& [t, lp] : top) {
    if (static_cast<int>(alts.size()) >= limit) break;
    alts.push_back({{"token", t}, {"logprob", lp}, {"bytes", nullptr}});
  }
  return {{"token", token}, {"logprob", logprob}, {"bytes", nullptr}, {"top_logprobs", alts}};
}

// Leading whitespace of a token, so alternatives keep the same spacing.
std::string lead_ws(const std::string& tok) {
  std::size_t i = 0;
  while (i < tok.size() && std::isspace(static_cast<unsigned char>(tok[i]))) ++i;
  return tok.substr(0, i);
}

struct ProbeDraw {
  std::array<double, 5> probs{};  // zero = absent from the top list
  int reported = 1;
  std::string justification;
};

ProbeDraw draw_probe(const json& request_body, std::uint64_t seed) {
  SeededRng rng(fnv1a(request_body.at("messages").dump()) ^ splitmix64(seed));
  std::array<double, 5> w{};
  for (auto& x : w) {
    double u = rng.unit();
    x = u * u * u + 0.01;
  }
  // a third of the answers lose their least likely option from the top list
  if (rng.below(3) == 0) {
    auto it = std::min_element(w.begin(), w.end());
    *it = 0.0;
  }
  double total = std::accumulate(w.begin(), w.end(), 0.0) / 0.9;  // the rest goes to non-option tokens
  ProbeDraw d;
  for (int k = 0; k < 5; ++k) d.probs[k] = w[k] / total;
  int best = static_cast<int>(std::max_element(d.probs.begin(), d.probs.end()) - d.probs.begin());
  d.reported = best + 1;
  // occasionally the model reports the runner-up
  if (rng.below(10) == 0) {
    int second = -1;
    for (int k = 0; k < 5; ++k)
      if (k != best && d.probs[k] > 0 && (second < 0 || d.probs[k] > d.probs[second])) second = k;
    if (second >= 0) d.reported = second + 1;
  }
  static constexpr const char* kWords[] = {"values", "balance", "career", "stability", "growth",
                                           "respect", "autonomy", "family", "team", "security"};
  d.justification = "Given the context, " + std::string(kWords[rng.below(10)]) + " and " +
                    std::string(kWords[rng.below(10)]) + " matter most here.";
  return d;
}

}  // namespace

std::vector<std::string> mock_tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string pending_ws;
  std::size_t i = 0;
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      pending_ws.push_back(text[i++]);
      continue;
    }
    std::string tok = pending_ws;
    pending_ws.clear();
    if (std::isalpha(c) || c == '_' || c >= 0x80) {
      while (i < text.size()) {
        unsigned char d = static_cast<unsigned char>(text[i]);
        if (!(std::isalpha(d) || d == '_' || d >= 0x80)) break;
        tok.push_back(text[i++]);
      }
    } else {
      tok.push_back(text[i++]);
    }
    tokens.push_back(std::move(tok));
  }
  if (!pending_ws.empty()) tokens.push_back(pending_ws);
  return tokens;
}

json mock_completion(const json& entry, const json& request_body, std::uint64_t seed) {
  const bool want_logprobs = request_body.value("logprobs", false);
  const int top_n = request_body.value("top_logprobs", 5);

  std::string content;
  json token_list = json::array();
  std::optional<std::array<double, 5>> option_probs;
  int selected_digit = 0;

  if (entry.contains("tokens")) {
    for (const auto& t : entry.at("tokens")) {
      content += t.at("token").get<std::string>();
      std::vector<std::pair<std::string, double>> top;
      for (const auto& a : t.value("top", json::array())) top.emplace_back(a[0].get<std::string>(), a[1].get<double>());
      token_list.push_back(token_entry(t.at("token").get<std::string>(), t.value("logprob", 0.0), top, top_n));
    }
  } else {
    if (entry.value("probe_auto", false)) {
      auto d = draw_probe(request_body, seed);
      option_probs = d.probs;
      selected_digit = d.reported;
      content = json{{"selected_option_id", d.reported}, {"justification", d.justification}}.dump();
    } else if (entry.contains("json")) {
      content = entry.at("json").dump();
    } else {
      content = entry.value("content", std::string{});
    }
    if (entry.contains("option_probs")) {
      std::array<double, 5> p{};
      for (int k = 0; k < 5; ++k) p[k] = entry.at("option_probs").at(k).get<double>();
      option_probs = p;
    }
    if (want_logprobs) {
      auto tokens = mock_tokenize(content);
      bool after_field = false;
      bool done = false;
      for (const auto& tok : tokens) {
        const auto bare = trim(tok);
        if (bare == "selected_option_id") after_field = true;
        if (option_probs && after_field && !done && bare.size() == 1 && bare[0] >= '1' && bare[0] <= '5') {
          done = true;
          const int id = bare[0] - '0';
          if (selected_digit == 0) selected_digit = id;
          std::vector<std::pair<std::string, double>> top;
          for (int k = 0; k < 5; ++k)
            if ((*option_probs)[k] > 0) top.emplace_back(lead_ws(tok) + std::to_string(k + 1), std::log((*option_probs)[k]));
          if (top.size() < 5) top.emplace_back(lead_ws(tok) + "I", std::log(0.05));
          std::stable_sort(top.begin(), top.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
          double own = (*option_probs)[id - 1] > 0 ? std::log((*option_probs)[id - 1]) : std::log(1e-4);
          token_list.push_back(token_entry(tok, own, top, top_n));
          continue;
        }
        token_list.push_back(token_entry(tok, 0.0, {{tok, 0.0}}, top_n));
      }
    }
  }

  json choice = {{"index", 0},
                 {"message", {{"role", "assistant"}, {"content", content}}},
                 {"finish_reason", entry.value("finish_reason", std::string("stop"))}};
  choice["logprobs"] = want_logprobs ? json{{"content", token_list}} : json(nullptr);
  return {{"id", "mock-completion"},
          {"object", "chat.completion"},
          {"model", request_body.value("model", std::string{})},
          {"choices", json::array({choice})}};
}

MockScript::MockScript(json script) : script_(std::move(script)) {
  if (!script_.is_object() || !script_.contains("rules") || !script_.at("rules").is_array())
    fail(ErrorCode::Config, "mock script needs a 'rules' array");
  seed_ = script_.value("seed", std::uint64_t{0});
  cursors_.assign(script_.at("rules").size(), 0);
}

MockScript MockScript::from_file(const std::filesystem::path& path) {
  auto doc = json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded()) fail(ErrorCode::Config, "mock script is not JSON: " + path.string());
  return MockScript(std::move(doc));
}

MockScript::Reply MockScript::respond(const json& request_body) {
  if (!request_body.is_object() || !request_body.contains("messages") || !request_body.at("messages").is_array())
    return {400, R"({"error":{"message":"messages required"}})", 0};
  const auto& rules = script_.at("rules");
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& rule = rules[i];
    if (!matches(rule.value("match", json::object()), request_body)) continue;
    const auto& responses = rule.at("responses");
    json entry;
    {
      std::lock_guard lock(mu_);
      std::size_t idx = cursors_[i]++;
      if (rule.value("cycle", false))
        idx %= responses.size();
      else
        idx = std::min(idx, responses.size() - 1);
      entry = responses.at(idx);
    }
    Reply reply;
    reply.status = entry.value("status", 200);
    reply.delay_ms = entry.value("delay_ms", 0);
    if (reply.status == 200)
      reply.body = entry.contains("raw_body") ? entry.at("raw_body").get<std::string>()
                                              : mock_completion(entry, request_body, seed_).dump();
    else
      reply.body = json{{"error", {{"message", "scripted status"}, {"code", reply.status}}}}.dump();
    return reply;
  }
  return {404, R"({"error":{"message":"no mock rule matched"}})", 0};
}

// ---------------------------------------------------------------- HTTP

struct MockServer::Impl {
  explicit Impl(json script) : script(std::move(script)) {}
  MockScript script;
  httplib::Server server;
  mutable std::mutex mu;
  MockStats stats;
  int in_flight = 0;
};

MockServer::MockServer(json script) : impl_(std::make_unique<Impl>(std::move(script))) {
  auto* impl = impl_.get();
  impl->server.new_task_queue = [] { return new httplib::ThreadPool(32); };
  impl->server.Post("/v1/chat/completions", [impl](const httplib::Request& req, httplib::Response& res) {
    auto body = json::parse(req.body, nullptr, false);
    {
      std::lock_guard lock(impl->mu);
      ++impl->stats.requests;
      ++impl->in_flight;
      impl->stats.max_in_flight = std::max(impl->stats.max_in_flight, impl->in_flight);
      impl->stats.bodies.push_back(body);
    }
    auto reply = impl->script.respond(body.is_discarded() ? json() : body);
    if (reply.delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(reply.delay_ms));
    {
      std::lock_guard lock(impl->mu);
      --impl->in_flight;
    }
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  });
  impl->server.Get("/__stats", [impl](const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(impl->mu);
    res.set_content(json{{"requests", impl->stats.requests}, {"max_in_flight", impl->stats.max_in_flight}}.dump(),
                    "application/json");
  });
}

MockServer::~MockServer() { stop(); }

void MockServer::start(int port) {
  if (port == 0)
    port_ = impl_->server.bind_to_any_port("127.0.0.1");
  else if (impl_->server.bind_to_port("127.0.0.1", port))
    port_ = port;
  else
    port_ = -1;
  if (port_ <= 0) fail(ErrorCode::Config, "mock server could not bind");
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void MockServer::run(const std::string& host, int port) {
  if (!impl_->server.bind_to_port(host, port)) fail(ErrorCode::Config, "mock server could not bind " + host);
  port_ = port;
  impl_->server.listen_after_bind();
}

void MockServer::stop() {
  if (impl_) impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockServer::base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

MockStats MockServer::stats() const {
  std::lock_guard lock(impl_->mu);
  return impl_->stats;
}

void MockServer::reset_stats() {
  std::lock_guard lock(impl_->mu);
  impl_->stats = MockStats{};
}

}  // namespace adaptprobe
