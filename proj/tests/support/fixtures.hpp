#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "adaptprobe/llm_gateway.hpp"
#include "adaptprobe/mock_server.hpp"
#include "adaptprobe/survey_model.hpp"

namespace testing_support {

namespace ap = adaptprobe;

inline ap::Survey make_survey(int m) {
  std::vector<ap::SurveyQuestion> qs;
  for (int j = 1; j <= m; ++j) {
    ap::SurveyQuestion q;
    q.id = j;
    q.text = "Question number " + std::to_string(j) + "?";
    for (int k = 1; k <= 5; ++k) q.options[k - 1] = {k, "choice " + std::to_string(k)};
    qs.push_back(q);
  }
  return ap::Survey(std::move(qs));
}

inline ap::UserProfile make_profile(const std::string& id, int age = 30,
                                    ap::EducationLevel edu = ap::EducationLevel::Bachelor,
                                    const std::string& job = "Software Engineer", const std::string& country = "Japan") {
  return {id, age, "female", job, edu, country};
}

inline ap::Dialogue make_dialogue(const std::string& id, int exchanges = 2) {
  ap::Dialogue d;
  d.user_id = id;
  for (int i = 0; i < exchanges; ++i) {
    d.turns.push_back({ap::Role::User, "As a nurse in my thirties, what should I learn next? (" + std::to_string(i) + ")"});
    d.turns.push_back({ap::Role::Assistant, "Consider a specialty certificate."});
  }
  d.generation_meta.timestamp = "1970-01-01T00:00:00Z";
  return d;
}

/// Mock server on a free port for the lifetime of the object.
struct MockFixture {
  explicit MockFixture(const ap::json& script) : server(script) { server.start(0); }
  ~MockFixture() { server.stop(); }

  ap::EndpointConfig endpoint(const std::string& model, int retry_limit = 3, int concurrency = 4) const {
    ap::EndpointConfig cfg;
    cfg.base_url = server.base_url();
    cfg.model_name = model;
    cfg.api_key_ref = "ADAPTPROBE_TEST_KEY";
    cfg.max_concurrency = concurrency;
    cfg.timeout_s = 10;
    cfg.retry_limit = retry_limit;
    cfg.backoff_base_s = 0.0;
    return cfg;
  }

  ap::MockServer server;
};

/// Gateway whose backoff sleeps are recorded instead of slept.
struct RecordingGateway {
  std::shared_ptr<std::vector<double>> sleeps = std::make_shared<std::vector<double>>();
  ap::Gateway gateway{[s = sleeps](std::chrono::duration<double> d) { s->push_back(d.count()); }};
};

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("adaptprobe_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_support
