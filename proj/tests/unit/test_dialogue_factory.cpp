#include <gtest/gtest.h>

#include "adaptprobe/dialogue_factory.hpp"
#include "support/expect_error.hpp"
#include "support/fixtures.hpp"

using namespace adaptprobe;
using testing_support::make_profile;
using testing_support::MockFixture;
using testing_support::RecordingGateway;

namespace {

json sim_rule(const std::string& marker, json reply) {
  return {{"match", {{"model", "sim"}, {"last_contains", marker}}}, {"responses", {{{"json", std::move(reply)}}}}};
}

// Simulator that keeps asking; detector that flags astronauts; QA that answers.
json script(bool end_after_first = false, const std::string& ooc_revision = "As a pilot, should I retrain?") {
  json ask = {{"question", "I am a nurse, should I study further?"}, {"end_conversation", false}};
  json next = end_after_first ? json{{"question", ""}, {"end_conversation", true}}
                              : json{{"question", "What about my pay?"}, {"end_conversation", false}};
  json ooc_flag = {{"in_context", false}, {"revised_question", ooc_revision}, {"reasons", {"job mismatch"}}};
  return {{"rules",
           {sim_rule("Write the first message", ask),
            sim_rule("Write your next message", next),
            {{"match", {{"model", "ooc"}, {"contains", "Astronaut"}}}, {"responses", {{{"json", ooc_flag}}}}},
            {{"match", {{"model", "ooc"}}}, {"responses", {{{"json", {{"in_context", true}}}}}}},
            {{"match", {{"model", "qa"}}}, {"responses", {{{"content", "Here is some advice."}}}}}}}};
}

FactoryConfig config(const MockFixture& mock, OocMode mode = OocMode::Revise, int max_runs = 5) {
  FactoryConfig cfg;
  cfg.simulator = mock.endpoint("sim");
  cfg.detector = mock.endpoint("ooc");
  cfg.qa = mock.endpoint("qa");
  cfg.max_runs = max_runs;
  cfg.ooc_mode = mode;
  cfg.seed = 7;
  return cfg;
}

std::vector<UserProfile> profiles(int n, int astronauts) {
  std::vector<UserProfile> out;
  for (int i = 0; i < n; ++i)
    out.push_back(make_profile("u" + std::to_string(i), 25 + i, EducationLevel::Bachelor,
                               i % (n / astronauts) == 0 && i / (n / astronauts) < astronauts ? "Astronaut" : "Nurse"));
  return out;
}

}  // namespace

TEST(FactoryConfigTest, Validation) {
  MockFixture mock(script());
  auto cfg = config(mock);
  cfg.max_runs = 1;
  EXPECT_AP_ERROR(cfg.validate(), ErrorCode::Config);
  cfg = config(mock);
  cfg.templates.set("ooc_user", "{PROFILE} only");
  EXPECT_AP_ERROR(cfg.validate(), ErrorCode::TemplatePlaceholderMissing);
}

TEST(Factory, StopsAtMaxRunsMessages) {
  MockFixture mock(script());
  RecordingGateway g;
  DialogueFactory f(g.gateway, config(mock));
  auto out = f.generate_dialogue(make_profile("u1", 31, EducationLevel::Bachelor, "Nurse"));
  ASSERT_TRUE(out.dialogue.has_value());
  const auto& turns = out.dialogue->turns;
  ASSERT_EQ(turns.size(), 6u);
  for (std::size_t i = 0; i < turns.size(); ++i) EXPECT_EQ(turns[i].role, i % 2 == 0 ? Role::User : Role::Assistant);
  EXPECT_EQ(turns[0].content, "I am a nurse, should I study further?");
  EXPECT_EQ(turns[2].content, "What about my pay?");
  EXPECT_EQ(out.dialogue->generation_meta.models.at("qa"), "qa");
}

TEST(Factory, SimulatorCanEndAfterFirstAnswer) {
  MockFixture mock(script(true));
  RecordingGateway g;
  DialogueFactory f(g.gateway, config(mock));
  auto out = f.generate_dialogue(make_profile("u1"));
  ASSERT_TRUE(out.dialogue.has_value());
  EXPECT_EQ(out.dialogue->turns.size(), 2u);
}

TEST(Factory, QaSeesFullHistory) {
  MockFixture mock(script());
  RecordingGateway g;
  DialogueFactory f(g.gateway, config(mock));
  f.generate_dialogue(make_profile("u1"));
  std::vector<std::size_t> qa_lengths;
  for (const auto& b : mock.server.stats().bodies)
    if (b.at("model") == "qa") qa_lengths.push_back(b.at("messages").size());
  EXPECT_EQ(qa_lengths, (std::vector<std::size_t>{1, 3, 5}));
}

TEST(Factory, DiscardModeSkipsFlaggedProfile) {
  MockFixture mock(script());
  RecordingGateway g;
  DialogueFactory f(g.gateway, config(mock, OocMode::Discard));
  auto out = f.generate_dialogue(make_profile("u9", 40, EducationLevel::PhD, "Astronaut"));
  EXPECT_FALSE(out.dialogue.has_value());
  ASSERT_TRUE(out.skipped.has_value());
  EXPECT_EQ(out.skipped->reason, SkipReason::OocDiscard);
  EXPECT_EQ(out.skipped->user_id, "u9");
}

TEST(Factory, ReviseModeUsesRevisedQuestion) {
  MockFixture mock(script());
  RecordingGateway g;
  DialogueFactory f(g.gateway, config(mock, OocMode::Revise));
  auto out = f.generate_dialogue(make_profile("u9", 40, EducationLevel::PhD, "Astronaut"));
  ASSERT_TRUE(out.dialogue.has_value());
  EXPECT_EQ(out.dialogue->turns[0].content, "As a pilot, should I retrain?");
}

TEST(Factory, RevisionIdenticalToOriginalIsUnrevisable) {
  MockFixture mock(script(false, "I am a nurse, should I study further?"));
  RecordingGateway g;
  DialogueFactory f(g.gateway, config(mock, OocMode::Revise));
  auto out = f.generate_dialogue(make_profile("u9", 40, EducationLevel::PhD, "Astronaut"));
  ASSERT_TRUE(out.skipped.has_value());
  EXPECT_EQ(out.skipped->reason, SkipReason::OocUnrevisable);
}

TEST(Factory, ImmediateEndIsNoInitialQuestion) {
  json s = script();
  s["rules"][0] = sim_rule("Write the first message", {{"question", ""}, {"end_conversation", true}});
  MockFixture mock(s);
  RecordingGateway g;
  DialogueFactory f(g.gateway, config(mock));
  auto out = f.generate_dialogue(make_profile("u1"));
  ASSERT_TRUE(out.skipped.has_value());
  EXPECT_EQ(out.skipped->reason, SkipReason::NoInitialQuestion);
}

TEST(Factory, UnparseableSimulatorOutput) {
  json s = script();
  s["rules"][0] = {{"match", {{"model", "sim"}}}, {"responses", {{{"content", "just prose"}}}}};
  MockFixture mock(s);
  RecordingGateway g;
  DialogueFactory f(g.gateway, config(mock));
  EXPECT_AP_ERROR(f.simulate_user_turn(make_profile("u1"), {}, TurnKind::Initial), ErrorCode::UnparseableSimulatorOutput);
  auto out = f.generate_dialogue(make_profile("u1"));
  ASSERT_TRUE(out.skipped.has_value());
  EXPECT_EQ(out.skipped->reason, SkipReason::UpstreamFailure);
}

TEST(Factory, UnparseableVerdict) {
  json s = script();
  s["rules"][2] = {{"match", {{"model", "ooc"}}}, {"responses", {{{"json", {{"in_context", false}}}}}}};
  MockFixture mock(s);
  RecordingGateway g;
  DialogueFactory f(g.gateway, config(mock, OocMode::Revise));
  EXPECT_AP_ERROR(f.check_out_of_context(make_profile("u1"), "q?"), ErrorCode::UnparseableVerdict);
  EXPECT_AP_ERROR(f.check_out_of_context(make_profile("u1"), "  "), ErrorCode::PreconditionViolation);
}

TEST(Factory, CorpusCountsDialoguesAndSkips) {
  MockFixture mock(script());
  RecordingGateway g;
  DialogueFactory f(g.gateway, config(mock, OocMode::Discard));
  auto ps = profiles(20, 3);
  int astronauts = 0;
  for (const auto& p : ps) astronauts += p.job_title == "Astronaut";
  ASSERT_EQ(astronauts, 3);
  auto result = f.generate_corpus(ps);
  EXPECT_EQ(result.dialogues.size(), 17u);
  EXPECT_EQ(result.skips.size(), 3u);
  for (std::size_t i = 1; i < result.dialogues.size(); ++i)
    EXPECT_LT(std::stoi(result.dialogues[i - 1].user_id.substr(1)), std::stoi(result.dialogues[i].user_id.substr(1)));
}

TEST(Factory, CorpusOutputIsByteIdenticalAcrossRuns) {
  std::string first, second;
  for (std::string* out : {&first, &second}) {
    MockFixture mock(script());
    RecordingGateway g;
    auto cfg = config(mock, OocMode::Revise);
    cfg.workers = 4;
    DialogueFactory f(g.gateway, cfg);
    auto result = f.generate_corpus(profiles(12, 2));
    *out = dump_dialogues(result.dialogues, json{{"seed", 7}}) + dump_skip_report(result.skips, std::nullopt);
  }
  EXPECT_EQ(first, second);
  EXPECT_FALSE(first.empty());
}
