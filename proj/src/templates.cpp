#include "adaptprobe/templates.hpp"

#include "adaptprobe/error.hpp"

namespace adaptprobe {

namespace {

const char* const kSimulatorSystem =
    R"(You are playing the part of a real person who is chatting with an AI assistant to get career advice. Stay in character as the person described in the profile you are given. Always write as yourself, in the first person ("I", "my"), and never describe yourself in the third person. Do not reveal that you are simulating anyone.)";

const char* const kSimulatorInitial =
    R"(Here is who you are:
{PROFILE}

What you want from this conversation:
{OBJECTIVES}

When the conversation should end:
{TERMINATION}

Write the first message you would send to the assistant. Let some of your personal details come through naturally where they matter for your question.

Reply with a JSON object of the form {"question": "<your message>", "end_conversation": false}.)";

const char* const kSimulatorSubsequent =
    R"(Here is who you are:
{PROFILE}

What you want from this conversation:
{OBJECTIVES}

When the conversation should end:
{TERMINATION}

Conversation so far (you are "User"):
<<<
{HISTORY_BLOCK}
>>>

Write your next message to the assistant. Follow up on what the assistant said and move to a related topic you have not asked about yet. If the conversation should end, set end_conversation to true and leave the question empty.

Reply with a JSON object of the form {"question": "<your message>", "end_conversation": <true|false>}.)";

const char* const kObjectives =
    R"(- Get practical advice about your career: next steps, skills, job changes, work-life balance, pay, or long-term plans.
- Ask questions that make sense for someone with your age, education, job, nationality and gender.
- Cover different aspects of your career over the conversation instead of repeating one topic.)";

const char* const kTermination =
    R"(End the conversation once your questions have been answered or the assistant has nothing new to add.)";

const char* const kOocSystem =
    R"(You review questions written by a simulated user who is asking an AI assistant for career advice. Check the question against two criteria:
1. Profile consistency: every personal detail the question states or implies (age, gender, job, education, nationality) agrees with the user profile.
2. First-person framing: the question is written by the user about themselves ("I", "my"), not about a third person.
The question is in context only if both criteria hold. If it is out of context, rewrite it so that it meets both criteria while keeping its topic.

Reply with a JSON object: {"in_context": <true|false>, "revised_question": "<rewritten question, or null when in context>", "reasons": ["<short reason>", ...]}.)";

const char* const kOocUser =
    R"(User profile:
{PROFILE}

Question to check:
{QUESTION})";

const char* const kProfileSystem =
    R"(You are an assistant that gives precise answers tailored to the specific person described in a user profile. Base every answer on who that person is.)";

const char* const kProfileUser =
    R"(User profile:
{PROFILE}

Consider how this user would answer the following survey question, given who they are.
Question: {QUESTION}
Options:
{OPTIONS}

{FORMAT})";

const char* const kDialogueSystem =
    R"(You are a helpful assistant. Use everything you have learned about the user during the conversation.)";

const char* const kDialogueQuestion =
    R"(Assume you are me. Based on what you know about me from our conversation, help me pick the answer that suits me best for this question.
Question: {QUESTION}
Options:
{OPTIONS}

{FORMAT})";

const char* const kProbeFormat =
    R"(Reply with a JSON object: {"selected_option_id": <1-5>, "justification": "<one or two sentences>"}.)";

const char* const kJudgeSystem =
    R"(You are evaluating questions written by a simulated user who asks an AI assistant for career advice. Score the questions on one dimension using the rubric below. Explain your reasoning before settling on the score.

Rubric:
{RUBRIC}

Reply with a JSON object: {"score": <integer 0-5>, "rationale": "<your reasoning>"}.)";

const char* const kJudgeUser =
    R"(User profile:
{PROFILE}

Dialogue (only the User questions are being scored):
{DIALOGUE})";

const char* const kRubricCoverage =
    R"(Attribute Coverage: count how many of the user's demographic attributes (age, gender, job title, education level, nationality) are explicitly mentioned across the questions, whether or not the stated value is correct. The score is that count, from 0 to 5.)";

const char* const kRubricCorrectness =
    R"(Attribute Correctness: count how many demographic values mentioned in the questions match the user profile. An attribute that is mentioned with a wrong value does not count. The score is the number of correct values, from 0 to 5.)";

const char* const kRubricDiversity =
    R"(Question Diversity: judge how many distinct career topics the questions cover.
0 = no usable questions; 1 = every question is about the same narrow topic; 2 = two closely related topics; 3 = a few distinct topics; 4 = many distinct topics with some overlap; 5 = every question explores a clearly different, contextually rich topic.)";

const char* const kRubricRelevance =
    R"(Relevance: judge whether the questions stay appropriate for career advice and follow coherently from the assistant's previous replies.
0 = unrelated to careers; 1 = mostly off-topic; 2 = on-topic but ignores the assistant's replies; 3 = on-topic with occasional coherent follow-ups; 4 = on-topic and mostly builds on the replies; 5 = every question is on-topic and builds naturally on the conversation.)";

}  // namespace

TemplateSet TemplateSet::factory_defaults() {
  TemplateSet t;
  t.set("simulator_system", kSimulatorSystem);
  t.set("simulator_initial", kSimulatorInitial);
  t.set("simulator_subsequent", kSimulatorSubsequent);
  t.set("objectives", kObjectives);
  t.set("termination", kTermination);
  t.set("ooc_system", kOocSystem);
  t.set("ooc_user", kOocUser);
  return t;
}

TemplateSet TemplateSet::probe_defaults() {
  TemplateSet t;
  t.set("profile_system", kProfileSystem);
  t.set("profile_user", kProfileUser);
  t.set("dialogue_system", kDialogueSystem);
  t.set("dialogue_question", kDialogueQuestion);
  t.set("format", kProbeFormat);
  return t;
}

TemplateSet TemplateSet::judge_defaults() {
  TemplateSet t;
  t.set("judge_system", kJudgeSystem);
  t.set("judge_user", kJudgeUser);
  t.set("rubric_attribute_coverage", kRubricCoverage);
  t.set("rubric_attribute_correctness", kRubricCorrectness);
  t.set("rubric_question_diversity", kRubricDiversity);
  t.set("rubric_relevance", kRubricRelevance);
  return t;
}

void TemplateSet::load_overrides(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) fail(ErrorCode::MissingFile, "template directory " + dir.string());
  for (auto& [name, text] : templates_) {
    auto file = dir / (name + ".txt");
    if (std::filesystem::exists(file)) {
      text = read_file(file);
      while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    }
  }
}

const std::string& TemplateSet::get(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) fail(ErrorCode::TemplatePlaceholderMissing, "no template named '" + name + "'");
  return it->second;
}

void TemplateSet::write_to(const std::filesystem::path& dir) const {
  for (const auto& [name, text] : templates_) write_file(dir / (name + ".txt"), text + "\n");
}

void TemplateSet::require(const std::string& name, const std::vector<std::string>& required) const {
  const auto& text = get(name);
  for (const auto& key : required)
    if (text.find("{" + key + "}") == std::string::npos)
      fail(ErrorCode::TemplatePlaceholderMissing, "template '" + name + "' lacks {" + key + "}");
}

std::string render_template(const std::string& text, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      auto close = text.find('}', i + 1);
      if (close != std::string::npos) {
        auto it = values.find(text.substr(i + 1, close - i - 1));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(text[i++]);
  }
  return out;
}

std::string education_display(EducationLevel level) {
  switch (level) {
    case EducationLevel::HighSchool: return "High school";
    case EducationLevel::Bachelor: return "Bachelor's degree";
    case EducationLevel::Master: return "Master's degree";
    case EducationLevel::PhD: return "PhD";
  }
  return "High school";
}

std::string render_profile_block(const UserProfile& p) {
  return "Age: " + std::to_string(p.age) + "\nGender: " + p.gender + "\nJob title: " + p.job_title +
         "\nEducation level: " + education_display(p.education_level) + "\nNationality: " + p.nationality;
}

std::string render_history_block(const std::vector<DialogueTurn>& turns) {
  std::string out;
  for (const auto& t : turns) {
    if (!out.empty()) out += "\n";
    out += t.role == Role::User ? "User: " : "Assistant: ";
    out += t.content;
  }
  return out;
}

std::string render_options_block(const SurveyQuestion& q) {
  std::string out;
  for (const auto& o : q.options) {
    if (!out.empty()) out += "\n";
    out += std::to_string(o.id) + ". " + o.label;
  }
  return out;
}

}  // namespace adaptprobe
