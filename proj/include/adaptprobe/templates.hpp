#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "adaptprobe/survey_model.hpp"

namespace adaptprobe {

/// Named prompt templates with {PLACEHOLDER} slots. Defaults are built in;
/// load_overrides() replaces any template that has a `<name>.txt` file in the
/// given directory.
class TemplateSet {
 public:
  static TemplateSet factory_defaults();
  static TemplateSet probe_defaults();
  static TemplateSet judge_defaults();

  void load_overrides(const std::filesystem::path& dir);
  void set(const std::string& name, std::string text) { templates_[name] = std::move(text); }
  const std::string& get(const std::string& name) const;
  const std::map<std::string, std::string>& all() const noexcept { return templates_; }

  /// Writes every template to `<dir>/<name>.txt`.
  void write_to(const std::filesystem::path& dir) const;

  /// Throws TemplatePlaceholderMissing when `name` lacks any of `required`.
  void require(const std::string& name, const std::vector<std::string>& required) const;

 private:
  std::map<std::string, std::string> templates_;
};

/// Substitutes {KEY} for each entry; unknown placeholders are left untouched.
std::string render_template(const std::string& text, const std::map<std::string, std::string>& values);

/// "Age: 23\nGender: ...": one line per profile attribute.
std::string render_profile_block(const UserProfile& profile);
/// "User: ...\nAssistant: ..." transcript of prior turns.
std::string render_history_block(const std::vector<DialogueTurn>& turns);
/// "1. label" lines in option id order.
std::string render_options_block(const SurveyQuestion& question);
std::string education_display(EducationLevel level);

}  // namespace adaptprobe
