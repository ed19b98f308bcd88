#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "adaptprobe/llm_gateway.hpp"
#include "adaptprobe/survey_model.hpp"

namespace adaptprobe {

enum class CohortAttribute { Age, Education, DevelopmentLevel, JobCategory, PositionLevel };
inline constexpr std::array<CohortAttribute, 5> kCohortAttributes = {
    CohortAttribute::Age, CohortAttribute::Education, CohortAttribute::DevelopmentLevel,
    CohortAttribute::JobCategory, CohortAttribute::PositionLevel};

std::string_view to_string(CohortAttribute a);
CohortAttribute parse_cohort_attribute(std::string_view text);

enum class Provenance { Direct, Mapped, Classified };
std::string_view to_string(Provenance p);

struct CohortGroup {
  std::string label;
  std::set<std::string> user_ids;
};

/// Disjoint, non-empty groups in the attribute's canonical label order.
struct CohortPartition {
  std::string attribute;
  std::vector<CohortGroup> groups;
  Provenance provenance = Provenance::Direct;
  std::vector<std::string> warnings;

  /// user_id -> group label
  std::map<std::string, std::string> membership() const;
};

// ---------------------------------------------------------------- age

inline const std::vector<std::string>& age_bracket_labels() {
  static const std::vector<std::string> labels = {"<30", "30-40", "40-50", "50-60", ">60"};
  return labels;
}

/// Lower-inclusive 10-year brackets: <30, [30,40), [40,50), [50,60), >=60.
std::string age_bracket(int age);

// ---------------------------------------------------------------- countries

enum class DevelopmentLevel { Developed, Developing, ThirdWorld };
std::string_view to_string(DevelopmentLevel level);  // "Developed", "Developing", "Third World"
DevelopmentLevel parse_development_level(std::string_view text);

class CountryMap {
 public:
  CountryMap() = default;
  explicit CountryMap(const std::map<std::string, DevelopmentLevel>& entries);
  /// Lines `country<TAB>label`; '#' starts a comment line.
  static CountryMap load(const std::filesystem::path& path);
  static CountryMap parse(std::string_view text);

  std::optional<DevelopmentLevel> find(std::string_view country) const;
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::map<std::string, DevelopmentLevel> entries_;  // keys normalized
};

/// Case-insensitive, whitespace-trimmed lookup; throws UnmappedCountry.
DevelopmentLevel development_level(std::string_view country, const CountryMap& map);

// ---------------------------------------------------------------- classification

class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> labels);
  /// One label per line; blank lines and '#' comments skipped.
  static LabelSet load(const std::filesystem::path& path);

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  bool contains(std::string_view label) const;

 private:
  std::vector<std::string> labels_;
};

struct KeywordRule {
  std::string keyword;  // lower-cased
  std::string label;
};

/// Lines `keyword<TAB>label`. Matching is case-insensitive substring search;
/// the longest matching keyword wins, earlier lines break ties. A `*` keyword
/// matches when nothing else does.
class ClassificationRules {
 public:
  ClassificationRules() = default;
  explicit ClassificationRules(std::vector<KeywordRule> rules);
  static ClassificationRules load(const std::filesystem::path& path);
  static ClassificationRules parse(std::string_view text);

  std::optional<std::string> match(std::string_view text) const;
  const std::vector<KeywordRule>& rules() const noexcept { return rules_; }

 private:
  std::vector<KeywordRule> rules_;
};

enum class ClassifierBackend { MappingFile, Endpoint };
ClassifierBackend parse_classifier_backend(std::string_view text);

/// Zero-shot style single-label classification of free text.
class TextClassifier {
 public:
  virtual ~TextClassifier() = default;
  virtual std::string classify(const std::string& text) const = 0;
  virtual const LabelSet& labels() const = 0;
  virtual Provenance provenance() const { return Provenance::Classified; }
};

class RuleClassifier : public TextClassifier {
 public:
  /// Every rule label must belong to `labels`.
  RuleClassifier(ClassificationRules rules, LabelSet labels);
  std::string classify(const std::string& text) const override;  // throws NoRuleMatched
  const LabelSet& labels() const override { return labels_; }

 private:
  ClassificationRules rules_;
  LabelSet labels_;
};

class EndpointClassifier : public TextClassifier {
 public:
  EndpointClassifier(Gateway& gateway, EndpointConfig endpoint, LabelSet labels, std::string task);
  std::string classify(const std::string& text) const override;
  const LabelSet& labels() const override { return labels_; }

 private:
  Gateway& gateway_;
  EndpointConfig endpoint_;
  LabelSet labels_;
  std::string task_;
};

std::string classify_text(const std::string& text, const TextClassifier& classifier);

struct CohortAux {
  const CountryMap* country_map = nullptr;
  const TextClassifier* job_category = nullptr;
  const TextClassifier* position_level = nullptr;
};

CohortPartition partition_by(CohortAttribute attribute, const std::vector<UserProfile>& profiles,
                             const CohortAux& aux = {});

}  // namespace adaptprobe
