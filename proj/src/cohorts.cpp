#include "adaptprobe/cohorts.hpp"

#include <algorithm>
#include <cctype>
#include <functional>

#include "adaptprobe/error.hpp"

namespace adaptprobe {

namespace {

std::string normalize_key(std::string_view s) {
  // trim, lower-case, and collapse inner whitespace runs
  std::string out;
  bool space = false;
  for (char c : to_lower(trim(s))) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> parse_tsv(std::string_view text, std::string_view what) {
  std::vector<std::pair<std::string, std::string>> rows;
  std::size_t lineno = 0;
  for (const auto& raw : split_lines(text)) {
    ++lineno;
    auto line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto tab = raw.find('\t');
    if (tab == std::string::npos)
      fail(ErrorCode::SchemaViolation, std::string(what) + ":" + std::to_string(lineno) + ": expected key<TAB>label");
    rows.emplace_back(trim(std::string_view(raw).substr(0, tab)), trim(std::string_view(raw).substr(tab + 1)));
  }
  return rows;
}

}  // namespace

std::string_view to_string(CohortAttribute a) {
  switch (a) {
    case CohortAttribute::Age: return "age";
    case CohortAttribute::Education: return "education";
    case CohortAttribute::DevelopmentLevel: return "development_level";
    case CohortAttribute::JobCategory: return "job_category";
    case CohortAttribute::PositionLevel: return "position_level";
  }
  return "age";
}

CohortAttribute parse_cohort_attribute(std::string_view text) {
  for (auto a : kCohortAttributes)
    if (text == to_string(a)) return a;
  fail(ErrorCode::Config, "unknown cohort attribute '" + std::string(text) + "'");
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Direct: return "direct";
    case Provenance::Mapped: return "mapped";
    case Provenance::Classified: return "classified";
  }
  return "direct";
}

std::map<std::string, std::string> CohortPartition::membership() const {
  std::map<std::string, std::string> out;
  for (const auto& g : groups)
    for (const auto& u : g.user_ids) out[u] = g.label;
  return out;
}

std::string age_bracket(int age) {
  if (age < 14) fail(ErrorCode::FieldOutOfRange, "age " + std::to_string(age) + " below 14");
  if (age < 30) return "<30";
  if (age < 40) return "30-40";
  if (age < 50) return "40-50";
  if (age < 60) return "50-60";
  return ">60";
}

// ---------------------------------------------------------------- countries

std::string_view to_string(DevelopmentLevel level) {
  switch (level) {
    case DevelopmentLevel::Developed: return "Developed";
    case DevelopmentLevel::Developing: return "Developing";
    case DevelopmentLevel::ThirdWorld: return "Third World";
  }
  return "Developed";
}

DevelopmentLevel parse_development_level(std::string_view text) {
  auto key = normalize_key(text);
  if (key == "developed") return DevelopmentLevel::Developed;
  if (key == "developing") return DevelopmentLevel::Developing;
  if (key == "third world" || key == "thirdworld") return DevelopmentLevel::ThirdWorld;
  fail(ErrorCode::SchemaViolation, "development level must be Developed, Developing or Third World, got '" +
                                       std::string(text) + "'");
}

CountryMap::CountryMap(const std::map<std::string, DevelopmentLevel>& entries) {
  for (const auto& [country, level] : entries) entries_[normalize_key(country)] = level;
}

CountryMap CountryMap::parse(std::string_view text) {
  std::map<std::string, DevelopmentLevel> entries;
  for (const auto& [country, label] : parse_tsv(text, "country map")) entries[country] = parse_development_level(label);
  return CountryMap(entries);
}

CountryMap CountryMap::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::MissingFile, path.string());
  return parse(read_file(path));
}

std::optional<DevelopmentLevel> CountryMap::find(std::string_view country) const {
  auto it = entries_.find(normalize_key(country));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

DevelopmentLevel development_level(std::string_view country, const CountryMap& map) {
  if (auto level = map.find(country)) return *level;
  fail(ErrorCode::UnmappedCountry, "'" + std::string(country) + "'");
}

// ---------------------------------------------------------------- labels and rules

LabelSet::LabelSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) fail(ErrorCode::SchemaViolation, "label set is empty");
  std::set<std::string> seen;
  for (const auto& l : labels_)
    if (l.empty() || !seen.insert(l).second) fail(ErrorCode::SchemaViolation, "label set has a duplicate or empty label");
}

LabelSet LabelSet::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::MissingFile, path.string());
  std::vector<std::string> labels;
  for (const auto& raw : split_lines(read_file(path))) {
    auto line = trim(raw);
    if (!line.empty() && line[0] != '#') labels.push_back(line);
  }
  return LabelSet(std::move(labels));
}

bool LabelSet::contains(std::string_view label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

ClassificationRules::ClassificationRules(std::vector<KeywordRule> rules) : rules_(std::move(rules)) {
  for (auto& r : rules_) {
    r.keyword = normalize_key(r.keyword);
    if (r.keyword.empty() || r.label.empty()) fail(ErrorCode::SchemaViolation, "empty keyword or label in rules");
  }
}

ClassificationRules ClassificationRules::parse(std::string_view text) {
  std::vector<KeywordRule> rules;
  for (auto& [kw, label] : parse_tsv(text, "classification rules")) rules.push_back({kw, label});
  return ClassificationRules(std::move(rules));
}

ClassificationRules ClassificationRules::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::MissingFile, path.string());
  return parse(read_file(path));
}

std::optional<std::string> ClassificationRules::match(std::string_view text) const {
  const auto haystack = normalize_key(text);
  const KeywordRule* best = nullptr;
  const KeywordRule* fallback = nullptr;
  for (const auto& r : rules_) {
    if (r.keyword == "*") {
      if (!fallback) fallback = &r;
    } else if (haystack.find(r.keyword) != std::string::npos && (!best || r.keyword.size() > best->keyword.size())) {
      best = &r;
    }
  }
  if (!best) best = fallback;
  if (!best) return std::nullopt;
  return best->label;
}

ClassifierBackend parse_classifier_backend(std::string_view text) {
  if (text == "mapping_file") return ClassifierBackend::MappingFile;
  if (text == "endpoint") return ClassifierBackend::Endpoint;
  fail(ErrorCode::Config, "classifier backend must be mapping_file or endpoint");
}

RuleClassifier::RuleClassifier(ClassificationRules rules, LabelSet labels)
    : rules_(std::move(rules)), labels_(std::move(labels)) {
  for (const auto& r : rules_.rules())
    if (!labels_.contains(r.label))
      fail(ErrorCode::SchemaViolation, "rule label '" + r.label + "' is not in the label set");
}

std::string RuleClassifier::classify(const std::string& text) const {
  if (auto label = rules_.match(text)) return *label;
  fail(ErrorCode::NoRuleMatched, "'" + text + "'");
}

EndpointClassifier::EndpointClassifier(Gateway& gateway, EndpointConfig endpoint, LabelSet labels, std::string task)
    : gateway_(gateway), endpoint_(std::move(endpoint)), labels_(std::move(labels)), task_(std::move(task)) {
  endpoint_.validate();
}

std::string EndpointClassifier::classify(const std::string& text) const {
  FieldSpec label{"label", FieldType::String};
  label.allowed = labels_.labels();
  std::string options;
  for (const auto& l : labels_.labels()) options += "- " + l + "\n";
  ChatRequest req;
  req.messages = {{"system", "You classify short texts into exactly one of a fixed set of labels. Task: " + task_ +
                                 "\nAllowed labels:\n" + options +
                                 "Reply with a JSON object: {\"label\": \"<one allowed label>\"}."},
                  {"user", text}};
  req.output_schema = OutputSchema{"classification", {label}};
  return gateway_.complete_structured(endpoint_, req).value.at("label").get<std::string>();
}

std::string classify_text(const std::string& text, const TextClassifier& classifier) {
  if (classifier.labels().labels().empty()) fail(ErrorCode::PreconditionViolation, "empty label set");
  return classifier.classify(text);
}

// ---------------------------------------------------------------- partitions

CohortPartition partition_by(CohortAttribute attribute, const std::vector<UserProfile>& profiles,
                             const CohortAux& aux) {
  CohortPartition out;
  out.attribute = std::string(to_string(attribute));
  std::vector<std::string> order;
  std::function<std::string(const UserProfile&)> label_of;

  switch (attribute) {
    case CohortAttribute::Age:
      out.provenance = Provenance::Direct;
      order = age_bracket_labels();
      label_of = [](const UserProfile& p) { return age_bracket(p.age); };
      break;
    case CohortAttribute::Education:
      out.provenance = Provenance::Direct;
      order = {"HighSchool", "Bachelor", "Master", "PhD"};
      label_of = [](const UserProfile& p) { return std::string(to_string(p.education_level)); };
      break;
    case CohortAttribute::DevelopmentLevel:
      if (!aux.country_map) fail(ErrorCode::MissingAux, "development_level needs a country map");
      out.provenance = Provenance::Mapped;
      order = {"Developed", "Developing", "Third World"};
      label_of = [&](const UserProfile& p) {
        auto level = aux.country_map->find(p.nationality);
        if (!level) fail(ErrorCode::UnmappedValue, p.user_id + ": nationality '" + p.nationality + "'");
        return std::string(to_string(*level));
      };
      break;
    case CohortAttribute::JobCategory:
    case CohortAttribute::PositionLevel: {
      const TextClassifier* c = attribute == CohortAttribute::JobCategory ? aux.job_category : aux.position_level;
      if (!c) fail(ErrorCode::MissingAux, out.attribute + " needs a classifier");
      out.provenance = c->provenance();
      order = c->labels().labels();
      label_of = [c](const UserProfile& p) {
        try {
          return classify_text(p.job_title, *c);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NoRuleMatched) throw;
          fail(ErrorCode::UnmappedValue, p.user_id + ": job title '" + p.job_title + "'");
        }
      };
      break;
    }
  }

  std::map<std::string, std::set<std::string>> members;
  for (const auto& p : profiles) members[label_of(p)].insert(p.user_id);
  for (const auto& label : order) {
    auto it = members.find(label);
    if (it == members.end() || it->second.empty()) {
      out.warnings.push_back("group '" + label + "' is empty and was pruned");
      continue;
    }
    out.groups.push_back({label, std::move(it->second)});
    members.erase(it);
  }
  // labels outside the canonical order go last
  for (auto& [label, users] : members) out.groups.push_back({label, std::move(users)});
  return out;
}

}  // namespace adaptprobe
