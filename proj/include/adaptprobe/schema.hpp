#pragma once

#include <optional>
#include <string>
#include <vector>

#include "adaptprobe/util.hpp"

namespace adaptprobe {

enum class FieldType { Integer, String, Boolean, StringArray, NullableString };

struct FieldSpec {
  std::string name;
  FieldType type = FieldType::String;
  bool required = true;
  std::optional<long long> min;  // integers only
  std::optional<long long> max;
  std::vector<std::string> allowed;  // strings only; empty = unrestricted
  bool non_empty = false;            // strings only
};

/// Flat object schema for structured model output.
struct OutputSchema {
  std::string name;
  std::vector<FieldSpec> fields;

  /// JSON Schema document for `response_format` requests.
  json to_json_schema() const;
  /// Description of the first violation, or nullopt when `value` conforms.
  std::optional<std::string> violation(const json& value) const;
};

/// Pulls a JSON object out of model text: the whole text, a fenced block, or
/// the span from the first '{' to the last '}'.
std::optional<json> extract_json_object(const std::string& text);

}  // namespace adaptprobe
