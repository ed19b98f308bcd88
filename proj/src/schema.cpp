#include "adaptprobe/schema.hpp"

namespace adaptprobe {

json OutputSchema::to_json_schema() const {
  json props = json::object();
  json required = json::array();
  for (const auto& f : fields) {
    json p;
    switch (f.type) {
      case FieldType::Integer:
        p = {{"type", "integer"}};
        if (f.min) p["minimum"] = *f.min;
        if (f.max) p["maximum"] = *f.max;
        break;
      case FieldType::String:
        p = {{"type", "string"}};
        if (!f.allowed.empty()) p["enum"] = f.allowed;
        break;
      case FieldType::Boolean:
        p = {{"type", "boolean"}};
        break;
      case FieldType::StringArray:
        p = {{"type", "array"}, {"items", {{"type", "string"}}}};
        break;
      case FieldType::NullableString:
        p = {{"type", json::array({"string", "null"})}};
        break;
    }
    props[f.name] = p;
    if (f.required) required.push_back(f.name);
  }
  return {{"type", "object"}, {"properties", props}, {"required", required}, {"additionalProperties", false}};
}

std::optional<std::string> OutputSchema::violation(const json& value) const {
  if (!value.is_object()) return "expected a JSON object";
  for (const auto& f : fields) {
    if (!value.contains(f.name)) {
      if (f.required) return "missing field '" + f.name + "'";
      continue;
    }
    const auto& v = value.at(f.name);
    switch (f.type) {
      case FieldType::Integer: {
        if (!v.is_number_integer()) return "field '" + f.name + "' must be an integer";
        auto n = v.get<long long>();
        if ((f.min && n < *f.min) || (f.max && n > *f.max))
          return "field '" + f.name + "' = " + std::to_string(n) + " is out of range [" +
                 std::to_string(f.min.value_or(n)) + ", " + std::to_string(f.max.value_or(n)) + "]";
        break;
      }
      case FieldType::String: {
        if (!v.is_string()) return "field '" + f.name + "' must be a string";
        const auto& s = v.get_ref<const std::string&>();
        if (f.non_empty && trim(s).empty()) return "field '" + f.name + "' must not be empty";
        if (!f.allowed.empty()) {
          bool ok = false;
          for (const auto& a : f.allowed) ok = ok || a == s;
          if (!ok) return "field '" + f.name + "' value '" + s + "' is not an allowed label";
        }
        break;
      }
      case FieldType::Boolean:
        if (!v.is_boolean()) return "field '" + f.name + "' must be a boolean";
        break;
      case FieldType::StringArray:
        if (!v.is_array()) return "field '" + f.name + "' must be an array of strings";
        for (const auto& e : v)
          if (!e.is_string()) return "field '" + f.name + "' must be an array of strings";
        break;
      case FieldType::NullableString:
        if (!v.is_string() && !v.is_null()) return "field '" + f.name + "' must be a string or null";
        break;
    }
  }
  return std::nullopt;
}

std::optional<json> extract_json_object(const std::string& text) {
  auto try_parse = [](const std::string& s) -> std::optional<json> {
    auto v = json::parse(s, nullptr, /*allow_exceptions=*/false);
    if (v.is_discarded() || !v.is_object()) return std::nullopt;
    return v;
  };
  auto t = trim(text);
  if (auto v = try_parse(t)) return v;
  auto first = t.find('{');
  auto last = t.rfind('}');
  if (first != std::string::npos && last != std::string::npos && last > first)
    return try_parse(t.substr(first, last - first + 1));
  return std::nullopt;
}

}  // namespace adaptprobe
