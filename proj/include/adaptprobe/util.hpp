#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace adaptprobe {

using json = nlohmann::json;

inline constexpr std::string_view kToolName = "adaptprobe";
inline constexpr std::string_view kToolVersion = "0.3.0";

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split_lines(std::string_view text);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// SplitMix64 finalizer. Used to derive per-stage and per-item seeds from the
/// run seed: derive_seed(seed, stage, index).
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stage, std::uint64_t index);

/// SplitMix64 stream. Portable across standard libraries, unlike the
/// std:: distributions.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Uniform integer in [0, bound) by rejection, bound > 0.
  std::uint64_t below(std::uint64_t bound);
  /// Uniform real in [0, 1).
  double unit();

 private:
  std::uint64_t state_;
};

/// Metadata header carried by every artifact file.
json make_meta(std::uint64_t seed, std::string_view config_digest, json extra = json::object());

inline constexpr std::string_view kMetaKey = "__meta__";

/// Line-delimited JSON. The first line may be a `{"__meta__": {...}}` header;
/// readers skip it.
struct JsonLines {
  std::optional<json> meta;
  std::vector<json> records;
};

JsonLines read_jsonl(const std::filesystem::path& path);
JsonLines parse_jsonl(std::string_view text, std::string_view origin);
std::string dump_jsonl(const std::vector<json>& records, const std::optional<json>& meta);

/// Deterministic number formatting for text artifacts (fixed decimals).
std::string format_fixed(double value, int decimals);

}  // namespace adaptprobe

namespace adaptprobe {
/// 64-bit FNV-1a, used for stable per-item seed keys.
std::uint64_t fnv1a64(std::string_view bytes);
}  // namespace adaptprobe
