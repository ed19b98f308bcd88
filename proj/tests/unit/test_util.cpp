#include <gtest/gtest.h>

#include <set>

#include "adaptprobe/util.hpp"
#include "support/expect_error.hpp"
#include "support/fixtures.hpp"

using namespace adaptprobe;

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(SeededRng, DeterministicAndBounded) {
  SeededRng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  SeededRng r(7);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_LT(r.below(7), 7u);
    const double u = r.unit();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(SeededRng, BelowIsRoughlyUniform) {
  SeededRng r(3);
  std::array<int, 6> counts{};
  for (int i = 0; i < 60000; ++i) ++counts[r.below(6)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(DeriveSeed, DistinctAcrossStagesAndIndices) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t stage = 0; stage < 5; ++stage)
    for (std::uint64_t i = 0; i < 200; ++i) seen.insert(derive_seed(9, stage, i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(derive_seed(9, 1, 3), derive_seed(9, 1, 3));
  EXPECT_NE(derive_seed(9, 1, 3), derive_seed(10, 1, 3));
}

TEST(Strings, TrimLowerSplit) {
  EXPECT_EQ(trim("  a b \n"), "a b");
  EXPECT_EQ(to_lower("MiXeD"), "mixed");
  EXPECT_EQ(split_lines("a\nb\r\nc").size(), 3u);
}

TEST(JsonLines, MetaHeaderRoundTrip) {
  const json meta = make_meta(5, "abc", {{"stage", "probe"}});
  const auto text = dump_jsonl({json{{"x", 1}}, json{{"x", 2}}}, meta);
  EXPECT_EQ(text.substr(0, 12), "{\"__meta__\":");
  auto parsed = parse_jsonl(text, "mem");
  ASSERT_TRUE(parsed.meta.has_value());
  EXPECT_EQ(parsed.meta->at("seed"), 5);
  EXPECT_EQ(parsed.meta->at("version"), std::string(kToolVersion));
  ASSERT_EQ(parsed.records.size(), 2u);
  EXPECT_EQ(parsed.records[1].at("x"), 2);
}

TEST(JsonLines, BadLineIsSchemaViolation) { EXPECT_AP_ERROR(parse_jsonl("{\"a\":1}\n{oops\n", "mem"), ErrorCode::SchemaViolation); }

TEST(Files, MissingFileAndWriteCreatesDirectories) {
  EXPECT_AP_ERROR(read_file("/nonexistent/definitely/not/here"), ErrorCode::MissingFile);
  auto dir = testing_support::temp_dir("util");
  write_file(dir / "a" / "b" / "c.txt", "hello");
  EXPECT_EQ(read_file(dir / "a" / "b" / "c.txt"), "hello");
}

TEST(FormatFixed, NoNegativeZero) {
  EXPECT_EQ(format_fixed(-0.0001, 3), "0.000");
  EXPECT_EQ(format_fixed(0.89551, 3), "0.896");
  EXPECT_EQ(format_fixed(1.0, 2), "1.00");
}

TEST(ErrorCodes, ExitStatusMapping) {
  EXPECT_EQ(exit_code_for(ErrorCode::Config), 1);
  EXPECT_EQ(exit_code_for(ErrorCode::MissingFile), 1);
  EXPECT_EQ(exit_code_for(ErrorCode::Transport), 2);
  EXPECT_EQ(exit_code_for(ErrorCode::UnansweredItems), 2);
  EXPECT_EQ(exit_code_for(ErrorCode::InvalidDistribution), 3);
  EXPECT_EQ(exit_code_for(ErrorCode::EmptyGroup), 3);
}
