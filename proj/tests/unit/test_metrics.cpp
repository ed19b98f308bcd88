#include <gtest/gtest.h>

#include <random>
#include <set>

#include "adaptprobe/error.hpp"
#include "adaptprobe/metrics.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace adaptprobe;
using testing_support::make_survey;

namespace {

Distribution5 D(std::array<double, 5> v) { return Distribution5(v); }

ProbeResponse resp(const std::string& user, int qid, const std::array<double, 5>& p, Scenario s = Scenario::Profile,
                   bool degenerate = false) {
  ProbeResponse r;
  r.user_id = user;
  r.question_id = qid;
  r.scenario = s;
  r.distribution = degenerate ? OptionDistribution::one_hot(1 + static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()), true)
                              : OptionDistribution::from_normalized(p);
  r.selected_option_id = r.distribution.argmax_id();
  return r;
}

SelectionSequence seq(const std::string& user, Scenario s, std::vector<int> v) { return {user, s, std::move(v)}; }

CohortPartition partition_of(std::vector<std::pair<std::string, std::set<std::string>>> groups) {
  CohortPartition p;
  p.attribute = "test";
  for (auto& [label, users] : groups) p.groups.push_back({label, users});
  return p;
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Config;  // sentinel: nothing thrown
}

}  // namespace

// ---------------------------------------------------------------- Distribution5

TEST(Distribution5, RenormalizesSmallDrift) {
  auto d = D({0.2, 0.2, 0.2, 0.2, 0.2 + 5e-7});
  double s = 0;
  for (double v : d.values()) s += v;
  EXPECT_NEAR(s, 1.0, 1e-15);
}

TEST(Distribution5, RejectsLargeDriftAndNegatives) {
  EXPECT_EQ(code_of([] { D({0.3, 0.3, 0.3, 0.3, 0.3}); }), ErrorCode::InvalidDistribution);
  EXPECT_EQ(code_of([] { D({-0.1, 0.3, 0.3, 0.3, 0.2}); }), ErrorCode::InvalidDistribution);
}

// ---------------------------------------------------------------- jsd

TEST(Jsd, IdentityIsZero) {
  auto p = D({0.1, 0.7, 0.05, 0.0, 0.15});
  EXPECT_EQ(jsd(p, p), 0.0);
}

TEST(Jsd, DisjointSupportsGiveOne) { EXPECT_NEAR(jsd(D({1, 0, 0, 0, 0}), D({0, 1, 0, 0, 0})), 1.0, 1e-15); }

TEST(Jsd, UniformAgainstOneHot) {
  const oracle::Dist u{0.2, 0.2, 0.2, 0.2, 0.2}, e{1, 0, 0, 0, 0};
  // 0.5*KL(u||m) + 0.5*KL(e||m) with m = (0.6, 0.1, 0.1, 0.1, 0.1)
  const double expected = 0.5 * (0.2 * std::log2(0.2 / 0.6) + 4 * 0.2 * std::log2(0.2 / 0.1)) + 0.5 * std::log2(1 / 0.6);
  EXPECT_NEAR(jsd(D(u), D(e)), expected, 1e-12);
  EXPECT_NEAR(jsd(D(u), D(e)), oracle::jsd(u, e), 1e-12);
  EXPECT_NEAR(expected, 0.60999, 1e-5);
}

TEST(Jsd, MatchesEntropyFormOracleAndProperties) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    auto p = oracle::random_dist(rng), q = oracle::random_dist(rng);
    const double v = jsd(D(p), D(q));
    EXPECT_NEAR(v, oracle::jsd(p, q), 1e-12);
    EXPECT_EQ(v, jsd(D(q), D(p)));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    // identical bin permutation of both arguments
    std::array<int, 5> perm{0, 1, 2, 3, 4};
    std::shuffle(perm.begin(), perm.end(), rng);
    oracle::Dist pp{}, qq{};
    for (int k = 0; k < 5; ++k) {
      pp[k] = p[perm[k]];
      qq[k] = q[perm[k]];
    }
    EXPECT_NEAR(jsd(D(pp), D(qq)), v, 1e-12);
  }
}

TEST(Jsd, ZeroOnlyForEqualInputs) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 500; ++i) {
    auto p = oracle::random_dist(rng), q = oracle::random_dist(rng);
    const double maxdiff = [&] {
      double m = 0;
      for (int k = 0; k < 5; ++k) m = std::max(m, std::abs(p[k] - q[k]));
      return m;
    }();
    if (maxdiff > 1e-6) EXPECT_GT(jsd(D(p), D(q)), 0.0);
  }
}

// ---------------------------------------------------------------- centroid

TEST(Centroid, IdenticalInputsReturnThatInput) {
  auto p = D({0.1, 0.7, 0.05, 0.0, 0.15});
  std::vector<Distribution5> in(4, p);
  auto r = js_centroid(in);
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(r.centroid[k], p[k], 1e-9);
  EXPECT_NEAR(r.objective, 0.0, 1e-12);
}

TEST(Centroid, SingletonIsExact) {
  auto p = D({0.3, 0.3, 0.4, 0, 0});
  std::vector<Distribution5> in{p};
  auto r = js_centroid(in);
  EXPECT_EQ(r.centroid.values(), p.values());
  EXPECT_TRUE(r.converged);
}

TEST(Centroid, TwoDisjointOneHotsSplitEvenly) {
  std::vector<Distribution5> in{D({1, 0, 0, 0, 0}), D({0, 1, 0, 0, 0})};
  auto r = js_centroid(in);
  EXPECT_NEAR(r.centroid[0], 0.5, 1e-9);
  EXPECT_NEAR(r.centroid[1], 0.5, 1e-9);
  for (int k = 2; k < 5; ++k) EXPECT_EQ(r.centroid[k], 0.0);
}

TEST(Centroid, EmptyInputRejected) {
  std::vector<Distribution5> none;
  EXPECT_EQ(code_of([&] { js_centroid(none); }), ErrorCode::EmptyInput);
}

TEST(Centroid, NeverWorseThanMeanOrAnyInputAndNearOracle) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 40; ++t) {
    const int n = 2 + static_cast<int>(rng() % 5);
    std::vector<oracle::Dist> raw;
    std::vector<Distribution5> in;
    oracle::Dist mean{};
    for (int i = 0; i < n; ++i) {
      raw.push_back(oracle::random_dist(rng, 0.3));
      in.push_back(D(raw.back()));
      for (int k = 0; k < 5; ++k) mean[k] += raw.back()[k] / n;
    }
    auto r = js_centroid(in);
    EXPECT_LE(r.objective, oracle::centroid_objective(mean, raw) + 1e-12);
    for (const auto& p : raw) EXPECT_LE(r.objective, oracle::centroid_objective(p, raw) + 1e-12);
    EXPECT_NEAR(r.objective, oracle::centroid_objective(r.centroid.values(), raw), 1e-12);
    const double best = oracle::centroid_min_objective(raw, 10, rng);
    EXPECT_LE(r.objective, best + 1e-6);
    EXPECT_GE(r.objective, best - 1e-6);
  }
}

TEST(Centroid, PermutationEquivariant) {
  std::mt19937_64 rng(22);
  for (int t = 0; t < 30; ++t) {
    std::vector<oracle::Dist> raw(4);
    for (auto& p : raw) p = oracle::random_dist(rng, 0.25);
    std::array<int, 5> perm{0, 1, 2, 3, 4};
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Distribution5> a, b;
    for (const auto& p : raw) {
      a.push_back(D(p));
      oracle::Dist q{};
      for (int k = 0; k < 5; ++k) q[k] = p[perm[k]];
      b.push_back(D(q));
    }
    auto ca = js_centroid(a).centroid, cb = js_centroid(b).centroid;
    for (int k = 0; k < 5; ++k) EXPECT_NEAR(cb[k], ca[perm[k]], 1e-6);
  }
}

TEST(Centroid, SupportIsUnionOfInputSupports) {
  std::vector<Distribution5> in{D({0.5, 0.5, 0, 0, 0}), D({0, 0.2, 0.8, 0, 0})};
  auto r = js_centroid(in);
  EXPECT_GT(r.centroid[0], 0);
  EXPECT_GT(r.centroid[2], 0);
  EXPECT_EQ(r.centroid[3], 0.0);
  EXPECT_EQ(r.centroid[4], 0.0);
}

TEST(Centroid, IterationCapReportsNonConvergence) {
  std::vector<Distribution5> in{D({0.9, 0.1, 0, 0, 0}), D({0.1, 0.2, 0.7, 0, 0}), D({0, 0, 0.1, 0.1, 0.8})};
  CentroidOptions opts;
  opts.max_iterations = 1;
  opts.tolerance = 0;
  auto r = js_centroid(in, opts);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 1);
}

// ---------------------------------------------------------------- group distance and baseline

TEST(GroupDistance, IdenticalGroupsAreZero) {
  auto survey = make_survey(3);
  std::vector<ProbeResponse> ga, gb;
  for (int q = 1; q <= 3; ++q) {
    ga.push_back(resp("a", q, {0.1, 0.2, 0.3, 0.2, 0.2}));
    gb.push_back(resp("b", q, {0.1, 0.2, 0.3, 0.2, 0.2}));
  }
  EXPECT_NEAR(group_distance(ga, gb, survey), 0.0, 1e-12);
}

TEST(GroupDistance, OppositeOneHotsAreOne) {
  auto survey = make_survey(4);
  std::vector<ProbeResponse> ga, gb;
  for (int q = 1; q <= 4; ++q)
    for (const char* u : {"a1", "a2"}) {
      ga.push_back(resp(u, q, {1, 0, 0, 0, 0}));
      gb.push_back(resp(std::string(u) + "b", q, {0, 0, 0, 0, 1}));
    }
  EXPECT_NEAR(group_distance(ga, gb, survey), 1.0, 1e-12);
}

TEST(GroupDistance, MatchesGridRefinementOracle) {
  std::mt19937_64 rng(31);
  auto survey = make_survey(3);
  for (int t = 0; t < 5; ++t) {
    std::vector<ProbeResponse> ga, gb;
    std::map<int, std::vector<oracle::Dist>> ra, rb;
    for (int q = 1; q <= 3; ++q) {
      for (int u = 0; u < 3; ++u) {
        auto p = oracle::random_dist(rng, 0.2);
        ra[q].push_back(p);
        ga.push_back(resp("a" + std::to_string(u), q, p));
        auto r = oracle::random_dist(rng, 0.2);
        rb[q].push_back(r);
        gb.push_back(resp("b" + std::to_string(u), q, r));
      }
    }
    double expected = 0;
    for (int q = 1; q <= 3; ++q)
      expected += oracle::jsd(oracle::centroid_grid_refine(ra[q]), oracle::centroid_grid_refine(rb[q])) / 3.0;
    EXPECT_NEAR(group_distance(ga, gb, survey), expected, 1e-6);
  }
}

TEST(GroupDistance, SymmetricAndNonNegative) {
  std::mt19937_64 rng(32);
  auto survey = make_survey(2);
  std::vector<ProbeResponse> ga, gb;
  for (int q = 1; q <= 2; ++q)
    for (int u = 0; u < 4; ++u) {
      ga.push_back(resp("a" + std::to_string(u), q, oracle::random_dist(rng)));
      gb.push_back(resp("b" + std::to_string(u), q, oracle::random_dist(rng)));
    }
  const double ab = group_distance(ga, gb, survey), ba = group_distance(gb, ga, survey);
  EXPECT_GE(ab, 0.0);
  EXPECT_NEAR(ab, ba, 1e-9);
}

TEST(GroupDistance, MissingQuestionsAreDroppedAndReported) {
  auto survey = make_survey(3);
  std::vector<ProbeResponse> ga{resp("a", 1, {1, 0, 0, 0, 0}), resp("a", 2, {1, 0, 0, 0, 0})};
  std::vector<ProbeResponse> gb{resp("b", 1, {0, 0, 0, 0, 1}), resp("b", 3, {0, 0, 0, 0, 1})};
  std::vector<int> dropped;
  EXPECT_NEAR(group_distance(ga, gb, survey, {}, &dropped), 1.0, 1e-12);
  EXPECT_EQ(dropped, (std::vector<int>{2, 3}));
}

TEST(GroupDistance, Errors) {
  auto survey = make_survey(2);
  std::vector<ProbeResponse> ga{resp("a", 1, {1, 0, 0, 0, 0})}, gb{resp("b", 2, {1, 0, 0, 0, 0})}, none;
  EXPECT_EQ(code_of([&] { group_distance(ga, none, survey); }), ErrorCode::EmptyGroup);
  EXPECT_EQ(code_of([&] { group_distance(ga, gb, survey); }), ErrorCode::NoSharedQuestions);
}

TEST(GroupDistance, StrictDegenerateExcludesOneHotFallbacks) {
  auto survey = make_survey(1);
  std::vector<ProbeResponse> ga{resp("a1", 1, {0.5, 0.5, 0, 0, 0}), resp("a2", 1, {0, 0, 0, 0, 1}, Scenario::Profile, true)};
  std::vector<ProbeResponse> gb{resp("b1", 1, {0.5, 0.5, 0, 0, 0})};
  MetricOptions strict;
  strict.exclude_degenerate = true;
  EXPECT_NEAR(group_distance(ga, gb, survey, strict), 0.0, 1e-12);
  EXPECT_GT(group_distance(ga, gb, survey), 0.1);
}

TEST(Baseline, SingleGroupIsExactlyZero) {
  std::mt19937_64 rng(41);
  auto survey = make_survey(3);
  std::vector<ProbeResponse> all;
  std::set<std::string> users;
  for (int u = 0; u < 5; ++u) {
    users.insert("u" + std::to_string(u));
    for (int q = 1; q <= 3; ++q) all.push_back(resp("u" + std::to_string(u), q, oracle::random_dist(rng)));
  }
  EXPECT_EQ(adaptation_baseline(partition_of({{"all", users}}), all, survey), 0.0);
}

TEST(Baseline, OppositeOneHotGroupsAgainstSolvedGlobalCentroid) {
  auto survey = make_survey(2);
  std::vector<ProbeResponse> all;
  for (int q = 1; q <= 2; ++q) {
    all.push_back(resp("a", q, {1, 0, 0, 0, 0}));
    all.push_back(resp("b", q, {0, 0, 0, 0, 1}));
  }
  const oracle::Dist e1{1, 0, 0, 0, 0}, e5{0, 0, 0, 0, 1};
  const auto c_all = oracle::centroid_grid_refine({e1, e5});
  const double expected = 0.5 * (oracle::jsd(e1, c_all) + oracle::jsd(e5, c_all));
  EXPECT_NEAR(adaptation_baseline(partition_of({{"A", {"a"}}, {"B", {"b"}}}), all, survey), expected, 1e-6);
}

TEST(Baseline, EmptyGroupRejected) {
  auto survey = make_survey(1);
  std::vector<ProbeResponse> all{resp("a", 1, {1, 0, 0, 0, 0})};
  EXPECT_EQ(code_of([&] { adaptation_baseline(partition_of({{"A", {"a"}}, {"B", {}}}), all, survey); }),
            ErrorCode::EmptyGroup);
  EXPECT_EQ(code_of([&] { adaptation_baseline(partition_of({{"A", {"a"}}, {"B", {"zz"}}}), all, survey); }),
            ErrorCode::EmptyGroup);
}

TEST(Baseline, ResponsesOutsidePartitionRejected) {
  auto survey = make_survey(1);
  std::vector<ProbeResponse> all{resp("a", 1, {1, 0, 0, 0, 0}), resp("x", 1, {1, 0, 0, 0, 0})};
  EXPECT_EQ(code_of([&] { adaptation_baseline(partition_of({{"A", {"a"}}}), all, survey); }),
            ErrorCode::PreconditionViolation);
}

// ---------------------------------------------------------------- emd

TEST(Emd, ForcedCases) {
  const auto P = Scenario::Profile, Dg = Scenario::Dialogue;
  EXPECT_EQ(emd(seq("u", P, {1, 2, 3}), seq("u", Dg, {1, 2, 3})), 0.0);
  EXPECT_NEAR(emd(seq("u", P, {1, 1, 1}), seq("u", Dg, {5, 5, 5})), 4.0, 1e-12);
  EXPECT_NEAR(emd(seq("u", P, {1, 3}), seq("u", Dg, {2, 4})), 1.0, 1e-12);
}

TEST(Emd, Errors) {
  const auto P = Scenario::Profile;
  EXPECT_EQ(code_of([&] { emd(seq("u", P, {1, 2}), seq("u", P, {1})); }), ErrorCode::LengthMismatch);
  EXPECT_EQ(code_of([&] { emd(seq("u", P, {1, 6}), seq("u", P, {1, 1})); }), ErrorCode::ValueOutOfRange);
  EXPECT_EQ(code_of([&] { emd(seq("u", P, {0}), seq("u", P, {1})); }), ErrorCode::ValueOutOfRange);
}

TEST(Emd, MatchesTransportOracleAndMetricProperties) {
  std::mt19937_64 rng(51);
  std::uniform_int_distribution<int> opt(1, 5);
  auto draw = [&](int m) {
    std::vector<int> v(m);
    for (auto& x : v) x = opt(rng);
    return v;
  };
  for (int t = 0; t < 1000; ++t) {
    const int m = 1 + static_cast<int>(rng() % 18);
    auto a = draw(m), b = draw(m), c = draw(m);
    const auto P = Scenario::Profile;
    const double ab = emd(seq("u", P, a), seq("u", P, b));
    EXPECT_NEAR(ab, oracle::emd_transport(a, b), 1e-12);
    EXPECT_NEAR(ab, emd(seq("u", P, b), seq("u", P, a)), 1e-12);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 4.0);
    EXPECT_LE(emd(seq("u", P, a), seq("u", P, c)), ab + emd(seq("u", P, b), seq("u", P, c)) + 1e-12);
    auto shuffled = a;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_NEAR(emd(seq("u", P, shuffled), seq("u", P, b)), ab, 1e-12);
  }
}

// ---------------------------------------------------------------- consistency

std::vector<SequencePair> random_pairs(std::mt19937_64& rng, int n, int m) {
  std::uniform_int_distribution<int> opt(1, 5);
  std::vector<SequencePair> out;
  for (int i = 0; i < n; ++i) {
    std::vector<int> a(m), b(m);
    for (auto& x : a) x = opt(rng);
    for (auto& x : b) x = opt(rng);
    const auto id = "u" + std::to_string(i);
    out.emplace_back(seq(id, Scenario::Profile, a), seq(id, Scenario::Dialogue, b));
  }
  return out;
}

TEST(Consistency, ForcedCases) {
  std::vector<SequencePair> same{{seq("a", Scenario::Profile, {1, 2}), seq("a", Scenario::Dialogue, {1, 2})}};
  EXPECT_EQ(consistency_score(same), 0.0);
  std::vector<SequencePair> mixed{{seq("a", Scenario::Profile, {1, 1}), seq("a", Scenario::Dialogue, {5, 5})},
                                  {seq("b", Scenario::Profile, {3, 2}), seq("b", Scenario::Dialogue, {2, 3})}};
  EXPECT_NEAR(consistency_score(mixed), 2.0, 1e-12);
}

TEST(Consistency, EqualsDirectMeanOfEmd) {
  std::mt19937_64 rng(61);
  auto pairs = random_pairs(rng, 10, 18);
  double expected = 0;
  for (const auto& [a, b] : pairs) expected += oracle::emd_transport(a.values, b.values) / 10.0;
  EXPECT_NEAR(consistency_score(pairs), expected, 1e-12);
}

TEST(Consistency, Errors) {
  std::vector<SequencePair> none;
  EXPECT_EQ(code_of([&] { consistency_score(none); }), ErrorCode::EmptyInput);
  std::vector<SequencePair> bad{{seq("a", Scenario::Profile, {1}), seq("b", Scenario::Dialogue, {1})}};
  EXPECT_EQ(code_of([&] { consistency_score(bad); }), ErrorCode::UnmatchedPair);
}

TEST(Derangement, NoFixedPointsAndIsPermutation) {
  for (std::size_t n : {2u, 3u, 5u, 50u})
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
      auto p = random_derangement(n, seed);
      std::vector<bool> seen(n, false);
      for (std::size_t i = 0; i < n; ++i) {
        ASSERT_NE(p[i], i);
        ASSERT_FALSE(seen[p[i]]);
        seen[p[i]] = true;
      }
    }
}

TEST(Derangement, DeterministicPerSeedAndVariesAcrossSeeds) {
  EXPECT_EQ(random_derangement(20, 5), random_derangement(20, 5));
  std::set<std::vector<std::size_t>> distinct;
  for (std::uint64_t s = 0; s < 20; ++s) distinct.insert(random_derangement(20, s));
  EXPECT_GT(distinct.size(), 15u);
}

TEST(Derangement, RoughlyUniformForThree) {
  // the two derangements of 3 elements should appear about equally often
  std::map<std::vector<std::size_t>, int> counts;
  for (std::uint64_t s = 0; s < 4000; ++s) ++counts[random_derangement(3, s)];
  ASSERT_EQ(counts.size(), 2u);
  for (const auto& [_, c] : counts) EXPECT_NEAR(c, 2000, 200);
}

TEST(ConsistencyBaseline, TwoUsersForceTheSwap) {
  std::vector<SequencePair> users{{seq("a", Scenario::Profile, {1, 1}), seq("a", Scenario::Dialogue, {1, 2})},
                                  {seq("b", Scenario::Profile, {5, 5}), seq("b", Scenario::Dialogue, {4, 5})}};
  const double cross1 = oracle::emd_transport({1, 1}, {4, 5}), cross2 = oracle::emd_transport({5, 5}, {1, 2});
  EXPECT_NEAR(consistency_baseline(users, 99), 0.5 * (cross1 + cross2), 1e-12);
}

TEST(ConsistencyBaseline, ReplayedPairingOracle) {
  std::mt19937_64 rng(71);
  auto users = random_pairs(rng, 4, 18);
  const std::uint64_t seed = 1234;
  const auto perm = random_derangement(4, seed);
  double expected = 0;
  for (std::size_t i = 0; i < 4; ++i) expected += oracle::emd_transport(users[i].first.values, users[perm[i]].second.values) / 4;
  EXPECT_NEAR(consistency_baseline(users, seed), expected, 1e-12);
  EXPECT_EQ(consistency_baseline(users, seed), consistency_baseline(users, seed));
}

TEST(ConsistencyBaseline, TooFewUsers) {
  std::mt19937_64 rng(72);
  auto one = random_pairs(rng, 1, 3);
  EXPECT_EQ(code_of([&] { consistency_baseline(one, 1); }), ErrorCode::TooFewUsers);
}

// ---------------------------------------------------------------- ratio

TEST(Ratio, PublishedConsistencyRows) {
  const std::vector<std::array<double, 3>> rows = {{0.305, 0.312, 0.978}, {0.214, 0.225, 0.951}, {0.276, 0.276, 1.000},
                                                   {0.176, 0.190, 0.926}, {0.118, 0.128, 0.922}, {0.112, 0.125, 0.896}};
  for (const auto& r : rows) EXPECT_NEAR(divergence_ratio(r[0], r[1]), r[2], 0.001);
}

TEST(Ratio, SelfIsOneAndZeroBaselineRejected) {
  EXPECT_EQ(divergence_ratio(0.37, 0.37), 1.0);
  EXPECT_EQ(code_of([] { divergence_ratio(0.1, 0.0); }), ErrorCode::ZeroBaseline);
  EXPECT_EQ(code_of([] { divergence_ratio(0.1, -1.0); }), ErrorCode::ValueOutOfRange);
}

// ---------------------------------------------------------------- reports

TEST(DistanceReportTest, PairsInGroupOrderWithRatios) {
  auto survey = make_survey(2);
  std::vector<ProbeResponse> all;
  const std::vector<std::array<double, 5>> shapes = {{0.7, 0.2, 0.1, 0, 0}, {0.1, 0.6, 0.3, 0, 0}, {0, 0, 0.2, 0.3, 0.5}};
  CohortPartition part = partition_of({{"g1", {"a", "b"}}, {"g2", {"c"}}, {"g3", {"d"}}});
  const std::map<std::string, int> shape_of = {{"a", 0}, {"b", 0}, {"c", 1}, {"d", 2}};
  for (const auto& [u, s] : shape_of)
    for (int q = 1; q <= 2; ++q) all.push_back(resp(u, q, shapes[s]));
  auto report = distance_report(part, all, Scenario::Profile, survey);
  ASSERT_EQ(report.pairs.size(), 3u);
  EXPECT_EQ(report.pairs[0].group_a, "g1");
  EXPECT_EQ(report.pairs[0].group_b, "g2");
  EXPECT_EQ(report.pairs[2].group_a, "g2");
  EXPECT_GT(report.baseline, 0);
  for (const auto& p : report.pairs) {
    ASSERT_TRUE(p.ratio.has_value());
    EXPECT_NEAR(*p.ratio, p.distance / report.baseline, 1e-15);
    EXPECT_EQ(report.distance(p.group_b, p.group_a), p.distance);
  }
  auto round = distance_report_from_json(json::parse(to_json(report).dump()));
  EXPECT_EQ(to_json(round).dump(), to_json(report).dump());
}

TEST(DistanceReportTest, IdenticalGroupsFlagUndefinedBaseline) {
  auto survey = make_survey(2);
  std::vector<ProbeResponse> all;
  for (const char* u : {"a", "b", "c"})
    for (int q = 1; q <= 2; ++q) all.push_back(resp(u, q, {0.2, 0.2, 0.2, 0.2, 0.2}));
  auto report = distance_report(partition_of({{"x", {"a"}}, {"y", {"b"}}, {"z", {"c"}}}), all, Scenario::Profile, survey);
  EXPECT_EQ(report.baseline, 0.0);
  for (const auto& p : report.pairs) {
    EXPECT_EQ(p.distance, 0.0);
    EXPECT_FALSE(p.ratio.has_value());
  }
  EXPECT_TRUE(to_json(report).at("undefined_baseline").get<bool>());
}

TEST(DistanceReportTest, GroupsWithoutResponsesArePrunedWithWarning) {
  auto survey = make_survey(1);
  std::vector<ProbeResponse> all{resp("a", 1, {1, 0, 0, 0, 0}), resp("b", 1, {0, 1, 0, 0, 0})};
  auto report =
      distance_report(partition_of({{"x", {"a"}}, {"y", {"b"}}, {"z", {"c"}}}), all, Scenario::Profile, survey);
  EXPECT_EQ(report.groups.size(), 2u);
  EXPECT_EQ(report.pairs.size(), 1u);
  EXPECT_FALSE(report.warnings.empty());
}

TEST(ConsistencyReportTest, PairsUsersAndReplaysPairing) {
  std::mt19937_64 rng(81);
  auto survey = make_survey(3);
  std::vector<ProbeResponse> all;
  for (int u = 0; u < 5; ++u)
    for (auto s : {Scenario::Profile, Scenario::Dialogue})
      for (int q = 1; q <= 3; ++q) all.push_back(resp("u" + std::to_string(u), q, oracle::random_dist(rng, 0.0), s));
  auto report = consistency_report(all, survey, 77);
  EXPECT_EQ(report.per_user_emd.size(), 5u);
  EXPECT_EQ(report.pairing.size(), 5u);
  for (const auto& [a, b] : report.pairing) EXPECT_NE(a, b);
  EXPECT_GE(report.mean_emd, 0.0);
  EXPECT_LE(report.mean_emd, 4.0);
  EXPECT_LE(report.baseline_emd, 4.0);
  if (report.ratio) EXPECT_NEAR(*report.ratio, report.mean_emd / report.baseline_emd, 1e-15);
  auto round = consistency_report_from_json(json::parse(to_json(report).dump()));
  EXPECT_EQ(to_json(round).dump(), to_json(report).dump());
}

TEST(Centroid, IdenticalInputsReturnThemExactly) {
  const Distribution5 p({0.1, 0.6, 0.2, 0.1, 0.0});
  std::vector<Distribution5> same(6, p);
  auto r = js_centroid(same);
  EXPECT_EQ(r.centroid.values(), p.values());
  EXPECT_EQ(r.objective, 0.0);
}
