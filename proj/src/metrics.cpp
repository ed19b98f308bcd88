#include "adaptprobe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "adaptprobe/error.hpp"

namespace adaptprobe {

namespace {

constexpr double kRenormTolerance = 1e-6;
constexpr double kStationarity = 1e-7;

void require_valid(const Distribution5& d) {
  double sum = 0;
  for (double v : d.values()) {
    if (!std::isfinite(v) || v < 0) fail(ErrorCode::InvalidDistribution, "negative or non-finite entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail(ErrorCode::InvalidDistribution, "entries sum to " + std::to_string(sum));
}

std::map<int, std::vector<Distribution5>> by_question(std::span<const ProbeResponse> responses,
                                                      const MetricOptions& options) {
  std::map<int, std::vector<Distribution5>> out;
  for (const auto& r : responses) {
    if (options.exclude_degenerate && r.distribution.degenerate()) continue;
    out[r.question_id].emplace_back(r.distribution);
  }
  return out;
}

}  // namespace

Distribution5::Distribution5(const std::array<double, kOptionCount>& values) {
  double sum = 0;
  for (double v : values) {
    if (!std::isfinite(v) || v < 0) fail(ErrorCode::InvalidDistribution, "negative or non-finite entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kRenormTolerance)
    fail(ErrorCode::InvalidDistribution, "entries sum to " + std::to_string(sum));
  for (int k = 0; k < kOptionCount; ++k) p_[k] = values[k] / sum;
}

double jsd(const Distribution5& p, const Distribution5& q) {
  double total = 0.0;
  for (int k = 0; k < kOptionCount; ++k) {
    const double m = 0.5 * (p[k] + q[k]);
    const double a = p[k] > 0 ? 0.5 * p[k] * std::log2(p[k] / m) : 0.0;
    const double b = q[k] > 0 ? 0.5 * q[k] * std::log2(q[k] / m) : 0.0;
    total += a + b;  // one rounding per bin keeps jsd(p, q) == jsd(q, p) bit for bit
  }
  return std::clamp(total, 0.0, 1.0);
}

double centroid_objective(const Distribution5& c, std::span<const Distribution5> inputs) {
  double total = 0.0;
  for (const auto& p : inputs) total += jsd(c, p);
  return total;
}

CentroidResult js_centroid(std::span<const Distribution5> inputs, const CentroidOptions& options) {
  if (inputs.empty()) fail(ErrorCode::EmptyInput, "centroid of an empty set");
  for (const auto& p : inputs) require_valid(p);
  const double n = static_cast<double>(inputs.size());

  std::array<double, kOptionCount> c{};
  for (const auto& p : inputs)
    for (int k = 0; k < kOptionCount; ++k) c[k] += p[k] / n;

  CentroidResult result;
  if (std::all_of(inputs.begin(), inputs.end(),
                  [&](const Distribution5& p) { return p.values() == inputs.front().values(); })) {
    result.centroid = inputs.front();
    result.objective = 0.0;
    result.converged = true;
    return result;
  }

  auto objective = [&](const std::array<double, kOptionCount>& x) {
    double total = 0.0;
    for (const auto& p : inputs) {
      for (int k = 0; k < kOptionCount; ++k) {
        const double m = 0.5 * (x[k] + p[k]);
        if (x[k] > 0) total += 0.5 * x[k] * std::log2(x[k] / m);
        if (p[k] > 0) total += 0.5 * p[k] * std::log2(p[k] / m);
      }
    }
    return total;
  };

  // The minimizer has the same support as the mean (the gradient diverges to
  // -inf on any empty bin some input covers), and multiplicative updates
  // never leave that support.
  double f = objective(c);
  double step = 1.0;
  int it = 0;
  bool converged = false;
  for (; it < options.max_iterations; ++it) {
    std::array<double, kOptionCount> grad{};
    for (int k = 0; k < kOptionCount; ++k) {
      if (c[k] <= 0) continue;
      for (const auto& p : inputs) grad[k] += 0.5 * std::log2(2.0 * c[k] / (c[k] + p[k]));
      grad[k] /= n;
    }
    double gbar = 0, glo = INFINITY, ghi = -INFINITY;
    for (int k = 0; k < kOptionCount; ++k) {
      if (c[k] <= 0) continue;
      gbar += c[k] * grad[k];
      glo = std::min(glo, grad[k]);
      ghi = std::max(ghi, grad[k]);
    }
    // at the optimum the gradient is constant across the support
    const bool stationary = ghi - glo < kStationarity;

    bool accepted = false;
    while (step > 1e-30) {
      std::array<double, kOptionCount> next{};
      double z = 0;
      for (int k = 0; k < kOptionCount; ++k) {
        next[k] = c[k] > 0 ? c[k] * std::exp(-step * (grad[k] - gbar)) : 0.0;
        z += next[k];
      }
      for (auto& v : next) v /= z;
      const double fn = objective(next);
      if (fn < f) {
        const double improvement = f - fn;
        c = next;
        f = fn;
        accepted = true;
        step = std::min(step * 2.0, 1e6);
        if (improvement < options.tolerance && stationary) converged = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) converged = true;  // no descent direction left at machine precision
    if (converged) {
      ++it;
      break;
    }
  }

  result.centroid = Distribution5(c);
  result.objective = f;
  result.iterations = it;
  result.converged = converged;
  return result;
}

CentroidTable centroid_table(std::span<const ProbeResponse> responses, const MetricOptions& options) {
  CentroidTable out;
  for (const auto& [qid, dists] : by_question(responses, options)) out.emplace(qid, js_centroid(dists).centroid);
  return out;
}

double group_distance(const CentroidTable& ca, const CentroidTable& cb, const Survey& survey,
                      std::vector<int>* dropped) {
  if (ca.empty() || cb.empty()) fail(ErrorCode::EmptyGroup, "group without responses");
  double total = 0.0;
  std::size_t shared = 0;
  for (const auto& q : survey.questions()) {
    auto a = ca.find(q.id);
    auto b = cb.find(q.id);
    if (a == ca.end() || b == cb.end()) {
      if (dropped) dropped->push_back(q.id);
      continue;
    }
    total += jsd(a->second, b->second);
    ++shared;
  }
  if (shared == 0) fail(ErrorCode::NoSharedQuestions, "the groups answered no common question");
  return total / static_cast<double>(shared);
}

double group_distance(std::span<const ProbeResponse> ga, std::span<const ProbeResponse> gb, const Survey& survey,
                      const MetricOptions& options, std::vector<int>* dropped) {
  if (ga.empty() || gb.empty()) fail(ErrorCode::EmptyGroup, "group without responses");
  return group_distance(centroid_table(ga, options), centroid_table(gb, options), survey, dropped);
}

double adaptation_baseline(const CohortPartition& partition, std::span<const ProbeResponse> responses,
                           const Survey& survey, const MetricOptions& options) {
  if (partition.groups.empty()) fail(ErrorCode::EmptyGroup, "partition has no groups");
  const auto members = partition.membership();
  std::map<std::string, std::vector<ProbeResponse>> grouped;
  for (const auto& g : partition.groups) {
    if (g.user_ids.empty()) fail(ErrorCode::EmptyGroup, "group '" + g.label + "' is empty");
    grouped[g.label];
  }
  for (const auto& r : responses) {
    auto it = members.find(r.user_id);
    if (it == members.end())
      fail(ErrorCode::PreconditionViolation, "response from " + r.user_id + " is outside the partition");
    grouped[it->second].push_back(r);
  }

  const auto global = centroid_table(responses, options);
  double total = 0.0;
  std::size_t terms = 0;
  for (const auto& g : partition.groups) {
    const auto table = centroid_table(grouped[g.label], options);
    if (table.empty()) fail(ErrorCode::EmptyGroup, "group '" + g.label + "' has no responses");
    for (const auto& q : survey.questions()) {
      auto gc = table.find(q.id);
      auto ac = global.find(q.id);
      if (gc == table.end() || ac == global.end()) continue;
      total += jsd(gc->second, ac->second);
      ++terms;
    }
  }
  if (terms == 0) fail(ErrorCode::NoSharedQuestions, "no question answered by any group");
  return total / static_cast<double>(terms);
}

// ---------------------------------------------------------------- consistency

double emd(const SelectionSequence& su, const SelectionSequence& sd) {
  if (su.values.size() != sd.values.size())
    fail(ErrorCode::LengthMismatch, std::to_string(su.values.size()) + " vs " + std::to_string(sd.values.size()));
  if (su.values.empty()) fail(ErrorCode::EmptyInput, "empty selection sequences");
  std::array<int, kOptionCount> hu{}, hd{};
  for (std::size_t j = 0; j < su.values.size(); ++j) {
    for (int v : {su.values[j], sd.values[j]})
      if (v < 1 || v > kOptionCount) fail(ErrorCode::ValueOutOfRange, "option " + std::to_string(v));
    ++hu[su.values[j] - 1];
    ++hd[sd.values[j] - 1];
  }
  const double m = static_cast<double>(su.values.size());
  double total = 0.0;
  int cu = 0, cd = 0;
  for (int x = 0; x < kOptionCount - 1; ++x) {
    cu += hu[x];
    cd += hd[x];
    total += std::abs(static_cast<double>(cu - cd)) / m;
  }
  return total;
}

double consistency_score(std::span<const SequencePair> pairs) {
  if (pairs.empty()) fail(ErrorCode::EmptyInput, "no matched pairs");
  double total = 0.0;
  for (const auto& [su, sd] : pairs) {
    if (su.user_id != sd.user_id) fail(ErrorCode::UnmatchedPair, su.user_id + " vs " + sd.user_id);
    if (su.scenario != Scenario::Profile || sd.scenario != Scenario::Dialogue)
      fail(ErrorCode::UnmatchedPair, su.user_id + ": pair must be (profile, dialogue)");
    total += emd(su, sd);
  }
  return total / static_cast<double>(pairs.size());
}

std::vector<std::size_t> random_derangement(std::size_t n, std::uint64_t seed) {
  if (n < 2) fail(ErrorCode::TooFewUsers, "a derangement needs at least 2 users");
  SeededRng rng(seed);
  std::vector<std::size_t> perm(n);
  while (true) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    bool fixed = false;
    for (std::size_t i = 0; i < n && !fixed; ++i) fixed = perm[i] == i;
    // rejection keeps the draw uniform over derangements
    if (!fixed) return perm;
  }
}

double consistency_baseline(std::span<const SequencePair> users, std::uint64_t seed) {
  if (users.size() < 2) fail(ErrorCode::TooFewUsers, "need at least 2 users");
  const auto perm = random_derangement(users.size(), seed);
  double total = 0.0;
  for (std::size_t i = 0; i < users.size(); ++i) total += emd(users[i].first, users[perm[i]].second);
  return total / static_cast<double>(users.size());
}

double divergence_ratio(double measured, double baseline) {
  if (baseline == 0.0) fail(ErrorCode::ZeroBaseline, "baseline is zero");
  if (baseline < 0.0 || measured < 0.0) fail(ErrorCode::ValueOutOfRange, "negative divergence");
  return measured / baseline;
}

// ---------------------------------------------------------------- reports

double DistanceReport::distance(const std::string& a, const std::string& b) const {
  for (const auto& p : pairs)
    if ((p.group_a == a && p.group_b == b) || (p.group_a == b && p.group_b == a)) return p.distance;
  if (a == b) return 0.0;
  fail(ErrorCode::EmptyGroup, "no pair " + a + " / " + b);
}

DistanceReport distance_report(const CohortPartition& partition, std::span<const ProbeResponse> responses,
                               Scenario scenario, const Survey& survey, const MetricOptions& options) {
  DistanceReport report;
  report.attribute = partition.attribute;
  report.scenario = scenario;
  report.provenance = std::string(to_string(partition.provenance));
  report.warnings = partition.warnings;

  const auto members = partition.membership();
  std::map<std::string, std::vector<ProbeResponse>> grouped;
  std::vector<ProbeResponse> in_scope;
  std::size_t outside = 0;
  for (const auto& r : responses) {
    if (r.scenario != scenario) continue;
    auto it = members.find(r.user_id);
    if (it == members.end()) {
      ++outside;
      continue;
    }
    grouped[it->second].push_back(r);
    in_scope.push_back(r);
  }
  if (outside > 0) report.warnings.push_back(std::to_string(outside) + " response(s) from users outside the partition ignored");

  CohortPartition present = partition;
  present.groups.clear();
  std::vector<CentroidTable> tables;
  for (const auto& g : partition.groups) {
    const auto& rs = grouped[g.label];
    auto table = centroid_table(rs, options);
    if (table.empty()) {
      report.warnings.push_back("group '" + g.label + "' has no " + std::string(to_string(scenario)) +
                                " responses and was pruned");
      continue;
    }
    std::set<std::string> users;
    for (const auto& r : rs) users.insert(r.user_id);
    report.groups.emplace_back(g.label, users.size());
    present.groups.push_back({g.label, users});
    tables.push_back(std::move(table));
  }
  if (present.groups.empty()) fail(ErrorCode::EmptyGroup, "no group has responses for " + partition.attribute);

  std::vector<ProbeResponse> covered;
  for (const auto& r : in_scope)
    for (const auto& g : present.groups)
      if (g.user_ids.count(r.user_id)) covered.push_back(r);
  report.baseline = adaptation_baseline(present, covered, survey, options);

  std::set<int> dropped;
  for (std::size_t a = 0; a < tables.size(); ++a) {
    for (std::size_t b = a + 1; b < tables.size(); ++b) {
      std::vector<int> d;
      PairDistance pd;
      pd.group_a = present.groups[a].label;
      pd.group_b = present.groups[b].label;
      pd.distance = group_distance(tables[a], tables[b], survey, &d);
      if (report.baseline > 0) pd.ratio = divergence_ratio(pd.distance, report.baseline);
      dropped.insert(d.begin(), d.end());
      report.pairs.push_back(std::move(pd));
    }
  }
  report.dropped_questions.assign(dropped.begin(), dropped.end());
  for (int q : report.dropped_questions)
    report.warnings.push_back("question " + std::to_string(q) + " missing from some group; skipped for those pairs");
  return report;
}

ConsistencyReport consistency_report(std::span<const ProbeResponse> responses, const Survey& survey,
                                     std::uint64_t pairing_seed) {
  std::map<std::string, std::vector<ProbeResponse>> profile, dialogue;
  for (const auto& r : responses) (r.scenario == Scenario::Profile ? profile : dialogue)[r.user_id].push_back(r);
  std::vector<SequencePair> pairs;
  for (const auto& [user, rs] : profile) {
    auto it = dialogue.find(user);
    if (it == dialogue.end()) continue;
    pairs.emplace_back(assemble_sequence(rs, survey), assemble_sequence(it->second, survey));
  }
  ConsistencyReport report;
  report.pairing_seed = pairing_seed;
  report.mean_emd = consistency_score(pairs);
  for (const auto& [su, sd] : pairs) report.per_user_emd[su.user_id] = emd(su, sd);
  report.baseline_emd = consistency_baseline(pairs, pairing_seed);
  const auto perm = random_derangement(pairs.size(), pairing_seed);
  for (std::size_t i = 0; i < pairs.size(); ++i)
    report.pairing.emplace_back(pairs[i].first.user_id, pairs[perm[i]].second.user_id);
  if (report.baseline_emd > 0) report.ratio = divergence_ratio(report.mean_emd, report.baseline_emd);
  return report;
}

json to_json(const DistanceReport& r) {
  json groups = json::array();
  for (const auto& [label, n] : r.groups) groups.push_back({{"label", label}, {"users", n}});
  json pairs = json::array();
  for (const auto& p : r.pairs)
    pairs.push_back({{"a", p.group_a},
                     {"b", p.group_b},
                     {"distance", p.distance},
                     {"ratio", p.ratio ? json(*p.ratio) : json(nullptr)}});
  return {{"kind", "distance"},
          {"attribute", r.attribute},
          {"scenario", to_string(r.scenario)},
          {"provenance", r.provenance},
          {"groups", groups},
          {"baseline", r.baseline},
          {"undefined_baseline", r.baseline == 0.0},
          {"pairs", pairs},
          {"dropped_questions", r.dropped_questions},
          {"warnings", r.warnings}};
}

json to_json(const ConsistencyReport& r) {
  json per_user = json::object();
  for (const auto& [u, v] : r.per_user_emd) per_user[u] = v;
  json pairing = json::array();
  for (const auto& [a, b] : r.pairing) pairing.push_back({a, b});
  return {{"kind", "consistency"},
          {"mean_emd", r.mean_emd},
          {"baseline_emd", r.baseline_emd},
          {"ratio", r.ratio ? json(*r.ratio) : json(nullptr)},
          {"undefined_baseline", !r.ratio.has_value()},
          {"pairing_seed", r.pairing_seed},
          {"pairing", pairing},
          {"per_user_emd", per_user}};
}

DistanceReport distance_report_from_json(const json& j) {
  try {
    DistanceReport r;
    r.attribute = j.at("attribute").get<std::string>();
    r.scenario = parse_scenario(j.at("scenario").get<std::string>());
    r.provenance = j.value("provenance", std::string{});
    for (const auto& g : j.at("groups")) r.groups.emplace_back(g.at("label").get<std::string>(), g.at("users").get<std::size_t>());
    r.baseline = j.at("baseline").get<double>();
    for (const auto& p : j.at("pairs")) {
      PairDistance pd{p.at("a").get<std::string>(), p.at("b").get<std::string>(), p.at("distance").get<double>(), {}};
      if (!p.at("ratio").is_null()) pd.ratio = p.at("ratio").get<double>();
      r.pairs.push_back(std::move(pd));
    }
    r.dropped_questions = j.value("dropped_questions", std::vector<int>{});
    r.warnings = j.value("warnings", std::vector<std::string>{});
    return r;
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaViolation, std::string("distance report: ") + e.what());
  }
}

ConsistencyReport consistency_report_from_json(const json& j) {
  try {
    ConsistencyReport r;
    r.mean_emd = j.at("mean_emd").get<double>();
    r.baseline_emd = j.at("baseline_emd").get<double>();
    if (!j.at("ratio").is_null()) r.ratio = j.at("ratio").get<double>();
    r.pairing_seed = j.at("pairing_seed").get<std::uint64_t>();
    for (const auto& p : j.value("pairing", json::array())) r.pairing.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
    for (auto& [u, v] : j.at("per_user_emd").items()) r.per_user_emd[u] = v.get<double>();
    return r;
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaViolation, std::string("consistency report: ") + e.what());
  }
}

}  // namespace adaptprobe
