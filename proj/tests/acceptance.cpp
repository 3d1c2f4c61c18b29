// Copyright 2026 The polyagg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance checks, one per criterion. Usage: acceptance N. Prints a single
// "criterion N: PASS|FAIL (...)" line and exits nonzero on failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "polyagg/error.hpp"
#include "polyagg/harness.hpp"
#include "polyagg/instances.hpp"
#include "polyagg/io.hpp"
#include "polyagg/kernels.hpp"
#include "polyagg/lp.hpp"
#include "polyagg/rules.hpp"
#include "polyagg/volume.hpp"

using namespace polyagg;
namespace fs = std::filesystem;

namespace {

// Tolerances, all fixed here.
constexpr double kQuantileTol = 0.02;       // 1
constexpr double kQuantileSeconds = 60.0;   // 1
constexpr double kGrunbaumSlack = 0.03;     // 2
constexpr double kBordaSlack = 0.03;        // 3, per agent
constexpr double kParetoTol = 1e-6;         // 6
constexpr double kVetoCutTol = 0.02;        // 8
constexpr double kVetoEpsilon = 0.05;       // 8
constexpr int kVetoChallenges = 1000;       // 8
constexpr double kCalibrationSe = 3.0;      // 9
constexpr double kExperimentMinutes = 30.0; // 11
constexpr double kRoundTripTol = 1e-7;      // 12

constexpr long kFullSamples = 100000;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string Fmt(const char* fmt, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, a);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

AggregationInput Prepare(const Momdp& m, long samples, std::uint64_t seed) {
  return fixture::prepared(m, samples, seed);
}

// The family used by criteria 2, 3 and 6: at most 3 states, actions, agents.
Momdp Instance(int k) { return fixture::small_random(k, 77000); }

Outcome Tightness() {
  Outcome out;
  for (int ell : {2, 3, 4}) {
    const auto t0 = std::chrono::steady_clock::now();
    const AggregationInput in = Prepare(gen_simplex_instance(ell), kFullSamples, 100 + ell);
    const RuleResult r = max_quantile(in, 0.01);
    const double secs = Seconds(t0);
    const double q = std::get<QuantileCertificate>(r.certificate).q_star;
    const double target = std::pow((ell - 1.0) / ell, ell - 1.0);
    const bool ok = std::abs(q - target) <= kQuantileTol && secs <= kQuantileSeconds;
    out.pass = out.pass && ok;
    out.detail += "l=" + std::to_string(ell) + " q*=" + Fmt("%.4f", q) + " target=" +
                  Fmt("%.4f", target) + " t=" + Fmt("%.1fs", secs) + (ok ? "" : " MISS") + "; ";
  }
  return out;
}

Outcome Grunbaum() {
  Outcome out;
  const double bound = 1.0 / std::numbers::e - kGrunbaumSlack;
  double worst = 1.0;
  for (int k = 0; k < 20; ++k) {
    const AggregationInput in = Prepare(Instance(k), kFullSamples, 200 + k);
    const OccupancyMeasure c = centroid_estimate(in.cloud, in.chart);
    for (int i = 0; i < in.num_agents(); ++i) {
      const double j = expected_return(c, in.rewards()[i]);
      const double below = in.cdfs[i](j);
      const double above = vol_fraction(in.cloud, at_least(in.rewards()[i], j)).fraction;
      worst = std::min({worst, below, above});
    }
  }
  out.pass = worst >= bound;
  out.detail = "min fraction " + Fmt("%.4f", worst) + " bound " + Fmt("%.4f", bound);
  return out;
}

Outcome BordaQuantile() {
  Outcome out;
  double worst = 1e9;
  for (int k = 0; k < 20; ++k) {
    const AggregationInput in = Prepare(Instance(k), kFullSamples, 200 + k);
    const RuleResult r = max_quantile(in, 0.01);
    const double q = std::get<QuantileCertificate>(r.certificate).q_star;
    const int n = in.num_agents();
    const double margin = borda_score(in.cdfs, r.returns) - (q * n - kBordaSlack * n);
    worst = std::min(worst, margin);
  }
  out.pass = worst >= 0.0;
  out.detail = "min Borda - (q* n - 0.03 n) = " + Fmt("%.4f", worst);
  return out;
}

Graph GraphFor(int k) { return random_graph(3 + k % 8, 0.25 + 0.02 * k, 4000 + k); }
CnfFormula CnfFor(int k) { return random_2cnf(2 + k % 7, 1 + k % 6, 5000 + k); }

// Plurality only needs the normalized maxima, so a small cloud suffices.
constexpr long kMisSamples = 2000;
constexpr long kSatSamples = 50000;

Outcome PluralityMis() {
  Outcome out;
  int bad = 0;
  for (int k = 0; k < 25; ++k) {
    const Graph g = GraphFor(k);
    const AggregationInput in = Prepare(gen_from_mis(g), kMisSamples, 300 + k);
    const RuleResult r = plurality(in);
    const int score = std::get<ApprovalCertificate>(r.certificate).score;
    if (score != brute_force_mis(g)) ++bad;
  }
  out.pass = bad == 0;
  out.detail = std::to_string(25 - bad) + "/25 graphs match";
  return out;
}

Outcome ApprovalMaxSat() {
  Outcome out;
  int bad = 0;
  for (int k = 0; k < 25; ++k) {
    const CnfFormula f = CnfFor(k);
    const AggregationInput in = Prepare(gen_from_max2sat(f), kSatSamples, 400 + k);
    const RuleResult r = alpha_approval(in, 0.95);
    const int score = std::get<ApprovalCertificate>(r.certificate).score;
    if (score != brute_force_max2sat(f)) ++bad;
  }
  out.pass = bad == 0;
  out.detail = std::to_string(25 - bad) + "/25 formulas match";
  return out;
}

constexpr long kRuleSamples = 20000;

std::vector<std::pair<RuleKind, RuleOptions>> AllRules() {
  std::vector<std::pair<RuleKind, RuleOptions>> rules;
  for (RuleKind k : {RuleKind::kVetoCore, RuleKind::kMaxQuantile, RuleKind::kApproval,
                     RuleKind::kPlurality, RuleKind::kBordaMilp, RuleKind::kBordaConcave,
                     RuleKind::kUtilitarian, RuleKind::kEgalitarian}) {
    rules.push_back({k, RuleOptions{}});
  }
  return rules;
}

Outcome Pareto() {
  Outcome out;
  std::vector<Momdp> instances;
  for (int k = 0; k < 20; ++k) instances.push_back(Instance(k));
  for (int ell : {2, 3, 4}) instances.push_back(gen_simplex_instance(ell));
  for (int k = 0; k < 4; ++k) instances.push_back(gen_from_mis(GraphFor(k)));
  for (int k = 0; k < 4; ++k) instances.push_back(gen_from_max2sat(random_2cnf(3, 1 + k % 3, 6000 + k)));
  double worst = 0.0;
  int runs = 0;
  int skipped = 0;
  for (size_t k = 0; k < instances.size(); ++k) {
    const AggregationInput in = Prepare(instances[k], kRuleSamples, 500 + k);
    for (const auto& [kind, opts] : AllRules()) {
      try {
        const RuleResult r = run_rule(kind, in, opts);
        worst = std::max(worst, pareto_gap(in.poly, in.rewards(), r.occupancy));
        ++runs;
      } catch (const Error& e) {
        // Only the concave Borda variant may legitimately have no region.
        if (e.kind() != ErrorKind::kConcaveRegionEmpty) throw;
        ++skipped;
      }
    }
  }
  out.pass = worst < kParetoTol;
  out.detail = std::to_string(runs) + " runs, max gap " + Fmt("%.3g", worst) + ", " +
               std::to_string(skipped) + " empty concave regions";
  return out;
}

Outcome Affine() {
  Outcome out;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> scale(0.5, 5.0);
  std::uniform_real_distribution<double> shift(-3.0, 3.0);
  int tables = 0;
  int results = 0;
  int total = 0;
  for (int k = 0; k < 10; ++k) {
    const Momdp m = Instance(k);
    Momdp t = m;
    for (auto& r : t.rewards) r = (scale(rng) * r.array() + shift(rng)).matrix();
    const AggregationInput a = Prepare(m, kRuleSamples, 700 + k);
    const AggregationInput b = Prepare(t, kRuleSamples, 700 + k);
    bool same = a.normalized.kept == b.normalized.kept;
    for (size_t i = 0; same && i < a.rewards().size(); ++i) {
      same = a.rewards()[i] == b.rewards()[i];
    }
    tables += same;
    for (const auto& [kind, opts] : AllRules()) {
      ++total;
      std::string ja, jb;
      try {
        ja = rule_result_to_json(run_rule(kind, a, opts));
      } catch (const Error& e) {
        ja = e.what();
      }
      try {
        jb = rule_result_to_json(run_rule(kind, b, opts));
      } catch (const Error& e) {
        jb = e.what();
      }
      results += ja == jb;
    }
  }
  out.pass = tables == 10 && results == total;
  out.detail = std::to_string(tables) + "/10 normalized models, " + std::to_string(results) + "/" +
               std::to_string(total) + " rule results identical";
  return out;
}

Outcome Veto() {
  Outcome out;
  std::vector<AggregationInput> inputs;
  std::vector<std::vector<double>> returns;  // per input, agent-major cloud returns
  std::vector<std::vector<double>> outcome;
  double worst_cut = 0.0;
  for (int k = 0; k < 12; ++k) {
    AggregationInput in = Prepare(Instance(k), kFullSamples, 800 + k);
    const int n = in.num_agents();
    if (n < 2 || n > 3) continue;
    const RuleResult r = veto_core(in, kVetoEpsilon);
    const auto& cert = std::get<VetoCertificate>(r.certificate);
    const Eigen::MatrixXd ret = kernels::evaluate_returns(in.cloud.points, in.rewards());
    const long N = in.cloud.size();
    // Cut fractions measured on the shared cloud.
    for (int step = 0; step < n; ++step) {
      const int agent = cert.order[step];
      long cut = 0;
      for (long p = 0; p < N; ++p) {
        bool inside = true;
        for (int prev = 0; prev < step; ++prev) {
          const int j = cert.order[prev];
          inside = inside && ret(p, j) >= cert.thresholds[j];
        }
        if (inside && ret(p, agent) < cert.thresholds[agent]) ++cut;
      }
      worst_cut = std::max(worst_cut, std::abs(static_cast<double>(cut) / N - cert.delta));
    }
    std::vector<double> flat(ret.data(), ret.data() + ret.size());
    returns.push_back(std::move(flat));
    outcome.push_back(r.returns);
    inputs.push_back(std::move(in));
  }

  // Coalition challenges: the maximal region {J_i > J_i(d), i in S}, or that
  // region cut further by a random halfspace through a cloud point.
  std::mt19937_64 rng(88);
  int blocked = 0;
  double closest = -1.0;
  for (int c = 0; c < kVetoChallenges; ++c) {
    const size_t k = rng() % inputs.size();
    const AggregationInput& in = inputs[k];
    const int n = in.num_agents();
    const long N = in.cloud.size();
    const std::uint32_t coalition = 1 + rng() % ((1u << n) - 1);
    const int size = std::popcount(coalition);
    Eigen::VectorXd dir;
    double offset = 0.0;
    const bool cut = c % 2 == 1;
    if (cut) {
      dir = Eigen::VectorXd::Zero(in.poly.dim());
      std::normal_distribution<double> g;
      for (int j = 0; j < dir.size(); ++j) dir[j] = g(rng);
      offset = in.cloud.points.row(rng() % N).dot(dir);
    }
    long inside = 0;
    for (long p = 0; p < N; ++p) {
      bool ok = true;
      for (int i = 0; i < n && ok; ++i) {
        if (coalition >> i & 1) ok = returns[k][i * N + p] > outcome[k][i];
      }
      if (ok && cut) ok = in.cloud.points.row(p).dot(dir) >= offset;
      inside += ok;
    }
    const double fraction = static_cast<double>(inside) / N;
    const double need = 1.0 - static_cast<double>(size) / n + kVetoEpsilon;
    closest = std::max(closest, fraction - need);
    blocked += fraction >= need;
  }
  out.pass = worst_cut <= kVetoCutTol && blocked == 0;
  out.detail = std::to_string(inputs.size()) + " instances, max |cut - delta| " +
               Fmt("%.4f", worst_cut) + ", " + std::to_string(blocked) + "/" +
               std::to_string(kVetoChallenges) + " challenges block (closest margin " +
               Fmt("%.4f", closest) + ")";
  return out;
}

Outcome Calibration() {
  Outcome out;
  double worst = 0.0;  // in standard errors
  int checks = 0;
  auto check = [&](const SampleCloud& cloud, const Halfspace& h, double exact) {
    const VolumeEstimate e = vol_fraction(cloud, h);
    worst = std::max(worst, std::abs(e.fraction - exact) / e.std_error);
    ++checks;
  };
  WalkParams params;
  params.count = kFullSamples;
  for (int d = 1; d <= 5; ++d) {
    const SampleCloud box = sample_uniform(affine_hull(fixture::box(d)), params, 900 + d);
    for (double t : {0.1, 0.5, 0.8}) check(box, Halfspace{fixture::unit(d, 0), t}, t);
    if (d >= 2) {
      Eigen::VectorXd row = fixture::unit(d, 0) + fixture::unit(d, 1);
      check(box, Halfspace{row, 0.6}, oracle::box_corner_fraction(0.6));
    }
    const SampleCloud simplex =
        sample_uniform(affine_hull(fixture::corner_simplex(d)), params, 950 + d);
    for (double t : {0.1, 0.3}) {
      check(simplex, at_least(fixture::unit(d, 0), t), oracle::simplex_corner_fraction(d, t));
    }
  }
  out.pass = worst <= kCalibrationSe;
  out.detail = std::to_string(checks) + " halfspaces, worst error " + Fmt("%.2f", worst) + " SE";
  return out;
}

Outcome MilpOracle() {
  Outcome out;
  int programs = 0;
  int bad = 0;
  auto compare = [&](const Momdp& m, double alpha, std::uint64_t seed, long samples) {
    const AggregationInput in = Prepare(m, samples, seed);
    if (in.num_agents() > 12) return;
    const RuleResult r = alpha_approval(in, alpha);
    const auto& cert = std::get<ApprovalCertificate>(r.certificate);
    MilpProgram prog;
    for (int i = 0; i < in.num_agents(); ++i) {
      prog.indicators.push_back(Indicator{in.rewards()[i], cert.thresholds[i], 1.0});
    }
    const Solution s = milp_solve(in.poly, prog);
    const double exhaustive = oracle::enumerate_milp(in.poly, prog);
    ++programs;
    if (s.status != SolveStatus::kOptimal || std::abs(s.objective_value - exhaustive) > 1e-9 ||
        cert.score != static_cast<int>(std::lround(exhaustive))) {
      ++bad;
    }
  };
  for (int k = 0; k < 25; ++k) compare(gen_from_mis(GraphFor(k)), 1.0, 300 + k, kMisSamples);
  for (int k = 0; k < 25; ++k) compare(gen_from_max2sat(CnfFor(k)), 0.95, 400 + k, kSatSamples);
  out.pass = bad == 0 && programs > 0;
  out.detail = std::to_string(programs - bad) + "/" + std::to_string(programs) +
               " programs match exhaustive enumeration";
  return out;
}

Outcome Experiment() {
  Outcome out;
  ExperimentSpec spec = parse_experiment_spec(R"({
    "seed": 2026, "instances": 5,
    "instance": {"generator": "warehouse", "m": 3, "n": 4},
    "rules": ["max-quantile", "borda-milp", {"name": "approval", "alpha": 0.9},
              "utilitarian", "egalitarian"],
    "samples": 100000})");
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentOutput res = run_experiment(spec);
  const double minutes = Seconds(t0) / 60.0;
  auto find = [&](const std::string& name) -> const Aggregate& {
    for (const Aggregate& a : res.aggregates) {
      if (a.rule == name) return a;
    }
    throw Error(ErrorKind::kInvalidInput, "missing rule " + name);
  };
  const Aggregate& mq = find("max-quantile");
  const Aggregate& bo = find("borda-milp");
  const Aggregate& ap = find("approval");
  const Aggregate& ut = find("utilitarian");
  const Aggregate& eg = find("egalitarian");
  // Slack: the larger standard error of the pair.
  auto gini_le = [](const Aggregate& a, const Aggregate& b) {
    return a.gini_mean <= b.gini_mean + std::max(a.gini_sem, b.gini_sem);
  };
  auto nash_ge = [](const Aggregate& a, const Aggregate& b) {
    return a.nash_mean + std::max(a.nash_sem, b.nash_sem) >= b.nash_mean;
  };
  int failures = 0;
  for (const Aggregate& a : res.aggregates) failures += a.failures;
  const bool order = gini_le(mq, bo) && gini_le(bo, ap) && gini_le(ap, ut);
  const bool nash = nash_ge(bo, ut) && nash_ge(bo, eg);
  out.pass = order && nash && failures == 0 && minutes < kExperimentMinutes;
  std::ostringstream s;
  s.precision(4);
  s << "gini mq=" << mq.gini_mean << "+-" << mq.gini_sem << " borda=" << bo.gini_mean << "+-"
    << bo.gini_sem << " approval=" << ap.gini_mean << "+-" << ap.gini_sem
    << " util=" << ut.gini_mean << "+-" << ut.gini_sem << "; nash borda=" << bo.nash_mean
    << " util=" << ut.nash_mean << " egal=" << eg.nash_mean << "; failures=" << failures
    << "; " << minutes << " min";
  out.detail = s.str();
  return out;
}

Outcome RoundTrips() {
  Outcome out;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  double worst = 0.0;
  bool json_ok = true;
  for (int k = 0; k < 20; ++k) {
    Momdp m = Instance(k);
    if (k % 2) {
      m.criterion = Criterion::kDiscounted;
      m.gamma = 0.9;
      m.d_init = Eigen::VectorXd::Constant(m.num_states, 1.0 / m.num_states);
    }
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::MatrixXd probs(m.num_states, m.num_actions);
      for (int s = 0; s < m.num_states; ++s) {
        for (int a = 0; a < m.num_actions; ++a) probs(s, a) = u(rng);
        probs.row(s) /= probs.row(s).sum();
      }
      const Policy back = occupancy_to_policy(policy_to_occupancy(Policy(probs), m));
      for (int s = 0; s < m.num_states; ++s) {
        for (int a = 0; a < m.num_actions; ++a) {
          worst = std::max(worst, std::abs(back(s, a) - probs(s, a)));
        }
      }
    }
    const std::string text = momdp_to_json(m);
    const Momdp again = momdp_from_json(text);
    json_ok = json_ok && again.transition == m.transition && momdp_to_json(again) == text;
    for (int i = 0; i < m.num_agents(); ++i) json_ok = json_ok && again.rewards[i] == m.rewards[i];
  }
  WarehouseParams wp;
  wp.m = 2;
  wp.seed = 3;
  const Momdp wh = gen_warehouse(wp).momdp;
  json_ok = json_ok && momdp_to_json(momdp_from_json(momdp_to_json(wh))) == momdp_to_json(wh);

  const fs::path root = fs::temp_directory_path() / "polyagg_acceptance_12";
  fs::remove_all(root);
  const std::string body = R"("seed": 99, "instances": 2, "instance": {"generator": "random",
      "states": 2, "actions": 3, "agents": 3}, "rules": ["veto-core", "max-quantile",
      "approval", "plurality", "borda-milp", "borda-concave", "utilitarian", "egalitarian"],
      "samples": 5000)";
  for (const char* run : {"a", "b"}) {
    run_experiment(parse_experiment_spec("{" + body + R"(, "output": ")" + (root / run).string() +
                                         "\"}"));
  }
  bool bytes = true;
  for (const char* f : {"metrics.csv", "aggregate.csv", "metrics.json", "results.json"}) {
    bytes = bytes && read_file((root / "a" / f).string()) == read_file((root / "b" / f).string());
  }
  fs::remove_all(root);
  out.pass = worst <= kRoundTripTol && json_ok && bytes;
  out.detail = "policy round trip max error " + Fmt("%.3g", worst) + ", json " +
               (json_ok ? "bitwise" : "DIFFERS") + ", pipeline " +
               (bytes ? "byte-identical" : "DIFFERS");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s CRITERION\n", argv[0]);
    return 2;
  }
  const int which = std::atoi(argv[1]);
  const std::vector<std::function<Outcome()>> criteria{
      Tightness, Grunbaum,    BordaQuantile, PluralityMis, ApprovalMaxSat, Pareto,
      Affine,    Veto,        Calibration,   MilpOracle,   Experiment,     RoundTrips};
  if (which < 1 || which > static_cast<int>(criteria.size())) {
    std::fprintf(stderr, "criterion must be 1..%zu\n", criteria.size());
    return 2;
  }
  Outcome o;
  try {
    o = criteria[which - 1]();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  std::printf("criterion %d: %s (%s)\n", which, o.pass ? "PASS" : "FAIL", o.detail.c_str());
  return o.pass ? 0 : 1;
}
