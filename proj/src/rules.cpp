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

#include "polyagg/rules.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "polyagg/kernels.hpp"
#include "polyagg/simplex.hpp"

namespace polyagg {
namespace {

constexpr double kPluralitySlack = 1e-6;
constexpr int kConcaveKnots = 20;
constexpr int kVetoMaxBisections = 60;
constexpr double kVetoBisectionTol = 1e-7;

// Wall clock plus LP counter, started when a rule begins.
class Meter {
 public:
  Meter()
      : start_(std::chrono::steady_clock::now()),
        lp_start_(simplex::solves_on_this_thread()) {}

  Diagnostics Finish(long samples) const {
    Diagnostics d;
    d.lp_solves = simplex::solves_on_this_thread() - lp_start_;
    d.samples_used = samples;
    d.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
                      .count();
    return d;
  }

 private:
  std::chrono::steady_clock::time_point start_;
  long lp_start_;
};

RuleResult MakeResult(std::string rule, const AggregationInput& in,
                      OccupancyMeasure d, Certificate cert, Diagnostics diag) {
  std::vector<double> returns;
  for (const RewardTable& r : in.rewards()) returns.push_back(expected_return(d, r));
  Policy policy = occupancy_to_policy(d);
  return RuleResult{std::move(rule), std::move(d),        std::move(policy),
                    std::move(returns), std::move(cert), diag};
}

std::uint64_t DeriveSeed(std::uint64_t seed, int stream) {
  return kernels::shard_seed(seed, 1000 + stream);
}

bool Feasible(const OccupancyPolytope& poly, std::span<const Halfspace> rows) {
  const Solution s =
      solve_lp(poly, rows, LinearObjective{Eigen::VectorXd::Zero(poly.dim()), true});
  if (s.status == SolveStatus::kIterationLimit) {
    throw Error(ErrorKind::kIterationLimit, "feasibility LP hit the pivot cap");
  }
  return s.status == SolveStatus::kOptimal;
}

double Optimize(const OccupancyPolytope& poly, std::span<const Halfspace> rows,
                const RewardTable& r, bool maximize) {
  const Solution s = solve_lp(poly, rows, LinearObjective{r, maximize});
  if (s.status != SolveStatus::kOptimal) {
    throw Error(ErrorKind::kEmptyRegion, "region became empty");
  }
  return s.objective_value;
}

std::vector<double> AchievedReturns(const AggregationInput& in,
                                    const OccupancyMeasure& d) {
  std::vector<double> out;
  for (const RewardTable& r : in.rewards()) out.push_back(expected_return(d, r));
  return out;
}

std::vector<int> CheckedOrder(std::span<const int> order, int n) {
  std::vector<int> out(n);
  std::iota(out.begin(), out.end(), 0);
  if (order.empty()) return out;
  std::vector<int> sorted(order.begin(), order.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted != out) {
    throw Error(ErrorKind::kInvalidInput, "veto order must be a permutation of the agents");
  }
  return std::vector<int>(order.begin(), order.end());
}

int LevelCount(double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw Error(ErrorKind::kInvalidInput, "epsilon must lie in (0, 1]");
  }
  const long k = std::lround(1.0 / epsilon);
  if (std::abs(static_cast<double>(k) * epsilon - 1.0) > 1e-9) {
    throw Error(ErrorKind::kInvalidInput, "1/epsilon must be an integer");
  }
  return static_cast<int>(k);
}

struct Knot {
  double x;
  double y;
};

// Upper concave envelope of knots sorted by x.
std::vector<Knot> UpperHull(const std::vector<Knot>& knots) {
  std::vector<Knot> hull;
  for (const Knot& p : knots) {
    if (!hull.empty() && p.x <= hull.back().x) {
      hull.back().y = std::max(hull.back().y, p.y);
      continue;
    }
    while (hull.size() >= 2) {
      const Knot& o = hull[hull.size() - 2];
      const Knot& a = hull.back();
      const double cross = (a.x - o.x) * (p.y - o.y) - (a.y - o.y) * (p.x - o.x);
      if (cross < 0.0) break;
      hull.pop_back();
    }
    hull.push_back(p);
  }
  return hull;
}

}  // namespace

AggregationInput prepare(const Momdp& raw, const PrepareOptions& options) {
  OccupancyPolytope poly = build_polytope(raw);
  NormalizedMomdp normalized = normalize_rewards(raw, poly);
  HullChart chart = affine_hull(poly);

  std::optional<SampleCloud> cloud;
  if (!options.cloud_cache.empty() && std::filesystem::exists(options.cloud_cache)) {
    SampleCloud cached = load_cloud(options.cloud_cache);
    const long burn = options.walk.burn_in < 0 ? 1000L * chart.dim : options.walk.burn_in;
    const long thin =
        std::max(1L, options.walk.thinning < 0 ? static_cast<long>(chart.dim)
                                               : options.walk.thinning);
    const bool matches =
        cached.seed == options.seed && cached.num_states == poly.num_states() &&
        cached.num_actions == poly.num_actions() &&
        (chart.dim == 0 ? cached.single_point
                        : cached.params.count == options.walk.count &&
                              cached.params.burn_in == burn &&
                              cached.params.thinning == thin &&
                              cached.params.shards == std::max(1, options.walk.shards));
    if (matches) cloud = std::move(cached);
  }
  if (!cloud) {
    cloud = sample_uniform(chart, options.walk, options.seed);
    if (!options.cloud_cache.empty()) save_cloud(*cloud, options.cloud_cache);
  }
  std::vector<ReturnCdf> cdfs =
      estimate_cdfs(*cloud, normalized.momdp.rewards, options.cdf_kind);
  return AggregationInput{std::move(normalized), std::move(poly),   std::move(chart),
                          std::move(*cloud),     std::move(cdfs),   options.walk,
                          options.seed};
}

double borda_score(std::span<const ReturnCdf> cdfs, std::span<const double> returns) {
  double score = 0.0;
  for (size_t i = 0; i < cdfs.size(); ++i) score += cdfs[i](returns[i]);
  return score;
}

double approval_threshold(const ReturnCdf& cdf, double alpha) {
  if (alpha >= 1.0) return 1.0 - kPluralitySlack;
  return quantile_inverse(cdf, alpha);
}

RuleResult veto_core(const AggregationInput& in, double epsilon,
                     std::span<const int> order) {
  const Meter meter;
  const int n = in.num_agents();
  if (!(epsilon > 0.0 && epsilon < 1.0 / n)) {
    throw Error(ErrorKind::kInvalidInput, "veto core needs epsilon in (0, 1/n)");
  }
  VetoCertificate cert;
  cert.epsilon = epsilon;
  cert.delta = 1.0 / n - epsilon / (n + 1);
  cert.order = CheckedOrder(order, n);
  cert.thresholds.assign(n, -simplex::kInf);
  cert.cut_fractions.assign(n, 0.0);

  std::vector<Halfspace> region;
  double remaining = 1.0;  // running estimate of vol(O_{i-1}) / vol(O)
  long samples = in.cloud.size();
  for (int step = 0; step < n; ++step) {
    const int agent = cert.order[step];
    const RewardTable& reward = in.rewards()[agent];
    SampleCloud local;
    const SampleCloud* cloud = &in.cloud;
    if (step > 0) {
      const HullChart chart = affine_hull(in.poly, region);
      local = sample_uniform(chart, in.walk, DeriveSeed(in.seed, step));
      cloud = &local;
      samples += local.size();
    }
    const Eigen::MatrixXd ret = kernels::evaluate_returns(
        cloud->points, std::span<const RewardTable>(&reward, 1));
    std::vector<double> sorted(ret.data(), ret.data() + ret.size());
    std::sort(sorted.begin(), sorted.end());
    auto cut_at = [&](double v) {
      const auto it = std::upper_bound(sorted.begin(), sorted.end(), v);
      return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
    };

    const double target = cert.delta / remaining;
    const double lo = Optimize(in.poly, region, reward, false);
    const double hi = Optimize(in.poly, region, reward, true);
    double a = lo;
    double b = hi;
    std::vector<Halfspace> probe = region;
    probe.push_back(Halfspace{});
    for (int it = 0; it < kVetoMaxBisections &&
                     b - a > kVetoBisectionTol * std::max(1.0, hi - lo);
         ++it) {
      const double mid = 0.5 * (a + b);
      probe.back() = at_least(reward, mid);
      if (cut_at(mid) <= target && Feasible(in.poly, probe)) {
        a = mid;
      } else {
        b = mid;
      }
    }
    const double cut = cut_at(a);
    cert.thresholds[agent] = a;
    cert.cut_fractions[agent] = remaining * cut;
    remaining *= 1.0 - cut;
    region.push_back(at_least(reward, a));
  }
  OccupancyMeasure d = pareto_complete(in.poly, cert.thresholds, in.rewards());
  return MakeResult("veto-core", in, std::move(d), std::move(cert),
                    meter.Finish(samples));
}

RuleResult max_quantile(const AggregationInput& in, double epsilon) {
  const Meter meter;
  const int levels = LevelCount(epsilon);
  const int n = in.num_agents();
  auto thresholds_at = [&](int k) {
    std::vector<double> t(n, -simplex::kInf);
    if (k == 0) return t;
    for (int i = 0; i < n; ++i) t[i] = quantile_inverse(in.cdfs[i], k * epsilon);
    return t;
  };
  auto feasible = [&](int k) {
    const std::vector<double> t = thresholds_at(k);
    std::vector<Halfspace> rows;
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(t[i])) rows.push_back(at_least(in.rewards()[i], t[i]));
    }
    return Feasible(in.poly, rows);
  };
  // Grid indices: lo is feasible, hi is infeasible (or one past the grid).
  int lo = 0;
  int hi = levels + 1;
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    if (feasible(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  QuantileCertificate cert;
  cert.epsilon = epsilon;
  cert.q_star = lo * epsilon;
  cert.thresholds = thresholds_at(lo);
  OccupancyMeasure d = pareto_complete(in.poly, cert.thresholds, in.rewards());
  return MakeResult("max-quantile", in, std::move(d), std::move(cert),
                    meter.Finish(in.cloud.size()));
}

RuleResult alpha_approval(const AggregationInput& in, double alpha) {
  const Meter meter;
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::kInvalidInput, "alpha must lie in (0, 1]");
  }
  const int n = in.num_agents();
  ApprovalCertificate cert;
  cert.alpha = alpha;
  MilpProgram program;
  for (int i = 0; i < n; ++i) {
    cert.thresholds.push_back(approval_threshold(in.cdfs[i], alpha));
    program.indicators.push_back(Indicator{in.rewards()[i], cert.thresholds[i], 1.0});
  }
  const Solution s = milp_solve(in.poly, program);
  if (s.status == SolveStatus::kIterationLimit) {
    throw Error(ErrorKind::kMilpBudgetExhausted, "approval MILP ran out of nodes");
  }
  if (s.status != SolveStatus::kOptimal) {
    throw Error(ErrorKind::kInfeasibleModel, "approval MILP is infeasible");
  }
  cert.milp_nodes = s.nodes;
  std::vector<double> bounds(n, -simplex::kInf);
  for (int i = 0; i < n; ++i) {
    if (s.binary_assignment[i] == 1) {
      cert.approving.push_back(i);
      bounds[i] = cert.thresholds[i];
    }
  }
  cert.score = static_cast<int>(cert.approving.size());
  OccupancyMeasure d = pareto_complete(in.poly, bounds, in.rewards());
  return MakeResult(alpha >= 1.0 ? "plurality" : "approval", in, std::move(d),
                    std::move(cert), meter.Finish(in.cloud.size()));
}

RuleResult plurality(const AggregationInput& in) { return alpha_approval(in, 1.0); }

RuleResult borda_milp(const AggregationInput& in, double epsilon) {
  const Meter meter;
  const int levels = LevelCount(epsilon);
  const int n = in.num_agents();
  BordaCertificate cert;
  cert.epsilon = epsilon;
  cert.weights.assign(n, std::vector<double>(levels));
  // Level indicators a_{i,k} are chained (a_{i,k} >= a_{i,k+1}), so each
  // agent's chain is a count L_i of levels reached. The program carries one
  // binary z_{i,L} per count instead: sum_L z_{i,L} <= 1,
  // J_i >= eps * sum_L L z_{i,L}, weight F_i(L eps) - F_i(0), and
  // a_{i,k} = sum_{L >= k} z_{i,L}. Integer solutions match one to one; the
  // relaxation is far smaller.
  MilpProgram program;
  for (int i = 0; i < n; ++i) {
    const double base = in.cdfs[i](0.0);
    LinkRow link{in.rewards()[i], {}};
    std::vector<int> group;
    for (int k = 1; k <= levels; ++k) {
      const double w = in.cdfs[i](k * epsilon) - in.cdfs[i]((k - 1) * epsilon);
      cert.weights[i][k - 1] = w;
      const int idx = i * levels + (k - 1);
      program.indicators.push_back(Indicator{Eigen::VectorXd(), 0.0, in.cdfs[i](k * epsilon) - base});
      link.terms.emplace_back(idx, k * epsilon);
      group.push_back(idx);
    }
    program.links.push_back(std::move(link));
    program.at_most_one.push_back(std::move(group));
  }
  const Solution s = milp_solve(in.poly, program);
  if (s.status == SolveStatus::kIterationLimit) {
    throw Error(ErrorKind::kMilpBudgetExhausted, "Borda MILP ran out of nodes");
  }
  if (s.status != SolveStatus::kOptimal) {
    throw Error(ErrorKind::kInfeasibleModel, "Borda MILP is infeasible");
  }
  cert.milp_nodes = s.nodes;
  cert.rounded_score = s.objective_value;
  cert.levels.assign(n, std::vector<int>(levels, 0));
  for (int i = 0; i < n; ++i) {
    for (int count = 1; count <= levels; ++count) {
      if (s.binary_assignment[i * levels + (count - 1)] == 0) continue;
      for (int k = 0; k < count; ++k) cert.levels[i][k] = 1;
    }
  }
  const std::vector<double> achieved = AchievedReturns(in, *s.point);
  OccupancyMeasure d = pareto_complete(in.poly, achieved, in.rewards());
  cert.borda_score = borda_score(in.cdfs, AchievedReturns(in, d));
  return MakeResult("borda-milp", in, std::move(d), std::move(cert),
                    meter.Finish(in.cloud.size()));
}

RuleResult borda_concave(const AggregationInput& in) {
  const Meter meter;
  const int n = in.num_agents();
  ConcaveBordaCertificate cert;
  std::vector<Halfspace> rows;
  for (int i = 0; i < n; ++i) {
    cert.modes.push_back(mode_estimate(in.cdfs[i]));
    rows.push_back(at_least(in.rewards()[i], cert.modes[i]));
  }
  if (!Feasible(in.poly, rows)) {
    throw Error(ErrorKind::kConcaveRegionEmpty,
                "no policy reaches every agent's mode; use borda-milp");
  }
  simplex::LinearProgram lp = polytope_program(in.poly, rows);
  const int dim = in.poly.dim();
  std::vector<int> z(n);
  for (int i = 0; i < n; ++i) z[i] = lp.add_variable(0.0, 1.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const double m = cert.modes[i];
    std::vector<Knot> knots;
    for (int k = 0; k < kConcaveKnots; ++k) {
      const double x = m + (1.0 - m) * k / (kConcaveKnots - 1);
      knots.push_back(Knot{x, in.cdfs[i](x)});
    }
    const std::vector<Knot> hull = UpperHull(knots);
    if (hull.size() == 1) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(lp.num_vars());
      row[z[i]] = 1.0;
      lp.add_row(std::move(row), simplex::Sense::kLessEqual, hull[0].y);
    }
    for (size_t k = 0; k + 1 < hull.size(); ++k) {
      const double slope = (hull[k + 1].y - hull[k].y) / (hull[k + 1].x - hull[k].x);
      // z_i - slope * J_i <= y_k - slope * x_k
      Eigen::VectorXd row = Eigen::VectorXd::Zero(lp.num_vars());
      row.head(dim) = -slope * in.rewards()[i];
      row[z[i]] = 1.0;
      lp.add_row(std::move(row), simplex::Sense::kLessEqual,
                 hull[k].y - slope * hull[k].x);
    }
  }
  const simplex::Result r = simplex::solve(lp);
  if (r.status != simplex::Status::kOptimal) {
    throw Error(ErrorKind::kIterationLimit,
                "concave Borda LP failed: " + simplex::to_string(r.status));
  }
  cert.objective = r.objective;
  const OccupancyMeasure lp_point(in.poly.num_states(), in.poly.num_actions(),
                                  r.x.head(dim));
  const std::vector<double> achieved = AchievedReturns(in, lp_point);
  OccupancyMeasure d = pareto_complete(in.poly, achieved, in.rewards());
  cert.borda_score = borda_score(in.cdfs, AchievedReturns(in, d));
  return MakeResult("borda-concave", in, std::move(d), std::move(cert),
                    meter.Finish(in.cloud.size()));
}

RuleResult utilitarian(const AggregationInput& in) {
  const Meter meter;
  const std::vector<double> none(in.num_agents(), -simplex::kInf);
  OccupancyMeasure d = pareto_complete(in.poly, none, in.rewards());
  return MakeResult("utilitarian", in, std::move(d), std::monostate{}, meter.Finish(0));
}

RuleResult egalitarian(const AggregationInput& in) {
  const Meter meter;
  LeximinResult lex = leximin(in.poly, in.rewards());
  return MakeResult("egalitarian", in, std::move(lex.point), std::monostate{},
                    meter.Finish(0));
}

std::optional<RuleKind> parse_rule(const std::string& name) {
  if (name == "veto-core") return RuleKind::kVetoCore;
  if (name == "max-quantile") return RuleKind::kMaxQuantile;
  if (name == "approval") return RuleKind::kApproval;
  if (name == "plurality") return RuleKind::kPlurality;
  if (name == "borda-milp") return RuleKind::kBordaMilp;
  if (name == "borda-concave") return RuleKind::kBordaConcave;
  if (name == "utilitarian") return RuleKind::kUtilitarian;
  if (name == "egalitarian") return RuleKind::kEgalitarian;
  return std::nullopt;
}

std::string rule_name(RuleKind kind) {
  switch (kind) {
    case RuleKind::kVetoCore: return "veto-core";
    case RuleKind::kMaxQuantile: return "max-quantile";
    case RuleKind::kApproval: return "approval";
    case RuleKind::kPlurality: return "plurality";
    case RuleKind::kBordaMilp: return "borda-milp";
    case RuleKind::kBordaConcave: return "borda-concave";
    case RuleKind::kUtilitarian: return "utilitarian";
    case RuleKind::kEgalitarian: return "egalitarian";
  }
  return "unknown";
}

RuleResult run_rule(RuleKind kind, const AggregationInput& in,
                    const RuleOptions& options) {
  switch (kind) {
    case RuleKind::kVetoCore:
      return veto_core(in, options.epsilon.value_or(0.01), options.veto_order);
    case RuleKind::kMaxQuantile:
      return max_quantile(in, options.epsilon.value_or(0.01));
    case RuleKind::kApproval: return alpha_approval(in, options.alpha);
    case RuleKind::kPlurality: return plurality(in);
    case RuleKind::kBordaMilp: return borda_milp(in, options.epsilon.value_or(0.05));
    case RuleKind::kBordaConcave: return borda_concave(in);
    case RuleKind::kUtilitarian: return utilitarian(in);
    case RuleKind::kEgalitarian: return egalitarian(in);
  }
  throw Error(ErrorKind::kInvalidInput, "unknown rule");
}

}  // namespace polyagg
