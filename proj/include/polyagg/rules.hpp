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

// Aggregation rules over the occupancy polytope. Every rule ends with a
// utilitarian Pareto completion inside its own feasible set.

#ifndef POLYAGG_RULES_HPP_
#define POLYAGG_RULES_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "polyagg/lp.hpp"
#include "polyagg/momdp.hpp"
#include "polyagg/volume.hpp"

namespace polyagg {

// Everything a rule reads: the normalized model, its polytope, one shared
// sample cloud and the per-agent CDFs estimated from it.
struct AggregationInput {
  NormalizedMomdp normalized;
  OccupancyPolytope poly;
  HullChart chart;
  SampleCloud cloud;
  std::vector<ReturnCdf> cdfs;
  WalkParams walk;
  std::uint64_t seed = 0;

  const Momdp& momdp() const { return normalized.momdp; }
  std::span<const RewardTable> rewards() const { return normalized.momdp.rewards; }
  int num_agents() const { return normalized.momdp.num_agents(); }
};

struct PrepareOptions {
  WalkParams walk;
  std::uint64_t seed = 0;
  CdfKind cdf_kind = CdfKind::kEmpirical;
  // When set, a matching cloud is read from this path, otherwise the fresh
  // cloud is written there.
  std::string cloud_cache;
};

AggregationInput prepare(const Momdp& raw, const PrepareOptions& options);

struct VetoCertificate {
  double epsilon = 0.0;
  double delta = 0.0;
  std::vector<int> order;
  std::vector<double> thresholds;     // v_i*, indexed by agent
  std::vector<double> cut_fractions;  // measured, relative to vol(O)
};

struct QuantileCertificate {
  double epsilon = 0.0;
  double q_star = 0.0;
  std::vector<double> thresholds;  // F_i^-1(q_star)
};

struct ApprovalCertificate {
  double alpha = 0.0;
  int score = 0;
  std::vector<int> approving;
  std::vector<double> thresholds;
  long milp_nodes = 0;
};

struct BordaCertificate {
  double epsilon = 0.0;
  std::vector<std::vector<int>> levels;      // a_{i,k}, k = 1..1/eps
  std::vector<std::vector<double>> weights;  // F_i(k eps) - F_i((k-1) eps)
  double rounded_score = 0.0;                // MILP objective
  double borda_score = 0.0;                  // sum_i F_i(J_i) at the output
  long milp_nodes = 0;
};

struct ConcaveBordaCertificate {
  std::vector<double> modes;
  double objective = 0.0;  // sum of hypograph variables
  double borda_score = 0.0;
};

using Certificate =
    std::variant<std::monostate, VetoCertificate, QuantileCertificate,
                 ApprovalCertificate, BordaCertificate, ConcaveBordaCertificate>;

struct Diagnostics {
  long lp_solves = 0;
  long samples_used = 0;
  double wall_time = 0.0;  // seconds
};

struct RuleResult {
  std::string rule;
  OccupancyMeasure occupancy;
  Policy policy;
  std::vector<double> returns;
  Certificate certificate;
  Diagnostics diagnostics;
};

// Agents go in input order unless `order` is a permutation of them.
RuleResult veto_core(const AggregationInput& in, double epsilon,
                     std::span<const int> order = {});
RuleResult max_quantile(const AggregationInput& in, double epsilon = 0.01);
RuleResult alpha_approval(const AggregationInput& in, double alpha);
RuleResult plurality(const AggregationInput& in);
RuleResult borda_milp(const AggregationInput& in, double epsilon = 0.05);
// Throws Error(kConcaveRegionEmpty) when no point reaches every mode.
RuleResult borda_concave(const AggregationInput& in);
RuleResult utilitarian(const AggregationInput& in);
RuleResult egalitarian(const AggregationInput& in);

// sum_i F_i(returns[i]).
double borda_score(std::span<const ReturnCdf> cdfs, std::span<const double> returns);

// Threshold used for alpha-approval: F^-1(alpha), or 1 - 1e-6 at alpha = 1.
double approval_threshold(const ReturnCdf& cdf, double alpha);

enum class RuleKind {
  kVetoCore,
  kMaxQuantile,
  kApproval,
  kPlurality,
  kBordaMilp,
  kBordaConcave,
  kUtilitarian,
  kEgalitarian,
};

// CLI names: veto-core, max-quantile, approval, plurality, borda-milp,
// borda-concave, utilitarian, egalitarian.
std::optional<RuleKind> parse_rule(const std::string& name);
std::string rule_name(RuleKind kind);

struct RuleOptions {
  double alpha = 0.9;
  std::optional<double> epsilon;  // per-rule default when empty
  std::vector<int> veto_order;
};

RuleResult run_rule(RuleKind kind, const AggregationInput& in,
                    const RuleOptions& options);

}  // namespace polyagg

#endif  // POLYAGG_RULES_HPP_
