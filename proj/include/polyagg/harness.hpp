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

// Fairness metrics and the experiment runner.

#ifndef POLYAGG_HARNESS_HPP_
#define POLYAGG_HARNESS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "polyagg/momdp.hpp"
#include "polyagg/rules.hpp"

namespace polyagg {

// (J_i - min J_i) / (max J_i - min J_i) on the raw rewards of the kept
// agents, using the normalization constants.
std::vector<double> normalized_returns(const RuleResult& result,
                                       const NormalizedMomdp& normalized,
                                       const Momdp& raw);

// Returns on the raw scale, kept agents only.
std::vector<double> raw_returns(const RuleResult& result,
                                const NormalizedMomdp& normalized,
                                const Momdp& raw);

// sum_i sum_j |x_i - x_j| / (2 n sum_i x_i). Throws Error(kZeroWelfare)
// when the sum is at most 1e-12.
double gini(std::span<const double> returns);

// Geometric mean; 0 as soon as one entry is 0.
double nash_welfare(std::span<const double> returns);

struct MetricsRow {
  int instance = 0;
  std::uint64_t seed = 0;
  std::string rule;
  std::string status = "ok";  // or the error kind
  std::vector<double> returns;
  double gini = 0.0;
  double nash = 0.0;
  double wall_time = 0.0;
};

std::string metrics_to_json(std::span<const MetricsRow> rows, bool include_timing);
std::vector<MetricsRow> metrics_from_json(const std::string& text);

struct RuleSpec {
  RuleKind kind = RuleKind::kUtilitarian;
  RuleOptions options;
  std::string label;  // column label, defaults to the rule name
};

struct InstanceSpec {
  std::string generator = "warehouse";  // warehouse|simplex|random|mis|max2sat|file
  std::string file;
  int m = 3;
  int n = 4;
  bool one_per_warehouse = false;
  bool discounted = false;
  double gamma = 0.9;
  int ell = 3;
  int states = 3;
  int actions = 3;
  int agents = 3;
  int vertices = 8;
  double edge_prob = 0.4;
  int vars = 6;
  int clauses = 5;
};

struct ExperimentSpec {
  std::uint64_t seed = 0;
  int instances = 1;
  InstanceSpec instance;
  std::vector<RuleSpec> rules;
  WalkParams walk;
  CdfKind cdf_kind = CdfKind::kEmpirical;
  std::string output_dir;
  bool timing = false;
  bool raw_metrics = false;
};

// Throws Error(kInvalidInput) on unknown rules, missing seed and the like.
ExperimentSpec parse_experiment_spec(const std::string& text);

// Instance k is generated from derive_instance_seed(seed, k).
std::uint64_t derive_instance_seed(std::uint64_t seed, int instance);
Momdp make_instance(const InstanceSpec& spec, std::uint64_t seed);

struct Aggregate {
  std::string rule;
  int count = 0;
  int failures = 0;
  double gini_mean = 0.0, gini_sem = 0.0;
  double nash_mean = 0.0, nash_sem = 0.0;
  double mean_return_mean = 0.0, mean_return_sem = 0.0;
  double min_return_mean = 0.0, min_return_sem = 0.0;
};

struct ExperimentOutput {
  std::vector<MetricsRow> rows;
  std::vector<Aggregate> aggregates;
};

std::vector<Aggregate> aggregate_rows(std::span<const MetricsRow> rows,
                                      std::span<const RuleSpec> rules);

// Runs every rule on every instance. Failures are recorded per row and the
// run continues. When output_dir is set, writes metrics.csv, aggregate.csv,
// metrics.json and results.json there.
ExperimentOutput run_experiment(const ExperimentSpec& spec);

}  // namespace polyagg

#endif  // POLYAGG_HARNESS_HPP_
