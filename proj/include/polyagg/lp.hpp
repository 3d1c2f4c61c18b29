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

// Optimization over the occupancy polytope: single LPs, indicator MILPs
// solved by branch and bound, Pareto completion and leximin.

#ifndef POLYAGG_LP_HPP_
#define POLYAGG_LP_HPP_

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "polyagg/momdp.hpp"
#include "polyagg/simplex.hpp"

namespace polyagg {

struct LinearObjective {
  Eigen::VectorXd coeffs;
  bool maximize = true;
};

enum class SolveStatus { kOptimal, kInfeasible, kIterationLimit };

struct Solution {
  SolveStatus status = SolveStatus::kInfeasible;
  std::optional<OccupancyMeasure> point;
  double objective_value = 0.0;
  std::vector<int> binary_assignment;  // MILPs only, entries 0/1
  long nodes = 0;                      // MILPs only
};

// Halfspace for <reward, d> >= value.
Halfspace at_least(const RewardTable& reward, double value);

// The polytope (plus extra rows) as a simplex program over d, zero
// objective. Further columns can be appended by the caller.
simplex::LinearProgram polytope_program(const OccupancyPolytope& poly,
                                        std::span<const Halfspace> extra_rows);

Solution solve_lp(const OccupancyPolytope& poly,
                  std::span<const Halfspace> extra_rows,
                  const LinearObjective& obj);

// (binary on) => <row, d> >= threshold, encoded as threshold * a <= <row, d>.
// With the binary off the row reads <row, d> >= 0, which holds everywhere
// once rewards are normalized. An empty row declares a bare weighted binary,
// constrained only through links and at_most_one groups.
struct Indicator {
  Eigen::VectorXd row;
  double threshold = 0.0;
  double weight = 0.0;
};

// <row, d> >= sum_j coef_j * a_j. Used for cuts that tie several binaries
// to one row.
struct LinkRow {
  Eigen::VectorXd row;
  std::vector<std::pair<int, double>> terms;  // (binary, coef)
};

struct MilpProgram {
  std::vector<Halfspace> extra_rows;
  std::vector<Indicator> indicators;
  // (j, k) adds a_j >= a_k.
  std::vector<std::pair<int, int>> implications;
  std::vector<LinkRow> links;
  // Each group adds sum of its binaries <= 1.
  std::vector<std::vector<int>> at_most_one;
  // Optional objective weights on d; empty means zero.
  Eigen::VectorXd d_objective;
  int max_binaries = 4096;
  long node_budget = 1'000'000;
};

// Best-bound branch and bound over LP relaxations, branching on the most
// fractional binary and diving depth-first into the up branch. Returns
// kIterationLimit when the node budget runs out. Deterministic.
Solution milp_solve(const OccupancyPolytope& base, const MilpProgram& program);

// argmax sum_i <d, R_i> subject to <d, R_i> >= lower_bounds[i] (entries of
// -inf are unconstrained). Bounds are relaxed by 1e-9 so returns read off an
// earlier solution stay feasible. Throws Error(kInfeasibleBounds).
OccupancyMeasure pareto_complete(const OccupancyPolytope& poly,
                                 std::span<const double> lower_bounds,
                                 std::span<const RewardTable> rewards);

// How much sum_i J_i can still grow without lowering any J_i below its value
// at d. Zero (up to tolerance) iff d is Pareto optimal.
double pareto_gap(const OccupancyPolytope& poly,
                  std::span<const RewardTable> rewards,
                  const OccupancyMeasure& d);

struct LeximinResult {
  OccupancyMeasure point;
  std::vector<double> levels;  // value at which each agent was fixed
};

// Iterative leximin: raise the common floor t of all unfixed agents, fix
// every agent that cannot exceed t on its own, repeat.
LeximinResult leximin(const OccupancyPolytope& poly,
                      std::span<const RewardTable> rewards);

}  // namespace polyagg

#endif  // POLYAGG_LP_HPP_
