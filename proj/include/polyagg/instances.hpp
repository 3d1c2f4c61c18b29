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

// Instance generators (warehouse monitoring, the single-state simplex,
// graph and 2-CNF reductions, random models) and brute-force oracles.

#ifndef POLYAGG_INSTANCES_HPP_
#define POLYAGG_INSTANCES_HPP_

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "polyagg/momdp.hpp"

namespace polyagg {

// Warehouse stages per state digit.
enum Stage : int { kNorm = 0, kRisk = 1, kInc = 2 };

struct WarehouseParams {
  int m = 3;  // warehouses
  int n = 4;  // agents
  std::uint64_t seed = 0;
  Criterion criterion = Criterion::kAverage;
  double gamma = 0.9;  // discounted only; d_init is the all-norm state
  double rho_step = 0.25;
  // Agent i watches warehouse i mod m only, instead of a uniform nonempty
  // subset.
  bool one_per_warehouse = false;
  long max_variables = 200000;  // cap on 3^m * (m + 1)
};

struct WarehouseInstance {
  Momdp momdp;
  std::vector<double> penalty;  // w_j
  std::vector<double> scale;    // rho_i
  std::vector<double> p_risk;
  std::vector<double> p_inc;
  std::vector<std::vector<int>> watched;  // l_i, 0-based warehouses
};

// States are stage vectors in mixed radix 3, warehouse 0 least significant.
// Action j < m monitors warehouse j, action m is the no-op.
// Throws Error(kSizeLimit).
WarehouseInstance gen_warehouse(const WarehouseParams& params);

int warehouse_state(const std::vector<int>& stages);
std::vector<int> warehouse_stages(int state, int m);

// One state, ell actions, ell agents; agent i is rewarded only for action i.
Momdp gen_simplex_instance(int ell);

// Transitions uniform over states regardless of the action.
Momdp gen_fully_connected(int num_states, int num_actions, int num_agents);

struct Graph {
  int num_vertices = 0;
  std::vector<std::pair<int, int>> edges;  // 0-based, u < v

  // Throws Error(kInvalidInput) on self-loops, duplicates or bad ids.
  void validate() const;
};

struct CnfFormula {
  int num_vars = 0;
  // Literals are signed 1-based variable ids: +v is x_v, -v is not x_v.
  std::vector<std::array<int, 2>> clauses;

  void validate() const;
};

// One state per edge, two actions (one per endpoint), one agent per vertex.
Momdp gen_from_mis(const Graph& g);

// One state per variable with actions {true, false}; three agents per
// clause (c1, c2) rewarded on (c1, c2), (c1, not c2), (not c1, c2).
Momdp gen_from_max2sat(const CnfFormula& f);

struct RandomParams {
  int num_states = 3;
  int num_actions = 3;
  int num_agents = 3;
  std::uint64_t seed = 0;
  Criterion criterion = Criterion::kAverage;
  double gamma = 0.9;
};

// Dense random transitions and uniform [0, 1) rewards.
Momdp gen_random(const RandomParams& params);

// G(V, p), then each isolated vertex is joined to a random other vertex
// (isolated vertices would be indifferent agents and get dropped).
Graph random_graph(int num_vertices, double edge_prob, std::uint64_t seed);

// Each clause uses two distinct variables with random signs.
CnfFormula random_2cnf(int num_vars, int num_clauses, std::uint64_t seed);

// Exhaustive optima. Throw Error(kSizeLimit) beyond 20 vertices/variables.
int brute_force_mis(const Graph& g);
int brute_force_max2sat(const CnfFormula& f);
bool is_independent(const Graph& g, std::uint32_t mask);

struct DeterministicPolicy {
  std::vector<int> actions;  // per state
  OccupancyMeasure occupancy;
};

// All |A|^|S| deterministic policies with their occupancy measures.
// Throws Error(kSizeLimit) past 10^6 policies.
std::vector<DeterministicPolicy> enumerate_deterministic_policies(const Momdp& m);

}  // namespace polyagg

#endif  // POLYAGG_INSTANCES_HPP_
