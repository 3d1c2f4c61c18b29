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

#ifndef POLYAGG_TESTS_FIXTURES_HPP_
#define POLYAGG_TESTS_FIXTURES_HPP_

#include <cstdint>
#include <random>
#include <vector>

#include "polyagg/instances.hpp"
#include "polyagg/momdp.hpp"
#include "polyagg/rules.hpp"

namespace fixture {

using namespace polyagg;

// Two states, one action, s0 -> s1 -> s0.
inline Momdp two_cycle() {
  Momdp m = Momdp::make(2, 1, 1);
  m.p(0, 0, 1) = 1.0;
  m.p(1, 0, 0) = 1.0;
  m.rewards[0] << 1.0, 0.0;
  return m;
}

// Unit box [0,1]^d as a polytope with no equalities.
inline OccupancyPolytope box(int d) {
  std::vector<Halfspace> extra;
  for (int j = 0; j < d; ++j) {
    Halfspace h{Eigen::VectorXd::Zero(d), 1.0};
    h.normal[j] = 1.0;
    extra.push_back(h);
  }
  return OccupancyPolytope::from_constraints(Eigen::MatrixXd(0, d), Eigen::VectorXd(0),
                                             std::move(extra), 1, d);
}

// Standard simplex {x >= 0, sum x <= 1} in R^d.
inline OccupancyPolytope corner_simplex(int d) {
  std::vector<Halfspace> extra{{Eigen::VectorXd::Ones(d), 1.0}};
  return OccupancyPolytope::from_constraints(Eigen::MatrixXd(0, d), Eigen::VectorXd(0),
                                             std::move(extra), 1, d);
}

inline RewardTable unit(int n, int j) {
  RewardTable r = RewardTable::Zero(n);
  r[j] = 1.0;
  return r;
}

inline AggregationInput prepared(const Momdp& m, long samples, std::uint64_t seed) {
  PrepareOptions opts;
  opts.walk.count = samples;
  opts.seed = seed;
  return prepare(m, opts);
}

// Small random instance number k of a fixed family: states 1..3,
// actions 2..3, agents 2..3.
inline Momdp small_random(int k, std::uint64_t base_seed = 20261018) {
  RandomParams p;
  p.num_states = 1 + k % 3;
  p.num_actions = 2 + (k / 3) % 2;
  p.num_agents = 2 + (k / 6) % 2;
  p.seed = base_seed + static_cast<std::uint64_t>(k);
  return gen_random(p);
}

}  // namespace fixture

#endif  // POLYAGG_TESTS_FIXTURES_HPP_
