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

#include <functional>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "polyagg/error.hpp"
#include "polyagg/lp.hpp"
#include "polyagg/momdp.hpp"

using namespace polyagg;

namespace {

ErrorKind KindOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::kInvalidInput;
}

}  // namespace

TEST_CASE("validate rejects broken models") {
  Momdp m = gen_simplex_instance(2);
  m.validate();
  Momdp bad = m;
  bad.p(0, 0, 0) = 0.5;
  CHECK(KindOf([&] { bad.validate(); }) == ErrorKind::kInvalidInput);
  bad = m;
  bad.criterion = Criterion::kDiscounted;
  bad.gamma = 1.0;
  bad.d_init = Eigen::VectorXd::Ones(1);
  CHECK(KindOf([&] { bad.validate(); }) == ErrorKind::kInvalidInput);
  bad.gamma = 0.5;
  bad.d_init = Eigen::VectorXd::Constant(1, 0.9);
  CHECK(KindOf([&] { bad.validate(); }) == ErrorKind::kInvalidInput);
  bad = m;
  bad.rewards[1] = Eigen::VectorXd::Zero(3);
  CHECK(KindOf([&] { bad.validate(); }) == ErrorKind::kInvalidInput);
}

TEST_CASE("single-state polytope is the simplex") {
  const OccupancyPolytope poly = build_polytope(gen_simplex_instance(3));
  CHECK(poly.contains(Eigen::Vector3d(1, 0, 0)));
  CHECK(poly.contains(Eigen::Vector3d(0.2, 0.3, 0.5)));
  CHECK_FALSE(poly.contains(Eigen::Vector3d(0.5, 0.5, 0.5)));
  CHECK_FALSE(poly.contains(Eigen::Vector3d(1.5, -0.5, 0)));
}

TEST_CASE("fully connected polytope pins state mass to 1/|S|") {
  for (Criterion c : {Criterion::kAverage, Criterion::kDiscounted}) {
    Momdp m = gen_fully_connected(3, 2, 1);
    m.criterion = c;
    if (c == Criterion::kDiscounted) {
      m.gamma = 0.7;
      m.d_init = Eigen::Vector3d::Constant(1.0 / 3);
    }
    const OccupancyPolytope poly = build_polytope(m);
    Eigen::VectorXd x(6);
    x << 1.0 / 3, 0, 0.1, 1.0 / 3 - 0.1, 0.2, 1.0 / 3 - 0.2;
    CHECK(poly.contains(x));
    x[0] += 0.01;
    x[2] -= 0.01;
    CHECK_FALSE(poly.contains(x));
  }
}

TEST_CASE("two-cycle has a single feasible point") {
  const OccupancyPolytope poly = build_polytope(fixture::two_cycle());
  CHECK(poly.contains(Eigen::Vector2d(0.5, 0.5)));
  CHECK_FALSE(poly.contains(Eigen::Vector2d(0.6, 0.4)));
  const OccupancyMeasure d = policy_to_occupancy(Policy::uniform(2, 1), fixture::two_cycle());
  CHECK(d(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("occupancy_to_policy") {
  SUBCASE("uniform occupancy gives the uniform policy") {
    const OccupancyMeasure d(2, 3, Eigen::VectorXd::Constant(6, 1.0 / 6));
    const Policy p = occupancy_to_policy(d);
    for (int s = 0; s < 2; ++s) {
      for (int a = 0; a < 3; ++a) CHECK(p(s, a) == doctest::Approx(1.0 / 3));
    }
  }
  SUBCASE("single state reads off the occupancy") {
    const Policy p = occupancy_to_policy(OccupancyMeasure(1, 2, Eigen::Vector2d(0.75, 0.25)));
    CHECK(p(0, 0) == 0.75);
    CHECK(p(0, 1) == 0.25);
  }
  SUBCASE("unreached state falls back to uniform") {
    Eigen::VectorXd v(4);
    v << 0.3, 0.7, 0.0, 0.0;
    const Policy p = occupancy_to_policy(OccupancyMeasure(2, 2, v));
    CHECK(p(1, 0) == 0.5);
    CHECK(p(1, 1) == 0.5);
  }
}

TEST_CASE("policy_to_occupancy matches brute-force state distributions") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int k = 0; k < 12; ++k) {
    Momdp m = fixture::small_random(k);
    if (k % 2) {
      m.criterion = Criterion::kDiscounted;
      m.gamma = 0.8;
      m.d_init = Eigen::VectorXd::Constant(m.num_states, 1.0 / m.num_states);
    }
    Eigen::MatrixXd probs(m.num_states, m.num_actions);
    for (int s = 0; s < m.num_states; ++s) {
      for (int a = 0; a < m.num_actions; ++a) probs(s, a) = u(rng);
      probs.row(s) /= probs.row(s).sum();
    }
    const Policy pi(probs);
    const OccupancyMeasure d = policy_to_occupancy(pi, m);
    const Eigen::VectorXd rho = oracle::state_distribution(pi, m);
    for (int s = 0; s < m.num_states; ++s) {
      for (int a = 0; a < m.num_actions; ++a) {
        CHECK(d(s, a) == doctest::Approx(rho[s] * pi(s, a)).epsilon(1e-9));
      }
    }
    CHECK(build_polytope(m).contains(d));

    // Round trip back to the policy on every visited state.
    const Policy back = occupancy_to_policy(d);
    for (int s = 0; s < m.num_states; ++s) {
      if (rho[s] <= 1e-9) continue;
      for (int a = 0; a < m.num_actions; ++a) CHECK(std::abs(back(s, a) - pi(s, a)) < 1e-7);
    }
  }
}

TEST_CASE("fully connected occupancy is pi / |S|") {
  const Momdp m = gen_fully_connected(4, 2, 1);
  Eigen::MatrixXd probs(4, 2);
  probs << 0.1, 0.9, 0.5, 0.5, 1, 0, 0.25, 0.75;
  const OccupancyMeasure d = policy_to_occupancy(Policy(probs), m);
  for (int s = 0; s < 4; ++s) {
    for (int a = 0; a < 2; ++a) CHECK(d(s, a) == doctest::Approx(probs(s, a) / 4).epsilon(1e-12));
  }
}

TEST_CASE("expected_return") {
  const OccupancyMeasure d(1, 3, Eigen::VectorXd::Constant(3, 1.0 / 3));
  CHECK(expected_return(d, RewardTable::Zero(3)) == 0.0);
  CHECK(expected_return(d, RewardTable::Constant(3, 4.0)) == doctest::Approx(4.0));
  const Momdp m = gen_simplex_instance(3);
  CHECK(expected_return(d, m.rewards[1]) == doctest::Approx(1.0 / 3));
}

TEST_CASE("normalize_rewards") {
  SUBCASE("already normalized tables are a fixed point") {
    const Momdp m = gen_simplex_instance(3);
    const NormalizedMomdp n = normalize_rewards(m, build_polytope(m));
    for (int i = 0; i < 3; ++i) {
      CHECK((n.momdp.rewards[i] - m.rewards[i]).cwiseAbs().maxCoeff() <= 1e-9);
    }
    CHECK(n.dropped.empty());
  }
  SUBCASE("positive affine transforms normalize bitwise identically") {
    for (int k = 0; k < 8; ++k) {
      Momdp m = fixture::small_random(k);
      Momdp t = m;
      for (auto& r : t.rewards) r = (3.0 * r.array() + 7.0).matrix();
      const NormalizedMomdp a = normalize_rewards(m, build_polytope(m));
      const NormalizedMomdp b = normalize_rewards(t, build_polytope(t));
      for (size_t i = 0; i < a.momdp.rewards.size(); ++i) {
        CHECK(a.momdp.rewards[i] == b.momdp.rewards[i]);
      }
    }
  }
  SUBCASE("constant agents are dropped") {
    Momdp m = gen_simplex_instance(2);
    m.rewards.push_back(RewardTable::Constant(2, 5.0));
    m.agent_names.clear();
    const NormalizedMomdp n = normalize_rewards(m, build_polytope(m));
    CHECK(n.dropped == std::vector<int>{2});
    CHECK(n.kept == std::vector<int>{0, 1});
    CHECK(n.momdp.num_agents() == 2);
  }
  SUBCASE("all indifferent") {
    Momdp m = gen_simplex_instance(2);
    for (auto& r : m.rewards) r.setConstant(1.0);
    CHECK(KindOf([&] { normalize_rewards(m, build_polytope(m)); }) ==
          ErrorKind::kAllAgentsIndifferent);
  }
}

TEST_CASE("normalized returns of LP vertices lie in [0, 1]") {
  for (int k = 0; k < 10; ++k) {
    const Momdp m = fixture::small_random(k);
    const OccupancyPolytope poly = build_polytope(m);
    const NormalizedMomdp n = normalize_rewards(m, poly);
    for (const RewardTable& obj : n.momdp.rewards) {
      for (bool maximize : {true, false}) {
        const Solution s = solve_lp(poly, {}, {obj, maximize});
        REQUIRE(s.status == SolveStatus::kOptimal);
        for (const RewardTable& r : n.momdp.rewards) {
          const double j = expected_return(*s.point, r);
          CHECK(j >= -1e-7);
          CHECK(j <= 1 + 1e-7);
        }
      }
    }
  }
}

TEST_CASE("affine transforms preserve pairwise order") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Momdp m = fixture::small_random(7);
  const int n = m.num_pairs();
  for (int trial = 0; trial < 200; ++trial) {
    const OccupancyMeasure d = policy_to_occupancy(
        Policy::deterministic(std::vector<int>(m.num_states, trial % m.num_actions), m.num_actions), m);
    Eigen::MatrixXd probs(m.num_states, m.num_actions);
    for (int s = 0; s < m.num_states; ++s) {
      for (int a = 0; a < m.num_actions; ++a) probs(s, a) = u(rng) + 1e-3;
      probs.row(s) /= probs.row(s).sum();
    }
    const OccupancyMeasure e = policy_to_occupancy(Policy(probs), m);
    const double a = 0.1 + 10 * u(rng);
    const double b = 20 * u(rng) - 10;
    const RewardTable r = m.rewards[0];
    const RewardTable t = (a * r.array() + b).matrix();
    const double before = expected_return(d, r) - expected_return(e, r);
    const double after = expected_return(d, t) - expected_return(e, t);
    if (std::abs(before) > 1e-9) CHECK((before > 0) == (after > 0));
  }
  CHECK(n > 0);
}
