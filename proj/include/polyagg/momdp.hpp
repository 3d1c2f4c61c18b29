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

// Core data model: multi-objective MDPs, policies, occupancy measures and
// the occupancy polytope they live in.
//
// State-action pairs are flattened row-major: index(s, a) = s * |A| + a.
// Every reward table and occupancy vector uses this layout.

#ifndef POLYAGG_MOMDP_HPP_
#define POLYAGG_MOMDP_HPP_

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polyagg/error.hpp"

namespace polyagg {

/// Row slack accepted when checking membership in the polytope.
inline constexpr double kConstraintTol = 1e-7;
/// Ranges at or below this are treated as degenerate (indifferent agents,
/// flat chords, zero-volume directions).
inline constexpr double kDegeneracyTol = 1e-9;
/// Smallest state mass for which a policy is read off an occupancy measure.
inline constexpr double kDenominatorTol = 1e-12;

using RewardTable = Eigen::VectorXd;

enum class Criterion { kAverage, kDiscounted };

struct Momdp {
  int num_states = 0;
  int num_actions = 0;
  // P(s, a, s') stored at (s * |A| + a) * |S| + s'.
  std::vector<double> transition;
  std::vector<RewardTable> rewards;
  Criterion criterion = Criterion::kAverage;
  double gamma = 0.0;
  Eigen::VectorXd d_init;
  std::vector<std::string> agent_names;

  int num_agents() const { return static_cast<int>(rewards.size()); }
  int num_pairs() const { return num_states * num_actions; }
  int index(int s, int a) const { return s * num_actions + a; }
  double p(int s, int a, int next) const {
    return transition[static_cast<size_t>(index(s, a)) * num_states + next];
  }
  double& p(int s, int a, int next) {
    return transition[static_cast<size_t>(index(s, a)) * num_states + next];
  }

  // Allocates zeroed tables for the given shape.
  static Momdp make(int num_states, int num_actions, int num_agents);

  // Throws Error(kInvalidInput) on any violated invariant.
  void validate() const;
};

// A stochastic Markovian policy, pi(a|s) as a |S| x |A| row-stochastic
// matrix.
class Policy {
 public:
  explicit Policy(Eigen::MatrixXd probs);

  static Policy uniform(int num_states, int num_actions);
  static Policy deterministic(const std::vector<int>& action_per_state,
                              int num_actions);

  int num_states() const { return static_cast<int>(probs_.rows()); }
  int num_actions() const { return static_cast<int>(probs_.cols()); }
  double operator()(int s, int a) const { return probs_(s, a); }
  const Eigen::MatrixXd& matrix() const { return probs_; }

 private:
  Eigen::MatrixXd probs_;
};

// A point d(s, a) of the occupancy polytope. Entries above -1e-9 are
// accepted and read back clamped to zero.
class OccupancyMeasure {
 public:
  OccupancyMeasure(int num_states, int num_actions, Eigen::VectorXd values);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  double operator()(int s, int a) const {
    const double v = values_[s * num_actions_ + a];
    return v < 0.0 ? 0.0 : v;
  }
  const Eigen::VectorXd& values() const { return values_; }

 private:
  int num_states_;
  int num_actions_;
  Eigen::VectorXd values_;
};

// <normal, x> <= bound.
struct Halfspace {
  Eigen::VectorXd normal;
  double bound = 0.0;
};

// {x >= 0, eq_matrix x = eq_rhs, <h.normal, x> <= h.bound for h in extra}.
// Nonnegativity is always part of the description; occupancy polytopes
// carry no extra halfspaces, test polytopes (boxes) do.
class OccupancyPolytope {
 public:
  // Certifies nonemptiness with one feasibility solve; throws
  // Error(kInfeasibleModel) otherwise.
  static OccupancyPolytope from_constraints(Eigen::MatrixXd eq_matrix,
                                            Eigen::VectorXd eq_rhs,
                                            std::vector<Halfspace> extra,
                                            int num_states = 0,
                                            int num_actions = 0);

  int dim() const { return static_cast<int>(eq_matrix_.cols()); }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  const Eigen::MatrixXd& eq_matrix() const { return eq_matrix_; }
  const Eigen::VectorXd& eq_rhs() const { return eq_rhs_; }
  const std::vector<Halfspace>& extra() const { return extra_; }

  // All inequality rows, nonnegativity first (-x_j <= 0), then extra.
  std::vector<Halfspace> inequalities() const;

  bool contains(const Eigen::VectorXd& x, double tol = kConstraintTol) const;
  bool contains(const OccupancyMeasure& d, double tol = kConstraintTol) const {
    return contains(d.values(), tol);
  }

 private:
  OccupancyPolytope(Eigen::MatrixXd eq_matrix, Eigen::VectorXd eq_rhs,
                    std::vector<Halfspace> extra, int num_states,
                    int num_actions);

  Eigen::MatrixXd eq_matrix_;
  Eigen::VectorXd eq_rhs_;
  std::vector<Halfspace> extra_;
  int num_states_;
  int num_actions_;
};

OccupancyPolytope build_polytope(const Momdp& m);

Policy occupancy_to_policy(const OccupancyMeasure& d);

// Throws Error(kSingularChain) if the state distribution cannot be
// recovered.
OccupancyMeasure policy_to_occupancy(const Policy& p, const Momdp& m);

inline double expected_return(const OccupancyMeasure& d, const RewardTable& r) {
  return d.values().dot(r);
}

struct NormalizedMomdp {
  Momdp momdp;
  std::vector<int> kept;     // original index of each remaining agent
  std::vector<int> dropped;  // original indices of indifferent agents
  std::vector<double> min_return;  // per original agent, raw scale
  std::vector<double> max_return;
};

// Rescales every agent so min J = 0 and max J = 1 over the polytope and drops
// indifferent agents. Result tables are snapped to a 2^-32 grid and
// re-normalized, so positive affine transforms of the input yield
// bit-identical output. Throws Error(kAllAgentsIndifferent).
NormalizedMomdp normalize_rewards(const Momdp& m, const OccupancyPolytope& poly);

}  // namespace polyagg

#endif  // POLYAGG_MOMDP_HPP_
