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

#include "polyagg/momdp.hpp"

#include <cmath>
#include <string>

#include "polyagg/lp.hpp"

namespace polyagg {
namespace {

constexpr double kStochasticTol = 1e-9;
// Normalized tables are snapped to multiples of 2^-32 before the final
// rescale, which makes the pipeline blind to positive affine transforms.
constexpr double kSnapScale = 4294967296.0;

void Require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::kInvalidInput, what);
}

std::pair<double, double> ReturnRange(const OccupancyPolytope& poly,
                                      const RewardTable& r) {
  const Solution lo = solve_lp(poly, {}, LinearObjective{r, false});
  const Solution hi = solve_lp(poly, {}, LinearObjective{r, true});
  if (lo.status != SolveStatus::kOptimal || hi.status != SolveStatus::kOptimal) {
    throw Error(ErrorKind::kIterationLimit, "return range LP did not converge");
  }
  return {lo.objective_value, hi.objective_value};
}

Eigen::MatrixXd PolicyTransition(const Policy& p, const Momdp& m) {
  const int S = m.num_states;
  Eigen::MatrixXd pp = Eigen::MatrixXd::Zero(S, S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < m.num_actions; ++a) {
      const double w = p(s, a);
      if (w == 0.0) continue;
      for (int t = 0; t < S; ++t) pp(s, t) += w * m.p(s, a, t);
    }
  }
  return pp;
}

// Cesaro limit of the chain started uniformly, via repeated squaring of the
// lazy chain (same stationary distributions, always aperiodic).
Eigen::VectorXd UniformStartLimit(const Eigen::MatrixXd& pp) {
  const int S = static_cast<int>(pp.rows());
  Eigen::MatrixXd lazy = 0.5 * (Eigen::MatrixXd::Identity(S, S) + pp);
  for (int i = 0; i < 64; ++i) lazy = lazy * lazy;
  return (Eigen::RowVectorXd::Constant(S, 1.0 / S) * lazy).transpose();
}

}  // namespace

Momdp Momdp::make(int num_states, int num_actions, int num_agents) {
  Momdp m;
  m.num_states = num_states;
  m.num_actions = num_actions;
  m.transition.assign(
      static_cast<size_t>(num_states) * num_actions * num_states, 0.0);
  m.rewards.assign(num_agents, RewardTable::Zero(num_states * num_actions));
  return m;
}

void Momdp::validate() const {
  Require(num_states > 0, "num_states must be positive");
  Require(num_actions > 0, "num_actions must be positive");
  Require(transition.size() ==
              static_cast<size_t>(num_states) * num_actions * num_states,
          "transition table has wrong size");
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      double sum = 0.0;
      for (int t = 0; t < num_states; ++t) {
        const double v = p(s, a, t);
        Require(std::isfinite(v) && v >= 0.0, "transition probabilities must be >= 0");
        sum += v;
      }
      Require(std::abs(sum - 1.0) <= kStochasticTol,
              "transition row (" + std::to_string(s) + ", " + std::to_string(a) +
                  ") does not sum to 1");
    }
  }
  for (const RewardTable& r : rewards) {
    Require(r.size() == num_pairs(), "reward table has wrong shape");
    Require(r.allFinite(), "reward table has non-finite entries");
  }
  Require(agent_names.empty() || agent_names.size() == rewards.size(),
          "agent_names length must match the number of agents");
  if (criterion == Criterion::kDiscounted) {
    Require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
    Require(d_init.size() == num_states, "d_init has wrong length");
    Require((d_init.array() >= 0.0).all(), "d_init entries must be >= 0");
    Require(std::abs(d_init.sum() - 1.0) <= kStochasticTol, "d_init must sum to 1");
  }
}

Policy::Policy(Eigen::MatrixXd probs) : probs_(std::move(probs)) {
  for (int s = 0; s < probs_.rows(); ++s) {
    Require((probs_.row(s).array() >= 0.0).all(), "policy entries must be >= 0");
    Require(std::abs(probs_.row(s).sum() - 1.0) <= kStochasticTol,
            "policy row must sum to 1");
  }
}

Policy Policy::uniform(int num_states, int num_actions) {
  return Policy(Eigen::MatrixXd::Constant(num_states, num_actions,
                                          1.0 / num_actions));
}

Policy Policy::deterministic(const std::vector<int>& action_per_state,
                             int num_actions) {
  const int S = static_cast<int>(action_per_state.size());
  Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(S, num_actions);
  for (int s = 0; s < S; ++s) probs(s, action_per_state[s]) = 1.0;
  return Policy(std::move(probs));
}

OccupancyMeasure::OccupancyMeasure(int num_states, int num_actions,
                                   Eigen::VectorXd values)
    : num_states_(num_states),
      num_actions_(num_actions),
      values_(std::move(values)) {
  Require(values_.size() == static_cast<Eigen::Index>(num_states) * num_actions,
          "occupancy vector has wrong length");
}

OccupancyPolytope::OccupancyPolytope(Eigen::MatrixXd eq_matrix,
                                     Eigen::VectorXd eq_rhs,
                                     std::vector<Halfspace> extra,
                                     int num_states, int num_actions)
    : eq_matrix_(std::move(eq_matrix)),
      eq_rhs_(std::move(eq_rhs)),
      extra_(std::move(extra)),
      num_states_(num_states),
      num_actions_(num_actions) {}

OccupancyPolytope OccupancyPolytope::from_constraints(
    Eigen::MatrixXd eq_matrix, Eigen::VectorXd eq_rhs,
    std::vector<Halfspace> extra, int num_states, int num_actions) {
  const int dim = static_cast<int>(eq_matrix.cols());
  Require(eq_matrix.rows() == eq_rhs.size(), "equality rows and rhs disagree");
  if (num_states == 0) {
    num_states = 1;
    num_actions = dim;
  }
  Require(num_states * num_actions == dim, "state/action shape does not match dim");
  for (const Halfspace& h : extra) {
    Require(h.normal.size() == dim, "halfspace has wrong dimension");
  }
  OccupancyPolytope poly(std::move(eq_matrix), std::move(eq_rhs),
                         std::move(extra), num_states, num_actions);
  const Solution s =
      solve_lp(poly, {}, LinearObjective{Eigen::VectorXd::Zero(dim), true});
  if (s.status != SolveStatus::kOptimal) {
    throw Error(ErrorKind::kInfeasibleModel,
                "constraint system admits no occupancy measure");
  }
  return poly;
}

std::vector<Halfspace> OccupancyPolytope::inequalities() const {
  std::vector<Halfspace> rows;
  rows.reserve(dim() + extra_.size());
  for (int j = 0; j < dim(); ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim());
    e[j] = -1.0;
    rows.push_back(Halfspace{std::move(e), 0.0});
  }
  rows.insert(rows.end(), extra_.begin(), extra_.end());
  return rows;
}

bool OccupancyPolytope::contains(const Eigen::VectorXd& x, double tol) const {
  if (x.size() != dim()) return false;
  if ((x.array() < -tol).any()) return false;
  if (eq_matrix_.rows() > 0 &&
      ((eq_matrix_ * x - eq_rhs_).array().abs() > tol).any()) {
    return false;
  }
  for (const Halfspace& h : extra_) {
    if (h.normal.dot(x) > h.bound + tol) return false;
  }
  return true;
}

OccupancyPolytope build_polytope(const Momdp& m) {
  m.validate();
  const int S = m.num_states;
  const int A = m.num_actions;
  const int n = m.num_pairs();
  Eigen::MatrixXd eq = Eigen::MatrixXd::Zero(S + 1, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S + 1);
  const double inflow_scale = m.criterion == Criterion::kDiscounted ? m.gamma : 1.0;
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) eq(s, m.index(s, a)) += 1.0;
    for (int sp = 0; sp < S; ++sp) {
      for (int ap = 0; ap < A; ++ap) {
        eq(s, m.index(sp, ap)) -= inflow_scale * m.p(sp, ap, s);
      }
    }
    if (m.criterion == Criterion::kDiscounted) {
      rhs[s] = (1.0 - m.gamma) * m.d_init[s];
    }
  }
  eq.row(S).setOnes();
  rhs[S] = 1.0;
  return OccupancyPolytope::from_constraints(std::move(eq), std::move(rhs), {},
                                             S, A);
}

Policy occupancy_to_policy(const OccupancyMeasure& d) {
  const int S = d.num_states();
  const int A = d.num_actions();
  Eigen::MatrixXd probs(S, A);
  for (int s = 0; s < S; ++s) {
    double mass = 0.0;
    for (int a = 0; a < A; ++a) mass += d(s, a);
    for (int a = 0; a < A; ++a) {
      probs(s, a) = mass > kDenominatorTol ? d(s, a) / mass : 1.0 / A;
    }
    // Absorb rounding so the row is exactly stochastic.
    probs.row(s) /= probs.row(s).sum();
  }
  return Policy(std::move(probs));
}

OccupancyMeasure policy_to_occupancy(const Policy& p, const Momdp& m) {
  const int S = m.num_states;
  const int A = m.num_actions;
  Require(p.num_states() == S && p.num_actions() == A,
          "policy shape does not match the MOMDP");
  const Eigen::MatrixXd pp = PolicyTransition(p, m);
  Eigen::VectorXd rho;
  if (m.criterion == Criterion::kDiscounted) {
    const Eigen::MatrixXd sys =
        Eigen::MatrixXd::Identity(S, S) - m.gamma * pp.transpose();
    rho = sys.partialPivLu().solve((1.0 - m.gamma) * m.d_init);
  } else {
    Eigen::MatrixXd sys(S + 1, S);
    sys.topRows(S) = Eigen::MatrixXd::Identity(S, S) - pp.transpose();
    sys.row(S).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S + 1);
    rhs[S] = 1.0;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sys);
    qr.setThreshold(1e-10);
    if (qr.rank() == S) {
      rho = qr.solve(rhs);
    } else {
      rho = UniformStartLimit(pp);
    }
    const double residual = (pp.transpose() * rho - rho).cwiseAbs().maxCoeff();
    if (!rho.allFinite() || residual > 1e-9) {
      throw Error(ErrorKind::kSingularChain,
                  "could not recover a stationary distribution");
    }
  }
  rho = rho.cwiseMax(0.0);
  rho /= rho.sum();
  Eigen::VectorXd d(m.num_pairs());
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) d[m.index(s, a)] = rho[s] * p(s, a);
  }
  return OccupancyMeasure(S, A, std::move(d));
}

NormalizedMomdp normalize_rewards(const Momdp& m, const OccupancyPolytope& poly) {
  NormalizedMomdp out;
  out.momdp = m;
  out.momdp.rewards.clear();
  out.momdp.agent_names.clear();
  for (int i = 0; i < m.num_agents(); ++i) {
    const auto [lo, hi] = ReturnRange(poly, m.rewards[i]);
    out.min_return.push_back(lo);
    out.max_return.push_back(hi);
    if (hi - lo <= kDegeneracyTol) {
      out.dropped.push_back(i);
      continue;
    }
    // A constant shift of the table shifts every return by the same amount
    // because occupancy measures sum to one.
    RewardTable scaled = (m.rewards[i].array() - lo) / (hi - lo);
    scaled = (scaled.array() * kSnapScale).round() / kSnapScale;
    const auto [lo2, hi2] = ReturnRange(poly, scaled);
    if (hi2 - lo2 <= kDegeneracyTol) {
      out.dropped.push_back(i);
      continue;
    }
    out.momdp.rewards.push_back((scaled.array() - lo2) / (hi2 - lo2));
    if (!m.agent_names.empty()) out.momdp.agent_names.push_back(m.agent_names[i]);
    out.kept.push_back(i);
  }
  if (out.kept.empty()) {
    throw Error(ErrorKind::kAllAgentsIndifferent,
                "every agent is indifferent between all policies");
  }
  return out;
}

}  // namespace polyagg
