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

#include "polyagg/lp.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace polyagg {
namespace {

constexpr double kIntegralityTol = 1e-6;
constexpr double kBoundSlack = 1e-9;

OccupancyMeasure MakeMeasure(const OccupancyPolytope& poly,
                             const Eigen::VectorXd& x) {
  return OccupancyMeasure(poly.num_states(), poly.num_actions(),
                          x.head(poly.dim()));
}

Eigen::VectorXd Padded(const Eigen::VectorXd& v, int size) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(size);
  out.head(v.size()) = v;
  return out;
}

struct Node {
  std::vector<signed char> fixed;  // -1 free, else 0/1
  double bound;
  long id;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;
    return a.id > b.id;
  }
};

}  // namespace

Halfspace at_least(const RewardTable& reward, double value) {
  return Halfspace{-reward, -value};
}

simplex::LinearProgram polytope_program(const OccupancyPolytope& poly,
                                        std::span<const Halfspace> extra_rows) {
  const int n = poly.dim();
  simplex::LinearProgram lp(n);
  for (int i = 0; i < poly.eq_matrix().rows(); ++i) {
    lp.add_row(poly.eq_matrix().row(i).transpose(), simplex::Sense::kEqual,
               poly.eq_rhs()[i]);
  }
  for (const Halfspace& h : poly.extra()) {
    lp.add_row(h.normal, simplex::Sense::kLessEqual, h.bound);
  }
  for (const Halfspace& h : extra_rows) {
    if (h.normal.size() != n) {
      throw Error(ErrorKind::kInvalidInput, "extra row length mismatch");
    }
    lp.add_row(h.normal, simplex::Sense::kLessEqual, h.bound);
  }
  return lp;
}

Solution solve_lp(const OccupancyPolytope& poly,
                  std::span<const Halfspace> extra_rows,
                  const LinearObjective& obj) {
  if (obj.coeffs.size() != poly.dim()) {
    throw Error(ErrorKind::kInvalidInput, "objective length mismatch");
  }
  simplex::LinearProgram lp = polytope_program(poly, extra_rows);
  lp.set_objective(obj.maximize ? obj.coeffs : Eigen::VectorXd(-obj.coeffs));
  const simplex::Result r = simplex::solve(lp);
  Solution sol;
  switch (r.status) {
    case simplex::Status::kOptimal:
      sol.status = SolveStatus::kOptimal;
      sol.point = MakeMeasure(poly, r.x);
      sol.objective_value = obj.coeffs.dot(r.x);
      break;
    case simplex::Status::kInfeasible:
      sol.status = SolveStatus::kInfeasible;
      break;
    case simplex::Status::kIterationLimit:
      sol.status = SolveStatus::kIterationLimit;
      break;
    case simplex::Status::kUnbounded:
      throw Error(ErrorKind::kInvalidInput, "LP over the polytope is unbounded");
  }
  return sol;
}

Solution milp_solve(const OccupancyPolytope& base, const MilpProgram& program) {
  const int n = base.dim();
  const int k = static_cast<int>(program.indicators.size());
  if (k > program.max_binaries) {
    throw Error(ErrorKind::kSizeLimit, "too many binaries in MILP");
  }
  simplex::LinearProgram root = polytope_program(base, program.extra_rows);
  if (program.d_objective.size() == n) root.set_objective(program.d_objective);
  bool heuristic_ok = true;
  bool integral_objective = program.d_objective.size() == 0 ||
                            program.d_objective.isZero(0.0);
  for (int b = 0; b < k; ++b) {
    const Indicator& ind = program.indicators[b];
    if (ind.threshold < 0.0) heuristic_ok = false;
    if (ind.weight != std::round(ind.weight)) integral_objective = false;
    const int col = root.add_variable(0.0, 1.0, ind.weight);
    if (ind.row.size() == 0) continue;
    Eigen::VectorXd row = Padded(ind.row, root.num_vars());
    row[col] = -ind.threshold;
    root.add_row(std::move(row), simplex::Sense::kGreaterEqual, -kBoundSlack);
  }
  for (const auto& [hi, lo] : program.implications) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(root.num_vars());
    row[n + hi] = 1.0;
    row[n + lo] = -1.0;
    root.add_row(std::move(row), simplex::Sense::kGreaterEqual, 0.0);
  }
  for (const LinkRow& link : program.links) {
    Eigen::VectorXd row = Padded(link.row, root.num_vars());
    for (const auto& [b, coef] : link.terms) {
      if (b < 0 || b >= k) throw Error(ErrorKind::kInvalidInput, "link names a missing binary");
      if (coef < 0.0) heuristic_ok = false;
      row[n + b] -= coef;
    }
    root.add_row(std::move(row), simplex::Sense::kGreaterEqual, -kBoundSlack);
  }
  for (const std::vector<int>& group : program.at_most_one) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(root.num_vars());
    for (int b : group) {
      if (b < 0 || b >= k) throw Error(ErrorKind::kInvalidInput, "group names a missing binary");
      row[n + b] = 1.0;
    }
    root.add_row(std::move(row), simplex::Sense::kLessEqual, 1.0);
  }

  Solution best;
  best.status = SolveStatus::kInfeasible;
  double incumbent = -simplex::kInf;
  Eigen::VectorXd incumbent_x;
  long next_id = 0;
  long nodes = 0;

  auto consider = [&](const Eigen::VectorXd& x, double value) {
    if (value > incumbent + 1e-9) {
      incumbent = value;
      incumbent_x = x;
    }
  };
  auto prunable = [&](double bound) {
    if (!std::isfinite(incumbent)) return false;
    if (integral_objective) return std::floor(bound + kIntegralityTol) <= incumbent;
    return bound <= incumbent + 1e-9;
  };

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  open.push(Node{std::vector<signed char>(k, -1), simplex::kInf, next_id++});
  bool budget_hit = false;

  while (!open.empty()) {
    Node node = open.top();
    open.pop();
    // Dive from this node until it is pruned, integral or infeasible.
    while (true) {
      if (prunable(node.bound)) break;
      if (nodes >= program.node_budget) {
        budget_hit = true;
        break;
      }
      ++nodes;
      simplex::LinearProgram lp = root;
      for (int b = 0; b < k; ++b) {
        if (node.fixed[b] >= 0) lp.set_bounds(n + b, node.fixed[b], node.fixed[b]);
      }
      const simplex::Result r = simplex::solve(lp);
      if (r.status == simplex::Status::kIterationLimit) {
        budget_hit = true;
        break;
      }
      if (r.status != simplex::Status::kOptimal) break;
      if (prunable(r.objective)) break;

      int branch = -1;
      double most = kIntegralityTol;
      for (int b = 0; b < k; ++b) {
        const double v = r.x[n + b];
        const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
        if (frac > most + 1e-12) {
          most = frac;
          branch = b;
        }
      }
      if (branch < 0) {
        Eigen::VectorXd x = r.x;
        for (int b = 0; b < k; ++b) x[n + b] = std::round(x[n + b]);
        consider(x, root.objective().dot(x));
        break;
      }
      if (heuristic_ok) {
        Eigen::VectorXd x = r.x;
        for (int b = 0; b < k; ++b) x[n + b] = std::floor(x[n + b] + kIntegralityTol);
        consider(x, root.objective().dot(x));
      }
      Node down{node.fixed, r.objective, next_id++};
      down.fixed[branch] = 0;
      Node up{node.fixed, r.objective, next_id++};
      up.fixed[branch] = 1;
      open.push(std::move(down));
      node = std::move(up);
    }
    if (budget_hit) break;
  }

  best.nodes = nodes;
  if (budget_hit) {
    best.status = SolveStatus::kIterationLimit;
    return best;
  }
  if (!std::isfinite(incumbent)) return best;
  best.status = SolveStatus::kOptimal;
  best.point = MakeMeasure(base, incumbent_x);
  best.objective_value = incumbent;
  best.binary_assignment.resize(k);
  for (int b = 0; b < k; ++b) {
    best.binary_assignment[b] = incumbent_x[n + b] > 0.5 ? 1 : 0;
  }
  return best;
}

OccupancyMeasure pareto_complete(const OccupancyPolytope& poly,
                                 std::span<const double> lower_bounds,
                                 std::span<const RewardTable> rewards) {
  if (lower_bounds.size() != rewards.size()) {
    throw Error(ErrorKind::kInvalidInput, "one lower bound per agent expected");
  }
  std::vector<Halfspace> rows;
  Eigen::VectorXd welfare = Eigen::VectorXd::Zero(poly.dim());
  for (size_t i = 0; i < rewards.size(); ++i) {
    welfare += rewards[i];
    if (std::isfinite(lower_bounds[i])) {
      rows.push_back(at_least(rewards[i], lower_bounds[i] - kBoundSlack));
    }
  }
  const Solution s = solve_lp(poly, rows, LinearObjective{welfare, true});
  if (s.status == SolveStatus::kIterationLimit) {
    throw Error(ErrorKind::kIterationLimit, "Pareto completion LP hit the pivot cap");
  }
  if (s.status != SolveStatus::kOptimal) {
    throw Error(ErrorKind::kInfeasibleBounds, "return lower bounds are infeasible");
  }
  return *s.point;
}

double pareto_gap(const OccupancyPolytope& poly,
                  std::span<const RewardTable> rewards,
                  const OccupancyMeasure& d) {
  std::vector<double> bounds;
  double welfare = 0.0;
  for (const RewardTable& r : rewards) {
    bounds.push_back(expected_return(d, r));
    welfare += bounds.back();
  }
  const OccupancyMeasure best = pareto_complete(poly, bounds, rewards);
  double improved = 0.0;
  for (const RewardTable& r : rewards) improved += expected_return(best, r);
  return std::max(0.0, improved - welfare);
}

LeximinResult leximin(const OccupancyPolytope& poly,
                      std::span<const RewardTable> rewards) {
  const int agents = static_cast<int>(rewards.size());
  std::vector<double> level(agents, -simplex::kInf);
  std::vector<bool> fixed(agents, false);
  int remaining = agents;

  // Common rows: polytope plus fixed agents held at their level.
  auto base_program = [&]() {
    simplex::LinearProgram lp = polytope_program(poly, {});
    for (int i = 0; i < agents; ++i) {
      if (fixed[i]) {
        lp.add_row(rewards[i], simplex::Sense::kGreaterEqual,
                   level[i] - kBoundSlack);
      }
    }
    return lp;
  };

  while (remaining > 0) {
    // Stage 1: maximize the floor t over unfixed agents.
    simplex::LinearProgram lp = base_program();
    const int t = lp.add_variable(-simplex::kInf, simplex::kInf, 1.0);
    for (int i = 0; i < agents; ++i) {
      if (fixed[i]) continue;
      Eigen::VectorXd row = Padded(rewards[i], lp.num_vars());
      row[t] = -1.0;
      lp.add_row(std::move(row), simplex::Sense::kGreaterEqual, 0.0);
    }
    const simplex::Result top = simplex::solve(lp);
    if (top.status != simplex::Status::kOptimal) {
      throw Error(ErrorKind::kIterationLimit, "leximin floor LP failed: " +
                                                  simplex::to_string(top.status));
    }
    const double floor_value = top.objective;

    // Stage 2: an agent is pinned at the floor if it cannot exceed it alone.
    int newly_fixed = 0;
    double lowest_max = simplex::kInf;
    int lowest_agent = -1;
    for (int i = 0; i < agents; ++i) {
      if (fixed[i]) continue;
      simplex::LinearProgram probe = base_program();
      for (int j = 0; j < agents; ++j) {
        if (fixed[j] || j == i) continue;
        probe.add_row(rewards[j], simplex::Sense::kGreaterEqual,
                      floor_value - kBoundSlack);
      }
      probe.add_row(rewards[i], simplex::Sense::kGreaterEqual,
                    floor_value - kBoundSlack);
      probe.set_objective(rewards[i]);
      const simplex::Result r = simplex::solve(probe);
      const double best = r.status == simplex::Status::kOptimal ? r.objective
                                                                : floor_value;
      if (best < lowest_max) {
        lowest_max = best;
        lowest_agent = i;
      }
      if (best <= floor_value + kConstraintTol) {
        level[i] = floor_value;
        fixed[i] = true;
        ++newly_fixed;
      }
    }
    if (newly_fixed == 0) {
      // Numerical stalemate; pin the most constrained agent.
      level[lowest_agent] = floor_value;
      fixed[lowest_agent] = true;
      newly_fixed = 1;
    }
    remaining -= newly_fixed;
  }
  OccupancyMeasure point = pareto_complete(poly, level, rewards);
  return LeximinResult{std::move(point), std::move(level)};
}

}  // namespace polyagg
