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

#include "polyagg/instances.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <set>
#include <string>

namespace polyagg {
namespace {

constexpr int kMaxBruteForce = 20;
constexpr long kMaxPolicies = 1'000'000;

int Pow3(int m) {
  int p = 1;
  for (int j = 0; j < m; ++j) p *= 3;
  return p;
}

// Distribution of one warehouse's next stage.
std::array<double, 3> NextStage(int stage, bool monitored, double p_risk,
                                double p_inc) {
  std::array<double, 3> out{0.0, 0.0, 0.0};
  if (monitored) {
    out[kNorm] = 1.0;
  } else if (stage == kNorm) {
    out[kNorm] = 1.0 - p_risk;
    out[kRisk] = p_risk;
  } else if (stage == kRisk) {
    out[kRisk] = 1.0 - p_inc;
    out[kInc] = p_inc;
  } else {
    out[kInc] = 1.0;
  }
  return out;
}

int LiteralAction(int literal) { return literal > 0 ? 0 : 1; }
int LiteralState(int literal) { return std::abs(literal) - 1; }

}  // namespace

int warehouse_state(const std::vector<int>& stages) {
  int s = 0;
  for (int j = static_cast<int>(stages.size()) - 1; j >= 0; --j) s = s * 3 + stages[j];
  return s;
}

std::vector<int> warehouse_stages(int state, int m) {
  std::vector<int> stages(m);
  for (int j = 0; j < m; ++j) {
    stages[j] = state % 3;
    state /= 3;
  }
  return stages;
}

WarehouseInstance gen_warehouse(const WarehouseParams& params) {
  const int m = params.m;
  const int n = params.n;
  if (m < 1 || n < 1) throw Error(ErrorKind::kInvalidInput, "need m >= 1 and n >= 1");
  if (m > 12 || static_cast<long>(Pow3(m)) * (m + 1) > params.max_variables) {
    throw Error(ErrorKind::kSizeLimit, "warehouse model exceeds the variable cap");
  }
  std::mt19937_64 rng(params.seed);
  WarehouseInstance inst;
  std::uniform_int_distribution<int> penalty_step(0, 3);
  std::uniform_real_distribution<double> prob(0.5, 0.8);
  for (int j = 0; j < m; ++j) {
    inst.penalty.push_back(100.0 + 50.0 * penalty_step(rng));
    inst.p_risk.push_back(prob(rng));
    inst.p_inc.push_back(prob(rng));
  }
  const int rho_steps = std::max(1, static_cast<int>(std::floor(n / params.rho_step + 1e-9)));
  std::uniform_int_distribution<int> rho_pick(1, rho_steps);
  std::uniform_int_distribution<int> subset_pick(1, (1 << m) - 1);
  for (int i = 0; i < n; ++i) {
    inst.scale.push_back(params.rho_step * rho_pick(rng));
    std::vector<int> watched;
    if (params.one_per_warehouse) {
      watched.push_back(i % m);
    } else {
      const int mask = subset_pick(rng);
      for (int j = 0; j < m; ++j) {
        if (mask & (1 << j)) watched.push_back(j);
      }
    }
    inst.watched.push_back(std::move(watched));
  }

  const int states = Pow3(m);
  const int actions = m + 1;
  Momdp& mdp = inst.momdp;
  mdp = Momdp::make(states, actions, n);
  mdp.criterion = params.criterion;
  if (params.criterion == Criterion::kDiscounted) {
    mdp.gamma = params.gamma;
    mdp.d_init = Eigen::VectorXd::Zero(states);
    mdp.d_init[0] = 1.0;
  }
  for (int i = 0; i < n; ++i) mdp.agent_names.push_back("agent" + std::to_string(i));

  for (int s = 0; s < states; ++s) {
    const std::vector<int> stages = warehouse_stages(s, m);
    for (int a = 0; a < actions; ++a) {
      // Product over warehouses of their next-stage distributions.
      std::vector<double> dist(1, 1.0);
      for (int j = m - 1; j >= 0; --j) {
        const std::array<double, 3> next =
            NextStage(stages[j], a == j, inst.p_risk[j], inst.p_inc[j]);
        std::vector<double> grown(dist.size() * 3, 0.0);
        for (size_t k = 0; k < dist.size(); ++k) {
          for (int t = 0; t < 3; ++t) grown[k * 3 + t] = dist[k] * next[t];
        }
        dist = std::move(grown);
      }
      for (int next = 0; next < states; ++next) mdp.p(s, a, next) = dist[next];

      const double monitor_cost = a < m ? -1.0 : 0.0;
      for (int i = 0; i < n; ++i) {
        double r = monitor_cost;
        for (int j : inst.watched[i]) {
          if (stages[j] == kInc && a != j) r -= inst.scale[i] * inst.penalty[j];
        }
        mdp.rewards[i][mdp.index(s, a)] = r;
      }
    }
  }
  mdp.validate();
  return inst;
}

Momdp gen_fully_connected(int num_states, int num_actions, int num_agents) {
  Momdp m = Momdp::make(num_states, num_actions, num_agents);
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      for (int t = 0; t < num_states; ++t) m.p(s, a, t) = 1.0 / num_states;
    }
  }
  return m;
}

Momdp gen_simplex_instance(int ell) {
  if (ell < 2) throw Error(ErrorKind::kInvalidInput, "simplex instance needs ell >= 2");
  Momdp m = gen_fully_connected(1, ell, ell);
  for (int i = 0; i < ell; ++i) {
    m.rewards[i][m.index(0, i)] = 1.0;
    m.agent_names.push_back("agent" + std::to_string(i));
  }
  return m;
}

void Graph::validate() const {
  std::set<std::pair<int, int>> seen;
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= num_vertices || v >= num_vertices) {
      throw Error(ErrorKind::kInvalidInput, "edge endpoint out of range");
    }
    if (u == v) throw Error(ErrorKind::kInvalidInput, "self-loop");
    if (!seen.insert(std::minmax(u, v)).second) {
      throw Error(ErrorKind::kInvalidInput, "duplicate edge");
    }
  }
}

void CnfFormula::validate() const {
  for (const auto& c : clauses) {
    for (int lit : c) {
      if (lit == 0 || std::abs(lit) > num_vars) {
        throw Error(ErrorKind::kInvalidInput, "literal out of range");
      }
    }
  }
}

Momdp gen_from_mis(const Graph& g) {
  g.validate();
  if (g.edges.empty()) throw Error(ErrorKind::kInvalidInput, "graph has no edges");
  const int states = static_cast<int>(g.edges.size());
  Momdp m = gen_fully_connected(states, 2, g.num_vertices);
  for (int e = 0; e < states; ++e) {
    m.rewards[g.edges[e].first][m.index(e, 0)] = 1.0;
    m.rewards[g.edges[e].second][m.index(e, 1)] = 1.0;
  }
  for (int v = 0; v < g.num_vertices; ++v) m.agent_names.push_back("v" + std::to_string(v));
  return m;
}

Momdp gen_from_max2sat(const CnfFormula& f) {
  f.validate();
  if (f.num_vars < 1) throw Error(ErrorKind::kInvalidInput, "formula has no variables");
  const int clauses = static_cast<int>(f.clauses.size());
  Momdp m = gen_fully_connected(f.num_vars, 2, 3 * clauses);
  for (int c = 0; c < clauses; ++c) {
    const int l1 = f.clauses[c][0];
    const int l2 = f.clauses[c][1];
    const std::array<std::pair<int, int>, 3> patterns{
        std::pair{l1, l2}, std::pair{l1, -l2}, std::pair{-l1, l2}};
    for (int k = 0; k < 3; ++k) {
      RewardTable& r = m.rewards[3 * c + k];
      for (int lit : {patterns[k].first, patterns[k].second}) {
        r[m.index(LiteralState(lit), LiteralAction(lit))] += 1.0;
      }
      m.agent_names.push_back("c" + std::to_string(c) + "_" + std::to_string(k));
    }
  }
  return m;
}

Momdp gen_random(const RandomParams& params) {
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Momdp m = Momdp::make(params.num_states, params.num_actions, params.num_agents);
  m.criterion = params.criterion;
  for (int s = 0; s < params.num_states; ++s) {
    for (int a = 0; a < params.num_actions; ++a) {
      double total = 0.0;
      for (int t = 0; t < params.num_states; ++t) {
        m.p(s, a, t) = 0.05 + unit(rng);
        total += m.p(s, a, t);
      }
      for (int t = 0; t < params.num_states; ++t) m.p(s, a, t) /= total;
    }
  }
  for (int i = 0; i < params.num_agents; ++i) {
    for (int k = 0; k < m.num_pairs(); ++k) m.rewards[i][k] = unit(rng);
    m.agent_names.push_back("agent" + std::to_string(i));
  }
  if (params.criterion == Criterion::kDiscounted) {
    m.gamma = params.gamma;
    m.d_init = Eigen::VectorXd::Constant(params.num_states, 1.0 / params.num_states);
  }
  m.validate();
  return m;
}

Graph random_graph(int num_vertices, double edge_prob, std::uint64_t seed) {
  if (num_vertices < 2) throw Error(ErrorKind::kInvalidInput, "need at least 2 vertices");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Graph g;
  g.num_vertices = num_vertices;
  std::set<std::pair<int, int>> edges;
  for (int u = 0; u < num_vertices; ++u) {
    for (int v = u + 1; v < num_vertices; ++v) {
      if (unit(rng) < edge_prob) edges.emplace(u, v);
    }
  }
  std::uniform_int_distribution<int> other(0, num_vertices - 2);
  for (int u = 0; u < num_vertices; ++u) {
    const bool isolated = std::none_of(edges.begin(), edges.end(), [u](const auto& e) {
      return e.first == u || e.second == u;
    });
    if (!isolated) continue;
    int v = other(rng);
    if (v >= u) ++v;
    edges.insert(std::minmax(u, v));
  }
  g.edges.assign(edges.begin(), edges.end());
  return g;
}

CnfFormula random_2cnf(int num_vars, int num_clauses, std::uint64_t seed) {
  if (num_vars < 2) throw Error(ErrorKind::kInvalidInput, "need at least 2 variables");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> var(1, num_vars);
  std::uniform_int_distribution<int> sign(0, 1);
  CnfFormula f;
  f.num_vars = num_vars;
  for (int c = 0; c < num_clauses; ++c) {
    const int a = var(rng);
    int b = var(rng);
    while (b == a) b = var(rng);
    f.clauses.push_back({sign(rng) ? a : -a, sign(rng) ? b : -b});
  }
  return f;
}

bool is_independent(const Graph& g, std::uint32_t mask) {
  for (auto [u, v] : g.edges) {
    if ((mask >> u & 1u) && (mask >> v & 1u)) return false;
  }
  return true;
}

int brute_force_mis(const Graph& g) {
  if (g.num_vertices > kMaxBruteForce) {
    throw Error(ErrorKind::kSizeLimit, "graph too large for brute force");
  }
  int best = 0;
  for (std::uint32_t mask = 0; mask < (1u << g.num_vertices); ++mask) {
    if (is_independent(g, mask)) best = std::max(best, std::popcount(mask));
  }
  return best;
}

int brute_force_max2sat(const CnfFormula& f) {
  if (f.num_vars > kMaxBruteForce) {
    throw Error(ErrorKind::kSizeLimit, "formula too large for brute force");
  }
  int best = 0;
  for (std::uint32_t mask = 0; mask < (1u << f.num_vars); ++mask) {
    auto holds = [mask](int lit) {
      const bool value = mask >> (std::abs(lit) - 1) & 1u;
      return lit > 0 ? value : !value;
    };
    int sat = 0;
    for (const auto& c : f.clauses) sat += (holds(c[0]) || holds(c[1])) ? 1 : 0;
    best = std::max(best, sat);
  }
  return best;
}

std::vector<DeterministicPolicy> enumerate_deterministic_policies(const Momdp& m) {
  double count = std::pow(static_cast<double>(m.num_actions), m.num_states);
  if (count > static_cast<double>(kMaxPolicies)) {
    throw Error(ErrorKind::kSizeLimit, "too many deterministic policies");
  }
  std::vector<DeterministicPolicy> out;
  std::vector<int> actions(m.num_states, 0);
  while (true) {
    const Policy p = Policy::deterministic(actions, m.num_actions);
    out.push_back(DeterministicPolicy{actions, policy_to_occupancy(p, m)});
    int s = 0;
    while (s < m.num_states && ++actions[s] == m.num_actions) actions[s++] = 0;
    if (s == m.num_states) break;
  }
  return out;
}

}  // namespace polyagg
