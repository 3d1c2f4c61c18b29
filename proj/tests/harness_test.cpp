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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "polyagg/error.hpp"
#include "polyagg/harness.hpp"
#include "polyagg/io.hpp"

#include "json.hpp"

using namespace polyagg;
namespace fs = std::filesystem;

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

fs::path Scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("polyagg_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string ReadAll(const fs::path& p) { return read_file(p.string()); }

}  // namespace

TEST_CASE("gini") {
  CHECK(gini(std::vector<double>{1, 1, 1}) == 0.0);
  CHECK(gini(std::vector<double>{0, 1}) == 0.5);
  CHECK(gini(std::vector<double>{1, 2, 3}) == doctest::Approx(4.0 / 18).epsilon(1e-15));
  CHECK(KindOf([] { gini(std::vector<double>{0, 0}); }) == ErrorKind::kZeroWelfare);
  CHECK(KindOf([] { gini(std::vector<double>{1e-13}); }) == ErrorKind::kZeroWelfare);
}

TEST_CASE("gini properties") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> x(1 + trial % 7);
    for (double& v : x) v = u(rng);
    const double g = gini(x);
    CHECK(g >= 0.0);
    CHECK(g <= 1.0);
    CHECK(g == doctest::Approx(oracle::gini_sorted(x)).epsilon(1e-12));
    // Powers of two scale exactly.
    std::vector<double> y = x;
    for (double& v : y) v *= 8.0;
    CHECK(gini(y) == g);
    const double c = 0.1 + 10 * u(rng);
    for (size_t i = 0; i < x.size(); ++i) y[i] = c * x[i];
    CHECK(gini(y) == doctest::Approx(g).epsilon(1e-12));
  }
}

TEST_CASE("nash_welfare") {
  CHECK(nash_welfare(std::vector<double>{4, 1}) == 2.0);
  CHECK(nash_welfare(std::vector<double>{0.3, 0.3, 0.3}) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(nash_welfare(std::vector<double>{0, 5}) == 0.0);
  // Underflowing product still gives the geometric mean.
  const std::vector<double> tiny(400, 1e-3);
  CHECK(nash_welfare(tiny) == doctest::Approx(1e-3).epsilon(1e-12));

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(1 + trial % 5);
    for (double& v : x) v = u(rng);
    const double c = 0.1 + 5 * u(rng);
    std::vector<double> y = x;
    for (double& v : y) v *= c;
    CHECK(nash_welfare(y) == doctest::Approx(c * nash_welfare(x)).epsilon(1e-12));
    CHECK(nash_welfare(x) <= *std::max_element(x.begin(), x.end()) + 1e-15);
    CHECK(nash_welfare(x) >= *std::min_element(x.begin(), x.end()) - 1e-15);
  }
}

TEST_CASE("normalized_returns") {
  const Momdp m = gen_simplex_instance(2);
  const AggregationInput in = fixture::prepared(m, 2000, 1);
  RuleResult r = utilitarian(in);
  r.occupancy = OccupancyMeasure(1, 2, Eigen::Vector2d(0.5, 0.5));
  std::vector<double> j = normalized_returns(r, in.normalized, m);
  CHECK(j[0] == doctest::Approx(0.5));
  CHECK(j[1] == doctest::Approx(0.5));
  r.occupancy = OccupancyMeasure(1, 2, Eigen::Vector2d(1, 0));
  j = normalized_returns(r, in.normalized, m);
  CHECK(j[0] == doctest::Approx(1.0));
  CHECK(j[1] == doctest::Approx(0.0));

  // Recomputed from raw rewards, they match the rule's normalized returns.
  const Momdp t = fixture::small_random(4);
  const AggregationInput tin = fixture::prepared(t, 2000, 2);
  const RuleResult e = egalitarian(tin);
  const std::vector<double> a = normalized_returns(e, tin.normalized, t);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] >= -1e-7);
    CHECK(a[i] <= 1 + 1e-7);
    CHECK(a[i] == doctest::Approx(e.returns[i]).epsilon(1e-7));
  }
  const std::vector<double> raw = raw_returns(e, tin.normalized, t);
  CHECK(raw.size() == a.size());
}

TEST_CASE("metrics json round trip is bitwise") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<MetricsRow> rows;
  for (int k = 0; k < 10; ++k) {
    MetricsRow r;
    r.instance = k;
    r.seed = rng();
    r.rule = k % 2 ? "borda-milp" : "veto-core";
    r.status = k == 3 ? "MilpBudgetExhausted" : "ok";
    for (int i = 0; i < 4; ++i) r.returns.push_back(u(rng) / 3.0);
    r.gini = u(rng) / 7.0;
    r.nash = u(rng) * 1e-300;
    r.wall_time = u(rng);
    rows.push_back(r);
  }
  const std::vector<MetricsRow> back = metrics_from_json(metrics_to_json(rows, true));
  REQUIRE(back.size() == rows.size());
  for (size_t k = 0; k < rows.size(); ++k) {
    CHECK(back[k].instance == rows[k].instance);
    CHECK(back[k].seed == rows[k].seed);
    CHECK(back[k].rule == rows[k].rule);
    CHECK(back[k].status == rows[k].status);
    CHECK(back[k].returns == rows[k].returns);
    CHECK(back[k].gini == rows[k].gini);
    CHECK(back[k].nash == rows[k].nash);
    CHECK(back[k].wall_time == rows[k].wall_time);
  }
}

TEST_CASE("experiment spec parsing") {
  const ExperimentSpec s = parse_experiment_spec(R"({
    "seed": 7, "instances": 2,
    "instance": {"generator": "random", "states": 2, "actions": 3, "agents": 2},
    "rules": ["utilitarian", {"name": "approval", "alpha": 0.9, "label": "approval-90"}],
    "samples": 500, "cdf": "logistic"})");
  CHECK(s.seed == 7);
  CHECK(s.instances == 2);
  CHECK(s.instance.generator == "random");
  CHECK(s.instance.actions == 3);
  REQUIRE(s.rules.size() == 2);
  CHECK(s.rules[1].kind == RuleKind::kApproval);
  CHECK(s.rules[1].options.alpha == 0.9);
  CHECK(s.rules[1].label == "approval-90");
  CHECK(s.rules[0].label == "utilitarian");
  CHECK(s.walk.count == 500);
  CHECK(s.cdf_kind == CdfKind::kLogistic);

  for (const char* bad : {R"({"rules": ["utilitarian"]})",
                          R"({"seed": 1, "rules": []})",
                          R"({"seed": 1, "rules": ["dictator"]})",
                          R"({"seed": 1, "rules": ["utilitarian"], "cdf": "normal"})",
                          R"({"seed": 1, "rules": ["utilitarian"], "instance": {"generator": "x"}})",
                          R"({"seed": 1, "rules": ["utilitarian"], "instances": 0})",
                          "not json"}) {
    CHECK(KindOf([&] { parse_experiment_spec(bad); }) == ErrorKind::kInvalidInput);
  }
}

TEST_CASE("instance seeds are distinct and stable") {
  CHECK(derive_instance_seed(5, 0) == derive_instance_seed(5, 0));
  CHECK(derive_instance_seed(5, 0) != derive_instance_seed(5, 1));
  CHECK(derive_instance_seed(5, 0) != derive_instance_seed(6, 0));
}

TEST_CASE("single-agent utilitarian experiment") {
  const fs::path dir = Scratch("single");
  RandomParams p;
  p.num_states = 2;
  p.num_actions = 2;
  p.num_agents = 1;
  p.seed = 3;
  save_momdp(gen_random(p), (dir / "m.json").string());
  ExperimentSpec spec = parse_experiment_spec(
      R"({"seed": 1, "instance": {"file": ")" + (dir / "m.json").string() +
      R"("}, "rules": ["utilitarian"], "samples": 500})");
  const ExperimentOutput out = run_experiment(spec);
  REQUIRE(out.rows.size() == 1);
  CHECK(out.rows[0].status == "ok");
  REQUIRE(out.rows[0].returns.size() == 1);
  CHECK(out.rows[0].returns[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(out.rows[0].gini == 0.0);
  CHECK(out.aggregates.size() == 1);
  CHECK(out.aggregates[0].count == 1);
  CHECK(out.aggregates[0].gini_sem == 0.0);
}

TEST_CASE("experiment output files are byte identical across runs") {
  const std::string body =
      R"("seed": 11, "instances": 2, "instance": {"generator": "random", "states": 2,
         "actions": 2, "agents": 3}, "rules": ["utilitarian", "egalitarian", "max-quantile",
         {"name": "approval", "alpha": 0.9}], "samples": 2000)";
  const fs::path a = Scratch("run_a");
  const fs::path b = Scratch("run_b");
  run_experiment(parse_experiment_spec("{" + body + R"(, "output": ")" + a.string() + "\"}"));
  run_experiment(parse_experiment_spec("{" + body + R"(, "output": ")" + b.string() + "\"}"));
  for (const char* f : {"metrics.csv", "aggregate.csv", "metrics.json", "results.json"}) {
    REQUIRE(fs::exists(a / f));
    CHECK(ReadAll(a / f) == ReadAll(b / f));
  }
  const std::string csv = ReadAll(a / "metrics.csv");
  CHECK(csv.rfind("instance,seed,rule,status,gini,nash,mean_return,min_return,returns\n", 0) == 0);
  // 2 instances x 4 rules plus the header.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
  const auto rows = metrics_from_json(ReadAll(a / "metrics.json"));
  CHECK(rows.size() == 8);
  const auto results = nlohmann::json::parse(ReadAll(a / "results.json"));
  CHECK(results.is_object());
}

TEST_CASE("instance failures are recorded and the run continues") {
  const fs::path dir = Scratch("fail");
  Momdp flat = gen_simplex_instance(2);
  for (auto& r : flat.rewards) r.setConstant(2.0);
  save_momdp(flat, (dir / "flat.json").string());
  const ExperimentSpec spec = parse_experiment_spec(
      R"({"seed": 1, "instance": {"file": ")" + (dir / "flat.json").string() +
      R"("}, "rules": ["utilitarian", "plurality"], "samples": 200, "output": ")" +
      (dir / "out").string() + "\"}");
  const ExperimentOutput out = run_experiment(spec);
  REQUIRE(out.rows.size() == 2);
  for (const MetricsRow& r : out.rows) CHECK(r.status == "AllAgentsIndifferent");
  CHECK(out.aggregates[0].failures == 1);
  CHECK(out.aggregates[0].count == 0);
  CHECK(ReadAll(dir / "out" / "metrics.csv").find("AllAgentsIndifferent") != std::string::npos);
}

TEST_CASE("momdp json round trip is bitwise") {
  for (int k = 0; k < 6; ++k) {
    Momdp m = fixture::small_random(k);
    if (k % 2) {
      m.criterion = Criterion::kDiscounted;
      m.gamma = 0.95;
      m.d_init = Eigen::VectorXd::Constant(m.num_states, 1.0 / m.num_states);
    }
    const Momdp back = momdp_from_json(momdp_to_json(m));
    CHECK(back.num_states == m.num_states);
    CHECK(back.num_actions == m.num_actions);
    CHECK(back.criterion == m.criterion);
    CHECK(back.gamma == m.gamma);
    CHECK(back.transition == m.transition);
    for (int i = 0; i < m.num_agents(); ++i) CHECK(back.rewards[i] == m.rewards[i]);
    if (k % 2) CHECK(back.d_init == m.d_init);
    CHECK(momdp_to_json(back) == momdp_to_json(m));
  }
  CHECK(KindOf([] { momdp_from_json("{\"states\": 1}"); }) == ErrorKind::kInvalidInput);
}

TEST_CASE("rule result json") {
  const AggregationInput in = fixture::prepared(fixture::small_random(2), 3000, 6);
  for (RuleKind kind : {RuleKind::kMaxQuantile, RuleKind::kVetoCore, RuleKind::kBordaMilp}) {
    const RuleResult r = run_rule(kind, in, {});
    const auto j = nlohmann::json::parse(rule_result_to_json(r));
    CHECK(j.at("rule").get<std::string>() == r.rule);
    CHECK(j.at("returns").get<std::vector<double>>() == r.returns);
  }
}

TEST_CASE("graph and cnf text round trip") {
  const Graph g = random_graph(7, 0.4, 3);
  std::stringstream gs;
  write_graph(g, gs);
  const Graph g2 = read_graph(gs);
  CHECK(g2.num_vertices == g.num_vertices);
  CHECK(g2.edges == g.edges);
  std::istringstream dimacs("c triangle\np edge 3 3\ne 1 2\ne 1 3\ne 2 3\n");
  CHECK(read_graph(dimacs).edges.size() == 3);

  const CnfFormula f = random_2cnf(5, 6, 3);
  std::stringstream fs_;
  write_cnf(f, fs_);
  const CnfFormula f2 = read_cnf(fs_);
  CHECK(f2.num_vars == f.num_vars);
  CHECK(f2.clauses == f.clauses);
  std::istringstream bad("p cnf 2 1\n1 3 0\n");
  CHECK(KindOf([&] { read_cnf(bad); }) == ErrorKind::kInvalidInput);
}
