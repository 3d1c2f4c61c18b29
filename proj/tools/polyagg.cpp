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

// polyagg command line: instance generation, single-rule aggregation and
// experiment runs.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "polyagg/error.hpp"
#include "polyagg/harness.hpp"
#include "polyagg/instances.hpp"
#include "polyagg/io.hpp"
#include "polyagg/rules.hpp"

namespace {

using namespace polyagg;

int ExitCode(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMilpBudgetExhausted:
    case ErrorKind::kIterationLimit:
      return 3;
    default:
      return 2;
  }
}

void Emit(const Momdp& m, const std::string& out) {
  const std::string text = momdp_to_json(m);
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_file(out, text);
  }
}

Criterion ParseCriterion(const std::string& s) {
  return s == "discounted" ? Criterion::kDiscounted : Criterion::kAverage;
}

struct GenArgs {
  std::string out;
  std::uint64_t seed = 0;
  std::string criterion = "average";
  double gamma = 0.9;
  WarehouseParams warehouse;
  int ell = 3;
  RandomParams random;
  std::string input;
  int vertices = 8;
  double edge_prob = 0.4;
  int vars = 6;
  int clauses = 5;
};

struct AggregateArgs {
  std::string momdp;
  std::string rule;
  std::optional<double> alpha;
  std::optional<double> epsilon;
  std::uint64_t seed = 0;
  long samples = 100000;
  long burn_in = -1;
  long thinning = -1;
  int shards = 4;
  std::string out;
  std::string cdf = "empirical";
  std::vector<int> veto_order;
  std::string cloud_cache;
  bool timing = false;
  std::string dump_lp;
};

int RunAggregate(const AggregateArgs& a) {
  const std::optional<RuleKind> kind = parse_rule(a.rule);
  if (!kind) throw Error(ErrorKind::kInvalidInput, "unknown rule: " + a.rule);
  const Momdp raw = load_momdp(a.momdp);

  PrepareOptions prep;
  prep.walk.count = a.samples;
  prep.walk.burn_in = a.burn_in;
  prep.walk.thinning = a.thinning;
  prep.walk.shards = a.shards;
  prep.seed = a.seed;
  prep.cdf_kind = a.cdf == "logistic" ? CdfKind::kLogistic : CdfKind::kEmpirical;
  prep.cloud_cache = a.cloud_cache;
  const AggregationInput in = prepare(raw, prep);
  if (!a.dump_lp.empty()) dump_polytope_lp(in.poly, in.rewards(), a.dump_lp);

  RuleOptions opts;
  if (a.alpha) opts.alpha = *a.alpha;
  opts.epsilon = a.epsilon;
  opts.veto_order = a.veto_order;
  RuleResult result = run_rule(*kind, in, opts);

  std::filesystem::create_directories(a.out);
  const std::filesystem::path dir(a.out);
  write_file((dir / "result.json").string(), rule_result_to_json(result, a.timing));

  MetricsRow row;
  row.seed = a.seed;
  row.rule = rule_name(*kind);
  row.returns = normalized_returns(result, in.normalized, raw);
  try {
    row.gini = gini(row.returns);
  } catch (const Error&) {
    row.gini = 0.0;
  }
  row.nash = nash_welfare(row.returns);
  row.wall_time = result.diagnostics.wall_time;
  const std::vector<MetricsRow> rows{row};
  write_file((dir / "metrics.json").string(), metrics_to_json(rows, a.timing));
  std::cout << rule_result_to_json(result, a.timing);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy aggregation over occupancy polytopes"};
  app.require_subcommand(1);

  GenArgs g;
  auto* gen = app.add_subcommand("gen", "Generate an instance as MOMDP JSON");
  gen->require_subcommand(1);
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out,-o", g.out, "Output path (stdout by default)");
    sub->add_option("--seed", g.seed, "Generator seed");
  };

  auto* wh = gen->add_subcommand("warehouse", "Warehouse monitoring");
  add_common(wh);
  wh->add_option("--warehouses,-m", g.warehouse.m)->capture_default_str();
  wh->add_option("--agents,-n", g.warehouse.n)->capture_default_str();
  wh->add_option("--criterion", g.criterion)
      ->check(CLI::IsMember({"average", "discounted"}))
      ->capture_default_str();
  wh->add_option("--gamma", g.gamma)->capture_default_str();
  wh->add_option("--rho-step", g.warehouse.rho_step)->capture_default_str();
  wh->add_flag("--one-per-warehouse", g.warehouse.one_per_warehouse);

  auto* sx = gen->add_subcommand("simplex", "Single state, ell actions");
  add_common(sx);
  sx->add_option("--ell", g.ell)->capture_default_str();

  auto* rnd = gen->add_subcommand("random", "Dense random MOMDP");
  add_common(rnd);
  rnd->add_option("--states", g.random.num_states)->capture_default_str();
  rnd->add_option("--actions", g.random.num_actions)->capture_default_str();
  rnd->add_option("--agents", g.random.num_agents)->capture_default_str();
  rnd->add_option("--criterion", g.criterion)
      ->check(CLI::IsMember({"average", "discounted"}))
      ->capture_default_str();
  rnd->add_option("--gamma", g.gamma)->capture_default_str();

  auto* mis = gen->add_subcommand("mis", "Reduction from independent set");
  add_common(mis);
  mis->add_option("--graph", g.input, "Graph file (random graph when omitted)");
  mis->add_option("--vertices", g.vertices)->capture_default_str();
  mis->add_option("--edge-prob", g.edge_prob)->capture_default_str();

  auto* sat = gen->add_subcommand("max2sat", "Reduction from MAX-2SAT");
  add_common(sat);
  sat->add_option("--cnf", g.input, "2-CNF file (random formula when omitted)");
  sat->add_option("--vars", g.vars)->capture_default_str();
  sat->add_option("--clauses", g.clauses)->capture_default_str();

  AggregateArgs a;
  auto* agg = app.add_subcommand("aggregate", "Run one rule on a MOMDP");
  agg->add_option("--momdp", a.momdp, "MOMDP JSON")->required();
  agg->add_option("--rule", a.rule)
      ->required()
      ->check(CLI::IsMember({"veto-core", "max-quantile", "approval", "plurality",
                             "borda-milp", "borda-concave", "utilitarian",
                             "egalitarian"}));
  agg->add_option("--alpha", a.alpha, "Approval level");
  agg->add_option("--epsilon", a.epsilon, "Rule precision");
  agg->add_option("--seed", a.seed)->required();
  agg->add_option("--samples", a.samples)->required();
  agg->add_option("--burn-in", a.burn_in, "Default 1000 * dim");
  agg->add_option("--thinning", a.thinning, "Default dim");
  agg->add_option("--shards", a.shards)->capture_default_str();
  agg->add_option("--out", a.out)->required();
  agg->add_option("--cdf", a.cdf)
      ->check(CLI::IsMember({"empirical", "logistic"}))
      ->capture_default_str();
  agg->add_option("--veto-order", a.veto_order, "Agent permutation for veto-core");
  agg->add_option("--cloud-cache", a.cloud_cache, "Sample cloud cache (.csv or binary)");
  agg->add_flag("--timing", a.timing, "Include wall time in outputs");
  agg->add_option("--dump-lp", a.dump_lp, "Write the polytope program in LP format");

  std::string spec_path;
  auto* exp = app.add_subcommand("experiment", "Run an experiment spec");
  exp->add_option("--spec", spec_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      if (wh->parsed()) {
        g.warehouse.seed = g.seed;
        g.warehouse.criterion = ParseCriterion(g.criterion);
        g.warehouse.gamma = g.gamma;
        Emit(gen_warehouse(g.warehouse).momdp, g.out);
      } else if (sx->parsed()) {
        Emit(gen_simplex_instance(g.ell), g.out);
      } else if (rnd->parsed()) {
        g.random.seed = g.seed;
        g.random.criterion = ParseCriterion(g.criterion);
        g.random.gamma = g.gamma;
        Emit(gen_random(g.random), g.out);
      } else if (mis->parsed()) {
        const Graph graph = g.input.empty() ? random_graph(g.vertices, g.edge_prob, g.seed)
                                            : load_graph(g.input);
        Emit(gen_from_mis(graph), g.out);
      } else if (sat->parsed()) {
        const CnfFormula f =
            g.input.empty() ? random_2cnf(g.vars, g.clauses, g.seed) : load_cnf(g.input);
        Emit(gen_from_max2sat(f), g.out);
      }
      return 0;
    }
    if (agg->parsed()) return RunAggregate(a);
    if (exp->parsed()) {
      const ExperimentSpec spec = parse_experiment_spec(read_file(spec_path));
      const ExperimentOutput out = run_experiment(spec);
      int failures = 0;
      for (const Aggregate& x : out.aggregates) {
        std::cout << x.rule << ": " << x.count << " ok, " << x.failures
                  << " failed, gini " << format_double(x.gini_mean) << " +- "
                  << format_double(x.gini_sem) << ", nash "
                  << format_double(x.nash_mean) << " +- "
                  << format_double(x.nash_sem) << "\n";
        failures += x.failures;
      }
      return failures == 0 ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "polyagg: " << e.what() << "\n";
    return ExitCode(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "polyagg: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
