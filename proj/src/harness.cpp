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

#include "polyagg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "json.hpp"
#include "polyagg/instances.hpp"
#include "polyagg/io.hpp"
#include "polyagg/kernels.hpp"

namespace polyagg {
namespace {

using nlohmann::json;

constexpr double kZeroWelfareTol = 1e-12;

struct Moments {
  double mean = 0.0;
  double sem = 0.0;
};

Moments MeanSem(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return m;
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  const double n = static_cast<double>(xs.size());
  m.sem = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return m;
}

std::string JoinReturns(std::span<const double> xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) out += (i ? ";" : "") + format_double(xs[i]);
  return out;
}

template <typename T>
T Get(const json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  return it == j.end() ? fallback : it->get<T>();
}

RuleSpec ParseRule(const json& j) {
  RuleSpec spec;
  std::string name;
  if (j.is_string()) {
    name = j.get<std::string>();
  } else if (j.is_object() && j.contains("name")) {
    name = j["name"].get<std::string>();
    if (j.contains("alpha")) spec.options.alpha = j["alpha"].get<double>();
    if (j.contains("epsilon")) spec.options.epsilon = j["epsilon"].get<double>();
    if (j.contains("veto_order")) spec.options.veto_order = j["veto_order"].get<std::vector<int>>();
    spec.label = Get<std::string>(j, "label", "");
  } else {
    throw Error(ErrorKind::kInvalidInput, "rule entries must be names or objects with \"name\"");
  }
  const std::optional<RuleKind> kind = parse_rule(name);
  if (!kind) throw Error(ErrorKind::kInvalidInput, "unknown rule: " + name);
  spec.kind = *kind;
  if (spec.label.empty()) spec.label = name;
  return spec;
}

std::string StatusOf(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return std::string(to_string(err->kind()));
  return "InternalError";
}

MetricsRow ComputeRow(int instance, std::uint64_t seed, const std::string& label,
                      const RuleResult& result, const AggregationInput& in,
                      const Momdp& raw, bool raw_metrics) {
  MetricsRow row;
  row.instance = instance;
  row.seed = seed;
  row.rule = label;
  row.returns = raw_metrics ? raw_returns(result, in.normalized, raw)
                            : normalized_returns(result, in.normalized, raw);
  try {
    row.gini = gini(row.returns);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kZeroWelfare) throw;
    row.gini = 0.0;  // every return is zero: perfectly equal
  }
  row.nash = raw_metrics ? 0.0 : nash_welfare(row.returns);
  row.wall_time = result.diagnostics.wall_time;
  return row;
}

void WriteOutputs(const ExperimentSpec& spec, const ExperimentOutput& out,
                  const std::string& results_json) {
  namespace fs = std::filesystem;
  fs::create_directories(spec.output_dir);
  const fs::path dir(spec.output_dir);

  std::ostringstream csv;
  csv << "instance,seed,rule,status,gini,nash,mean_return,min_return,returns";
  if (spec.timing) csv << ",wall_time";
  csv << "\n";
  for (const MetricsRow& r : out.rows) {
    double mean = 0.0;
    double low = r.returns.empty() ? 0.0 : r.returns[0];
    for (double x : r.returns) {
      mean += x;
      low = std::min(low, x);
    }
    if (!r.returns.empty()) mean /= static_cast<double>(r.returns.size());
    csv << r.instance << "," << r.seed << "," << r.rule << "," << r.status << ","
        << format_double(r.gini) << "," << format_double(r.nash) << ","
        << format_double(mean) << "," << format_double(low) << ","
        << JoinReturns(r.returns);
    if (spec.timing) csv << "," << format_double(r.wall_time);
    csv << "\n";
  }
  write_file((dir / "metrics.csv").string(), csv.str());

  std::ostringstream agg;
  agg << "rule,count,failures,gini_mean,gini_sem,nash_mean,nash_sem,"
         "mean_return_mean,mean_return_sem,min_return_mean,min_return_sem\n";
  for (const Aggregate& a : out.aggregates) {
    agg << a.rule << "," << a.count << "," << a.failures << ","
        << format_double(a.gini_mean) << "," << format_double(a.gini_sem) << ","
        << format_double(a.nash_mean) << "," << format_double(a.nash_sem) << ","
        << format_double(a.mean_return_mean) << "," << format_double(a.mean_return_sem)
        << "," << format_double(a.min_return_mean) << ","
        << format_double(a.min_return_sem) << "\n";
  }
  write_file((dir / "aggregate.csv").string(), agg.str());
  write_file((dir / "metrics.json").string(), metrics_to_json(out.rows, spec.timing));
  write_file((dir / "results.json").string(), results_json);
}

}  // namespace

std::vector<double> raw_returns(const RuleResult& result,
                                const NormalizedMomdp& normalized,
                                const Momdp& raw) {
  std::vector<double> out;
  for (int original : normalized.kept) {
    out.push_back(expected_return(result.occupancy, raw.rewards[original]));
  }
  return out;
}

std::vector<double> normalized_returns(const RuleResult& result,
                                       const NormalizedMomdp& normalized,
                                       const Momdp& raw) {
  std::vector<double> out = raw_returns(result, normalized, raw);
  for (size_t k = 0; k < out.size(); ++k) {
    const int original = normalized.kept[k];
    const double lo = normalized.min_return[original];
    const double hi = normalized.max_return[original];
    out[k] = (out[k] - lo) / (hi - lo);
  }
  return out;
}

double gini(std::span<const double> returns) {
  double total = 0.0;
  for (double x : returns) total += x;
  if (total <= kZeroWelfareTol) {
    throw Error(ErrorKind::kZeroWelfare, "Gini index needs a positive total return");
  }
  double diff = 0.0;
  for (double x : returns) {
    for (double y : returns) diff += std::abs(x - y);
  }
  return diff / (2.0 * static_cast<double>(returns.size()) * total);
}

double nash_welfare(std::span<const double> returns) {
  if (returns.empty()) return 0.0;
  double product = 1.0;
  for (double x : returns) {
    if (x <= 0.0) return 0.0;
    product *= x;
  }
  const double n = static_cast<double>(returns.size());
  if (std::isnormal(product)) return std::pow(product, 1.0 / n);
  double logs = 0.0;
  for (double x : returns) logs += std::log(x);
  return std::exp(logs / n);
}

std::string metrics_to_json(std::span<const MetricsRow> rows, bool include_timing) {
  JsonWriter w;
  w.begin_object().key("rows").begin_array();
  for (const MetricsRow& r : rows) {
    w.begin_object();
    w.key("instance").value(r.instance);
    w.key("seed").value(std::to_string(r.seed));
    w.key("rule").value(r.rule);
    w.key("status").value(r.status);
    w.key("returns").array(r.returns);
    w.key("gini").value(r.gini);
    w.key("nash").value(r.nash);
    if (include_timing) w.key("wall_time").value(r.wall_time);
    w.end_object();
  }
  w.end_array().end_object();
  return w.str();
}

std::vector<MetricsRow> metrics_from_json(const std::string& text) {
  std::vector<MetricsRow> rows;
  try {
    const json j = json::parse(text);
    for (const json& r : j.at("rows")) {
      MetricsRow row;
      row.instance = r.at("instance").get<int>();
      row.seed = std::stoull(r.at("seed").get<std::string>());
      row.rule = r.at("rule").get<std::string>();
      row.status = r.at("status").get<std::string>();
      row.returns = r.at("returns").get<std::vector<double>>();
      row.gini = r.at("gini").get<double>();
      row.nash = r.at("nash").get<double>();
      row.wall_time = Get<double>(r, "wall_time", 0.0);
      rows.push_back(std::move(row));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidInput, std::string("bad metrics JSON: ") + e.what());
  }
  return rows;
}

ExperimentSpec parse_experiment_spec(const std::string& text) {
  ExperimentSpec spec;
  try {
    const json j = json::parse(text);
    if (!j.contains("seed")) throw Error(ErrorKind::kInvalidInput, "experiment spec needs a seed");
    spec.seed = j["seed"].get<std::uint64_t>();
    spec.instances = Get<int>(j, "instances", 1);
    if (spec.instances < 1) throw Error(ErrorKind::kInvalidInput, "instances must be positive");
    const json inst = Get<json>(j, "instance", json::object());
    InstanceSpec& is = spec.instance;
    is.generator = Get<std::string>(inst, "generator", is.generator);
    if (inst.contains("file")) {
      is.generator = "file";
      is.file = inst["file"].get<std::string>();
    }
    is.m = Get<int>(inst, "m", is.m);
    is.n = Get<int>(inst, "n", is.n);
    is.one_per_warehouse = Get<bool>(inst, "one_per_warehouse", is.one_per_warehouse);
    is.discounted = Get<std::string>(inst, "criterion", "average") == "discounted";
    is.gamma = Get<double>(inst, "gamma", is.gamma);
    is.ell = Get<int>(inst, "ell", is.ell);
    is.states = Get<int>(inst, "states", is.states);
    is.actions = Get<int>(inst, "actions", is.actions);
    is.agents = Get<int>(inst, "agents", is.agents);
    is.vertices = Get<int>(inst, "vertices", is.vertices);
    is.edge_prob = Get<double>(inst, "edge_prob", is.edge_prob);
    is.vars = Get<int>(inst, "vars", is.vars);
    is.clauses = Get<int>(inst, "clauses", is.clauses);
    static const char* kGenerators[] = {"warehouse", "simplex", "random", "mis", "max2sat", "file"};
    if (std::find(std::begin(kGenerators), std::end(kGenerators), is.generator) ==
        std::end(kGenerators)) {
      throw Error(ErrorKind::kInvalidInput, "unknown generator: " + is.generator);
    }
    if (!j.contains("rules") || !j["rules"].is_array() || j["rules"].empty()) {
      throw Error(ErrorKind::kInvalidInput, "experiment spec needs a nonempty rules list");
    }
    for (const json& r : j["rules"]) spec.rules.push_back(ParseRule(r));
    spec.walk.count = Get<long>(j, "samples", spec.walk.count);
    spec.walk.burn_in = Get<long>(j, "burn_in", spec.walk.burn_in);
    spec.walk.thinning = Get<long>(j, "thinning", spec.walk.thinning);
    spec.walk.shards = Get<int>(j, "shards", spec.walk.shards);
    const std::string cdf = Get<std::string>(j, "cdf", "empirical");
    if (cdf != "empirical" && cdf != "logistic") {
      throw Error(ErrorKind::kInvalidInput, "cdf must be empirical or logistic");
    }
    spec.cdf_kind = cdf == "logistic" ? CdfKind::kLogistic : CdfKind::kEmpirical;
    spec.output_dir = Get<std::string>(j, "output", "");
    spec.timing = Get<bool>(j, "timing", false);
    spec.raw_metrics = Get<bool>(j, "raw_metrics", false);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidInput, std::string("bad experiment spec: ") + e.what());
  }
  return spec;
}

std::uint64_t derive_instance_seed(std::uint64_t seed, int instance) {
  return kernels::shard_seed(seed, 2000 + instance);
}

Momdp make_instance(const InstanceSpec& spec, std::uint64_t seed) {
  const Criterion crit = spec.discounted ? Criterion::kDiscounted : Criterion::kAverage;
  if (spec.generator == "warehouse") {
    WarehouseParams p;
    p.m = spec.m;
    p.n = spec.n;
    p.seed = seed;
    p.criterion = crit;
    p.gamma = spec.gamma;
    p.one_per_warehouse = spec.one_per_warehouse;
    return gen_warehouse(p).momdp;
  }
  if (spec.generator == "simplex") return gen_simplex_instance(spec.ell);
  if (spec.generator == "random") {
    RandomParams p;
    p.num_states = spec.states;
    p.num_actions = spec.actions;
    p.num_agents = spec.agents;
    p.seed = seed;
    p.criterion = crit;
    p.gamma = spec.gamma;
    return gen_random(p);
  }
  if (spec.generator == "mis") return gen_from_mis(random_graph(spec.vertices, spec.edge_prob, seed));
  if (spec.generator == "max2sat") return gen_from_max2sat(random_2cnf(spec.vars, spec.clauses, seed));
  if (spec.generator == "file") return load_momdp(spec.file);
  throw Error(ErrorKind::kInvalidInput, "unknown generator: " + spec.generator);
}

std::vector<Aggregate> aggregate_rows(std::span<const MetricsRow> rows,
                                      std::span<const RuleSpec> rules) {
  std::vector<Aggregate> out;
  for (const RuleSpec& rule : rules) {
    Aggregate a;
    a.rule = rule.label;
    std::vector<double> g, nash, mean, low;
    for (const MetricsRow& r : rows) {
      if (r.rule != rule.label) continue;
      if (r.status != "ok") {
        ++a.failures;
        continue;
      }
      ++a.count;
      g.push_back(r.gini);
      nash.push_back(r.nash);
      double sum = 0.0;
      double lo = r.returns.empty() ? 0.0 : r.returns[0];
      for (double x : r.returns) {
        sum += x;
        lo = std::min(lo, x);
      }
      mean.push_back(r.returns.empty() ? 0.0 : sum / static_cast<double>(r.returns.size()));
      low.push_back(lo);
    }
    Moments m = MeanSem(g);
    a.gini_mean = m.mean;
    a.gini_sem = m.sem;
    m = MeanSem(nash);
    a.nash_mean = m.mean;
    a.nash_sem = m.sem;
    m = MeanSem(mean);
    a.mean_return_mean = m.mean;
    a.mean_return_sem = m.sem;
    m = MeanSem(low);
    a.min_return_mean = m.mean;
    a.min_return_sem = m.sem;
    out.push_back(a);
  }
  return out;
}

ExperimentOutput run_experiment(const ExperimentSpec& spec) {
  ExperimentOutput out;
  JsonWriter w;
  w.begin_object();
  w.key("seed").value(std::to_string(spec.seed));
  w.key("instances").begin_array();
  for (int k = 0; k < spec.instances; ++k) {
    const std::uint64_t seed = derive_instance_seed(spec.seed, k);
    w.begin_object();
    w.key("instance").value(k);
    w.key("seed").value(std::to_string(seed));
    std::optional<Momdp> raw;
    std::optional<AggregationInput> in;
    try {
      raw = make_instance(spec.instance, seed);
      PrepareOptions opts;
      opts.walk = spec.walk;
      opts.seed = kernels::shard_seed(seed, 3000);
      opts.cdf_kind = spec.cdf_kind;
      in = prepare(*raw, opts);
    } catch (const std::exception& e) {
      const std::string status = StatusOf(e);
      w.key("error").value(status).key("message").value(std::string(e.what()));
      w.end_object();
      for (const RuleSpec& rule : spec.rules) {
        MetricsRow row;
        row.instance = k;
        row.seed = seed;
        row.rule = rule.label;
        row.status = status;
        out.rows.push_back(row);
      }
      continue;
    }
    w.key("dropped_agents").array(in->normalized.dropped);
    w.key("results").begin_array();
    for (const RuleSpec& rule : spec.rules) {
      try {
        const RuleResult result = run_rule(rule.kind, *in, rule.options);
        write_rule_result(w, result, spec.timing);
        out.rows.push_back(ComputeRow(k, seed, rule.label, result, *in, *raw, spec.raw_metrics));
      } catch (const std::exception& e) {
        MetricsRow row;
        row.instance = k;
        row.seed = seed;
        row.rule = rule.label;
        row.status = StatusOf(e);
        out.rows.push_back(row);
        w.begin_object().key("rule").value(rule.label).key("error").value(row.status);
        w.key("message").value(std::string(e.what())).end_object();
      }
    }
    w.end_array();
    w.end_object();
  }
  w.end_array();
  w.end_object();
  out.aggregates = aggregate_rows(out.rows, spec.rules);
  if (!spec.output_dir.empty()) WriteOutputs(spec, out, w.str());
  return out;
}

}  // namespace polyagg
