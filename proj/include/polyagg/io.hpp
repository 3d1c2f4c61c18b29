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

// File formats: MOMDP JSON, rule results, graphs and 2-CNF formulas in a
// DIMACS-like text form. Doubles are written with 17 significant digits so
// every value reads back bit for bit.

#ifndef POLYAGG_IO_HPP_
#define POLYAGG_IO_HPP_

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "polyagg/instances.hpp"
#include "polyagg/momdp.hpp"
#include "polyagg/rules.hpp"
#include "polyagg/simplex.hpp"

namespace polyagg {

// Streaming JSON writer with two-space indentation and %.17g numbers.
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(const std::string& k);
  JsonWriter& value(double v);
  JsonWriter& value(long v);
  JsonWriter& value(int v) { return value(static_cast<long>(v)); }
  JsonWriter& value(bool v);
  JsonWriter& value(const std::string& v);
  JsonWriter& value(const char* v) { return value(std::string(v)); }
  JsonWriter& array(std::span<const double> values);
  JsonWriter& array(std::span<const int> values);

  const std::string& str() const { return out_; }

 private:
  void Separate();
  void Newline();

  std::string out_;
  std::vector<bool> first_;
  bool after_key_ = false;
};

std::string format_double(double v);

// {"states", "actions", "criterion": "average" | {"discounted": {"gamma",
// "d_init"}}, "transitions"[s][a][s'], "rewards"[agent][s][a],
// "agent_names"}.
std::string momdp_to_json(const Momdp& m);
Momdp momdp_from_json(const std::string& text);
void save_momdp(const Momdp& m, const std::string& path);
Momdp load_momdp(const std::string& path);

std::string rule_result_to_json(const RuleResult& r, bool include_timing = false);
void write_rule_result(JsonWriter& w, const RuleResult& r, bool include_timing);

// "c" comment lines, "p edge V E", then "e u v" with 1-based vertices.
Graph read_graph(std::istream& in);
void write_graph(const Graph& g, std::ostream& out);
// "c" comment lines, "p cnf V C", then "l1 l2 0" per clause.
CnfFormula read_cnf(std::istream& in);
void write_cnf(const CnfFormula& f, std::ostream& out);

Graph load_graph(const std::string& path);
CnfFormula load_cnf(const std::string& path);

// The polytope program with objective sum_i R_i, in CPLEX LP syntax.
void dump_polytope_lp(const OccupancyPolytope& poly,
                      std::span<const RewardTable> rewards,
                      const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace polyagg

#endif  // POLYAGG_IO_HPP_
