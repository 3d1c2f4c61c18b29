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

#include "polyagg/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace polyagg {
namespace {

using nlohmann::json;

std::string Escape(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out + "\"";
}

const json& Field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorKind::kInvalidInput, std::string("missing field ") + key);
  return *it;
}

std::vector<std::string> Tokens(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

void WriteCertificate(JsonWriter& w, const Certificate& cert) {
  w.key("certificate");
  if (std::holds_alternative<std::monostate>(cert)) {
    w.begin_object().key("kind").value("none").end_object();
  } else if (const auto* v = std::get_if<VetoCertificate>(&cert)) {
    w.begin_object().key("kind").value("veto");
    w.key("epsilon").value(v->epsilon).key("delta").value(v->delta);
    w.key("order").array(v->order);
    w.key("thresholds").array(v->thresholds);
    w.key("cut_fractions").array(v->cut_fractions);
    w.end_object();
  } else if (const auto* q = std::get_if<QuantileCertificate>(&cert)) {
    w.begin_object().key("kind").value("quantile");
    w.key("epsilon").value(q->epsilon).key("q_star").value(q->q_star);
    w.key("thresholds").array(q->thresholds);
    w.end_object();
  } else if (const auto* a = std::get_if<ApprovalCertificate>(&cert)) {
    w.begin_object().key("kind").value("approval");
    w.key("alpha").value(a->alpha).key("score").value(a->score);
    w.key("approving").array(a->approving);
    w.key("thresholds").array(a->thresholds);
    w.key("milp_nodes").value(a->milp_nodes);
    w.end_object();
  } else if (const auto* b = std::get_if<BordaCertificate>(&cert)) {
    w.begin_object().key("kind").value("borda");
    w.key("epsilon").value(b->epsilon);
    w.key("rounded_score").value(b->rounded_score);
    w.key("borda_score").value(b->borda_score);
    w.key("milp_nodes").value(b->milp_nodes);
    w.key("levels").begin_array();
    for (const auto& row : b->levels) w.array(row);
    w.end_array();
    w.key("weights").begin_array();
    for (const auto& row : b->weights) w.array(row);
    w.end_array();
    w.end_object();
  } else if (const auto* c = std::get_if<ConcaveBordaCertificate>(&cert)) {
    w.begin_object().key("kind").value("borda_concave");
    w.key("modes").array(c->modes);
    w.key("objective").value(c->objective);
    w.key("borda_score").value(c->borda_score);
    w.end_object();
  }
}

}  // namespace

std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";  // e.g. an unconstrained threshold
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void JsonWriter::Newline() {
  out_ += '\n';
  out_.append(2 * first_.size(), ' ');
}

void JsonWriter::Separate() {
  if (after_key_) {
    after_key_ = false;
    return;
  }
  if (first_.empty()) return;
  if (!first_.back()) out_ += ',';
  first_.back() = false;
  Newline();
}

JsonWriter& JsonWriter::begin_object() {
  Separate();
  out_ += '{';
  first_.push_back(true);
  return *this;
}

JsonWriter& JsonWriter::end_object() {
  const bool empty = first_.back();
  first_.pop_back();
  if (!empty) Newline();
  out_ += '}';
  if (first_.empty()) out_ += '\n';
  return *this;
}

JsonWriter& JsonWriter::begin_array() {
  Separate();
  out_ += '[';
  first_.push_back(true);
  return *this;
}

JsonWriter& JsonWriter::end_array() {
  const bool empty = first_.back();
  first_.pop_back();
  if (!empty) Newline();
  out_ += ']';
  if (first_.empty()) out_ += '\n';
  return *this;
}

JsonWriter& JsonWriter::key(const std::string& k) {
  Separate();
  out_ += Escape(k) + ": ";
  after_key_ = true;
  return *this;
}

JsonWriter& JsonWriter::value(double v) {
  Separate();
  out_ += format_double(v);
  return *this;
}

JsonWriter& JsonWriter::value(long v) {
  Separate();
  out_ += std::to_string(v);
  return *this;
}

JsonWriter& JsonWriter::value(bool v) {
  Separate();
  out_ += v ? "true" : "false";
  return *this;
}

JsonWriter& JsonWriter::value(const std::string& v) {
  Separate();
  out_ += Escape(v);
  return *this;
}

// Numeric arrays go on one line.
JsonWriter& JsonWriter::array(std::span<const double> values) {
  Separate();
  out_ += '[';
  for (size_t i = 0; i < values.size(); ++i) {
    out_ += (i ? ", " : "") + format_double(values[i]);
  }
  out_ += ']';
  return *this;
}

JsonWriter& JsonWriter::array(std::span<const int> values) {
  Separate();
  out_ += '[';
  for (size_t i = 0; i < values.size(); ++i) {
    out_ += (i ? ", " : "") + std::to_string(values[i]);
  }
  out_ += ']';
  return *this;
}

std::string momdp_to_json(const Momdp& m) {
  m.validate();
  JsonWriter w;
  w.begin_object();
  w.key("states").value(m.num_states);
  w.key("actions").value(m.num_actions);
  w.key("criterion");
  if (m.criterion == Criterion::kAverage) {
    w.value("average");
  } else {
    std::vector<double> init(m.d_init.data(), m.d_init.data() + m.d_init.size());
    w.begin_object().key("discounted").begin_object();
    w.key("gamma").value(m.gamma);
    w.key("d_init").array(init);
    w.end_object().end_object();
  }
  w.key("transitions").begin_array();
  std::vector<double> row(m.num_states);
  for (int s = 0; s < m.num_states; ++s) {
    w.begin_array();
    for (int a = 0; a < m.num_actions; ++a) {
      for (int t = 0; t < m.num_states; ++t) row[t] = m.p(s, a, t);
      w.array(row);
    }
    w.end_array();
  }
  w.end_array();
  w.key("rewards").begin_array();
  std::vector<double> acts(m.num_actions);
  for (const RewardTable& r : m.rewards) {
    w.begin_array();
    for (int s = 0; s < m.num_states; ++s) {
      for (int a = 0; a < m.num_actions; ++a) acts[a] = r[m.index(s, a)];
      w.array(acts);
    }
    w.end_array();
  }
  w.end_array();
  if (!m.agent_names.empty()) {
    w.key("agent_names").begin_array();
    for (const std::string& name : m.agent_names) w.value(name);
    w.end_array();
  }
  w.end_object();
  return w.str();
}

Momdp momdp_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidInput, std::string("bad MOMDP JSON: ") + e.what());
  }
  try {
    const int states = Field(j, "states").get<int>();
    const int actions = Field(j, "actions").get<int>();
    const json& rewards = Field(j, "rewards");
    if (states < 1 || actions < 1 || !rewards.is_array()) {
      throw Error(ErrorKind::kInvalidInput, "bad MOMDP shape");
    }
    Momdp m = Momdp::make(states, actions, static_cast<int>(rewards.size()));
    const json& crit = Field(j, "criterion");
    if (crit.is_string() && crit.get<std::string>() == "average") {
      m.criterion = Criterion::kAverage;
    } else if (crit.is_object() && crit.contains("discounted")) {
      const json& d = crit["discounted"];
      m.criterion = Criterion::kDiscounted;
      m.gamma = Field(d, "gamma").get<double>();
      const auto init = Field(d, "d_init").get<std::vector<double>>();
      m.d_init = Eigen::Map<const Eigen::VectorXd>(init.data(), init.size());
    } else {
      throw Error(ErrorKind::kInvalidInput, "criterion must be \"average\" or {\"discounted\": ...}");
    }
    const json& trans = Field(j, "transitions");
    if (!trans.is_array() || static_cast<int>(trans.size()) != states) {
      throw Error(ErrorKind::kInvalidInput, "transitions must be [states][actions][states]");
    }
    for (int s = 0; s < states; ++s) {
      if (static_cast<int>(trans[s].size()) != actions) {
        throw Error(ErrorKind::kInvalidInput, "transitions must be [states][actions][states]");
      }
      for (int a = 0; a < actions; ++a) {
        const auto row = trans[s][a].get<std::vector<double>>();
        if (static_cast<int>(row.size()) != states) {
          throw Error(ErrorKind::kInvalidInput, "transition row has wrong length");
        }
        for (int t = 0; t < states; ++t) m.p(s, a, t) = row[t];
      }
    }
    for (size_t i = 0; i < rewards.size(); ++i) {
      if (static_cast<int>(rewards[i].size()) != states) {
        throw Error(ErrorKind::kInvalidInput, "reward table must be [states][actions]");
      }
      for (int s = 0; s < states; ++s) {
        const auto row = rewards[i][s].get<std::vector<double>>();
        if (static_cast<int>(row.size()) != actions) {
          throw Error(ErrorKind::kInvalidInput, "reward table must be [states][actions]");
        }
        for (int a = 0; a < actions; ++a) m.rewards[i][m.index(s, a)] = row[a];
      }
    }
    if (j.contains("agent_names")) {
      m.agent_names = j["agent_names"].get<std::vector<std::string>>();
    }
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidInput, std::string("bad MOMDP JSON: ") + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kInvalidInput, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kInvalidInput, "cannot write " + path);
  out << text;
}

void save_momdp(const Momdp& m, const std::string& path) {
  write_file(path, momdp_to_json(m));
}

Momdp load_momdp(const std::string& path) { return momdp_from_json(read_file(path)); }

void write_rule_result(JsonWriter& w, const RuleResult& r, bool include_timing) {
  const int states = r.occupancy.num_states();
  const int actions = r.occupancy.num_actions();
  w.begin_object();
  w.key("rule").value(r.rule);
  w.key("returns").array(r.returns);
  w.key("occupancy").begin_array();
  std::vector<double> row(actions);
  for (int s = 0; s < states; ++s) {
    for (int a = 0; a < actions; ++a) row[a] = r.occupancy.values()[s * actions + a];
    w.array(row);
  }
  w.end_array();
  w.key("policy").begin_array();
  for (int s = 0; s < states; ++s) {
    for (int a = 0; a < actions; ++a) row[a] = r.policy(s, a);
    w.array(row);
  }
  w.end_array();
  WriteCertificate(w, r.certificate);
  w.key("diagnostics").begin_object();
  w.key("lp_solves").value(r.diagnostics.lp_solves);
  w.key("samples_used").value(r.diagnostics.samples_used);
  if (include_timing) w.key("wall_time").value(r.diagnostics.wall_time);
  w.end_object();
  w.end_object();
}

std::string rule_result_to_json(const RuleResult& r, bool include_timing) {
  JsonWriter w;
  write_rule_result(w, r, include_timing);
  return w.str();
}

Graph read_graph(std::istream& in) {
  Graph g;
  std::string line;
  long declared = -1;
  while (std::getline(in, line)) {
    const std::vector<std::string> t = Tokens(line);
    if (t.empty() || t[0] == "c") continue;
    if (t[0] == "p") {
      if (t.size() != 4 || t[1] != "edge") {
        throw Error(ErrorKind::kInvalidInput, "expected 'p edge V E'");
      }
      g.num_vertices = std::stoi(t[2]);
      declared = std::stol(t[3]);
    } else if (t[0] == "e") {
      if (t.size() != 3) throw Error(ErrorKind::kInvalidInput, "expected 'e u v'");
      const int u = std::stoi(t[1]) - 1;
      const int v = std::stoi(t[2]) - 1;
      g.edges.emplace_back(std::min(u, v), std::max(u, v));
    } else {
      throw Error(ErrorKind::kInvalidInput, "unknown graph line: " + line);
    }
  }
  if (declared < 0) throw Error(ErrorKind::kInvalidInput, "missing 'p edge' line");
  if (declared != static_cast<long>(g.edges.size())) {
    throw Error(ErrorKind::kInvalidInput, "edge count does not match header");
  }
  g.validate();
  return g;
}

void write_graph(const Graph& g, std::ostream& out) {
  out << "p edge " << g.num_vertices << " " << g.edges.size() << "\n";
  for (auto [u, v] : g.edges) out << "e " << u + 1 << " " << v + 1 << "\n";
}

CnfFormula read_cnf(std::istream& in) {
  CnfFormula f;
  std::string line;
  long declared = -1;
  std::vector<int> pending;
  while (std::getline(in, line)) {
    const std::vector<std::string> t = Tokens(line);
    if (t.empty() || t[0] == "c") continue;
    if (t[0] == "p") {
      if (t.size() != 4 || t[1] != "cnf") {
        throw Error(ErrorKind::kInvalidInput, "expected 'p cnf V C'");
      }
      f.num_vars = std::stoi(t[2]);
      declared = std::stol(t[3]);
      continue;
    }
    for (const std::string& tok : t) {
      const int lit = std::stoi(tok);
      if (lit != 0) {
        pending.push_back(lit);
        continue;
      }
      if (pending.size() != 2) {
        throw Error(ErrorKind::kInvalidInput, "clauses must have exactly two literals");
      }
      f.clauses.push_back({pending[0], pending[1]});
      pending.clear();
    }
  }
  if (!pending.empty()) throw Error(ErrorKind::kInvalidInput, "clause not terminated by 0");
  if (declared < 0) throw Error(ErrorKind::kInvalidInput, "missing 'p cnf' line");
  if (declared != static_cast<long>(f.clauses.size())) {
    throw Error(ErrorKind::kInvalidInput, "clause count does not match header");
  }
  f.validate();
  return f;
}

void write_cnf(const CnfFormula& f, std::ostream& out) {
  out << "p cnf " << f.num_vars << " " << f.clauses.size() << "\n";
  for (const auto& c : f.clauses) out << c[0] << " " << c[1] << " 0\n";
}

Graph load_graph(const std::string& path) {
  std::istringstream in(read_file(path));
  return read_graph(in);
}

CnfFormula load_cnf(const std::string& path) {
  std::istringstream in(read_file(path));
  return read_cnf(in);
}

void dump_polytope_lp(const OccupancyPolytope& poly,
                      std::span<const RewardTable> rewards,
                      const std::string& path) {
  simplex::LinearProgram lp = polytope_program(poly, {});
  Eigen::VectorXd welfare = Eigen::VectorXd::Zero(poly.dim());
  for (const RewardTable& r : rewards) welfare += r;
  lp.set_objective(welfare);
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kInvalidInput, "cannot write " + path);
  lp.write_lp_text(out);
}

}  // namespace polyagg
