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

// Dense bounded-variable primal simplex.
//
// Problems have the form
//
//   maximize    c^T x
//   subject to  a_i^T x {<=, >=, =} b_i
//               lo_j <= x_j <= hi_j
//
// Lower bounds may be -inf (the column is split internally), upper bounds
// may be +inf. Phase one minimizes artificial infeasibility; phase two
// prices with Dantzig's rule and falls back to Bland's rule after a run of
// degenerate pivots. The basis is refactorized from the original data
// periodically and once more at the end, so returned points satisfy the
// rows to roughly machine precision. Results are a deterministic function
// of the input.

#ifndef POLYAGG_SIMPLEX_HPP_
#define POLYAGG_SIMPLEX_HPP_

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace polyagg::simplex {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { kLessEqual, kGreaterEqual, kEqual };

struct Row {
  Eigen::VectorXd coeffs;
  Sense sense = Sense::kLessEqual;
  double rhs = 0.0;
};

class LinearProgram {
 public:
  explicit LinearProgram(int num_vars);

  int num_vars() const { return static_cast<int>(objective_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }

  // Appends a column and returns its index. Existing rows get a zero
  // coefficient for it.
  int add_variable(double lo, double hi, double objective = 0.0);

  void set_bounds(int j, double lo, double hi);
  void set_objective(Eigen::VectorXd c);
  void set_objective_coeff(int j, double c) { objective_[j] = c; }
  void add_row(Eigen::VectorXd coeffs, Sense sense, double rhs);

  const Eigen::VectorXd& objective() const { return objective_; }
  const std::vector<Row>& rows() const { return rows_; }
  double lower(int j) const { return lower_[j]; }
  double upper(int j) const { return upper_[j]; }

  // Largest violation of any row or bound at x.
  double max_violation(const Eigen::VectorXd& x) const;

  // Plain-text dump in CPLEX LP syntax, for cross-checks with external
  // solvers.
  void write_lp_text(std::ostream& out) const;

 private:
  Eigen::VectorXd objective_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<Row> rows_;
};

enum class Status { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

std::string to_string(Status s);

struct Options {
  long max_pivots = 200000;
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refactor_every = 100;
  int degenerate_run_before_bland = 50;
};

struct Result {
  Status status = Status::kInfeasible;
  Eigen::VectorXd x;  // valid when kOptimal
  double objective = 0.0;
  long pivots = 0;
};

Result solve(const LinearProgram& lp, const Options& options = {});

// Number of solve() calls made on this thread so far.
long solves_on_this_thread();

}  // namespace polyagg::simplex

#endif  // POLYAGG_SIMPLEX_HPP_
