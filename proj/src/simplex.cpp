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

#include "polyagg/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "polyagg/error.hpp"

namespace polyagg::simplex {
namespace {

thread_local long g_solve_count = 0;

using Tableau =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class VarState : unsigned char { kBasic, kAtLower, kAtUpper };

// x_j = offset + sign * y[col] - (neg >= 0 ? y[neg] : 0)
struct ColumnMap {
  int col = -1;
  int neg = -1;
  double sign = 1.0;
  double offset = 0.0;
};

class Solver {
 public:
  Solver(const LinearProgram& lp, const Options& opt) : lp_(lp), opt_(opt) {
    Build();
  }

  Result Run() {
    Result result;
    Status st = Iterate(/*phase_one=*/true);
    if (st == Status::kIterationLimit) {
      result.status = st;
      result.pivots = pivots_;
      return result;
    }
    Refactor();
    double infeasibility = 0.0;
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] >= first_artificial_) infeasibility += std::max(0.0, beta_[i]);
    }
    for (int c = first_artificial_; c < ncols_; ++c) {
      if (state_[c] == VarState::kAtUpper) infeasibility += upper_[c];
    }
    if (infeasibility > opt_.feasibility_tol * (1.0 + rhs_scale_)) {
      result.status = Status::kInfeasible;
      result.pivots = pivots_;
      return result;
    }
    for (int c = first_artificial_; c < ncols_; ++c) {
      upper_[c] = 0.0;
      if (state_[c] == VarState::kAtUpper) state_[c] = VarState::kAtLower;
    }
    DriveOutArtificials();
    cost_ = phase_two_cost_;
    Refactor();
    st = Iterate(/*phase_one=*/false);
    result.pivots = pivots_;
    if (st != Status::kOptimal) {
      result.status = st;
      return result;
    }
    Refactor();
    result.status = Status::kOptimal;
    result.x = Extract();
    result.objective = lp_.objective().dot(result.x);
    return result;
  }

 private:
  void Build() {
    const int n = lp_.num_vars();
    maps_.resize(n);
    int next = 0;
    std::vector<double> internal_upper;
    for (int j = 0; j < n; ++j) {
      const double lo = lp_.lower(j);
      const double hi = lp_.upper(j);
      ColumnMap& cm = maps_[j];
      if (std::isfinite(lo)) {
        cm.col = next++;
        cm.offset = lo;
        cm.sign = 1.0;
        internal_upper.push_back(std::isfinite(hi) ? hi - lo : kInf);
      } else if (std::isfinite(hi)) {
        cm.col = next++;
        cm.offset = hi;
        cm.sign = -1.0;
        internal_upper.push_back(kInf);
      } else {
        cm.col = next++;
        cm.neg = next++;
        internal_upper.push_back(kInf);
        internal_upper.push_back(kInf);
      }
      if (std::isfinite(lo) && std::isfinite(hi) && hi < lo) {
        throw Error(ErrorKind::kInvalidInput, "variable upper bound below lower bound");
      }
    }
    num_structural_ = next;
    m_ = lp_.num_rows();

    // Row layout after sign normalization; slack and artificial columns are
    // appended in row order.
    std::vector<double> row_sign(m_, 1.0);
    std::vector<double> slack_coeff(m_, 0.0);
    std::vector<double> rhs(m_, 0.0);
    int num_slack = 0;
    for (int i = 0; i < m_; ++i) {
      const Row& row = lp_.rows()[i];
      double b = row.rhs;
      for (int j = 0; j < n; ++j) b -= row.coeffs[j] * maps_[j].offset;
      double s = row.sense == Sense::kLessEqual    ? 1.0
                 : row.sense == Sense::kGreaterEqual ? -1.0
                                                     : 0.0;
      if (s != 0.0) ++num_slack;
      double sign = 1.0;
      if (b < 0.0 || (b == 0.0 && s < 0.0)) sign = -1.0;
      row_sign[i] = sign;
      slack_coeff[i] = s * sign;
      rhs[i] = b * sign;
    }
    int num_art = 0;
    for (int i = 0; i < m_; ++i) {
      if (slack_coeff[i] <= 0.0) ++num_art;
    }
    first_slack_ = num_structural_;
    first_artificial_ = first_slack_ + num_slack;
    ncols_ = first_artificial_ + num_art;

    a0_ = Tableau::Zero(m_, ncols_);
    b0_ = Eigen::VectorXd(m_);
    upper_.assign(ncols_, kInf);
    for (int c = 0; c < num_structural_; ++c) upper_[c] = internal_upper[c];
    basis_.assign(m_, -1);
    state_.assign(ncols_, VarState::kAtLower);

    int slack_col = first_slack_;
    int art_col = first_artificial_;
    rhs_scale_ = 0.0;
    for (int i = 0; i < m_; ++i) {
      const Row& row = lp_.rows()[i];
      for (int j = 0; j < n; ++j) {
        const double a = row.coeffs[j] * row_sign[i];
        if (a == 0.0) continue;
        const ColumnMap& cm = maps_[j];
        a0_(i, cm.col) += a * cm.sign;
        if (cm.neg >= 0) a0_(i, cm.neg) -= a;
      }
      b0_[i] = rhs[i];
      rhs_scale_ = std::max(rhs_scale_, std::abs(rhs[i]));
      if (slack_coeff[i] != 0.0) {
        a0_(i, slack_col) = slack_coeff[i];
        if (slack_coeff[i] > 0.0) basis_[i] = slack_col;
        ++slack_col;
      }
      if (basis_[i] < 0) {
        a0_(i, art_col) = 1.0;
        basis_[i] = art_col;
        ++art_col;
      }
      state_[basis_[i]] = VarState::kBasic;
    }

    phase_two_cost_ = Eigen::VectorXd::Zero(ncols_);
    for (int j = 0; j < n; ++j) {
      const ColumnMap& cm = maps_[j];
      const double c = lp_.objective()[j];
      phase_two_cost_[cm.col] += c * cm.sign;
      if (cm.neg >= 0) phase_two_cost_[cm.neg] -= c;
    }
    cost_ = Eigen::VectorXd::Zero(ncols_);
    for (int c = first_artificial_; c < ncols_; ++c) cost_[c] = -1.0;

    // The initial basis is an identity, so T = A0 and beta = b0.
    tableau_ = a0_;
    beta_ = b0_;
    ComputeReducedCosts();
  }

  void ComputeReducedCosts() {
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = cost_[basis_[i]];
    reduced_ = cost_ - (cb.transpose() * tableau_).transpose();
    for (int i = 0; i < m_; ++i) reduced_[basis_[i]] = 0.0;
  }

  void Refactor() {
    if (m_ == 0) {
      ComputeReducedCosts();
      return;
    }
    Eigen::MatrixXd b(m_, m_);
    for (int i = 0; i < m_; ++i) b.col(i) = a0_.col(basis_[i]);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(b);
    Eigen::VectorXd rhs = b0_;
    for (int c = 0; c < ncols_; ++c) {
      if (state_[c] == VarState::kAtUpper) rhs -= a0_.col(c) * upper_[c];
    }
    Tableau t = lu.solve(Eigen::MatrixXd(a0_));
    Eigen::VectorXd beta = lu.solve(rhs);
    if (!t.allFinite() || !beta.allFinite()) return;
    tableau_ = std::move(t);
    beta_ = std::move(beta);
    ComputeReducedCosts();
  }

  int ChooseEntering(bool bland) const {
    int best = -1;
    double best_score = opt_.optimality_tol;
    for (int c = 0; c < ncols_; ++c) {
      if (state_[c] == VarState::kBasic || upper_[c] <= 0.0) continue;
      double score = 0.0;
      if (state_[c] == VarState::kAtLower) {
        score = reduced_[c];
      } else {
        score = -reduced_[c];
      }
      if (score <= opt_.optimality_tol) continue;
      if (bland) return c;
      if (score > best_score) {
        best_score = score;
        best = c;
      }
    }
    return best;
  }

  Status Iterate(bool phase_one) {
    int degenerate_run = 0;
    int since_refactor = 0;
    while (true) {
      if (pivots_ >= opt_.max_pivots) return Status::kIterationLimit;
      const bool bland = degenerate_run >= opt_.degenerate_run_before_bland;
      const int q = ChooseEntering(bland);
      if (q < 0) return Status::kOptimal;
      const double dir = state_[q] == VarState::kAtLower ? 1.0 : -1.0;

      // Ratio test.
      double theta = upper_[q];
      int leave_row = -1;
      bool leave_to_upper = false;
      double leave_pivot = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double t = tableau_(i, q) * dir;
        if (std::abs(t) <= opt_.pivot_tol) continue;
        double limit;
        bool to_upper;
        if (t > 0.0) {
          limit = std::max(0.0, beta_[i]) / t;
          to_upper = false;
        } else {
          const double u = upper_[basis_[i]];
          if (!std::isfinite(u)) continue;
          limit = std::max(0.0, u - beta_[i]) / -t;
          to_upper = true;
        }
        bool take = false;
        if (leave_row < 0) {
          // Ties with the entering bound prefer a basis change.
          take = limit <= theta;
        } else if (limit < theta - 1e-12) {
          take = true;
        } else if (limit <= theta + 1e-12) {
          take = bland ? basis_[i] < basis_[leave_row]
                       : std::abs(t) > std::abs(leave_pivot);
        }
        if (take) {
          theta = limit;
          leave_row = i;
          leave_to_upper = to_upper;
          leave_pivot = t;
        }
      }
      if (!std::isfinite(theta)) {
        return phase_one ? Status::kInfeasible : Status::kUnbounded;
      }
      ++pivots_;
      degenerate_run = theta <= 1e-12 ? degenerate_run + 1 : 0;

      if (theta != 0.0) beta_ -= (theta * dir) * tableau_.col(q);
      if (leave_row < 0) {
        // Bound flip, basis unchanged.
        state_[q] = dir > 0 ? VarState::kAtUpper : VarState::kAtLower;
        continue;
      }
      const double entering_value = dir > 0 ? theta : upper_[q] - theta;
      const int leaving = basis_[leave_row];
      Pivot(leave_row, q);
      beta_[leave_row] = entering_value;
      state_[leaving] = leave_to_upper ? VarState::kAtUpper : VarState::kAtLower;
      state_[q] = VarState::kBasic;
      basis_[leave_row] = q;

      if (++since_refactor >= opt_.refactor_every) {
        since_refactor = 0;
        Refactor();
      }
    }
  }

  void Pivot(int r, int q) {
    const double piv = tableau_(r, q);
    Eigen::RowVectorXd prow = tableau_.row(r) / piv;
    Eigen::VectorXd col = tableau_.col(q);
    col[r] = 0.0;
    tableau_.noalias() -= col * prow;
    tableau_.row(r) = prow;
    const double dq = reduced_[q];
    reduced_ -= dq * prow.transpose();
    reduced_[q] = 0.0;
  }

  void DriveOutArtificials() {
    for (int r = 0; r < m_; ++r) {
      if (basis_[r] < first_artificial_) continue;
      int best = -1;
      double best_abs = 1e-7;
      for (int c = 0; c < first_artificial_; ++c) {
        if (state_[c] != VarState::kAtLower || upper_[c] <= 0.0) continue;
        const double a = std::abs(tableau_(r, c));
        if (a > best_abs) {
          best_abs = a;
          best = c;
        }
      }
      if (best < 0) continue;  // redundant row
      const int leaving = basis_[r];
      const double value = beta_[r] / tableau_(r, best);
      Pivot(r, best);
      beta_[r] = value;
      state_[leaving] = VarState::kAtLower;
      state_[best] = VarState::kBasic;
      basis_[r] = best;
    }
  }

  Eigen::VectorXd Extract() const {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(ncols_);
    for (int c = 0; c < ncols_; ++c) {
      if (state_[c] == VarState::kAtUpper) y[c] = upper_[c];
    }
    for (int i = 0; i < m_; ++i) y[basis_[i]] = beta_[i];
    for (int c = 0; c < num_structural_; ++c) {
      if (y[c] < 0.0) y[c] = 0.0;
      if (y[c] > upper_[c]) y[c] = upper_[c];
    }
    const int n = lp_.num_vars();
    Eigen::VectorXd x(n);
    for (int j = 0; j < n; ++j) {
      const ColumnMap& cm = maps_[j];
      double v = cm.offset + cm.sign * y[cm.col];
      if (cm.neg >= 0) v -= y[cm.neg];
      x[j] = v;
    }
    return x;
  }

  const LinearProgram& lp_;
  const Options& opt_;
  std::vector<ColumnMap> maps_;
  int num_structural_ = 0;
  int first_slack_ = 0;
  int first_artificial_ = 0;
  int ncols_ = 0;
  int m_ = 0;
  double rhs_scale_ = 0.0;
  Tableau a0_;
  Eigen::VectorXd b0_;
  Tableau tableau_;
  Eigen::VectorXd beta_;
  Eigen::VectorXd cost_;
  Eigen::VectorXd phase_two_cost_;
  Eigen::VectorXd reduced_;
  std::vector<double> upper_;
  std::vector<int> basis_;
  std::vector<VarState> state_;
  long pivots_ = 0;
};

std::string FormatTerm(double c, int j, bool first) {
  std::string s;
  if (!first) s += c < 0 ? " - " : " + ";
  else if (c < 0) s += "-";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g x%d", std::abs(c), j);
  return s + buf;
}

}  // namespace

LinearProgram::LinearProgram(int num_vars)
    : objective_(Eigen::VectorXd::Zero(num_vars)),
      lower_(num_vars, 0.0),
      upper_(num_vars, kInf) {}

int LinearProgram::add_variable(double lo, double hi, double objective) {
  const int j = num_vars();
  objective_.conservativeResize(j + 1);
  objective_[j] = objective;
  lower_.push_back(lo);
  upper_.push_back(hi);
  for (Row& r : rows_) {
    r.coeffs.conservativeResize(j + 1);
    r.coeffs[j] = 0.0;
  }
  return j;
}

void LinearProgram::set_bounds(int j, double lo, double hi) {
  lower_[j] = lo;
  upper_[j] = hi;
}

void LinearProgram::set_objective(Eigen::VectorXd c) {
  if (c.size() != num_vars()) {
    throw Error(ErrorKind::kInvalidInput, "objective length mismatch");
  }
  objective_ = std::move(c);
}

void LinearProgram::add_row(Eigen::VectorXd coeffs, Sense sense, double rhs) {
  if (coeffs.size() != num_vars()) {
    throw Error(ErrorKind::kInvalidInput, "row length mismatch");
  }
  rows_.push_back(Row{std::move(coeffs), sense, rhs});
}

double LinearProgram::max_violation(const Eigen::VectorXd& x) const {
  double worst = 0.0;
  for (int j = 0; j < num_vars(); ++j) {
    worst = std::max(worst, lower_[j] - x[j]);
    worst = std::max(worst, x[j] - upper_[j]);
  }
  for (const Row& r : rows_) {
    const double lhs = r.coeffs.dot(x);
    switch (r.sense) {
      case Sense::kLessEqual: worst = std::max(worst, lhs - r.rhs); break;
      case Sense::kGreaterEqual: worst = std::max(worst, r.rhs - lhs); break;
      case Sense::kEqual: worst = std::max(worst, std::abs(lhs - r.rhs)); break;
    }
  }
  return worst;
}

void LinearProgram::write_lp_text(std::ostream& out) const {
  out << "\\ polyagg LP dump: " << num_vars() << " variables, " << num_rows()
      << " rows\nMaximize\n obj:";
  bool first = true;
  for (int j = 0; j < num_vars(); ++j) {
    if (objective_[j] == 0.0) continue;
    out << ' ' << FormatTerm(objective_[j], j, first);
    first = false;
  }
  if (first) out << " 0 x0";
  out << "\nSubject To\n";
  for (int i = 0; i < num_rows(); ++i) {
    const Row& r = rows_[i];
    out << " r" << i << ":";
    bool f = true;
    for (int j = 0; j < num_vars(); ++j) {
      if (r.coeffs[j] == 0.0) continue;
      out << ' ' << FormatTerm(r.coeffs[j], j, f);
      f = false;
    }
    if (f) out << " 0 x0";
    const char* op = r.sense == Sense::kLessEqual      ? "<="
                     : r.sense == Sense::kGreaterEqual ? ">="
                                                       : "=";
    char buf[64];
    std::snprintf(buf, sizeof(buf), " %s %.17g\n", op, r.rhs);
    out << buf;
  }
  out << "Bounds\n";
  char buf[128];
  for (int j = 0; j < num_vars(); ++j) {
    const bool lo_inf = !std::isfinite(lower_[j]);
    const bool hi_inf = !std::isfinite(upper_[j]);
    if (lo_inf && hi_inf) {
      std::snprintf(buf, sizeof(buf), " x%d free\n", j);
    } else if (lo_inf) {
      std::snprintf(buf, sizeof(buf), " -inf <= x%d <= %.17g\n", j, upper_[j]);
    } else if (hi_inf) {
      std::snprintf(buf, sizeof(buf), " x%d >= %.17g\n", j, lower_[j]);
    } else {
      std::snprintf(buf, sizeof(buf), " %.17g <= x%d <= %.17g\n", lower_[j], j,
                    upper_[j]);
    }
    out << buf;
  }
  out << "End\n";
}

std::string to_string(Status s) {
  switch (s) {
    case Status::kOptimal: return "Optimal";
    case Status::kInfeasible: return "Infeasible";
    case Status::kUnbounded: return "Unbounded";
    case Status::kIterationLimit: return "IterationLimit";
  }
  return "Unknown";
}

Result solve(const LinearProgram& lp, const Options& options) {
  ++g_solve_count;
  Solver solver(lp, options);
  return solver.Run();
}

long solves_on_this_thread() { return g_solve_count; }

}  // namespace polyagg::simplex
