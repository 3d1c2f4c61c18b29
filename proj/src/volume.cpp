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

#include "polyagg/volume.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include <unsupported/Eigen/NonLinearOptimization>

#include "polyagg/simplex.hpp"

namespace polyagg {
namespace {

constexpr double kRowNormTol = 1e-12;
constexpr int kBatches = 50;
constexpr int kFitPoints = 200;
constexpr int kCheckPoints = 1000;
constexpr double kMaxFitDeviation = 0.05;
// Weight of the (min, 0) and (max, 1) anchors; keeps the tails inside the
// support so the 0.01 / 0.99 acceptance test is reachable.
constexpr double kAnchorWeight = 10.0;
constexpr int kFineBins = 1000;
constexpr int kModeBins = 100;
constexpr char kMagic[8] = {'P', 'A', 'C', 'L', 'O', 'U', 'D', '1'};

// Orthonormal null space of `eq` and a point solving eq x = rhs.
struct Subspace {
  Eigen::MatrixXd basis;
  Eigen::VectorXd point;
};

Subspace NullSpace(const Eigen::MatrixXd& eq, const Eigen::VectorXd& rhs) {
  const Eigen::Index n = eq.cols();
  Subspace out;
  if (eq.rows() == 0) {
    out.basis = Eigen::MatrixXd::Identity(n, n);
    out.point = Eigen::VectorXd::Zero(n);
    return out;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(eq.transpose());
  qr.setThreshold(1e-10);
  const Eigen::Index rank = qr.rank();
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  out.basis = q.rightCols(n - rank);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(eq);
  cod.setThreshold(1e-10);
  out.point = cod.solve(rhs);
  return out;
}

// Inequality row in intrinsic coordinates: <a, y> <= c.
struct ChartRow {
  Eigen::VectorXd a;
  double c;
  double norm;
};

std::vector<ChartRow> ToChart(const std::vector<Halfspace>& rows,
                              const Subspace& sub) {
  std::vector<ChartRow> out;
  out.reserve(rows.size());
  for (const Halfspace& h : rows) {
    Eigen::VectorXd a = sub.basis.transpose() * h.normal;
    const double norm = a.norm();
    out.push_back(ChartRow{std::move(a), h.bound - h.normal.dot(sub.point), norm});
  }
  return out;
}

simplex::LinearProgram ChartProgram(const std::vector<ChartRow>& rows, int dim) {
  simplex::LinearProgram lp(dim);
  for (int j = 0; j < dim; ++j) lp.set_bounds(j, -simplex::kInf, simplex::kInf);
  for (const ChartRow& r : rows) {
    if (r.norm <= kRowNormTol) continue;
    lp.add_row(r.a, simplex::Sense::kLessEqual, r.c);
  }
  return lp;
}

// Maximizes t subject to <a, y> + |a| t <= c. Returns t and the center y.
double ChebyshevCenter(const std::vector<ChartRow>& rows, int dim,
                       Eigen::VectorXd& center) {
  simplex::LinearProgram full(dim + 1);
  for (int j = 0; j < dim; ++j) full.set_bounds(j, -simplex::kInf, simplex::kInf);
  full.set_bounds(dim, 0.0, 1.0);
  full.set_objective_coeff(dim, 1.0);
  for (const ChartRow& r : rows) {
    if (r.norm <= kRowNormTol) continue;
    Eigen::VectorXd coeffs(dim + 1);
    coeffs.head(dim) = r.a;
    coeffs[dim] = r.norm;
    full.add_row(std::move(coeffs), simplex::Sense::kLessEqual, r.c);
  }
  const simplex::Result res = simplex::solve(full);
  if (res.status != simplex::Status::kOptimal) {
    throw Error(ErrorKind::kEmptyRegion,
                "no interior point: " + simplex::to_string(res.status));
  }
  center = res.x.head(dim);
  return res.objective;
}

void CheckConstantRows(const std::vector<ChartRow>& rows) {
  for (const ChartRow& r : rows) {
    if (r.norm <= kRowNormTol && r.c < -kConstraintTol) {
      throw Error(ErrorKind::kEmptyRegion, "region violates a constant row");
    }
  }
}

// Rows whose slack cannot be made positive anywhere in the region.
std::vector<int> ImplicitEqualities(const std::vector<ChartRow>& rows, int dim) {
  std::vector<int> tight;
  const simplex::LinearProgram base = ChartProgram(rows, dim);
  for (size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].norm <= kRowNormTol) continue;
    simplex::LinearProgram lp = base;
    lp.set_objective(-rows[r].a);
    const simplex::Result res = simplex::solve(lp);
    if (res.status != simplex::Status::kOptimal) continue;
    const double max_slack = (rows[r].c + res.objective) / rows[r].norm;
    if (max_slack <= kFlatSlack) tight.push_back(static_cast<int>(r));
  }
  return tight;
}

long Resolve(long value, long fallback) { return value < 0 ? fallback : value; }

WalkParams ResolveParams(const WalkParams& p, int dim) {
  WalkParams out = p;
  out.burn_in = Resolve(p.burn_in, 1000L * dim);
  out.thinning = std::max(1L, Resolve(p.thinning, dim));
  out.shards = std::max(1, p.shards);
  if (out.count < 1) throw Error(ErrorKind::kInvalidInput, "sample count must be positive");
  return out;
}

template <typename Walker>
SampleCloud Sample(const HullChart& chart, const WalkParams& params,
                   std::uint64_t seed, Walker walker) {
  SampleCloud cloud;
  cloud.seed = seed;
  cloud.num_states = chart.num_states;
  cloud.num_actions = chart.num_actions;
  cloud.params = ResolveParams(params, chart.dim);
  if (chart.dim == 0) {
    cloud.single_point = true;
    cloud.params.count = 1;
    cloud.points = chart.origin.transpose();
    return cloud;
  }
  kernels::ChainPlan plan;
  plan.burn_in = cloud.params.burn_in;
  plan.thinning = cloud.params.thinning;
  plan.count = cloud.params.count;
  plan.shards = cloud.params.shards;
  cloud.points = walker(chart.walk, seed, plan);
  return cloud;
}

// ---- Logistic fit ----------------------------------------------------------

double Softplus(double u) {
  return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

double LogisticAt(const LogisticParams& p, double v) {
  return std::exp(-p.nu * Softplus(-p.growth * (v - p.midpoint)));
}

struct LogisticFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  Eigen::VectorXd xs;
  Eigen::VectorXd ys;
  Eigen::VectorXd ws;  // residual weights

  int inputs() const { return 3; }
  int values() const { return static_cast<int>(xs.size()); }

  // p = (log B, M, log nu).
  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
    const LogisticParams lp{std::exp(p[0]), p[1], std::exp(p[2])};
    for (Eigen::Index k = 0; k < xs.size(); ++k) f[k] = ws[k] * (LogisticAt(lp, xs[k]) - ys[k]);
    return 0;
  }

  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& jac) const {
    const double b = std::exp(p[0]);
    const double nu = std::exp(p[2]);
    for (Eigen::Index k = 0; k < xs.size(); ++k) {
      const double u = -b * (xs[k] - p[1]);
      const double sp = Softplus(u);
      const double f = std::exp(-nu * sp);
      // nu * z * (1 + z)^(-nu - 1), z = exp(u)
      const double g = nu * std::exp(u - (nu + 1.0) * sp);
      jac(k, 0) = ws[k] * g * (xs[k] - p[1]) * b;
      jac(k, 1) = -ws[k] * g * b;
      jac(k, 2) = -ws[k] * sp * f * nu;
    }
    return 0;
  }
};

double Stddev(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
}

double SortedQuantile(const std::vector<double>& sorted, double q) {
  const size_t n = sorted.size();
  const size_t k = std::min(n - 1, static_cast<size_t>(q * static_cast<double>(n)));
  return sorted[k];
}

double NormalKernel(double z) {
  return std::exp(-0.5 * z * z);
}

std::map<std::string, std::string> ParseMeta(const std::string& line) {
  std::map<std::string, std::string> meta;
  std::istringstream in(line);
  std::string token;
  while (in >> token) {
    const size_t eq = token.find('=');
    if (eq != std::string::npos) meta[token.substr(0, eq)] = token.substr(eq + 1);
  }
  return meta;
}

void WriteU64(std::ostream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t ReadU64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in) throw Error(ErrorKind::kInvalidInput, "truncated cloud file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

HullChart affine_hull(const OccupancyPolytope& poly,
                      std::span<const Halfspace> extra) {
  Eigen::MatrixXd eq = poly.eq_matrix();
  Eigen::VectorXd rhs = poly.eq_rhs();
  std::vector<Halfspace> rows = poly.inequalities();
  rows.insert(rows.end(), extra.begin(), extra.end());

  HullChart chart;
  chart.num_states = poly.num_states();
  chart.num_actions = poly.num_actions();
  for (int attempt = 0; attempt < 2; ++attempt) {
    const Subspace sub = NullSpace(eq, rhs);
    if ((eq * sub.point - rhs).lpNorm<Eigen::Infinity>() > kConstraintTol) {
      throw Error(ErrorKind::kEmptyRegion, "equality rows are inconsistent");
    }
    const int dim = static_cast<int>(sub.basis.cols());
    const std::vector<ChartRow> chart_rows = ToChart(rows, sub);
    CheckConstantRows(chart_rows);
    chart.basis = sub.basis;
    chart.dim = dim;

    Eigen::VectorXd center = Eigen::VectorXd::Zero(dim);
    double radius = 0.0;
    if (dim > 0) radius = ChebyshevCenter(chart_rows, dim, center);
    chart.origin = sub.point + sub.basis * center;
    if (dim == 0) {
      for (const ChartRow& r : chart_rows) {
        if (r.c < -kConstraintTol) {
          throw Error(ErrorKind::kEmptyRegion, "region is empty");
        }
      }
      chart.walk = kernels::WalkGeometry{chart.basis, chart.origin,
                                         Eigen::MatrixXd(0, 0), Eigen::VectorXd()};
      return chart;
    }
    if (radius > kFlatSlack) {
      int active = 0;
      for (const ChartRow& r : chart_rows) active += r.norm > kRowNormTol ? 1 : 0;
      Eigen::MatrixXd gradient(active, dim);
      Eigen::VectorXd slack0(active);
      int k = 0;
      for (size_t r = 0; r < chart_rows.size(); ++r) {
        if (chart_rows[r].norm <= kRowNormTol) continue;
        gradient.row(k) = -chart_rows[r].a.transpose();
        slack0[k] = rows[r].bound - rows[r].normal.dot(chart.origin);
        ++k;
      }
      chart.walk = kernels::WalkGeometry{chart.basis, chart.origin,
                                         std::move(gradient), std::move(slack0)};
      return chart;
    }
    if (attempt == 1) break;
    const std::vector<int> tight = ImplicitEqualities(chart_rows, dim);
    if (tight.empty()) break;
    chart.implicit_equalities = static_cast<int>(tight.size());
    Eigen::MatrixXd grown(eq.rows() + tight.size(), eq.cols());
    Eigen::VectorXd grown_rhs(eq.rows() + tight.size());
    grown.topRows(eq.rows()) = eq;
    grown_rhs.head(eq.rows()) = rhs;
    for (size_t k = 0; k < tight.size(); ++k) {
      grown.row(eq.rows() + k) = rows[tight[k]].normal.transpose();
      grown_rhs[eq.rows() + k] = rows[tight[k]].bound;
    }
    eq = std::move(grown);
    rhs = std::move(grown_rhs);
  }
  throw Error(ErrorKind::kDegeneratePolytope,
              "region has no interior on its affine hull");
}

OccupancyMeasure SampleCloud::point(long i) const {
  return OccupancyMeasure(num_states, num_actions, points.row(i).transpose());
}

SampleCloud sample_uniform(const HullChart& chart, const WalkParams& params,
                           std::uint64_t seed) {
  return Sample(chart, params, seed, kernels::hit_and_run);
}

SampleCloud sample_uniform_serial(const HullChart& chart,
                                  const WalkParams& params, std::uint64_t seed) {
  return Sample(chart, params, seed, kernels::hit_and_run_serial);
}

VolumeEstimate vol_fraction(const SampleCloud& cloud, const Halfspace& h) {
  return vol_fraction(cloud, std::span<const Halfspace>(&h, 1));
}

VolumeEstimate vol_fraction(const SampleCloud& cloud,
                            std::span<const Halfspace> halfspaces) {
  const long n = cloud.size();
  if (n == 0) throw Error(ErrorKind::kInvalidInput, "empty sample cloud");
  const std::vector<unsigned char> mask =
      kernels::inside_mask(cloud.points, halfspaces, 0.0);
  long inside = 0;
  for (unsigned char m : mask) inside += m;
  VolumeEstimate est;
  est.fraction = static_cast<double>(inside) / static_cast<double>(n);
  if (n < 2 * kBatches) {
    est.std_error = std::sqrt(est.fraction * (1.0 - est.fraction) / n);
    return est;
  }
  std::vector<double> batch(kBatches);
  for (int b = 0; b < kBatches; ++b) {
    const long begin = n * b / kBatches;
    const long end = n * (b + 1) / kBatches;
    long hits = 0;
    for (long p = begin; p < end; ++p) hits += mask[p];
    batch[b] = static_cast<double>(hits) / static_cast<double>(end - begin);
  }
  est.std_error = Stddev(batch) / std::sqrt(static_cast<double>(kBatches));
  return est;
}

ReturnCdf ReturnCdf::empirical(int agent, std::vector<double> returns) {
  if (returns.empty()) throw Error(ErrorKind::kInvalidInput, "no returns to build a CDF");
  ReturnCdf cdf;
  cdf.agent_ = agent;
  std::sort(returns.begin(), returns.end());
  cdf.sorted_ = std::move(returns);
  cdf.lo_ = cdf.sorted_.front();
  cdf.hi_ = cdf.sorted_.back();
  return cdf;
}

ReturnCdf ReturnCdf::logistic(int agent, std::vector<double> returns) {
  ReturnCdf cdf = empirical(agent, std::move(returns));
  const double width = cdf.hi_ - cdf.lo_;
  if (width <= kDegeneracyTol || cdf.sorted_.size() < 4) {
    cdf.fit_rejected_ = true;
    return cdf;
  }
  LogisticFunctor fn;
  fn.xs.resize(kFitPoints + 2);
  fn.ys.resize(kFitPoints + 2);
  fn.ws = Eigen::VectorXd::Ones(kFitPoints + 2);
  for (int k = 0; k < kFitPoints; ++k) {
    fn.xs[k] = SortedQuantile(cdf.sorted_, (k + 0.5) / kFitPoints);
    fn.ys[k] = cdf.empirical_at(fn.xs[k]);
  }
  fn.xs[kFitPoints] = cdf.lo_;
  fn.ys[kFitPoints] = 0.0;
  fn.xs[kFitPoints + 1] = cdf.hi_;
  fn.ys[kFitPoints + 1] = 1.0;
  fn.ws.tail(2).setConstant(kAnchorWeight);
  const double sd = std::max(Stddev(cdf.sorted_), width * 1e-3);
  Eigen::VectorXd p(3);
  p << std::log(std::numbers::pi / (sd * std::sqrt(3.0))),
      SortedQuantile(cdf.sorted_, 0.5), 0.0;
  Eigen::LevenbergMarquardt<LogisticFunctor> lm(fn);
  lm.parameters.maxfev = 4000;
  lm.minimize(p);
  if (!p.allFinite()) {
    cdf.fit_rejected_ = true;
    return cdf;
  }
  const LogisticParams params{std::exp(p[0]), p[1], std::exp(p[2])};
  double dev = 0.0;
  for (int k = 0; k < kFitPoints; ++k) {
    dev = std::max(dev, std::abs(LogisticAt(params, fn.xs[k]) - fn.ys[k]));
  }
  for (int k = 0; k <= kCheckPoints; ++k) {
    const double v = cdf.lo_ + width * k / kCheckPoints;
    dev = std::max(dev, std::abs(LogisticAt(params, v) - cdf.empirical_at(v)));
  }
  cdf.fit_deviation_ = dev;
  if (!std::isfinite(dev) || dev > kMaxFitDeviation ||
      LogisticAt(params, cdf.lo_) > 0.01 || LogisticAt(params, cdf.hi_) < 0.99) {
    cdf.fit_rejected_ = true;
    return cdf;
  }
  cdf.kind_ = CdfKind::kLogistic;
  cdf.params_ = params;
  return cdf;
}

double ReturnCdf::empirical_at(double v) const {
  if (v < lo_) return 0.0;
  if (v >= hi_) return 1.0;
  const size_t n = sorted_.size();
  const size_t right = static_cast<size_t>(
      std::upper_bound(sorted_.begin(), sorted_.end(), v) - sorted_.begin());
  const size_t left = right - 1;
  auto knot = [n](size_t k) {
    if (k == 0) return 0.0;
    if (k == n - 1) return 1.0;
    return (static_cast<double>(k) + 0.5) / static_cast<double>(n);
  };
  const double t = (v - sorted_[left]) / (sorted_[right] - sorted_[left]);
  return knot(left) + t * (knot(right) - knot(left));
}

double ReturnCdf::operator()(double v) const {
  if (kind_ == CdfKind::kLogistic) return LogisticAt(params_, v);
  return empirical_at(v);
}

ReturnCdf estimate_cdf(const SampleCloud& cloud, const RewardTable& reward,
                       CdfKind kind, int agent) {
  const Eigen::MatrixXd ret =
      kernels::evaluate_returns(cloud.points, std::span<const RewardTable>(&reward, 1));
  std::vector<double> values(ret.data(), ret.data() + ret.size());
  return kind == CdfKind::kLogistic ? ReturnCdf::logistic(agent, std::move(values))
                                    : ReturnCdf::empirical(agent, std::move(values));
}

std::vector<ReturnCdf> estimate_cdfs(const SampleCloud& cloud,
                                     std::span<const RewardTable> rewards,
                                     CdfKind kind) {
  const Eigen::MatrixXd ret = kernels::evaluate_returns(cloud.points, rewards);
  std::vector<ReturnCdf> out;
  out.reserve(rewards.size());
  for (Eigen::Index i = 0; i < ret.cols(); ++i) {
    std::vector<double> values(ret.col(i).data(), ret.col(i).data() + ret.rows());
    const int agent = static_cast<int>(i);
    out.push_back(kind == CdfKind::kLogistic
                      ? ReturnCdf::logistic(agent, std::move(values))
                      : ReturnCdf::empirical(agent, std::move(values)));
  }
  return out;
}

double quantile_inverse(const ReturnCdf& cdf, double q) {
  double lo = cdf.support_min();
  double hi = cdf.support_max();
  if (q <= 0.0 || hi <= lo) return lo;
  const double tol = 1e-4 * (hi - lo);
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) >= q) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

OccupancyMeasure centroid_estimate(const SampleCloud& cloud,
                                   const HullChart& chart) {
  const Eigen::VectorXd mean = kernels::column_mean(cloud.points);
  const Eigen::VectorXd projected =
      chart.origin + chart.basis * (chart.basis.transpose() * (mean - chart.origin));
  return OccupancyMeasure(cloud.num_states, cloud.num_actions, projected);
}

double mode_estimate(const ReturnCdf& cdf) {
  const double lo = cdf.support_min();
  const double hi = cdf.support_max();
  if (hi - lo <= kDegeneracyTol) return lo;
  if (cdf.kind() == CdfKind::kLogistic) {
    const LogisticParams& p = cdf.params();
    return std::clamp(p.midpoint + std::log(p.nu) / p.growth, lo, hi);
  }
  const std::vector<double>& xs = cdf.sorted_returns();
  const double n = static_cast<double>(xs.size());
  const double iqr = SortedQuantile(xs, 0.75) - SortedQuantile(xs, 0.25);
  double spread = Stddev(xs);
  if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
  const double h = 0.9 * spread * std::pow(n, -0.2);
  if (h <= 0.0) return lo;

  const double width = hi - lo;
  std::vector<double> counts(kFineBins, 0.0);
  for (double x : xs) {
    const int b = std::min(kFineBins - 1, static_cast<int>((x - lo) / width * kFineBins));
    counts[b] += 1.0;
  }
  double best = -1.0;
  double best_v = lo;
  for (int e = 0; e < kModeBins; ++e) {
    const double v = lo + width * (e + 0.5) / kModeBins;
    double density = 0.0;
    for (int b = 0; b < kFineBins; ++b) {
      if (counts[b] == 0.0) continue;
      const double c = lo + width * (b + 0.5) / kFineBins;
      density += counts[b] * (NormalKernel((v - c) / h) +
                              NormalKernel((v - (2.0 * lo - c)) / h) +
                              NormalKernel((v - (2.0 * hi - c)) / h));
    }
    if (density > best) {
      best = density;
      best_v = v;
    }
  }
  return best_v;
}

void write_cloud_csv(const SampleCloud& cloud, std::ostream& out) {
  char buf[64];
  out << "# polyagg-cloud seed=" << cloud.seed << " burn_in=" << cloud.params.burn_in
      << " thinning=" << cloud.params.thinning << " shards=" << cloud.params.shards
      << " count=" << cloud.params.count << " states=" << cloud.num_states
      << " actions=" << cloud.num_actions
      << " single_point=" << (cloud.single_point ? 1 : 0) << "\n";
  for (int s = 0; s < cloud.num_states; ++s) {
    for (int a = 0; a < cloud.num_actions; ++a) {
      out << (s + a > 0 ? "," : "") << "d_s" << s << "_a" << a;
    }
  }
  out << "\n";
  for (Eigen::Index r = 0; r < cloud.points.rows(); ++r) {
    for (Eigen::Index c = 0; c < cloud.points.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", cloud.points(r, c));
      out << (c > 0 ? "," : "") << buf;
    }
    out << "\n";
  }
}

void write_cloud_binary(const SampleCloud& cloud, std::ostream& out) {
  out.write(kMagic, sizeof(kMagic));
  WriteU64(out, static_cast<std::uint64_t>(cloud.points.rows()));
  WriteU64(out, static_cast<std::uint64_t>(cloud.points.cols()));
  WriteU64(out, cloud.seed);
  WriteU64(out, static_cast<std::uint64_t>(cloud.params.burn_in));
  WriteU64(out, static_cast<std::uint64_t>(cloud.params.thinning));
  WriteU64(out, static_cast<std::uint64_t>(cloud.params.shards));
  WriteU64(out, static_cast<std::uint64_t>(cloud.num_states));
  WriteU64(out, static_cast<std::uint64_t>(cloud.num_actions));
  for (Eigen::Index r = 0; r < cloud.points.rows(); ++r) {
    for (Eigen::Index c = 0; c < cloud.points.cols(); ++c) {
      std::uint64_t bits;
      const double v = cloud.points(r, c);
      std::memcpy(&bits, &v, sizeof(bits));
      WriteU64(out, bits);
    }
  }
}

SampleCloud read_cloud(std::istream& in) {
  char head[8] = {};
  in.read(head, sizeof(head));
  SampleCloud cloud;
  if (in && std::memcmp(head, kMagic, sizeof(kMagic)) == 0) {
    const std::uint64_t rows = ReadU64(in);
    const std::uint64_t cols = ReadU64(in);
    cloud.seed = ReadU64(in);
    cloud.params.burn_in = static_cast<long>(ReadU64(in));
    cloud.params.thinning = static_cast<long>(ReadU64(in));
    cloud.params.shards = static_cast<int>(ReadU64(in));
    cloud.num_states = static_cast<int>(ReadU64(in));
    cloud.num_actions = static_cast<int>(ReadU64(in));
    if (cols != static_cast<std::uint64_t>(cloud.num_states) * cloud.num_actions) {
      throw Error(ErrorKind::kInvalidInput, "cloud shape mismatch");
    }
    cloud.params.count = static_cast<long>(rows);
    cloud.points.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::uint64_t r = 0; r < rows; ++r) {
      for (std::uint64_t c = 0; c < cols; ++c) {
        const std::uint64_t bits = ReadU64(in);
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        cloud.points(r, c) = v;
      }
    }
    cloud.single_point = rows == 1;
    return cloud;
  }
  in.clear();
  in.seekg(0);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# polyagg-cloud", 0) != 0) {
    throw Error(ErrorKind::kInvalidInput, "not a sample cloud file");
  }
  const auto meta = ParseMeta(line);
  auto get = [&](const char* key) {
    const auto it = meta.find(key);
    if (it == meta.end()) throw Error(ErrorKind::kInvalidInput, std::string("cloud metadata lacks ") + key);
    return it->second;
  };
  cloud.seed = std::stoull(get("seed"));
  cloud.params.burn_in = std::stol(get("burn_in"));
  cloud.params.thinning = std::stol(get("thinning"));
  cloud.params.shards = std::stoi(get("shards"));
  cloud.params.count = std::stol(get("count"));
  cloud.num_states = std::stoi(get("states"));
  cloud.num_actions = std::stoi(get("actions"));
  cloud.single_point = get("single_point") == "1";
  std::getline(in, line);  // column header
  const int cols = cloud.num_states * cloud.num_actions;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    int c = 0;
    while (std::getline(row, cell, ',')) {
      values.push_back(std::strtod(cell.c_str(), nullptr));
      ++c;
    }
    if (c != cols) throw Error(ErrorKind::kInvalidInput, "cloud row has wrong width");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(values.size() / std::max(cols, 1));
  cloud.points = Eigen::Map<kernels::RowMatrix>(values.data(), rows, cols);
  return cloud;
}

void save_cloud(const SampleCloud& cloud, const std::string& path) {
  const bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kInvalidInput, "cannot write " + path);
  if (csv) {
    write_cloud_csv(cloud, out);
  } else {
    write_cloud_binary(cloud, out);
  }
}

SampleCloud load_cloud(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kInvalidInput, "cannot read " + path);
  return read_cloud(in);
}

}  // namespace polyagg
