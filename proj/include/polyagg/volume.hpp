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

// Volumetric oracle. Uniform samples of a polytope come from seeded
// hit-and-run on its affine hull; volume fractions, return CDFs, centroids
// and density modes are read off one shared sample cloud.

#ifndef POLYAGG_VOLUME_HPP_
#define POLYAGG_VOLUME_HPP_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polyagg/kernels.hpp"
#include "polyagg/momdp.hpp"

namespace polyagg {

// Max-min slack at or below this marks the chart as flat.
inline constexpr double kFlatSlack = 1e-10;

// Intrinsic coordinates of a polytope (optionally cut by extra halfspaces):
// x = origin + basis * y. `walk` holds the inequality rows that still vary
// on the hull, in intrinsic form.
struct HullChart {
  Eigen::MatrixXd basis;   // orthonormal columns
  Eigen::VectorXd origin;  // strictly interior unless dim == 0
  int dim = 0;
  int num_states = 0;
  int num_actions = 0;
  int implicit_equalities = 0;  // inequality rows found to be tight everywhere
  kernels::WalkGeometry walk;
};

// Throws Error(kDegeneratePolytope) if the region stays flat after one
// round of implicit-equality detection, Error(kEmptyRegion) if it is empty.
HullChart affine_hull(const OccupancyPolytope& poly,
                      std::span<const Halfspace> extra = {});

struct WalkParams {
  long count = 100000;
  long burn_in = -1;   // < 0: 1000 * dim
  long thinning = -1;  // < 0: dim
  int shards = 4;      // fixed, independent of the thread count
};

struct SampleCloud {
  kernels::RowMatrix points;  // one ambient point per row, (s, a) row-major
  std::uint64_t seed = 0;
  WalkParams params;          // resolved, no negative entries
  int num_states = 0;
  int num_actions = 0;
  bool single_point = false;  // dim-0 chart: one point, nothing sampled

  long size() const { return static_cast<long>(points.rows()); }
  OccupancyMeasure point(long i) const;
};

// A dim-0 chart yields a one-point cloud with single_point set.
SampleCloud sample_uniform(const HullChart& chart, const WalkParams& params,
                           std::uint64_t seed);
SampleCloud sample_uniform_serial(const HullChart& chart,
                                  const WalkParams& params, std::uint64_t seed);

struct VolumeEstimate {
  double fraction = 0.0;
  double std_error = 0.0;  // batch means over 50 consecutive blocks
};

VolumeEstimate vol_fraction(const SampleCloud& cloud, const Halfspace& h);
VolumeEstimate vol_fraction(const SampleCloud& cloud,
                            std::span<const Halfspace> halfspaces);

enum class CdfKind { kEmpirical, kLogistic };

// F(v) = (1 + exp(-B (v - M)))^(-nu).
struct LogisticParams {
  double growth = 1.0;
  double midpoint = 0.0;
  double nu = 1.0;
};

class ReturnCdf {
 public:
  // Midpoint-rank interpolation of the sorted returns: knots (x_1, 0),
  // (x_k, (k - 1/2) / N) for 1 < k < N, and (x_N, 1).
  static ReturnCdf empirical(int agent, std::vector<double> returns);

  // Least-squares fit of the generalized logistic to the empirical CDF on
  // 200 quantile points. Falls back to the empirical kind when the fit
  // deviates by more than 0.05 or misses F(min) <= 0.01, F(max) >= 0.99.
  static ReturnCdf logistic(int agent, std::vector<double> returns);

  CdfKind kind() const { return kind_; }
  int agent() const { return agent_; }
  double support_min() const { return lo_; }
  double support_max() const { return hi_; }
  const std::vector<double>& sorted_returns() const { return sorted_; }
  const LogisticParams& params() const { return params_; }
  // True when a logistic fit was requested and rejected.
  bool fit_rejected() const { return fit_rejected_; }
  double fit_deviation() const { return fit_deviation_; }

  double operator()(double v) const;
  double empirical_at(double v) const;

 private:
  ReturnCdf() = default;

  CdfKind kind_ = CdfKind::kEmpirical;
  int agent_ = 0;
  double lo_ = 0.0;
  double hi_ = 0.0;
  std::vector<double> sorted_;
  LogisticParams params_;
  bool fit_rejected_ = false;
  double fit_deviation_ = 0.0;
};

ReturnCdf estimate_cdf(const SampleCloud& cloud, const RewardTable& reward,
                       CdfKind kind, int agent = 0);

// One CDF per agent, all read off the same cloud.
std::vector<ReturnCdf> estimate_cdfs(const SampleCloud& cloud,
                                     std::span<const RewardTable> rewards,
                                     CdfKind kind);

// Smallest v in the support with F(v) >= q, bisected to 1e-4 of the support
// width. Returns the upper end of the final bracket; q <= 0 gives the
// support minimum.
double quantile_inverse(const ReturnCdf& cdf, double q);

// Sample mean, projected back onto the chart's affine hull.
OccupancyMeasure centroid_estimate(const SampleCloud& cloud,
                                   const HullChart& chart);

// Empirical kind: argmax over 100 bin centers of a reflected Gaussian KDE
// (Silverman bandwidth), ties to the lower bin. Logistic kind: the analytic
// mode M + ln(nu) / B, clamped to the support.
double mode_estimate(const ReturnCdf& cdf);

// Cloud cache formats. CSV: a `# key=value` metadata line, a header of
// d_s<s>_a<a> columns, then one row per point with 17 significant digits.
// Binary: "PACLOUD1", then u64 rows, cols, seed, burn_in, thinning, shards,
// states, actions, then rows * cols little-endian doubles.
void write_cloud_csv(const SampleCloud& cloud, std::ostream& out);
void write_cloud_binary(const SampleCloud& cloud, std::ostream& out);
SampleCloud read_cloud(std::istream& in);  // detects the format
void save_cloud(const SampleCloud& cloud, const std::string& path);
SampleCloud load_cloud(const std::string& path);

}  // namespace polyagg

#endif  // POLYAGG_VOLUME_HPP_
