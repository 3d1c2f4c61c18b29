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

// Data-parallel kernels behind the volumetric oracle.
//
// Each kernel has an OpenMP version and a plain serial reference. The
// hit-and-run, return and counting kernels produce bit-identical output in
// both versions (work is split by fixed shard or row, never by thread
// count). column_mean reduces over fixed chunks, so it matches the serial
// reference only to rounding.

#ifndef POLYAGG_KERNELS_HPP_
#define POLYAGG_KERNELS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "polyagg/momdp.hpp"

namespace polyagg::kernels {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A polytope in intrinsic coordinates y, with x = origin + basis * y. Each
// active inequality row r has slack(y) = slack0[r] + gradient.row(r) * y,
// and the polytope is {y : slack(y) >= 0}.
struct WalkGeometry {
  Eigen::MatrixXd basis;
  Eigen::VectorXd origin;
  Eigen::MatrixXd gradient;
  Eigen::VectorXd slack0;
};

struct ChainPlan {
  long burn_in = 0;
  long thinning = 1;
  long count = 0;
  int shards = 1;
};

// Splitmix64 finalizer of (seed ^ golden * (shard + 1)).
std::uint64_t shard_seed(std::uint64_t seed, int shard);

// Number of points shard `shard` records; shards get count / shards and the
// first count % shards get one extra.
long shard_count(const ChainPlan& plan, int shard);

// Runs one hit-and-run chain from the origin and writes `count` ambient
// points into consecutive rows of `out`, starting at row `first_row`.
void run_chain(const WalkGeometry& geo, std::uint64_t seed, long burn_in,
               long thinning, long count, RowMatrix& out, long first_row);

// All shards, merged in shard order.
RowMatrix hit_and_run(const WalkGeometry& geo, std::uint64_t seed,
                      const ChainPlan& plan);
RowMatrix hit_and_run_serial(const WalkGeometry& geo, std::uint64_t seed,
                             const ChainPlan& plan);

// returns(p, i) = <points.row(p), rewards[i]>.
Eigen::MatrixXd evaluate_returns(const RowMatrix& points,
                                 std::span<const RewardTable> rewards);
Eigen::MatrixXd evaluate_returns_serial(const RowMatrix& points,
                                        std::span<const RewardTable> rewards);

// mask[p] = 1 iff row p satisfies every halfspace (within tol).
std::vector<unsigned char> inside_mask(const RowMatrix& points,
                                       std::span<const Halfspace> halfspaces,
                                       double tol = 0.0);
std::vector<unsigned char> inside_mask_serial(
    const RowMatrix& points, std::span<const Halfspace> halfspaces,
    double tol = 0.0);

// Rows satisfying every halfspace (within tol).
long count_inside(const RowMatrix& points, std::span<const Halfspace> halfspaces,
                  double tol = 0.0);
long count_inside_serial(const RowMatrix& points,
                         std::span<const Halfspace> halfspaces, double tol = 0.0);

Eigen::VectorXd column_mean(const RowMatrix& points);
Eigen::VectorXd column_mean_serial(const RowMatrix& points);

}  // namespace polyagg::kernels

#endif  // POLYAGG_KERNELS_HPP_
