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

#include "polyagg/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace polyagg::kernels {
namespace {

constexpr int kRefreshEvery = 256;
constexpr double kGradientTol = 1e-14;
constexpr int kMeanChunks = 64;

class Chain {
 public:
  Chain(const WalkGeometry& geo, std::uint64_t seed)
      : geo_(geo),
        rng_(seed),
        y_(Eigen::VectorXd::Zero(geo.basis.cols())),
        u_(geo.basis.cols()),
        g_(geo.gradient.rows()),
        slack_(geo.slack0) {}

  void Step() {
    const Eigen::Index dim = y_.size();
    double norm2 = 0.0;
    do {
      for (Eigen::Index k = 0; k < dim; ++k) u_[k] = normal_(rng_);
      norm2 = u_.squaredNorm();
    } while (norm2 == 0.0);
    u_ /= std::sqrt(norm2);
    g_.noalias() = geo_.gradient * u_;

    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < g_.size(); ++r) {
      const double s = std::max(0.0, slack_[r]);
      const double g = g_[r];
      if (g > kGradientTol) {
        lo = std::max(lo, -s / g);
      } else if (g < -kGradientTol) {
        hi = std::min(hi, s / -g);
      }
    }
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
      throw Error(ErrorKind::kDegeneratePolytope, "hit-and-run chord is unbounded");
    }
    const double t = lo + uniform_(rng_) * (hi - lo);
    y_.noalias() += t * u_;
    slack_.noalias() += t * g_;
    if (++steps_ % kRefreshEvery == 0) {
      slack_.noalias() = geo_.slack0 + geo_.gradient * y_;
    }
  }

  void Record(RowMatrix& out, long row) const {
    out.row(row) = (geo_.origin + geo_.basis * y_).transpose();
  }

 private:
  const WalkGeometry& geo_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  Eigen::VectorXd y_;
  Eigen::VectorXd u_;
  Eigen::VectorXd g_;
  Eigen::VectorXd slack_;
  long steps_ = 0;
};

long FirstRow(const ChainPlan& plan, int shard) {
  long row = 0;
  for (int k = 0; k < shard; ++k) row += shard_count(plan, k);
  return row;
}

bool Inside(const RowMatrix& points, Eigen::Index p,
            std::span<const Halfspace> halfspaces, double tol) {
  for (const Halfspace& h : halfspaces) {
    if (points.row(p).dot(h.normal) > h.bound + tol) return false;
  }
  return true;
}

}  // namespace

std::uint64_t shard_seed(std::uint64_t seed, int shard) {
  std::uint64_t z = seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(shard) + 1));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

long shard_count(const ChainPlan& plan, int shard) {
  const long base = plan.count / plan.shards;
  return base + (shard < plan.count % plan.shards ? 1 : 0);
}

void run_chain(const WalkGeometry& geo, std::uint64_t seed, long burn_in,
               long thinning, long count, RowMatrix& out, long first_row) {
  Chain chain(geo, seed);
  for (long i = 0; i < burn_in; ++i) chain.Step();
  for (long i = 0; i < count; ++i) {
    for (long k = 0; k < thinning; ++k) chain.Step();
    chain.Record(out, first_row + i);
  }
}

RowMatrix hit_and_run(const WalkGeometry& geo, std::uint64_t seed,
                      const ChainPlan& plan) {
  RowMatrix out(plan.count, geo.basis.rows());
#pragma omp parallel for schedule(dynamic, 1)
  for (int shard = 0; shard < plan.shards; ++shard) {
    run_chain(geo, shard_seed(seed, shard), plan.burn_in, plan.thinning,
              shard_count(plan, shard), out, FirstRow(plan, shard));
  }
  return out;
}

RowMatrix hit_and_run_serial(const WalkGeometry& geo, std::uint64_t seed,
                             const ChainPlan& plan) {
  RowMatrix out(plan.count, geo.basis.rows());
  for (int shard = 0; shard < plan.shards; ++shard) {
    run_chain(geo, shard_seed(seed, shard), plan.burn_in, plan.thinning,
              shard_count(plan, shard), out, FirstRow(plan, shard));
  }
  return out;
}

Eigen::MatrixXd evaluate_returns(const RowMatrix& points,
                                 std::span<const RewardTable> rewards) {
  const Eigen::Index n = points.rows();
  const Eigen::Index agents = static_cast<Eigen::Index>(rewards.size());
  Eigen::MatrixXd out(n, agents);
#pragma omp parallel for schedule(static)
  for (Eigen::Index p = 0; p < n; ++p) {
    for (Eigen::Index i = 0; i < agents; ++i) {
      out(p, i) = points.row(p).dot(rewards[i]);
    }
  }
  return out;
}

Eigen::MatrixXd evaluate_returns_serial(const RowMatrix& points,
                                        std::span<const RewardTable> rewards) {
  const Eigen::Index n = points.rows();
  const Eigen::Index agents = static_cast<Eigen::Index>(rewards.size());
  Eigen::MatrixXd out(n, agents);
  for (Eigen::Index p = 0; p < n; ++p) {
    for (Eigen::Index i = 0; i < agents; ++i) {
      out(p, i) = points.row(p).dot(rewards[i]);
    }
  }
  return out;
}

std::vector<unsigned char> inside_mask(const RowMatrix& points,
                                       std::span<const Halfspace> halfspaces,
                                       double tol) {
  const Eigen::Index n = points.rows();
  std::vector<unsigned char> mask(static_cast<size_t>(n));
#pragma omp parallel for schedule(static)
  for (Eigen::Index p = 0; p < n; ++p) {
    mask[p] = Inside(points, p, halfspaces, tol) ? 1 : 0;
  }
  return mask;
}

std::vector<unsigned char> inside_mask_serial(
    const RowMatrix& points, std::span<const Halfspace> halfspaces, double tol) {
  std::vector<unsigned char> mask(static_cast<size_t>(points.rows()));
  for (Eigen::Index p = 0; p < points.rows(); ++p) {
    mask[p] = Inside(points, p, halfspaces, tol) ? 1 : 0;
  }
  return mask;
}

long count_inside(const RowMatrix& points, std::span<const Halfspace> halfspaces,
                  double tol) {
  long total = 0;
  const Eigen::Index n = points.rows();
#pragma omp parallel for schedule(static) reduction(+ : total)
  for (Eigen::Index p = 0; p < n; ++p) {
    if (Inside(points, p, halfspaces, tol)) ++total;
  }
  return total;
}

long count_inside_serial(const RowMatrix& points,
                         std::span<const Halfspace> halfspaces, double tol) {
  long total = 0;
  for (Eigen::Index p = 0; p < points.rows(); ++p) {
    if (Inside(points, p, halfspaces, tol)) ++total;
  }
  return total;
}

Eigen::VectorXd column_mean(const RowMatrix& points) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (n == 0) return Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd partial = Eigen::MatrixXd::Zero(d, kMeanChunks);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < kMeanChunks; ++c) {
    const Eigen::Index begin = n * c / kMeanChunks;
    const Eigen::Index end = n * (c + 1) / kMeanChunks;
    for (Eigen::Index p = begin; p < end; ++p) {
      partial.col(c) += points.row(p).transpose();
    }
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  for (int c = 0; c < kMeanChunks; ++c) sum += partial.col(c);
  return sum / static_cast<double>(n);
}

Eigen::VectorXd column_mean_serial(const RowMatrix& points) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(points.cols());
  for (Eigen::Index p = 0; p < points.rows(); ++p) sum += points.row(p).transpose();
  return points.rows() > 0 ? Eigen::VectorXd(sum / static_cast<double>(points.rows()))
                           : sum;
}

}  // namespace polyagg::kernels
