// Copyright 2026 The SimA Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Noisy linear encoder z = A x + gamma * eta placed in front of the score
// model. This is an analog of a latent bottleneck, not a trained VAE: gamma
// controls how much per-sample detail survives into the space the score model
// memorizes.
//
// Member encodings are drawn once and frozen (the model is fit to them);
// every query, member or not, is encoded with a fresh draw.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "simalab/empirical_score.hpp"
#include "simalab/error.hpp"
#include "simalab/evaluate.hpp"
#include "simalab/rng.hpp"
#include "simalab/synthdata.hpp"

namespace simalab {

class LinearBottleneck {
 public:
  LinearBottleneck(Eigen::MatrixXd projection, double gamma, std::uint64_t seed)
      : projection_(std::move(projection)), gamma_(gamma), seed_(seed) {
    require(projection_.rows() >= 1, ErrorKind::kConfig, "bottleneck needs k >= 1");
    require(projection_.rows() <= projection_.cols(), ErrorKind::kConfig,
            "bottleneck needs k <= d");
    require(gamma_ >= 0.0 && std::isfinite(gamma_), ErrorKind::kConfig,
            "bottleneck gamma must be >= 0");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(projection_);
    require(lu.rank() == projection_.rows(), ErrorKind::kConfig,
            "bottleneck projection must have full row rank");
  }

  static LinearBottleneck identity(std::size_t d, double gamma, std::uint64_t seed) {
    const auto n = static_cast<Eigen::Index>(d);
    return LinearBottleneck(Eigen::MatrixXd::Identity(n, n), gamma, seed);
  }

  // Rows are Gram-Schmidt orthonormalized Gaussian vectors.
  static LinearBottleneck random_orthonormal(std::size_t k, std::size_t d, double gamma,
                                             std::uint64_t seed) {
    require(k >= 1 && k <= d, ErrorKind::kConfig, "bottleneck needs 1 <= k <= d");
    Eigen::MatrixXd a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      RandomStream rng(seed, stream_id(StreamTag::kProjection, {static_cast<std::uint64_t>(r)}));
      for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = rng.normal();
      for (Eigen::Index q = 0; q < r; ++q) a.row(r) -= a.row(r).dot(a.row(q)) * a.row(q);
      a.row(r).normalize();
    }
    return LinearBottleneck(std::move(a), gamma, seed);
  }

  std::size_t input_dim() const { return static_cast<std::size_t>(projection_.cols()); }
  std::size_t code_dim() const { return static_cast<std::size_t>(projection_.rows()); }
  double gamma() const { return gamma_; }
  const Eigen::MatrixXd& projection() const { return projection_; }

  std::vector<double> encode(std::span<const double> x, std::uint64_t draw,
                             StreamTag tag = StreamTag::kEncoderQuery) const {
    require(x.size() == input_dim(), ErrorKind::kShape,
            "bottleneck input has dimension " + std::to_string(x.size()) + ", expected " +
                std::to_string(input_dim()));
    RandomStream rng(seed_, stream_id(tag, {draw}));
    std::vector<double> z(code_dim());
    for (std::size_t r = 0; r < z.size(); ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < x.size(); ++c) {
        acc += projection_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * x[c];
      }
      z[r] = acc + gamma_ * rng.normal();
    }
    return z;
  }

  PointSet encode_all(const PointSet& points, std::uint64_t first_draw, StreamTag tag) const {
    PointSet out(code_dim(), points.provenance());
    out.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) out.push_back(encode(points.row(i), first_draw + i, tag));
    return out;
  }

 private:
  Eigen::MatrixXd projection_;
  double gamma_;
  std::uint64_t seed_;
};

enum class ProjectionKind { kIdentity, kRandomOrthonormal };

struct BottleneckOptions {
  std::size_t code_dim = 0;  // 0 means k = d
  ProjectionKind projection = ProjectionKind::kRandomOrthonormal;
  std::uint64_t encoder_seed = 0;
  NoiseSchedule schedule = NoiseSchedule::ddpm_default();
  int threads = 1;
};

struct BottleneckRow {
  double gamma = 0.0;
  Report report;
};

inline Report bottleneck_trial(const Splits& data, double gamma, const AttackConfig& attack,
                               const BottleneckOptions& opt) {
  const std::size_t d = data.member.dim();
  const std::size_t k = opt.code_dim == 0 ? d : opt.code_dim;
  const LinearBottleneck enc =
      opt.projection == ProjectionKind::kIdentity
          ? LinearBottleneck::identity(d, gamma, opt.encoder_seed)
          : LinearBottleneck::random_orthonormal(k, d, gamma, opt.encoder_seed);
  const PointSet frozen = enc.encode_all(data.member, 0, StreamTag::kEncoderFrozen);
  const PointSet member_q = enc.encode_all(data.member, 0, StreamTag::kEncoderQuery);
  const PointSet heldout_q =
      enc.encode_all(data.heldout, data.member.size(), StreamTag::kEncoderQuery);
  const EmpiricalScoreModel model(frozen, opt.schedule);
  return evaluate_attack(model, attack, member_q, heldout_q, opt.threads).report;
}

inline std::vector<BottleneckRow> bottleneck_experiment(const MixtureSpec& spec,
                                                        const SplitSpec& split,
                                                        const std::vector<double>& gammas,
                                                        const AttackConfig& attack,
                                                        const BottleneckOptions& opt = {}) {
  require(!gammas.empty(), ErrorKind::kConfig, "bottleneck sweep needs at least one gamma");
  const Splits data = make_splits(spec, split);
  std::vector<BottleneckRow> rows;
  rows.reserve(gammas.size());
  for (double g : gammas) rows.push_back({g, bottleneck_trial(data, g, attack, opt)});
  return rows;
}

// Ranks starting at 1; ties get the average rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t q = i; q <= j; ++q) ranks[order[q]] = r;
    i = j + 1;
  }
  return ranks;
}

// Pearson correlation of average ranks. Returns 0 when either side is constant.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorKind::kShape,
          "spearman needs two equal-length samples of size >= 2");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace simalab
