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

#include <algorithm>
#include <cmath>
#include <vector>

#include "simalab/bottleneck.hpp"
#include "test_util.hpp"

namespace simalab {
namespace {

MixtureSpec two_blobs() {
  MixtureSpec s;
  s.components = {{0.5, {-3.0, 0.0}, {1.0, 1.0}}, {0.5, {3.0, 0.0}, {1.0, 1.0}}};
  return s;
}

AttackConfig sima_at(int t) {
  auto c = AttackConfig::defaults(AttackKind::kSimA);
  c.t = t;
  return c;
}

TEST(Encode, IdentityWithoutNoiseIsIdentity) {
  const auto b = LinearBottleneck::identity(3, 0.0, 1);
  const std::vector<double> x{1.5, -2.0, 0.25};
  EXPECT_EQ(b.encode(x, 7), x);
}

TEST(Encode, RowSelectorProjects) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 3);
  a(0, 2) = 1.0;
  a(1, 0) = 1.0;
  const LinearBottleneck b(a, 0.0, 1);
  const std::vector<double> x{1.5, -2.0, 0.25};
  EXPECT_EQ(b.encode(x, 0), (std::vector<double>{0.25, 1.5}));
}

TEST(Encode, NoiseIsKeyedBySeedAndDraw) {
  const auto b = LinearBottleneck::identity(2, 0.5, 11);
  const std::vector<double> x{0.0, 0.0};
  EXPECT_EQ(b.encode(x, 3), b.encode(x, 3));
  EXPECT_NE(b.encode(x, 3), b.encode(x, 4));
  EXPECT_NE(b.encode(x, 3), LinearBottleneck::identity(2, 0.5, 12).encode(x, 3));
  EXPECT_NE(b.encode(x, 3, StreamTag::kEncoderFrozen), b.encode(x, 3, StreamTag::kEncoderQuery));
  // The noise is gamma times standard normals.
  RandomStream rng(11, stream_id(StreamTag::kEncoderQuery, {3}));
  const double e0 = rng.normal(), e1 = rng.normal();
  const auto z = b.encode(x, 3);
  EXPECT_DOUBLE_EQ(z[0], 0.5 * e0);
  EXPECT_DOUBLE_EQ(z[1], 0.5 * e1);
}

TEST(Encode, RandomOrthonormalRows) {
  const auto b = LinearBottleneck::random_orthonormal(3, 5, 0.0, 4);
  const Eigen::MatrixXd g = b.projection() * b.projection().transpose();
  EXPECT_LT((g - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(b.code_dim(), 3u);
  EXPECT_EQ(b.input_dim(), 5u);
  const auto again = LinearBottleneck::random_orthonormal(3, 5, 0.0, 4);
  EXPECT_EQ(b.projection(), again.projection());
}

TEST(Encode, Errors) {
  const auto b = LinearBottleneck::identity(2, 0.0, 1);
  const std::vector<double> x{1.0, 2.0, 3.0};
  EXPECT_SIMALAB_ERROR(b.encode(x, 0), ErrorKind::kShape);
  EXPECT_SIMALAB_ERROR(LinearBottleneck(Eigen::MatrixXd::Zero(2, 2), 0.0, 1), ErrorKind::kConfig);
  EXPECT_SIMALAB_ERROR(LinearBottleneck(Eigen::MatrixXd::Identity(3, 2), 0.0, 1),
                       ErrorKind::kConfig);
  EXPECT_SIMALAB_ERROR(LinearBottleneck::identity(2, -1.0, 1), ErrorKind::kConfig);
  EXPECT_SIMALAB_ERROR(LinearBottleneck::random_orthonormal(0, 2, 0.0, 1), ErrorKind::kConfig);
}

TEST(Experiment, IdentityWithZeroGammaMatchesBaseline) {
  const SplitSpec split{60, 60, 0, 3, {}};
  BottleneckOptions opt;
  opt.projection = ProjectionKind::kIdentity;
  const auto cfg = sima_at(20);
  const auto rows = bottleneck_experiment(two_blobs(), split, {0.0}, cfg, opt);
  ASSERT_EQ(rows.size(), 1u);

  const Splits data = make_splits(two_blobs(), split);
  const EmpiricalScoreModel model(data.member, NoiseSchedule::ddpm_default());
  const auto base = evaluate_attack(model, cfg, data.member, data.heldout).report;
  EXPECT_EQ(rows[0].report.auc, base.auc);
  EXPECT_EQ(rows[0].report.asr, base.asr);
  EXPECT_EQ(rows[0].report.tpr_at_1fpr, base.tpr_at_1fpr);
  ASSERT_EQ(rows[0].report.curve.points.size(), base.curve.points.size());
  for (std::size_t i = 0; i < base.curve.points.size(); ++i) {
    EXPECT_EQ(rows[0].report.curve.points[i].tau, base.curve.points[i].tau);
  }
}

TEST(Experiment, HugeGammaDestroysSignal) {
  const SplitSpec split{500, 500, 0, 8, {}};
  const auto rows = bottleneck_experiment(two_blobs(), split, {1000.0}, sima_at(30));
  EXPECT_GE(rows[0].report.auc, 45.0);
  EXPECT_LE(rows[0].report.auc, 55.0);
}

TEST(Experiment, WorksInReducedDimension) {
  const SplitSpec split{40, 40, 0, 2, {}};
  BottleneckOptions opt;
  opt.code_dim = 1;
  const auto rows = bottleneck_experiment(two_blobs(), split, {0.0, 0.5}, sima_at(10), opt);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) EXPECT_TRUE(std::isfinite(r.report.auc));
}

TEST(Experiment, EmptyGammaListRejected) {
  EXPECT_SIMALAB_ERROR(bottleneck_experiment(two_blobs(), {10, 10, 0, 1, {}}, {}, sima_at(10)),
                       ErrorKind::kConfig);
}

// Rank by counting smaller and equal entries, then Pearson on the ranks.
double spearman_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double below = 0, equal = 0;
      for (double w : v) {
        below += w < v[i];
        equal += w == v[i];
      }
      r[i] = below + (equal + 1.0) / 2.0;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i] / n;
    my += ry[i] / n;
  }
  double num = 0, dx = 0, dy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  return num / std::sqrt(dx * dy);
}

TEST(Spearman, AverageRanks) {
  const std::vector<double> v{3.0, 1.0, 3.0, 2.0};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{3.5, 1.0, 3.5, 2.0}));
}

TEST(Spearman, KnownValues) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> up{10, 20, 25, 100, 1000}, down{5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(spearman(x, up), 1.0);
  EXPECT_DOUBLE_EQ(spearman(x, down), -1.0);
  const std::vector<double> flat(5, 2.0);
  EXPECT_EQ(spearman(x, flat), 0.0);
  // 1 - 6 sum d^2 / (n (n^2 - 1)) without ties: d = (0, 1, -1, 0, 0).
  const std::vector<double> swap{1, 3, 2, 4, 5};
  EXPECT_NEAR(spearman(x, swap), 1.0 - 6.0 * 2.0 / (5.0 * 24.0), 1e-15);
}

TEST(Spearman, MatchesOracleWithTies) {
  RandomStream rng(3, 3);
  for (int k = 0; k < 100; ++k) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 15));
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.uniform_int(0, 4));
      y[i] = rng.normal();
    }
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) continue;
    EXPECT_NEAR(spearman(x, y), spearman_oracle(x, y), 1e-12);
  }
}

TEST(Spearman, Errors) {
  const std::vector<double> a{1.0}, b{1.0, 2.0};
  EXPECT_SIMALAB_ERROR(spearman(a, a), ErrorKind::kShape);
  EXPECT_SIMALAB_ERROR(spearman(a, b), ErrorKind::kShape);
}

}  // namespace
}  // namespace simalab
