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

#include <cmath>
#include <vector>

#include "simalab/schedule.hpp"
#include "test_util.hpp"

namespace simalab {
namespace {

TEST(Schedule, TwoStepHandValues) {
  const auto s = NoiseSchedule::explicit_betas({0.1, 0.2});
  EXPECT_NEAR(s.alpha_bar(1), 0.9, 1e-15);
  EXPECT_NEAR(s.alpha_bar(2), 0.72, 1e-15);
  EXPECT_NEAR(s.sigma(2), 0.5291502622129181, 1e-12);
  EXPECT_NEAR(s.bandwidth(2), 0.6236095644623235, 1e-12);
  EXPECT_NEAR(s.variance(2), 0.28, 1e-15);
  EXPECT_DOUBLE_EQ(s.alpha(2), 0.8);
}

TEST(Schedule, LinearEndpoints) {
  const auto s = NoiseSchedule::ddpm_default();
  EXPECT_EQ(s.steps(), 1000);
  EXPECT_DOUBLE_EQ(s.beta(1), 1e-4);
  EXPECT_DOUBLE_EQ(s.beta(1000), 0.02);
  EXPECT_NEAR(s.beta(500) - s.beta(499), (0.02 - 1e-4) / 999.0, 1e-15);
}

TEST(Schedule, SingleStepLinear) {
  const auto s = NoiseSchedule::linear(1, 0.3, 0.3);
  EXPECT_EQ(s.steps(), 1);
  EXPECT_NEAR(s.alpha_bar(1), 0.7, 1e-15);
}

TEST(Schedule, MonotoneAndBounded) {
  const auto s = NoiseSchedule::ddpm_default();
  for (int t = 1; t <= s.steps(); ++t) {
    EXPECT_GT(s.alpha_bar(t), 0.0);
    EXPECT_LT(s.alpha_bar(t), 1.0);
    EXPECT_NEAR(s.alpha_bar(t) + s.variance(t), 1.0, 1e-12);
    if (t > 1) {
      EXPECT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
      EXPECT_GT(s.sigma(t), s.sigma(t - 1));
      EXPECT_GT(s.bandwidth(t), s.bandwidth(t - 1));
    }
  }
}

// Independent oracle: naive running product.
TEST(Schedule, MatchesNaiveProduct) {
  const auto s = NoiseSchedule::ddpm_default();
  double prod = 1.0;
  for (int t = 1; t <= s.steps(); ++t) {
    prod *= 1.0 - (1e-4 + (0.02 - 1e-4) * (t - 1) / 999.0);
    EXPECT_NEAR(s.alpha_bar(t), prod, 1e-13 * prod + 1e-300);
    EXPECT_NEAR(s.sigma(t), std::sqrt(1.0 - prod), 1e-9);
  }
}

// 1 - prod(1 - b_i) lies between S - S^2/2 and S, S = sum b_i.
TEST(Schedule, SmallTimestepTaylorBound) {
  const auto s = NoiseSchedule::ddpm_default();
  double sum = 0.0;
  for (int t = 1; t <= 50; ++t) {
    sum += s.beta(t);
    EXPECT_LE(s.variance(t), sum * (1 + 1e-12));
    EXPECT_GE(s.variance(t), (sum - 0.5 * sum * sum) * (1 - 1e-12));
  }
  // First step: variance equals beta_1 exactly in relative terms.
  EXPECT_NEAR(s.variance(1) / 1e-4, 1.0, 1e-12);
}

TEST(Schedule, CleanEntry) {
  const auto s = NoiseSchedule::ddpm_default();
  EXPECT_EQ(s.alpha_bar_or_clean(0), 1.0);
  EXPECT_EQ(s.sigma_or_clean(0), 0.0);
  EXPECT_EQ(s.alpha_bar_or_clean(7), s.alpha_bar(7));
  EXPECT_FALSE(s.valid_timestep(0));
  EXPECT_TRUE(s.valid_timestep(1000));
  EXPECT_FALSE(s.valid_timestep(1001));
}

TEST(Schedule, IndexErrors) {
  const auto s = NoiseSchedule::ddpm_default();
  EXPECT_SIMALAB_ERROR(s.alpha_bar(0), ErrorKind::kIndex);
  EXPECT_SIMALAB_ERROR(s.sigma(1001), ErrorKind::kIndex);
  EXPECT_SIMALAB_ERROR(s.beta(-1), ErrorKind::kIndex);
  EXPECT_SIMALAB_ERROR(s.bandwidth(0), ErrorKind::kIndex);
  EXPECT_SIMALAB_ERROR(s.alpha_bar_or_clean(-1), ErrorKind::kIndex);
  EXPECT_SIMALAB_ERROR(s.sigma_or_clean(1001), ErrorKind::kIndex);
}

TEST(Schedule, ConfigErrors) {
  EXPECT_SIMALAB_ERROR(NoiseSchedule::linear(0, 1e-4, 0.02), ErrorKind::kConfig);
  EXPECT_SIMALAB_ERROR(NoiseSchedule::linear(10, 0.0, 0.02), ErrorKind::kConfig);
  EXPECT_SIMALAB_ERROR(NoiseSchedule::linear(10, 1e-4, 1.0), ErrorKind::kConfig);
  EXPECT_SIMALAB_ERROR(NoiseSchedule::linear(10, 0.1, 0.01), ErrorKind::kConfig);
  EXPECT_SIMALAB_ERROR(NoiseSchedule::explicit_betas({}), ErrorKind::kConfig);
  EXPECT_SIMALAB_ERROR(NoiseSchedule::explicit_betas({0.1, -0.1}), ErrorKind::kConfig);
  try {
    NoiseSchedule::linear(10, 0.1, 0.01);
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("schedule.beta_start"), std::string::npos);
  }
}

}  // namespace
}  // namespace simalab
