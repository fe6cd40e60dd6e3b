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

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "simalab/error.hpp"

namespace simalab {

// Variance-preserving forward process x_t = sqrt(abar_t) x_0 + sigma_t eps,
// sigma_t^2 = 1 - abar_t, with timesteps 1..T.
//
// Index 0 holds the clean-data entry (abar_0 = 1, sigma_0 = 0). It is reachable
// only through the `*_or_clean` accessors, for models that extrapolate to t = 0.
class NoiseSchedule {
 public:
  static NoiseSchedule linear(int steps, double beta_start, double beta_end) {
    require(steps >= 1, ErrorKind::kConfig,
            "schedule.T must be >= 1, got " + std::to_string(steps));
    require(beta_start > 0.0 && beta_start < 1.0, ErrorKind::kConfig,
            "schedule.beta_start must lie in (0, 1)");
    require(beta_end > 0.0 && beta_end < 1.0, ErrorKind::kConfig,
            "schedule.beta_end must lie in (0, 1)");
    require(beta_start <= beta_end, ErrorKind::kConfig,
            "schedule.beta_start must not exceed schedule.beta_end");
    std::vector<double> betas(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) {
      const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
      betas[static_cast<std::size_t>(i)] = beta_start + frac * (beta_end - beta_start);
    }
    return NoiseSchedule(std::move(betas));
  }

  static NoiseSchedule explicit_betas(std::vector<double> betas) {
    require(!betas.empty(), ErrorKind::kConfig, "schedule.betas must be nonempty");
    for (std::size_t i = 0; i < betas.size(); ++i) {
      require(betas[i] > 0.0 && betas[i] < 1.0, ErrorKind::kConfig,
              "schedule.betas[" + std::to_string(i) + "] must lie in (0, 1)");
    }
    return NoiseSchedule(std::move(betas));
  }

  // DDPM convention: linear 1e-4 .. 0.02 over 1000 steps.
  static NoiseSchedule ddpm_default() { return linear(1000, 1e-4, 0.02); }

  int steps() const { return static_cast<int>(betas_.size()); }
  std::span<const double> betas() const { return betas_; }

  double beta(int t) const { return betas_[index(t)]; }
  double alpha(int t) const { return 1.0 - betas_[index(t)]; }
  double alpha_bar(int t) const { return alpha_bars_[static_cast<std::size_t>(check(t))]; }
  double sigma(int t) const { return sigmas_[static_cast<std::size_t>(check(t))]; }
  double variance(int t) const { return variances_[static_cast<std::size_t>(check(t))]; }

  // Kernel bandwidth of the noised empirical density in data coordinates.
  double bandwidth(int t) const {
    const auto i = static_cast<std::size_t>(check(t));
    return sigmas_[i] / std::sqrt(alpha_bars_[i]);
  }

  double alpha_bar_or_clean(int t) const {
    return alpha_bars_[static_cast<std::size_t>(check_with_clean(t))];
  }
  double sigma_or_clean(int t) const {
    return sigmas_[static_cast<std::size_t>(check_with_clean(t))];
  }

  bool valid_timestep(int t) const { return t >= 1 && t <= steps(); }

 private:
  explicit NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
    const std::size_t n = betas_.size();
    alpha_bars_.assign(n + 1, 1.0);
    variances_.assign(n + 1, 0.0);
    sigmas_.assign(n + 1, 0.0);
    double product = 1.0;
    double log_product = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      product *= 1.0 - betas_[i];
      log_product += std::log1p(-betas_[i]);
      alpha_bars_[i + 1] = product;
      // expm1 keeps relative accuracy in 1 - abar when abar is near 1.
      variances_[i + 1] = -std::expm1(log_product);
      sigmas_[i + 1] = std::sqrt(variances_[i + 1]);
    }
  }

  std::size_t index(int t) const { return static_cast<std::size_t>(check(t) - 1); }

  int check(int t) const {
    if (t < 1 || t > steps()) {
      fail(ErrorKind::kIndex, "timestep " + std::to_string(t) + " outside 1.." +
                                  std::to_string(steps()));
    }
    return t;
  }

  int check_with_clean(int t) const {
    if (t < 0 || t > steps()) {
      fail(ErrorKind::kIndex, "timestep " + std::to_string(t) + " outside 0.." +
                                  std::to_string(steps()));
    }
    return t;
  }

  std::vector<double> betas_;
  std::vector<double> alpha_bars_;
  std::vector<double> variances_;
  std::vector<double> sigmas_;
};

inline NoiseSchedule make_linear_schedule(int steps, double beta_start, double beta_end) {
  return NoiseSchedule::linear(steps, beta_start, beta_end);
}

}  // namespace simalab
