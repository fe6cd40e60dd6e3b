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

// The optimal denoiser for an empirical training set.
//
// With p_data = (1/N) sum_i delta(x - x_i), the noised density is a mixture of
// N isotropic Gaussians centred at sqrt(abar_t) x_i with variance sigma_t^2.
// Its posterior mean is a softmax-weighted average of the training points:
//
//   w_i(x, t) ∝ exp(-|x - sqrt(abar_t) x_i|^2 / (2 sigma_t^2))
//   mu_t(x)   = sum_i w_i x_i
//   eps_hat   = (x - sqrt(abar_t) mu_t(x)) / sigma_t
//
// For small t the exponents differ by hundreds, so every kernel sum goes
// through log-sum-exp.

#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "simalab/error.hpp"
#include "simalab/pointset.hpp"
#include "simalab/schedule.hpp"
#include "simalab/score_model.hpp"

namespace simalab {

class EmpiricalScoreModel final : public ScoreModel {
 public:
  EmpiricalScoreModel(PointSet train, NoiseSchedule schedule)
      : train_(std::move(train)), schedule_(std::move(schedule)) {
    require(train_.size() >= 1, ErrorKind::kConfig,
            "empirical score model needs at least one training point");
  }

  std::size_t dim() const override { return train_.dim(); }
  const NoiseSchedule& schedule() const override { return schedule_; }
  const PointSet& train() const { return train_; }

  // Unnormalized log-weights -|x - sqrt(abar) x_i|^2 / (2 sigma^2).
  void kernel_logits(std::span<const double> x, int t, std::span<double> logits) const {
    check_timestep(t);
    require(x.size() == dim(), ErrorKind::kShape, "query dimension mismatch");
    const double root_abar = std::sqrt(schedule_.alpha_bar(t));
    const double inv_two_var = 0.5 / schedule_.variance(t);
    const std::size_t d = dim();
    const double* base = train_.values().data();
    for (std::size_t i = 0; i < train_.size(); ++i) {
      const double* xi = base + i * d;
      double dist2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = x[k] - root_abar * xi[k];
        dist2 += diff * diff;
      }
      logits[i] = -dist2 * inv_two_var;
    }
  }

  std::vector<double> posterior_weights(std::span<const double> x, int t) const {
    std::vector<double> w(train_.size());
    kernel_logits(x, t, w);
    softmax_inplace(w);
    return w;
  }

  std::vector<double> denoising_mean(std::span<const double> x, int t) const {
    std::vector<double> mu(dim());
    denoising_mean_into(x, t, mu);
    return mu;
  }

  void eps_hat_into(std::span<const double> x, int t, std::span<double> out) const override {
    check_query(x, out);
    denoising_mean_into(x, t, out);
    const double root_abar = std::sqrt(schedule_.alpha_bar(t));
    const double inv_sigma = 1.0 / schedule_.sigma(t);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = (x[k] - root_abar * out[k]) * inv_sigma;
  }

  // log[(1/N) sum_i N(x; sqrt(abar) x_i, sigma^2 I)]
  double log_density(std::span<const double> x, int t) const {
    auto& logits = scratch(train_.size());
    kernel_logits(x, t, logits);
    const double d = static_cast<double>(dim());
    return log_sum_exp(logits) - std::log(static_cast<double>(train_.size())) -
           0.5 * d * std::log(2.0 * std::numbers::pi * schedule_.variance(t));
  }

  // Same density written as a rescaled convolution of p_data with an isotropic
  // Gaussian of variance h^2 = sigma^2 / abar, evaluated at x / sqrt(abar):
  //   p_t(x) = abar^{-d/2} (p_data * N(0, h^2 I))(x / sqrt(abar)).
  double log_density_convolution_form(std::span<const double> x, int t) const {
    check_timestep(t);
    require(x.size() == dim(), ErrorKind::kShape, "query dimension mismatch");
    const double abar = schedule_.alpha_bar(t);
    const double h2 = schedule_.variance(t) / abar;
    const double inv_root_abar = 1.0 / std::sqrt(abar);
    const std::size_t d = dim();
    auto& logits = scratch(train_.size());
    for (std::size_t i = 0; i < train_.size(); ++i) {
      auto xi = train_.row(i);
      double dist2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = x[k] * inv_root_abar - xi[k];
        dist2 += diff * diff;
      }
      logits[i] = -dist2 / (2.0 * h2);
    }
    const double dd = static_cast<double>(d);
    return -0.5 * dd * std::log(abar) + log_sum_exp(logits) -
           std::log(static_cast<double>(train_.size())) -
           0.5 * dd * std::log(2.0 * std::numbers::pi * h2);
  }

 private:
  void check_timestep(int t) const {
    require(t != 0, ErrorKind::kDegenerateKernel,
            "empirical score model is degenerate at t = 0 (sigma_0 = 0); query t >= 1");
    schedule_.alpha_bar(t);
  }

  void denoising_mean_into(std::span<const double> x, int t, std::span<double> mu) const {
    auto& w = scratch(train_.size());
    kernel_logits(x, t, w);
    softmax_inplace(w);
    const std::size_t d = dim();
    std::fill(mu.begin(), mu.end(), 0.0);
    const double* base = train_.values().data();
    for (std::size_t i = 0; i < train_.size(); ++i) {
      const double wi = w[i];
      if (wi == 0.0) continue;
      const double* xi = base + i * d;
      for (std::size_t k = 0; k < d; ++k) mu[k] += wi * xi[k];
    }
  }

  static std::vector<double>& scratch(std::size_t n) {
    thread_local std::vector<double> buffer;
    buffer.resize(n);
    return buffer;
  }

  PointSet train_;
  NoiseSchedule schedule_;
};

}  // namespace simalab
