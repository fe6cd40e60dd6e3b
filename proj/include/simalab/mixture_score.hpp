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
#include <numbers>
#include <span>
#include <vector>

#include "simalab/error.hpp"
#include "simalab/schedule.hpp"
#include "simalab/score_model.hpp"
#include "simalab/synthdata.hpp"

namespace simalab {

// Population score of a diagonal Gaussian mixture pushed through the forward
// process. Component j at step t is N(sqrt(abar) mu_j, abar * var_j + sigma^2).
//
// The score stays finite at t = 0, so eps_hat(x, 0) = -sigma_0 * score = 0.
class MixtureScoreModel final : public ScoreModel {
 public:
  MixtureScoreModel(MixtureSpec spec, NoiseSchedule schedule)
      : spec_(std::move(spec)), schedule_(std::move(schedule)) {
    spec_.validate();
  }

  std::size_t dim() const override { return spec_.dim(); }
  const NoiseSchedule& schedule() const override { return schedule_; }
  const MixtureSpec& spec() const { return spec_; }
  bool supports_clean_timestep() const override { return true; }

  double log_density(std::span<const double> x, int t) const {
    require(x.size() == dim(), ErrorKind::kShape, "query dimension mismatch");
    std::vector<double> logp(spec_.components.size());
    component_log_densities(x, t, logp);
    return log_sum_exp(logp);
  }

  void score_into(std::span<const double> x, int t, std::span<double> out) const override {
    check_query(x, out);
    const double abar = schedule_.alpha_bar_or_clean(t);
    const double var = (t == 0 ? 0.0 : schedule_.variance(t));
    const double root_abar = std::sqrt(abar);
    std::vector<double> resp(spec_.components.size());
    component_log_densities(x, t, resp);
    softmax_inplace(resp);
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t j = 0; j < spec_.components.size(); ++j) {
      if (resp[j] == 0.0) continue;
      const auto& c = spec_.components[j];
      for (std::size_t k = 0; k < out.size(); ++k) {
        const double s = abar * c.variance[k] + var;
        out[k] -= resp[j] * (x[k] - root_abar * c.mean[k]) / s;
      }
    }
  }

  void eps_hat_into(std::span<const double> x, int t, std::span<double> out) const override {
    score_into(x, t, out);
    const double sigma = schedule_.sigma_or_clean(t);
    for (double& v : out) v = -sigma * v;
  }

 private:
  void component_log_densities(std::span<const double> x, int t, std::span<double> out) const {
    const double abar = schedule_.alpha_bar_or_clean(t);
    const double var = (t == 0 ? 0.0 : schedule_.variance(t));
    const double root_abar = std::sqrt(abar);
    for (std::size_t j = 0; j < spec_.components.size(); ++j) {
      const auto& c = spec_.components[j];
      double lp = c.weight > 0.0 ? std::log(c.weight) : -INFINITY;
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double s = abar * c.variance[k] + var;
        const double diff = x[k] - root_abar * c.mean[k];
        lp -= 0.5 * (diff * diff / s + std::log(2.0 * std::numbers::pi * s));
      }
      out[j] = lp;
    }
  }

  MixtureSpec spec_;
  NoiseSchedule schedule_;
};

}  // namespace simalab
