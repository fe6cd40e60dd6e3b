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

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "simalab/error.hpp"
#include "simalab/schedule.hpp"

namespace simalab {

// log(sum_i exp(v_i)), shifted by the maximum. Empty input gives -inf.
inline double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -INFINITY;
  const double top = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - top);
  return top + std::log(sum);
}

// In-place softmax; returns the log normalizer.
inline double softmax_inplace(std::span<double> v) {
  if (v.empty()) return -INFINITY;
  const double top = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - top);
    sum += x;
  }
  for (double& x : v) x /= sum;
  return top + std::log(sum);
}

// Anything that predicts the standard noise eps_hat(x, t) of a noised point.
//
// Implementations are immutable after construction and safe to query from
// several threads at once.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;

  virtual std::size_t dim() const = 0;
  virtual const NoiseSchedule& schedule() const = 0;

  // Writes eps_hat(x, t) into `out` (size dim()).
  virtual void eps_hat_into(std::span<const double> x, int t, std::span<double> out) const = 0;

  // Writes grad_x log p_t(x) = -eps_hat / sigma_t into `out`.
  virtual void score_into(std::span<const double> x, int t, std::span<double> out) const {
    require(t >= 1, ErrorKind::kDegenerateKernel,
            "score is undefined at t = 0 (sigma_0 = 0); query t >= 1");
    eps_hat_into(x, t, out);
    const double inv_sigma = 1.0 / schedule().sigma(t);
    for (double& v : out) v = -v * inv_sigma;
  }

  // True when eps_hat may be queried at t = 0.
  virtual bool supports_clean_timestep() const { return false; }

 protected:
  void check_query(std::span<const double> x, std::span<double> out) const {
    require(x.size() == dim() && out.size() == dim(), ErrorKind::kShape,
            "query dimension " + std::to_string(x.size()) + " does not match model dimension " +
                std::to_string(dim()));
  }
};

inline std::vector<double> eps_hat(const ScoreModel& model, std::span<const double> x, int t) {
  std::vector<double> out(model.dim());
  model.eps_hat_into(x, t, out);
  return out;
}

inline std::vector<double> score(const ScoreModel& model, std::span<const double> x, int t) {
  std::vector<double> out(model.dim());
  model.score_into(x, t, out);
  return out;
}

}  // namespace simalab
