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

// Kernel-weighted local mean of the noised empirical density around x:
//
//   m_r(x) = ∫ u K(u - x) p_t(u) du / ∫ K(u - x) p_t(u) du
//
// K is an isotropic Gaussian with per-coordinate variance r^2 / (d + 2), the
// second moment of the uniform ball of radius r. With that normalization the
// leading term of the expansion is m_r(x) - x ≈ r^2 / (d + 2) ∇ log p_t(x).
//
// The integrals use a fixed tensor-product trapezoid grid of 65 nodes per
// axis over [x - 4r, x + 4r]; hence d <= 3.

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "simalab/empirical_score.hpp"
#include "simalab/error.hpp"

namespace simalab {

inline constexpr int kLocalMeanNodes = 65;
inline constexpr double kLocalMeanHalfWidth = 4.0;  // in units of r

inline std::vector<double> local_mean(const EmpiricalScoreModel& model, std::span<const double> x,
                                      double r, int t) {
  const std::size_t d = model.dim();
  require(d <= 3, ErrorKind::kUnsupportedDimension,
          "local_mean supports d <= 3, got d = " + std::to_string(d));
  require(r > 0.0 && std::isfinite(r), ErrorKind::kParameter, "local_mean radius must be > 0");
  require(x.size() == d, ErrorKind::kShape, "query dimension mismatch");

  const int n = kLocalMeanNodes;
  const double step = 2.0 * kLocalMeanHalfWidth * r / (n - 1);
  const double kernel_scale = (static_cast<double>(d) + 2.0) / (2.0 * r * r);

  std::size_t total = 1;
  for (std::size_t k = 0; k < d; ++k) total *= static_cast<std::size_t>(n);

  // Log of trapezoid weight * kernel * density at every node.
  std::vector<double> log_w(total);
  std::vector<double> node(d);
  std::vector<double> offsets(total * d);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    double log_trap = 0.0;
    double offset2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const int i = static_cast<int>(rem % static_cast<std::size_t>(n));
      rem /= static_cast<std::size_t>(n);
      const double off = -kLocalMeanHalfWidth * r + i * step;
      node[k] = x[k] + off;
      offsets[idx * d + k] = off;
      offset2 += off * off;
      if (i == 0 || i == n - 1) log_trap += std::log(0.5);
    }
    log_w[idx] = log_trap - kernel_scale * offset2 + model.log_density(node, t);
  }

  softmax_inplace(log_w);
  // Accumulate offsets, not absolute positions, so m_r(x) - x keeps its digits.
  std::vector<double> shift(d, 0.0);
  for (std::size_t idx = 0; idx < total; ++idx) {
    for (std::size_t k = 0; k < d; ++k) shift[k] += log_w[idx] * offsets[idx * d + k];
  }
  std::vector<double> mean(d);
  for (std::size_t k = 0; k < d; ++k) mean[k] = x[k] + shift[k];
  return mean;
}

}  // namespace simalab
