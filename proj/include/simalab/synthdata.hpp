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

// Synthetic data for membership experiments: diagonal Gaussian mixtures, a
// noisy ring, and member / held-out / out-of-distribution splits.
//
// Member and held-out sets are independent draws from the same mixture
// rather than a partition of one fixed dataset; for synthetic data the two
// are distributionally identical.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "simalab/error.hpp"
#include "simalab/pointset.hpp"
#include "simalab/rng.hpp"

namespace simalab {

struct MixtureComponent {
  double weight = 1.0;
  std::vector<double> mean;
  std::vector<double> variance;  // diagonal
};

struct MixtureSpec {
  std::vector<MixtureComponent> components;

  std::size_t dim() const { return components.empty() ? 0 : components.front().mean.size(); }

  void validate() const {
    require(!components.empty(), ErrorKind::kConfig, "mixture needs at least one component");
    const std::size_t d = dim();
    require(d > 0, ErrorKind::kConfig, "mixture component mean is empty");
    double total = 0.0;
    for (std::size_t j = 0; j < components.size(); ++j) {
      const auto& c = components[j];
      const std::string where = "mixture.components[" + std::to_string(j) + "]";
      require(c.weight >= 0.0 && std::isfinite(c.weight), ErrorKind::kConfig,
              where + ".weight must be a nonnegative number");
      require(c.mean.size() == d, ErrorKind::kConfig, where + ".mean has wrong dimension");
      require(c.variance.size() == d, ErrorKind::kConfig,
              where + ".variance has wrong dimension");
      for (double v : c.variance) {
        require(v > 0.0 && std::isfinite(v), ErrorKind::kConfig,
                where + ".variance entries must be positive");
      }
      for (double m : c.mean) {
        require(std::isfinite(m), ErrorKind::kConfig, where + ".mean must be finite");
      }
      total += c.weight;
    }
    require(std::abs(total - 1.0) <= 1e-9, ErrorKind::kConfig,
            "mixture weights must sum to 1 (got " + format_double(total) + ")");
  }

  MixtureSpec shifted(std::span<const double> offset) const {
    require(offset.size() == dim(), ErrorKind::kShape, "shift has wrong dimension");
    MixtureSpec out = *this;
    for (auto& c : out.components) {
      for (std::size_t k = 0; k < c.mean.size(); ++k) c.mean[k] += offset[k];
    }
    return out;
  }

  // Root-mean-square per-coordinate standard deviation of the mixture.
  double scale() const {
    const std::size_t d = dim();
    std::vector<double> mean(d, 0.0);
    for (const auto& c : components) {
      for (std::size_t k = 0; k < d; ++k) mean[k] += c.weight * c.mean[k];
    }
    double total_var = 0.0;
    for (const auto& c : components) {
      for (std::size_t k = 0; k < d; ++k) {
        const double dm = c.mean[k] - mean[k];
        total_var += c.weight * (c.variance[k] + dm * dm);
      }
    }
    return std::sqrt(total_var / static_cast<double>(d));
  }
};

namespace detail {

inline void draw_mixture_point(const MixtureSpec& spec, RandomStream& rng, std::span<double> out) {
  const double u = rng.uniform();
  std::size_t j = 0;
  double cumulative = spec.components[0].weight;
  while (u > cumulative && j + 1 < spec.components.size()) {
    ++j;
    cumulative += spec.components[j].weight;
  }
  const auto& c = spec.components[j];
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = c.mean[k] + std::sqrt(c.variance[k]) * rng.normal();
  }
}

inline PointSet sample_mixture_tagged(const MixtureSpec& spec, std::size_t n, std::uint64_t seed,
                                      StreamTag tag, std::string provenance) {
  spec.validate();
  const std::size_t d = spec.dim();
  std::vector<double> values(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    RandomStream rng(seed, stream_id(tag, {i}));
    draw_mixture_point(spec, rng, std::span<double>(values.data() + i * d, d));
  }
  return PointSet(d, std::move(values), std::move(provenance));
}

}  // namespace detail

// Point i depends only on (spec, seed, i), so prefixes are stable across n.
inline PointSet sample_mixture(const MixtureSpec& spec, std::size_t n, std::uint64_t seed) {
  return detail::sample_mixture_tagged(spec, n, seed, StreamTag::kMember, "sample");
}

inline PointSet make_ring(std::size_t n, double radius, double noise_sd, std::uint64_t seed,
                          StreamTag tag = StreamTag::kRing) {
  require(radius > 0.0 && std::isfinite(radius), ErrorKind::kConfig, "ring radius must be > 0");
  require(noise_sd >= 0.0 && std::isfinite(noise_sd), ErrorKind::kConfig,
          "ring noise_sd must be >= 0");
  std::vector<double> values(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    RandomStream rng(seed, stream_id(tag, {i}));
    const double theta = 2.0 * std::numbers::pi * rng.uniform();
    values[2 * i] = radius * std::cos(theta) + noise_sd * rng.normal();
    values[2 * i + 1] = radius * std::sin(theta) + noise_sd * rng.normal();
  }
  return PointSet(2, std::move(values), "ring");
}

struct SplitSpec {
  std::size_t n_member = 0;
  std::size_t n_heldout = 0;
  std::size_t n_ood = 0;
  std::uint64_t seed = 0;
  std::vector<double> ood_shift;  // empty means zero shift
};

struct Splits {
  PointSet member;
  PointSet heldout;
  PointSet ood;
};

inline Splits make_splits(const MixtureSpec& spec, const SplitSpec& split) {
  spec.validate();
  std::vector<double> shift = split.ood_shift;
  if (shift.empty()) shift.assign(spec.dim(), 0.0);
  require(shift.size() == spec.dim(), ErrorKind::kConfig,
          "split.ood_shift has wrong dimension");
  Splits out;
  out.member =
      detail::sample_mixture_tagged(spec, split.n_member, split.seed, StreamTag::kMember, "member");
  out.heldout = detail::sample_mixture_tagged(spec, split.n_heldout, split.seed,
                                              StreamTag::kHeldout, "heldout");
  out.ood = detail::sample_mixture_tagged(spec.shifted(shift), split.n_ood, split.seed,
                                          StreamTag::kOod, "ood");
  return out;
}

// Ring variant: members and held-out points on the same ring, OOD points on a
// ring translated by `ood_shift`.
inline Splits make_ring_splits(double radius, double noise_sd, const SplitSpec& split) {
  std::vector<double> shift = split.ood_shift;
  if (shift.empty()) shift.assign(2, 0.0);
  require(shift.size() == 2, ErrorKind::kConfig, "split.ood_shift must have 2 entries for a ring");
  Splits out;
  out.member = make_ring(split.n_member, radius, noise_sd, split.seed, StreamTag::kMember);
  out.member.set_provenance("member");
  out.heldout = make_ring(split.n_heldout, radius, noise_sd, split.seed, StreamTag::kHeldout);
  out.heldout.set_provenance("heldout");
  PointSet ood = make_ring(split.n_ood, radius, noise_sd, split.seed, StreamTag::kOod);
  std::vector<double> values(ood.values().begin(), ood.values().end());
  for (std::size_t i = 0; i < ood.size(); ++i) {
    values[2 * i] += shift[0];
    values[2 * i + 1] += shift[1];
  }
  out.ood = PointSet(2, std::move(values), "ood");
  return out;
}

// Squared distance from `x` to its nearest neighbour in `points`.
inline double nearest_squared_distance(const PointSet& points, std::span<const double> x) {
  double best = INFINITY;
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto r = points.row(i);
    double s = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
      const double diff = x[k] - r[k];
      s += diff * diff;
    }
    best = std::min(best, s);
  }
  return best;
}

}  // namespace simalab
