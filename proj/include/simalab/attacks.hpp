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

// Grey-box membership statistics over a ScoreModel. Lower values are more
// member-like; `decide` flags a member when value <= tau.
//
//   SimA   |eps_hat(x, t)|_p
//   Loss   |eps - eps_hat(sqrt(abar_t) x + sigma_t eps, t)|_p, one eps draw
//   SecMI  mean over n draws of
//            |eps - eps_hat(x, t)|_p
//            + |sigma_t (eps_hat(x, t) - eps_hat(sqrt(abar_{t+1}) x + sigma_{t+1} eps, t+1))|_p
//   PIA    |e0 - eps_hat(sqrt(abar_t) x + sigma_t e0, t)|_p, e0 = eps_hat(x, 0)
//   PFAMI  mean over n draws of Loss(x) - Loss(x + s eta), sharing (t_i, eps_i)
//          between the pair; t_i ~ U{t_min..t_max}
//
// PFAMI here is a reconstruction: a loss-fluctuation statistic under input
// perturbations. Its value is signed (members sit in loss minima, so it is
// usually negative for them); every other statistic is a norm.
//
// Sampled statistics draw from streams keyed by (seed, kind, x_id, draw), so
// batch results do not depend on evaluation order or thread count.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simalab/error.hpp"
#include "simalab/rng.hpp"
#include "simalab/score_model.hpp"

namespace simalab {

enum class AttackKind { kSimA, kLoss, kSecMI, kPIA, kPFAMI };

inline std::string_view attack_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::kSimA: return "sima";
    case AttackKind::kLoss: return "loss";
    case AttackKind::kSecMI: return "secmi";
    case AttackKind::kPIA: return "pia";
    case AttackKind::kPFAMI: return "pfami";
  }
  return "unknown";
}

inline AttackKind parse_attack_kind(std::string_view name) {
  for (AttackKind k : {AttackKind::kSimA, AttackKind::kLoss, AttackKind::kSecMI, AttackKind::kPIA,
                       AttackKind::kPFAMI}) {
    if (name == attack_name(k)) return k;
  }
  fail(ErrorKind::kConfig, "unknown attack kind '" + std::string(name) +
                               "' (expected sima, loss, secmi, pia or pfami)");
}

// Query counts per statistic as conventionally reported: one per Monte Carlo
// probe, not per network evaluation.
inline int nominal_queries(AttackKind kind, int mc_samples) {
  switch (kind) {
    case AttackKind::kSimA: return 1;
    case AttackKind::kLoss: return mc_samples;
    case AttackKind::kSecMI: return mc_samples;
    case AttackKind::kPIA: return 2;
    case AttackKind::kPFAMI: return mc_samples;
  }
  return 0;
}

struct AttackConfig {
  AttackKind kind = AttackKind::kSimA;
  int t = 50;  // unused by PFAMI
  double p = 4.0;
  int mc_samples = 1;
  std::uint64_t seed = 0;
  // PIA: analytic models without a t = 0 prediction use t = 1 instead.
  bool pia_first_step_proxy = true;
  // PFAMI
  double perturb_sd = 0.1;
  int pfami_t_min = 1;
  int pfami_t_max = 300;

  // Per-kind defaults: p = 4 for SimA and PIA, 2 otherwise; 1 draw for Loss,
  // 12 for SecMI, 20 for PFAMI.
  static AttackConfig defaults(AttackKind kind) {
    AttackConfig c;
    c.kind = kind;
    switch (kind) {
      case AttackKind::kSimA: c.p = 4.0; c.mc_samples = 1; break;
      case AttackKind::kLoss: c.p = 2.0; c.mc_samples = 1; break;
      case AttackKind::kSecMI: c.p = 2.0; c.mc_samples = 12; break;
      case AttackKind::kPIA: c.p = 4.0; c.mc_samples = 1; break;
      case AttackKind::kPFAMI: c.p = 2.0; c.mc_samples = 20; break;
    }
    return c;
  }

  bool uses_timestep() const { return kind != AttackKind::kPFAMI; }

  void validate() const {
    require(p > 0.0 && std::isfinite(p), ErrorKind::kParameter, "attack p must be > 0");
    require(mc_samples >= 1, ErrorKind::kConfig, "attack mc_samples must be >= 1");
    if (kind == AttackKind::kPFAMI) {
      require(perturb_sd >= 0.0 && std::isfinite(perturb_sd), ErrorKind::kConfig,
              "attack perturb_sd must be >= 0");
      require(pfami_t_min >= 1 && pfami_t_min <= pfami_t_max, ErrorKind::kConfig,
              "attack pfami timestep window must satisfy 1 <= t_min <= t_max");
    }
  }
};

struct AttackScore {
  std::size_t x_id = 0;
  double value = 0.0;
  AttackKind kind = AttackKind::kSimA;
  int t = 0;
  double p = 2.0;
  int queries_used = 0;
  int model_evaluations = 0;
};

struct Verdict {
  bool member = false;
  double tau = 0.0;
};

inline double norm_lp(std::span<const double> v, double p) {
  require(p > 0.0 && !std::isnan(p), ErrorKind::kParameter,
          "norm order p must be > 0, got " + std::to_string(p));
  if (std::isinf(p)) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  if (p == 2.0) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  }
  // Scale by the max magnitude so |v_i|^p neither overflows nor underflows.
  double top = 0.0;
  for (double x : v) top = std::max(top, std::abs(x));
  if (top == 0.0) return 0.0;
  double s = 0.0;
  for (double x : v) s += std::pow(std::abs(x) / top, p);
  return top * std::pow(s, 1.0 / p);
}

namespace detail {

enum : std::uint64_t { kLossDraw = 1, kSecmiDraw = 2, kPfamiDraw = 3 };

inline RandomStream attack_stream(std::uint64_t seed, std::uint64_t what, std::size_t x_id,
                                  std::size_t draw) {
  return RandomStream(seed, stream_id(StreamTag::kAttack, {what, x_id, draw}));
}

inline void fill_normal(RandomStream& rng, std::span<double> out) {
  for (double& v : out) v = rng.normal();
}

// |eps - eps_hat(sqrt(abar) x + sigma eps, t)|_p
inline double noised_residual(const ScoreModel& model, std::span<const double> x,
                              std::span<const double> eps, int t, double p,
                              std::vector<double>& work, std::vector<double>& pred) {
  const auto& s = model.schedule();
  const double ra = std::sqrt(s.alpha_bar(t));
  const double sg = s.sigma(t);
  for (std::size_t k = 0; k < x.size(); ++k) work[k] = ra * x[k] + sg * eps[k];
  model.eps_hat_into(work, t, pred);
  for (std::size_t k = 0; k < x.size(); ++k) work[k] = eps[k] - pred[k];
  return norm_lp(work, p);
}

inline void check_attack_timestep(const ScoreModel& model, int t) {
  require(model.schedule().valid_timestep(t) ||
              (t == 0 && model.supports_clean_timestep()),
          ErrorKind::kIndex,
          "attack timestep " + std::to_string(t) + " outside the model's range");
}

}  // namespace detail

inline AttackScore sima(const ScoreModel& model, std::span<const double> x, int t, double p,
                        std::size_t x_id = 0) {
  if (t != 0) detail::check_attack_timestep(model, t);
  std::vector<double> pred(model.dim());
  model.eps_hat_into(x, t, pred);
  return {x_id, norm_lp(pred, p), AttackKind::kSimA, t, p, 1, 1};
}

inline AttackScore loss_attack(const ScoreModel& model, std::span<const double> x, int t, double p,
                               std::uint64_t seed, std::size_t x_id = 0, int draws = 1) {
  require(draws >= 1, ErrorKind::kConfig, "loss attack needs at least one draw");
  detail::check_attack_timestep(model, t);
  require(t >= 1, ErrorKind::kDegenerateKernel, "loss attack needs t >= 1");
  const std::size_t d = model.dim();
  require(x.size() == d, ErrorKind::kShape, "query dimension mismatch");
  std::vector<double> eps(d), work(d), pred(d);
  double total = 0.0;
  for (int i = 0; i < draws; ++i) {
    auto rng = detail::attack_stream(seed, detail::kLossDraw, x_id, static_cast<std::size_t>(i));
    detail::fill_normal(rng, eps);
    total += detail::noised_residual(model, x, eps, t, p, work, pred);
  }
  return {x_id, total / draws, AttackKind::kLoss, t, p, draws, draws};
}

inline AttackScore secmi_stat(const ScoreModel& model, std::span<const double> x, int t, double p,
                              int n, std::uint64_t seed, std::size_t x_id = 0) {
  require(n >= 1, ErrorKind::kConfig, "secmi needs at least one draw");
  const auto& s = model.schedule();
  require(t >= 1 && t + 1 <= s.steps(), ErrorKind::kRange,
          "secmi needs 1 <= t and t + 1 <= T; got t = " + std::to_string(t));
  const std::size_t d = model.dim();
  require(x.size() == d, ErrorKind::kShape, "query dimension mismatch");
  std::vector<double> base(d), eps(d), work(d), next(d);
  model.eps_hat_into(x, t, base);
  const double sigma_t = s.sigma(t);
  const double ra_next = std::sqrt(s.alpha_bar(t + 1));
  const double sg_next = s.sigma(t + 1);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    auto rng = detail::attack_stream(seed, detail::kSecmiDraw, x_id, static_cast<std::size_t>(i));
    detail::fill_normal(rng, eps);
    for (std::size_t k = 0; k < d; ++k) work[k] = eps[k] - base[k];
    const double score_term = norm_lp(work, p);
    for (std::size_t k = 0; k < d; ++k) work[k] = ra_next * x[k] + sg_next * eps[k];
    model.eps_hat_into(work, t + 1, next);
    for (std::size_t k = 0; k < d; ++k) work[k] = sigma_t * (base[k] - next[k]);
    total += score_term + norm_lp(work, p);
  }
  return {x_id, total / n, AttackKind::kSecMI, t, p, n, n + 1};
}

inline AttackScore pia(const ScoreModel& model, std::span<const double> x, int t, double p,
                       std::size_t x_id = 0, bool first_step_proxy = true) {
  const auto& s = model.schedule();
  require(s.valid_timestep(t), ErrorKind::kIndex,
          "pia needs 1 <= t <= T; got t = " + std::to_string(t));
  const std::size_t d = model.dim();
  require(x.size() == d, ErrorKind::kShape, "query dimension mismatch");
  const int clean_t = (!model.supports_clean_timestep() && first_step_proxy) ? 1 : 0;
  std::vector<double> e0(d), work(d), pred(d);
  model.eps_hat_into(x, clean_t, e0);
  const double value = detail::noised_residual(model, x, e0, t, p, work, pred);
  return {x_id, value, AttackKind::kPIA, t, p, 2, 2};
}

inline AttackScore pfami_met(const ScoreModel& model, std::span<const double> x, double p, int n,
                             std::uint64_t seed, double perturb_sd, std::size_t x_id = 0,
                             int t_min = 1, int t_max = 300) {
  require(n >= 1, ErrorKind::kConfig, "pfami needs at least one draw");
  require(perturb_sd >= 0.0, ErrorKind::kConfig, "pfami perturb_sd must be >= 0");
  const auto& s = model.schedule();
  t_max = std::min(t_max, s.steps());
  require(t_min >= 1 && t_min <= t_max, ErrorKind::kConfig, "pfami timestep window is empty");
  const std::size_t d = model.dim();
  require(x.size() == d, ErrorKind::kShape, "query dimension mismatch");
  std::vector<double> eps(d), shifted(d), work(d), pred(d);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    auto rng = detail::attack_stream(seed, detail::kPfamiDraw, x_id, static_cast<std::size_t>(i));
    const int ti = static_cast<int>(rng.uniform_int(t_min, t_max));
    detail::fill_normal(rng, eps);
    for (std::size_t k = 0; k < d; ++k) shifted[k] = x[k] + perturb_sd * rng.normal();
    const double at_x = detail::noised_residual(model, x, eps, ti, p, work, pred);
    const double at_neighbor = detail::noised_residual(model, shifted, eps, ti, p, work, pred);
    total += at_x - at_neighbor;
  }
  return {x_id, total / n, AttackKind::kPFAMI, 0, p, n, 2 * n};
}

inline AttackScore run_attack(const ScoreModel& model, const AttackConfig& cfg,
                              std::span<const double> x, std::size_t x_id) {
  switch (cfg.kind) {
    case AttackKind::kSimA: return sima(model, x, cfg.t, cfg.p, x_id);
    case AttackKind::kLoss: return loss_attack(model, x, cfg.t, cfg.p, cfg.seed, x_id, cfg.mc_samples);
    case AttackKind::kSecMI:
      return secmi_stat(model, x, cfg.t, cfg.p, cfg.mc_samples, cfg.seed, x_id);
    case AttackKind::kPIA: return pia(model, x, cfg.t, cfg.p, x_id, cfg.pia_first_step_proxy);
    case AttackKind::kPFAMI:
      return pfami_met(model, x, cfg.p, cfg.mc_samples, cfg.seed, cfg.perturb_sd, x_id,
                       cfg.pfami_t_min, cfg.pfami_t_max);
  }
  fail(ErrorKind::kConfig, "unknown attack kind");
}

// Membership decision: member iff value <= tau.
inline Verdict decide(const AttackScore& score, double tau) {
  require(!std::isnan(tau), ErrorKind::kParameter, "threshold must not be NaN");
  return {score.value <= tau, tau};
}

}  // namespace simalab
