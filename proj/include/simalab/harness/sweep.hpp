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
#include <ostream>
#include <span>
#include <vector>

#include "simalab/attacks.hpp"
#include "simalab/evaluate.hpp"
#include "simalab/metrics.hpp"
#include "simalab/pointset.hpp"
#include "simalab/score_model.hpp"

namespace simalab {

struct SweepRow {
  int t = 0;
  double p = 2.0;
  AttackKind kind = AttackKind::kSimA;
  double asr = 0.0;
  double auc = 0.0;
  double tpr_at_1fpr = 0.0;
  double member_mean = 0.0;   // mean statistic over member queries
  double heldout_mean = 0.0;  // mean statistic over held-out queries
  bool best = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::size_t best_index = 0;

  const SweepRow& best() const { return rows.at(best_index); }
};

// Index of the highest-AUC row; ties go to the smaller t, then the earlier row.
inline std::size_t argmax_auc(std::span<const SweepRow> rows) {
  require(!rows.empty(), ErrorKind::kConfig, "sweep has no rows");
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const auto& b = rows[best];
    if (r.auc > b.auc || (r.auc == b.auc && r.t < b.t)) best = i;
  }
  return best;
}

inline SweepRow summarize_row(const Evaluation& e, const AttackConfig& cfg) {
  SweepRow row;
  row.t = cfg.uses_timestep() ? cfg.t : 0;
  row.p = cfg.p;
  row.kind = cfg.kind;
  row.asr = e.report.asr;
  row.auc = e.report.auc;
  row.tpr_at_1fpr = e.report.tpr_at_1fpr;
  double ms = 0.0, hs = 0.0;
  std::size_t mn = 0, hn = 0;
  for (const auto& q : e.queries) {
    if (q.member) {
      ms += q.score.value;
      ++mn;
    } else {
      hs += q.score.value;
      ++hn;
    }
  }
  row.member_mean = mn ? ms / static_cast<double>(mn) : 0.0;
  row.heldout_mean = hn ? hs / static_cast<double>(hn) : 0.0;
  return row;
}

// One metrics row per (p, t). Timestep-free attacks produce one row per p.
inline SweepResult sweep_t(const ScoreModel& model, const AttackConfig& attack,
                           const PointSet& members, const PointSet& heldout,
                           std::span<const int> timesteps, std::span<const double> p_values = {},
                           int threads = 1) {
  require(!timesteps.empty(), ErrorKind::kConfig, "sweep needs at least one timestep");
  for (int t : timesteps) {
    require(model.schedule().valid_timestep(t) || (t == 0 && model.supports_clean_timestep()),
            ErrorKind::kIndex, "sweep timestep " + std::to_string(t) + " not supported by the model");
  }
  std::vector<double> ps(p_values.begin(), p_values.end());
  if (ps.empty()) ps.push_back(attack.p);
  SweepResult result;
  for (double p : ps) {
    AttackConfig cfg = attack;
    cfg.p = p;
    if (!attack.uses_timestep()) {
      result.rows.push_back(summarize_row(evaluate_attack(model, cfg, members, heldout, threads), cfg));
      continue;
    }
    for (int t : timesteps) {
      cfg.t = t;
      result.rows.push_back(summarize_row(evaluate_attack(model, cfg, members, heldout, threads), cfg));
    }
  }
  result.best_index = argmax_auc(result.rows);
  result.rows[result.best_index].best = true;
  return result;
}

struct Histogram {
  std::vector<double> edges;  // bins + 1 shared edges
  std::vector<std::size_t> member;
  std::vector<std::size_t> nonmember;
};

// Equal-width bins spanning [min, max] of all values, shared by both classes.
inline Histogram emit_histogram(const LabeledScores& scores, std::size_t bins) {
  require(bins >= 1, ErrorKind::kConfig, "histogram needs at least one bin");
  require(scores.size() >= 1, ErrorKind::kMetricUndefined, "histogram of no values");
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& e : scores.entries()) {
    lo = std::min(lo, e.value);
    hi = std::max(hi, e.value);
  }
  Histogram h;
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
  h.edges[bins] = hi;
  h.member.assign(bins, 0);
  h.nonmember.assign(bins, 0);
  for (const auto& e : scores.entries()) {
    std::size_t idx = 0;
    if (width > 0.0) {
      idx = static_cast<std::size_t>(std::floor((e.value - lo) / width));
      idx = std::min(idx, bins - 1);
    }
    (e.member ? h.member : h.nonmember)[idx] += 1;
  }
  return h;
}

inline void write_histogram_csv(const Histogram& h, std::ostream& out) {
  out << "bin,lo,hi,member,nonmember\n";
  for (std::size_t i = 0; i < h.member.size(); ++i) {
    out << i << ',' << format_double(h.edges[i]) << ',' << format_double(h.edges[i + 1]) << ','
        << h.member[i] << ',' << h.nonmember[i] << '\n';
  }
}

inline void write_sweep_csv(const SweepResult& s, std::ostream& out) {
  out << "kind,t,p,asr,auc,tpr_at_1fpr,member_mean,heldout_mean,best\n";
  for (const auto& r : s.rows) {
    out << attack_name(r.kind) << ',' << r.t << ',' << format_double(r.p) << ','
        << format_double(r.asr) << ',' << format_double(r.auc) << ','
        << format_double(r.tpr_at_1fpr) << ',' << format_double(r.member_mean) << ','
        << format_double(r.heldout_mean) << ',' << (r.best ? 1 : 0) << '\n';
  }
}

}  // namespace simalab
