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

// Threshold-sweep evaluation of a membership statistic.
//
// A point is predicted "member" when its value <= tau. The ROC curve has one
// point per distinct value plus the sentinels (-inf, 0, 0) and (+inf, 1, 1);
// tied values share a point, so the curve is a deterministic step function.
// All three summary metrics are percentages.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "simalab/error.hpp"

namespace simalab {

struct LabeledScore {
  double value = 0.0;
  bool member = false;
};

class LabeledScores {
 public:
  LabeledScores() = default;
  explicit LabeledScores(std::vector<LabeledScore> entries) : entries_(std::move(entries)) {
    for (const auto& e : entries_) {
      require(std::isfinite(e.value), ErrorKind::kMetricUndefined,
              "labeled scores must be finite");
    }
  }

  static LabeledScores from(std::span<const double> members, std::span<const double> nonmembers) {
    std::vector<LabeledScore> e;
    e.reserve(members.size() + nonmembers.size());
    for (double v : members) e.push_back({v, true});
    for (double v : nonmembers) e.push_back({v, false});
    return LabeledScores(std::move(e));
  }

  void add(double value, bool member) {
    require(std::isfinite(value), ErrorKind::kMetricUndefined, "labeled scores must be finite");
    entries_.push_back({value, member});
  }

  const std::vector<LabeledScore>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::size_t n_member() const {
    return static_cast<std::size_t>(
        std::count_if(entries_.begin(), entries_.end(), [](const auto& e) { return e.member; }));
  }
  std::size_t n_nonmember() const { return entries_.size() - n_member(); }

 private:
  std::vector<LabeledScore> entries_;
};

struct RocPoint {
  double tau = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  std::size_t tp = 0;  // members with value <= tau
  std::size_t fp = 0;  // non-members with value <= tau
};

struct RocCurve {
  std::vector<RocPoint> points;
  std::size_t n_member = 0;
  std::size_t n_nonmember = 0;
};

// kLow: member when value <= tau. kHigh: member when value >= tau.
enum class MemberSide { kLow, kHigh };

inline RocCurve roc(const LabeledScores& scores, MemberSide side = MemberSide::kLow) {
  const std::size_t n_pos = scores.n_member();
  const std::size_t n_neg = scores.n_nonmember();
  require(n_pos >= 1 && n_neg >= 1, ErrorKind::kMetricUndefined,
          "ROC needs at least one member and one non-member");
  std::vector<LabeledScore> sorted = scores.entries();
  const double sign = side == MemberSide::kLow ? 1.0 : -1.0;
  std::sort(sorted.begin(), sorted.end(),
            [sign](const auto& a, const auto& b) { return sign * a.value < sign * b.value; });

  RocCurve curve;
  curve.n_member = n_pos;
  curve.n_nonmember = n_neg;
  curve.points.reserve(sorted.size() + 2);
  curve.points.push_back({-sign * INFINITY, 0.0, 0.0, 0, 0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double v = sorted[i].value;
    while (i < sorted.size() && sorted[i].value == v) {
      (sorted[i].member ? tp : fp) += 1;
      ++i;
    }
    curve.points.push_back({v, static_cast<double>(tp) / static_cast<double>(n_pos),
                            static_cast<double>(fp) / static_cast<double>(n_neg), tp, fp});
  }
  curve.points.push_back({sign * INFINITY, 1.0, 1.0, n_pos, n_neg});
  return curve;
}

// Trapezoidal area under TPR(FPR), in percent. When the curve carries counts
// the area is summed in integers: twice the area times n_member * n_nonmember
// is the Mann-Whitney count 2 #{member < non-member} + #{ties}.
inline double auc(const RocCurve& curve) {
  if (curve.n_member > 0 && curve.n_nonmember > 0) {
    std::uint64_t twice = 0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
      const auto& a = curve.points[i - 1];
      const auto& b = curve.points[i];
      twice += static_cast<std::uint64_t>(b.fp - a.fp) * (a.tp + b.tp);
    }
    return 100.0 * static_cast<double>(twice) /
           (2.0 * static_cast<double>(curve.n_member) * static_cast<double>(curve.n_nonmember));
  }
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return 100.0 * area;
}

// Best balanced accuracy 1/2 (TPR + 1 - FPR) over thresholds, in percent.
inline double asr(const RocCurve& curve) {
  if (curve.n_member > 0 && curve.n_nonmember > 0) {
    const std::uint64_t p = curve.n_member, n = curve.n_nonmember;
    std::uint64_t best = 0;
    for (const auto& pt : curve.points) {
      best = std::max<std::uint64_t>(best, pt.tp * n + (n - pt.fp) * p);
    }
    return 100.0 * static_cast<double>(best) /
           (2.0 * static_cast<double>(p) * static_cast<double>(n));
  }
  double best = 0.0;
  for (const auto& pt : curve.points) best = std::max(best, 0.5 * (pt.tpr + 1.0 - pt.fpr));
  return 100.0 * best;
}

// TPR at the largest threshold whose FPR does not exceed `fpr_cap`, in
// percent. No interpolation between curve points.
inline double tpr_at_fpr(const RocCurve& curve, double fpr_cap = 0.01) {
  double best = 0.0;
  for (const auto& pt : curve.points) {
    if (pt.fpr <= fpr_cap) best = std::max(best, pt.tpr);
  }
  return 100.0 * best;
}

struct ReportMetadata {
  std::string attack;
  int t = 0;
  double p = 2.0;
  std::uint64_t seed = 0;
};

struct Report {
  double asr = 0.0;
  double auc = 0.0;
  double tpr_at_1fpr = 0.0;
  std::size_t n_member = 0;
  std::size_t n_nonmember = 0;
  ReportMetadata metadata;
  RocCurve curve;
};

inline Report make_report(const LabeledScores& scores, ReportMetadata metadata = {}) {
  Report r;
  r.curve = roc(scores);
  r.asr = asr(r.curve);
  r.auc = auc(r.curve);
  r.tpr_at_1fpr = tpr_at_fpr(r.curve, 0.01);
  r.n_member = scores.n_member();
  r.n_nonmember = scores.n_nonmember();
  r.metadata = std::move(metadata);
  return r;
}

}  // namespace simalab
