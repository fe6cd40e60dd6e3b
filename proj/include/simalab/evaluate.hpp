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

// Batch evaluation: run one attack over member and held-out queries and
// summarize it. Query ids are member rows 0..M-1 followed by held-out rows
// M..M+H-1.

#pragma once

#include <string>
#include <vector>

#include "simalab/attacks.hpp"
#include "simalab/metrics.hpp"
#include "simalab/parallel.hpp"
#include "simalab/pointset.hpp"
#include "simalab/score_model.hpp"

namespace simalab {

struct ScoredQuery {
  AttackScore score;
  bool member = false;
};

struct Evaluation {
  std::vector<ScoredQuery> queries;
  Report report;
};

inline std::vector<ScoredQuery> score_queries(const ScoreModel& model, const AttackConfig& cfg,
                                              const PointSet& members, const PointSet& heldout,
                                              int threads = 1) {
  cfg.validate();
  const std::size_t m = members.size();
  std::vector<ScoredQuery> out(m + heldout.size());
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const bool is_member = i < m;
    auto x = is_member ? members.row(i) : heldout.row(i - m);
    out[i] = {run_attack(model, cfg, x, i), is_member};
  });
  return out;
}

inline LabeledScores labeled(const std::vector<ScoredQuery>& queries) {
  std::vector<LabeledScore> entries;
  entries.reserve(queries.size());
  for (const auto& q : queries) entries.push_back({q.score.value, q.member});
  return LabeledScores(std::move(entries));
}

inline Evaluation evaluate_attack(const ScoreModel& model, const AttackConfig& cfg,
                                  const PointSet& members, const PointSet& heldout,
                                  int threads = 1) {
  Evaluation e;
  e.queries = score_queries(model, cfg, members, heldout, threads);
  e.report = make_report(labeled(e.queries),
                         {std::string(attack_name(cfg.kind)), cfg.uses_timestep() ? cfg.t : 0,
                          cfg.p, cfg.seed});
  return e;
}

}  // namespace simalab
