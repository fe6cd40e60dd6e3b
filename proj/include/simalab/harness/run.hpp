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

// Experiment orchestration. Output layout under the run directory:
//
//   manifest.json
//   data/{member,heldout,ood}.csv
//   models/mlp-<hash>.bin, models/loss_trace.csv      (mlp only)
//   scores/<i>-<kind>.csv
//   reports/<i>-<kind>.json, reports/<i>-<kind>-roc.csv, reports/summary.csv
//   sweeps/<i>-<kind>.csv, sweeps/<i>-<kind>-hist.csv
//   sweeps/bottleneck.csv, sweeps/bottleneck.json
//
// Nothing written depends on wall-clock time, thread count or the output path.

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "simalab/attacks.hpp"
#include "simalab/bottleneck.hpp"
#include "simalab/denoiser.hpp"
#include "simalab/empirical_score.hpp"
#include "simalab/error.hpp"
#include "simalab/evaluate.hpp"
#include "simalab/harness/config.hpp"
#include "simalab/harness/sweep.hpp"
#include "simalab/metrics.hpp"
#include "simalab/mixture_score.hpp"
#include "simalab/pointset.hpp"
#include "simalab/rng.hpp"
#include "simalab/synthdata.hpp"
#include "simalab/version.hpp"

namespace simalab {

namespace fs = std::filesystem;

inline void write_text_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  require(!ec, ErrorKind::kIo, "cannot create directory " + path.parent_path().string());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  out.flush();
  require(out.good(), ErrorKind::kIo, "write failed for " + path.string());
}

inline std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---- tabular writers ------------------------------------------------------

inline void write_scores_csv(const std::vector<ScoredQuery>& queries, std::ostream& out) {
  out << "x_id,label,kind,t,p,value,queries_used\n";
  for (const auto& q : queries) {
    const auto& s = q.score;
    out << s.x_id << ',' << (q.member ? 1 : 0) << ',' << attack_name(s.kind) << ',' << s.t << ','
        << format_double(s.p) << ',' << format_double(s.value) << ',' << s.queries_used << '\n';
  }
}

inline std::vector<ScoredQuery> read_scores_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::kIo, "scores CSV is empty");
  require(line == "x_id,label,kind,t,p,value,queries_used", ErrorKind::kIo,
          "scores CSV has an unexpected header: " + line);
  std::vector<ScoredQuery> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    require(cols.size() == 7, ErrorKind::kIo,
            "scores CSV line " + std::to_string(lineno) + " needs 7 columns");
    try {
      ScoredQuery q;
      q.score.x_id = static_cast<std::size_t>(std::stoull(cols[0]));
      require(cols[1] == "0" || cols[1] == "1", ErrorKind::kIo, "label must be 0 or 1");
      q.member = cols[1] == "1";
      q.score.kind = parse_attack_kind(cols[2]);
      q.score.t = std::stoi(cols[3]);
      q.score.p = parse_double(cols[4]);
      q.score.value = parse_double(cols[5]);
      q.score.queries_used = std::stoi(cols[6]);
      out.push_back(q);
    } catch (const Error& e) {
      fail(ErrorKind::kIo, "scores CSV line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::exception&) {
      fail(ErrorKind::kIo, "scores CSV line " + std::to_string(lineno) + " is malformed");
    }
  }
  return out;
}

inline Json report_json(const Report& r) {
  Json j;
  j["asr"] = r.asr;
  j["auc"] = r.auc;
  j["tpr_at_1fpr"] = r.tpr_at_1fpr;
  j["n_member"] = r.n_member;
  j["n_nonmember"] = r.n_nonmember;
  j["attack"] = r.metadata.attack;
  j["t"] = r.metadata.t;
  j["p"] = r.metadata.p;
  j["seed"] = r.metadata.seed;
  return j;
}

inline void write_roc_csv(const RocCurve& curve, std::ostream& out) {
  out << "tau,tpr,fpr\n";
  for (const auto& pt : curve.points) {
    out << format_double(pt.tau) << ',' << format_double(pt.tpr) << ',' << format_double(pt.fpr)
        << '\n';
  }
}

inline void write_bottleneck_csv(const std::vector<BottleneckRow>& rows, std::ostream& out) {
  out << "gamma,asr,auc,tpr_at_1fpr\n";
  for (const auto& r : rows) {
    out << format_double(r.gamma) << ',' << format_double(r.report.asr) << ','
        << format_double(r.report.auc) << ',' << format_double(r.report.tpr_at_1fpr) << '\n';
  }
}

// ---- experiment -------------------------------------------------------------

inline Splits build_splits(const DataConfig& data) {
  if (data.kind == DataKind::kRing) {
    return make_ring_splits(data.ring_radius, data.ring_noise_sd, data.split);
  }
  return make_splits(data.mixture, data.split);
}

// Hash of everything that determines the trained network.
inline std::string model_hash(const ExperimentConfig& cfg) {
  Json key;
  key["seed"] = cfg.seed;
  for (const char* k : {"schedule", "data", "model"}) {
    if (cfg.source.is_object() && cfg.source.contains(k)) key[k] = cfg.source.at(k);
  }
  return config_hash(key);
}

class Experiment {
 public:
  Experiment(ExperimentConfig cfg, fs::path out, int threads)
      : cfg_(std::move(cfg)), out_(std::move(out)), threads_(std::max(1, threads)) {}

  const ExperimentConfig& config() const { return cfg_; }
  const fs::path& out() const { return out_; }

  const Splits& splits() {
    if (!splits_) splits_ = build_splits(cfg_.data);
    return *splits_;
  }

  const ScoreModel& model() {
    if (model_) return *model_;
    switch (cfg_.model.kind) {
      case ModelKind::kEmpirical:
        model_ = std::make_unique<EmpiricalScoreModel>(splits().member, cfg_.schedule);
        break;
      case ModelKind::kMixture:
        model_ = std::make_unique<MixtureScoreModel>(cfg_.data.mixture, cfg_.schedule);
        break;
      case ModelKind::kMlp:
        model_ = std::make_unique<MlpDenoiser>(trained_mlp());
        break;
    }
    return *model_;
  }

  void gen_data() {
    const Splits& s = splits();
    const std::pair<const char*, const PointSet*> sets[] = {
        {"member", &s.member}, {"heldout", &s.heldout}, {"ood", &s.ood}};
    for (const auto& [name, ps] : sets) {
      std::ostringstream csv;
      write_csv(*ps, csv);
      write_text_file(out_ / "data" / (std::string(name) + ".csv"), csv.str());
    }
  }

  // Trains (or reuses a checkpoint with the same hash) and returns its path.
  fs::path train_nn() {
    require(cfg_.model.kind == ModelKind::kMlp, ErrorKind::kConfig,
            "train-nn needs model.type \"mlp\"");
    model();
    return checkpoint_path();
  }

  std::vector<Report> attack() {
    require(!cfg_.attacks.empty(), ErrorKind::kConfig, "attack needs a nonempty attacks list");
    const Splits& s = splits();
    const ScoreModel& m = model();
    std::vector<Report> reports;
    for (std::size_t i = 0; i < cfg_.attacks.size(); ++i) {
      const AttackConfig& a = cfg_.attacks[i];
      const Evaluation e = evaluate_attack(m, a, s.member, s.heldout, threads_);
      const std::string stem = attack_stem(i, a);
      std::ostringstream scores, roc_csv;
      write_scores_csv(e.queries, scores);
      write_text_file(out_ / "scores" / (stem + ".csv"), scores.str());
      write_text_file(out_ / "reports" / (stem + ".json"), report_json(e.report).dump(2) + "\n");
      write_roc_csv(e.report.curve, roc_csv);
      write_text_file(out_ / "reports" / (stem + "-roc.csv"), roc_csv.str());
      reports.push_back(e.report);
    }
    return reports;
  }

  std::vector<SweepResult> sweep_t() {
    require(cfg_.sweep.has_value(), ErrorKind::kConfig, "sweep-t needs a sweep block");
    const SweepConfig& sw = *cfg_.sweep;
    const Splits& s = splits();
    const ScoreModel& m = model();
    std::vector<AttackConfig> attacks = cfg_.attacks;
    if (attacks.empty()) {
      attacks.push_back(AttackConfig::defaults(AttackKind::kSimA));
      attacks.back().seed = role_seed(cfg_.seed, SeedRole::kAttack, 0);
    }
    const std::vector<int> ts = sw.timesteps();
    std::vector<SweepResult> results;
    for (std::size_t i = 0; i < attacks.size(); ++i) {
      const AttackConfig& a = attacks[i];
      // t = 0 exists only for SimA; SecMI also needs step t + 1.
      std::vector<int> usable;
      for (int t : ts) {
        if (t == 0 && a.kind != AttackKind::kSimA) continue;
        if (a.kind == AttackKind::kSecMI && t >= cfg_.schedule.steps()) continue;
        usable.push_back(t);
      }
      require(!usable.empty(), ErrorKind::kConfig,
              "sweep range has no timestep usable by attack " + std::string(attack_name(a.kind)));
      SweepResult r = simalab::sweep_t(m, a, s.member, s.heldout, usable, sw.p_values, threads_);
      const std::string stem = attack_stem(i, a);
      std::ostringstream csv;
      write_sweep_csv(r, csv);
      write_text_file(out_ / "sweeps" / (stem + ".csv"), csv.str());

      AttackConfig at_best = a;
      at_best.p = r.best().p;
      if (a.uses_timestep()) at_best.t = r.best().t;
      const Evaluation e = evaluate_attack(m, at_best, s.member, s.heldout, threads_);
      std::ostringstream hist;
      write_histogram_csv(emit_histogram(labeled(e.queries), sw.histogram_bins), hist);
      write_text_file(out_ / "sweeps" / (stem + "-hist.csv"), hist.str());
      results.push_back(std::move(r));
    }
    return results;
  }

  std::vector<BottleneckRow> sweep_bottleneck() {
    require(cfg_.bottleneck.has_value(), ErrorKind::kConfig,
            "sweep-bottleneck needs a bottleneck block");
    const BottleneckConfig& bc = *cfg_.bottleneck;
    const Splits& s = splits();
    BottleneckOptions opt;
    opt.code_dim = bc.code_dim;
    opt.projection = bc.projection;
    opt.encoder_seed = role_seed(cfg_.seed, SeedRole::kEncoder);
    opt.schedule = cfg_.schedule;
    opt.threads = threads_;
    const double unit = bc.scale_by_data ? cfg_.data.scale() : 1.0;
    std::vector<BottleneckRow> rows;
    std::vector<double> gs, aucs;
    for (double g : bc.gammas) {
      rows.push_back({g * unit, bottleneck_trial(s, g * unit, bc.attack, opt)});
      gs.push_back(g * unit);
      aucs.push_back(rows.back().report.auc);
    }
    std::ostringstream csv;
    write_bottleneck_csv(rows, csv);
    write_text_file(out_ / "sweeps" / "bottleneck.csv", csv.str());
    Json summary;
    summary["data_scale"] = cfg_.data.scale();
    summary["spearman_gamma_auc"] = gs.size() >= 2 ? spearman(gs, aucs) : 0.0;
    summary["attack"] = std::string(attack_name(bc.attack.kind));
    summary["t"] = bc.attack.uses_timestep() ? bc.attack.t : 0;
    summary["p"] = bc.attack.p;
    write_text_file(out_ / "sweeps" / "bottleneck.json", summary.dump(2) + "\n");
    return rows;
  }

  // Recomputes a report for every scores CSV and writes reports/summary.csv.
  std::vector<Report> report() {
    const fs::path dir = out_ / "scores";
    require(fs::is_directory(dir), ErrorKind::kIo,
            "no scores in " + dir.string() + "; run the attack command first");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    require(!files.empty(), ErrorKind::kIo, "no scores CSV files in " + dir.string());
    std::ostringstream summary;
    summary << "name,attack,t,p,asr,auc,tpr_at_1fpr,n_member,n_nonmember\n";
    std::vector<Report> reports;
    for (const auto& f : files) {
      const std::string name = f.stem().string();
      const Report r = report_from_scores(f, seed_for_stem(name));
      write_text_file(out_ / "reports" / (name + ".json"), report_json(r).dump(2) + "\n");
      summary << name << ',' << r.metadata.attack << ',' << r.metadata.t << ','
              << format_double(r.metadata.p) << ',' << format_double(r.asr) << ','
              << format_double(r.auc) << ',' << format_double(r.tpr_at_1fpr) << ',' << r.n_member
              << ',' << r.n_nonmember << '\n';
      reports.push_back(r);
    }
    write_text_file(out_ / "reports" / "summary.csv", summary.str());
    return reports;
  }

  // Every stage the config asks for, then the manifest.
  void run() {
    gen_data();
    if (cfg_.model.kind == ModelKind::kMlp) train_nn();
    if (!cfg_.attacks.empty()) {
      attack();
      report();
    }
    if (cfg_.sweep) sweep_t();
    if (cfg_.bottleneck) sweep_bottleneck();
    write_manifest("run");
  }

  void write_manifest(const std::string& command) {
    Json m;
    m["command"] = command;
    m["config_hash"] = config_hash(cfg_.source);
    m["seed"] = cfg_.seed;
    m["code_version"] = std::string(kCodeVersion);
    m["rng"] = std::string(kRngVersion);
    Json files = Json::array();
    std::vector<fs::path> paths;
    if (fs::is_directory(out_)) {
      for (const auto& e : fs::recursive_directory_iterator(out_)) {
        if (e.is_regular_file() && e.path().filename() != "manifest.json") paths.push_back(e.path());
      }
    }
    std::vector<std::string> rel;
    for (const auto& p : paths) rel.push_back(fs::relative(p, out_).generic_string());
    std::sort(rel.begin(), rel.end());
    for (const auto& r : rel) {
      files.push_back({{"path", r}, {"fnv1a", fnv1a_hex(read_text_file(out_ / r))}});
    }
    m["files"] = files;
    Json science = cfg_.source;
    if (science.is_object()) {
      science.erase("output");
      science.erase("threads");
    }
    m["config"] = science;
    write_text_file(out_ / "manifest.json", m.dump(2) + "\n");
  }

  static Report report_from_scores(const fs::path& path, std::uint64_t seed = 0) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::kIo, "cannot read " + path.string());
    const auto queries = read_scores_csv(in);
    require(!queries.empty(), ErrorKind::kMetricUndefined, "scores CSV has no rows");
    const auto& first = queries.front().score;
    return make_report(labeled(queries),
                       {std::string(attack_name(first.kind)), first.t, first.p, seed});
  }

 private:
  static std::string attack_stem(std::size_t i, const AttackConfig& a) {
    return std::to_string(i) + "-" + std::string(attack_name(a.kind));
  }

  std::uint64_t seed_for_stem(const std::string& stem) const {
    for (std::size_t i = 0; i < cfg_.attacks.size(); ++i) {
      if (attack_stem(i, cfg_.attacks[i]) == stem) return cfg_.attacks[i].seed;
    }
    return 0;
  }

  fs::path checkpoint_path() const { return out_ / "models" / ("mlp-" + model_hash(cfg_) + ".bin"); }

  MlpDenoiser trained_mlp() {
    const fs::path ckpt = checkpoint_path();
    if (fs::exists(ckpt)) return load_checkpoint(ckpt.string());
    const std::size_t d = cfg_.data.dim();
    MlpDenoiser init = init_denoiser(d, cfg_.model.widths, role_seed(cfg_.seed, SeedRole::kInit),
                                     cfg_.schedule);
    TrainResult r = train(std::move(init), splits().member, cfg_.model.train);
    std::error_code ec;
    fs::create_directories(ckpt.parent_path(), ec);
    save_checkpoint(r.model, ckpt.string());
    std::ostringstream trace;
    trace << "step,loss\n";
    for (std::size_t i = 0; i < r.loss_trace.size(); ++i) {
      trace << i << ',' << format_double(r.loss_trace[i]) << '\n';
    }
    write_text_file(out_ / "models" / "loss_trace.csv", trace.str());
    return std::move(r.model);
  }

  ExperimentConfig cfg_;
  fs::path out_;
  int threads_;
  std::optional<Splits> splits_;
  std::unique_ptr<ScoreModel> model_;
};

}  // namespace simalab
