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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "simalab/simalab.hpp"
#include "test_util.hpp"

namespace simalab {
namespace {

namespace fs = std::filesystem;

Json minimal_doc() {
  return Json::parse(R"({
    "seed": 7,
    "data": {
      "type": "mixture",
      "components": [
        {"weight": 0.5, "mean": [-2.0], "variance": [0.25]},
        {"weight": 0.5, "mean": [2.0], "variance": [0.25]}
      ],
      "split": {"n_member": 30, "n_heldout": 30}
    },
    "model": {"type": "empirical"},
    "attacks": [{"kind": "sima", "t": 20}, {"kind": "loss", "t": 20}, {"kind": "secmi", "t": 20}],
    "sweep": {"t_min": 1, "t_max": 40, "t_step": 3, "histogram_bins": 8},
    "bottleneck": {"gammas": [0, 1, 10]}
  })");
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("simalab-test-" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

// Every regular file under `root`, relative path -> bytes.
std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
  }
  return out;
}

// ---- config ----

TEST(Config, ParsesMinimal) {
  const auto cfg = parse_config(minimal_doc());
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.data.dim(), 1u);
  EXPECT_EQ(cfg.attacks.size(), 3u);
  EXPECT_EQ(cfg.attacks[0].kind, AttackKind::kSimA);
  EXPECT_EQ(cfg.attacks[0].t, 20);
  EXPECT_EQ(cfg.attacks[0].p, 4.0);
  EXPECT_EQ(cfg.attacks[2].mc_samples, 12);
  ASSERT_TRUE(cfg.sweep.has_value());
  EXPECT_EQ(cfg.sweep->timesteps().front(), 1);
  EXPECT_EQ(cfg.sweep->timesteps().back(), 40);
}

TEST(Config, UnknownKeyNamesItsPath) {
  auto doc = minimal_doc();
  doc["data"]["split"]["n_members"] = 3;
  try {
    parse_config(doc);
    FAIL() << "expected a config error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
    EXPECT_NE(std::string(e.what()).find("data.split.n_members"), std::string::npos) << e.what();
  }
  auto top = minimal_doc();
  top["colour"] = "blue";
  EXPECT_SIMALAB_ERROR(parse_config(top), ErrorKind::kConfig);
}

TEST(Config, MissingAndMistypedFields) {
  auto a = minimal_doc();
  a.erase("data");
  EXPECT_SIMALAB_ERROR(parse_config(a), ErrorKind::kConfig);
  auto b = minimal_doc();
  b["data"]["split"]["n_member"] = "thirty";
  EXPECT_SIMALAB_ERROR(parse_config(b), ErrorKind::kConfig);
  auto c = minimal_doc();
  c["seed"] = -1;
  EXPECT_SIMALAB_ERROR(parse_config(c), ErrorKind::kConfig);
  auto d = minimal_doc();
  d["data"]["components"][0]["weight"] = 0.7;
  EXPECT_SIMALAB_ERROR(parse_config(d), ErrorKind::kConfig);
  auto e = minimal_doc();
  e["attacks"][0]["kind"] = "nope";
  EXPECT_SIMALAB_ERROR(parse_config(e), ErrorKind::kConfig);
}

TEST(Config, TimestepRanges) {
  auto a = minimal_doc();
  a["attacks"][0]["t"] = 1001;
  EXPECT_SIMALAB_ERROR(parse_config(a), ErrorKind::kConfig);
  auto b = minimal_doc();
  b["attacks"][0]["t"] = 0;  // the empirical oracle has no clean prediction
  EXPECT_SIMALAB_ERROR(parse_config(b), ErrorKind::kConfig);
  auto c = minimal_doc();
  c["sweep"]["t_min"] = 0;
  EXPECT_SIMALAB_ERROR(parse_config(c), ErrorKind::kConfig);
  auto d = minimal_doc();
  d["sweep"]["t_max"] = 2000;
  EXPECT_SIMALAB_ERROR(parse_config(d), ErrorKind::kConfig);
  auto e = minimal_doc();
  e["model"] = Json{{"type", "mixture"}};
  e["attacks"][0]["t"] = 0;  // fine for the analytic mixture
  EXPECT_NO_THROW(parse_config(e));
}

TEST(Config, SeedChangesDerivedSeedsAndHash) {
  auto a = minimal_doc();
  auto b = minimal_doc();
  b["seed"] = 8;
  const auto ca = parse_config(a), cb = parse_config(b);
  EXPECT_NE(ca.attacks[0].seed, cb.attacks[0].seed);
  EXPECT_NE(ca.data.split.seed, cb.data.split.seed);
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a), config_hash(minimal_doc()));
}

TEST(Config, ShippedConfigsParse) {
  for (const auto& e : fs::directory_iterator(SIMALAB_CONFIG_DIR)) {
    if (e.path().extension() != ".json") continue;
    SCOPED_TRACE(e.path().string());
    EXPECT_NO_THROW(load_config(e.path().string()));
  }
}

// ---- sweep and histogram ----

TEST(Sweep, BestIsArgmaxOfRows) {
  const auto cfg = parse_config(minimal_doc());
  const Splits s = build_splits(cfg.data);
  const EmpiricalScoreModel model(s.member, cfg.schedule);
  const std::vector<int> ts{1, 5, 20, 60, 150};
  const std::vector<double> ps{2.0, 4.0};
  const auto r = sweep_t(model, cfg.attacks[0], s.member, s.heldout, ts, ps);
  ASSERT_EQ(r.rows.size(), 10u);
  double best = -1;
  for (const auto& row : r.rows) best = std::max(best, row.auc);
  EXPECT_EQ(r.best().auc, best);
  int flagged = 0;
  for (const auto& row : r.rows) flagged += row.best;
  EXPECT_EQ(flagged, 1);
  // Each row is the plain evaluation at that (t, p).
  AttackConfig c = cfg.attacks[0];
  c.t = 60;
  c.p = 2.0;
  EXPECT_EQ(r.rows[3].auc, evaluate_attack(model, c, s.member, s.heldout).report.auc);
}

TEST(Sweep, SingleTimestep) {
  const auto cfg = parse_config(minimal_doc());
  const Splits s = build_splits(cfg.data);
  const EmpiricalScoreModel model(s.member, cfg.schedule);
  const std::vector<int> ts{30};
  const auto r = sweep_t(model, cfg.attacks[0], s.member, s.heldout, ts);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.best().t, 30);
}

TEST(Sweep, IdenticalSetsGiveChance) {
  const auto cfg = parse_config(minimal_doc());
  const Splits s = build_splits(cfg.data);
  const EmpiricalScoreModel model(s.member, cfg.schedule);
  const std::vector<int> ts{10, 50};
  const auto r = sweep_t(model, cfg.attacks[0], s.member, s.member, ts);
  for (const auto& row : r.rows) EXPECT_EQ(row.auc, 50.0);
}

TEST(Sweep, TiesPreferSmallerT) {
  std::vector<SweepRow> rows(3);
  rows[0].t = 50;
  rows[0].auc = 80;
  rows[1].t = 10;
  rows[1].auc = 80;
  rows[2].t = 5;
  rows[2].auc = 79;
  EXPECT_EQ(argmax_auc(rows), 1u);
}

TEST(Sweep, RejectsBadTimesteps) {
  const auto cfg = parse_config(minimal_doc());
  const Splits s = build_splits(cfg.data);
  const EmpiricalScoreModel model(s.member, cfg.schedule);
  const std::vector<int> zero{0}, big{1001}, none;
  EXPECT_SIMALAB_ERROR(sweep_t(model, cfg.attacks[0], s.member, s.heldout, zero), ErrorKind::kIndex);
  EXPECT_SIMALAB_ERROR(sweep_t(model, cfg.attacks[0], s.member, s.heldout, big), ErrorKind::kIndex);
  EXPECT_SIMALAB_ERROR(sweep_t(model, cfg.attacks[0], s.member, s.heldout, none), ErrorKind::kConfig);
}

TEST(Histogram, OneValuePerClass) {
  LabeledScores s;
  s.add(0.0, true);
  s.add(1.0, false);
  const auto h = emit_histogram(s, 10);
  EXPECT_EQ(h.member[0], 1u);
  EXPECT_EQ(h.nonmember[9], 1u);
  std::size_t occupied_m = 0, occupied_n = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    occupied_m += h.member[i] > 0;
    occupied_n += h.nonmember[i] > 0;
  }
  EXPECT_EQ(occupied_m, 1u);
  EXPECT_EQ(occupied_n, 1u);
  EXPECT_EQ(h.edges.front(), 0.0);
  EXPECT_EQ(h.edges.back(), 1.0);
}

TEST(Histogram, CountsSumToClassSizes) {
  RandomStream rng(1, 1);
  LabeledScores s;
  for (int i = 0; i < 137; ++i) s.add(rng.normal(), true);
  for (int i = 0; i < 91; ++i) s.add(2.0 * rng.normal() + 1.0, false);
  const auto h = emit_histogram(s, 13);
  std::size_t m = 0, n = 0;
  for (std::size_t i = 0; i < 13; ++i) {
    m += h.member[i];
    n += h.nonmember[i];
    EXPECT_LT(h.edges[i], h.edges[i + 1]);
  }
  EXPECT_EQ(m, 137u);
  EXPECT_EQ(n, 91u);
}

TEST(Histogram, ConstantValuesFallInFirstBin) {
  LabeledScores s;
  s.add(2.0, true);
  s.add(2.0, false);
  const auto h = emit_histogram(s, 4);
  EXPECT_EQ(h.member[0], 1u);
  EXPECT_EQ(h.nonmember[0], 1u);
  EXPECT_SIMALAB_ERROR(emit_histogram(s, 0), ErrorKind::kConfig);
}

// The shipped two-cluster 1D setup on the empirical model, t = 1..300.
struct TwoClusterSweep {
  Splits data;
  std::unique_ptr<EmpiricalScoreModel> model;
  SweepResult sweep;
  AttackConfig attack;
};

const TwoClusterSweep& two_cluster_sweep() {
  static const TwoClusterSweep s = [] {
    TwoClusterSweep r;
    const auto cfg = load_config(std::string(SIMALAB_CONFIG_DIR) + "/two_cluster_1d.json");
    r.data = build_splits(cfg.data);
    r.model = std::make_unique<EmpiricalScoreModel>(r.data.member, cfg.schedule);
    r.attack = cfg.attacks[0];
    const auto ts = cfg.sweep->timesteps();
    r.sweep = sweep_t(*r.model, r.attack, r.data.member, r.data.heldout, ts);
    return r;
  }();
  return s;
}

TEST(Window, ArgmaxTimestepInWindow) {
  const auto& b = two_cluster_sweep().sweep.best();
  EXPECT_GE(b.t, 10) << "best AUC " << b.auc;
  EXPECT_LE(b.t, 300);
}

TEST(Window, MeanGapPeaksAfterFirstSteps) {
  const auto& rows = two_cluster_sweep().sweep.rows;
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].heldout_mean - rows[i].member_mean > rows[best].heldout_mean - rows[best].member_mean) {
      best = i;
    }
  }
  EXPECT_GT(rows[best].t, 5);
}

TEST(Window, HistogramModesSeparateAtMidWindow) {
  const auto& s = two_cluster_sweep();
  AttackConfig c = s.attack;
  c.t = 30;
  const auto e = evaluate_attack(*s.model, c, s.data.member, s.data.heldout);
  const auto h = emit_histogram(labeled(e.queries), 30);
  const auto mode = [](const std::vector<std::size_t>& v) {
    return std::max_element(v.begin(), v.end()) - v.begin();
  };
  EXPECT_NE(mode(h.member), mode(h.nonmember));
}

TEST(Experiment, MinimalConfigGivesOneReport) {
  const fs::path out = scratch("minimal");
  Experiment ex(load_config(std::string(SIMALAB_CONFIG_DIR) + "/minimal.json"), out, 1);
  ex.run();
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(out / "reports")) {
    n += e.path().extension() == ".json";
  }
  EXPECT_EQ(n, 1u);
  fs::remove_all(out);
}

// ---- files ----

TEST(Files, ScoresCsvRoundTrip) {
  const auto cfg = parse_config(minimal_doc());
  const Splits s = build_splits(cfg.data);
  const EmpiricalScoreModel model(s.member, cfg.schedule);
  const auto e = evaluate_attack(model, cfg.attacks[2], s.member, s.heldout);
  std::stringstream buf;
  write_scores_csv(e.queries, buf);
  EXPECT_EQ(buf.str().substr(0, buf.str().find('\n')), "x_id,label,kind,t,p,value,queries_used");
  const auto back = read_scores_csv(buf);
  ASSERT_EQ(back.size(), e.queries.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].score.value, e.queries[i].score.value);
    EXPECT_EQ(back[i].member, e.queries[i].member);
    EXPECT_EQ(back[i].score.queries_used, 12u);
  }
}

TEST(Files, MalformedScoresCsv) {
  std::stringstream bad("x_id,label,kind,t,p,value,queries_used\n0,1,sima,20,4,abc,1\n");
  EXPECT_SIMALAB_ERROR(read_scores_csv(bad), ErrorKind::kIo);
  std::stringstream header("nope\n");
  EXPECT_SIMALAB_ERROR(read_scores_csv(header), ErrorKind::kIo);
}

TEST(Files, ReportJsonKeys) {
  const std::vector<double> mem{1, 2}, non{3, 4};
  const auto j = report_json(make_report(LabeledScores::from(mem, non), {"sima", 3, 4.0, 1}));
  for (const char* k : {"asr", "auc", "tpr_at_1fpr", "n_member", "n_nonmember", "attack", "t",
                        "p", "seed"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
  EXPECT_EQ(j["auc"].get<double>(), 100.0);
}

// ---- end to end ----

TEST(Experiment, RunWritesExpectedLayout) {
  const fs::path out = scratch("layout");
  Experiment ex(parse_config(minimal_doc()), out, 1);
  ex.run();
  for (const char* f : {"data/member.csv", "data/heldout.csv", "data/ood.csv", "scores/0-sima.csv",
                        "scores/1-loss.csv", "scores/2-secmi.csv", "reports/0-sima.json",
                        "reports/0-sima-roc.csv", "reports/summary.csv", "sweeps/bottleneck.csv",
                        "sweeps/bottleneck.json", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const Json manifest = Json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(manifest["command"], "run");
  EXPECT_EQ(manifest["seed"], 7);
  EXPECT_TRUE(manifest["files"].is_array() || manifest["files"].is_object());
  fs::remove_all(out);
}

TEST(Experiment, RepeatedRunIsByteIdentical) {
  const fs::path a = scratch("repro-a"), b = scratch("repro-b");
  Experiment(parse_config(minimal_doc()), a, 1).run();
  Experiment(parse_config(minimal_doc()), b, 1).run();
  const auto ta = tree(a), tb = tree(b);
  EXPECT_EQ(ta, tb);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Experiment, ThreadCountDoesNotChangeOutputs) {
  const fs::path a = scratch("threads-a"), b = scratch("threads-b");
  Experiment(parse_config(minimal_doc()), a, 1).run();
  Experiment(parse_config(minimal_doc()), b, 3).run();
  EXPECT_EQ(tree(a), tree(b));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Experiment, DifferentSeedChangesScores) {
  const fs::path a = scratch("seed-a"), b = scratch("seed-b");
  auto doc = minimal_doc();
  Experiment(parse_config(doc), a, 1).attack();
  doc["seed"] = 99;
  Experiment(parse_config(doc), b, 1).attack();
  EXPECT_NE(slurp(a / "scores/0-sima.csv"), slurp(b / "scores/0-sima.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Experiment, ReportFromScoresMatchesAttack) {
  const fs::path out = scratch("report");
  Experiment ex(parse_config(minimal_doc()), out, 1);
  const auto reports = ex.attack();
  const Report r = Experiment::report_from_scores(out / "scores/0-sima.csv");
  EXPECT_EQ(r.auc, reports[0].auc);
  EXPECT_EQ(r.asr, reports[0].asr);
  EXPECT_EQ(r.n_member, 30u);
  fs::remove_all(out);
}

TEST(Experiment, SweepSkipsTimestepsAnAttackCannotUse) {
  auto doc = minimal_doc();
  doc["model"] = Json{{"type", "mixture"}};
  doc["sweep"] = Json{{"t_min", 0}, {"t_max", 1000}, {"t_step", 500}};
  const fs::path out = scratch("sweep-skip");
  Experiment ex(parse_config(doc), out, 1);
  const auto results = ex.sweep_t();
  ASSERT_EQ(results.size(), 3u);
  EXPECT_EQ(results[0].rows.front().t, 0);     // sima keeps t = 0
  EXPECT_EQ(results[1].rows.front().t, 500);   // loss starts at 500
  EXPECT_EQ(results[1].rows.back().t, 1000);
  EXPECT_EQ(results[2].rows.size(), 1u);       // secmi drops 0 and T
  fs::remove_all(out);
}

TEST(Experiment, TrainNeedsMlp) {
  Experiment ex(parse_config(minimal_doc()), scratch("train"), 1);
  EXPECT_SIMALAB_ERROR(ex.train_nn(), ErrorKind::kConfig);
}

// ---- command line ----

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult cli(const std::string& args) {
  const fs::path dir = fs::temp_directory_path();
  const fs::path o = dir / "simalab-cli.out", e = dir / "simalab-cli.err";
  const std::string cmd =
      std::string(SIMALAB_CLI_PATH) + " " + args + " >" + o.string() + " 2>" + e.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(o);
  r.err = slurp(e);
  return r;
}

fs::path write_config(const std::string& name, const Json& doc) {
  const fs::path p = fs::temp_directory_path() / ("simalab-" + name + ".json");
  write_text_file(p, doc.dump(2));
  return p;
}

TEST(Cli, GenDataSucceeds) {
  const fs::path out = scratch("cli-gen");
  const auto r = cli("gen-data --config " + write_config("gen", minimal_doc()).string() +
                     " --out " + out.string() + " --seed 3 --threads 1");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("ok: command=gen-data"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "data/member.csv"));
  const Json manifest = Json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(manifest["seed"], 3);
  fs::remove_all(out);
}

TEST(Cli, SeedFlagMatchesConfigSeed) {
  const fs::path a = scratch("cli-seed-a"), b = scratch("cli-seed-b");
  auto doc = minimal_doc();
  doc["seed"] = 3;
  ASSERT_EQ(cli("attack --config " + write_config("s3", doc).string() + " --out " + a.string()).code, 0);
  ASSERT_EQ(cli("attack --config " + write_config("s7", minimal_doc()).string() + " --seed 3 --out " +
                b.string()).code, 0);
  EXPECT_EQ(slurp(a / "scores/0-sima.csv"), slurp(b / "scores/0-sima.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, ReportScoresPrintsJson) {
  const fs::path out = scratch("cli-report");
  ASSERT_EQ(cli("attack --config " + write_config("rep", minimal_doc()).string() + " --out " +
                out.string()).code, 0);
  const auto r = cli("report --scores " + (out / "scores/0-sima.csv").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_TRUE(j.contains("auc"));
  fs::remove_all(out);
}

TEST(Cli, ErrorsAreMachineReadable) {
  const auto missing = cli("attack --config /nonexistent/cfg.json");
  EXPECT_NE(missing.code, 0);
  EXPECT_EQ(missing.err.rfind("error: kind=io ", 0), 0u) << missing.err;

  auto doc = minimal_doc();
  doc["bogus"] = 1;
  const auto bad = cli("gen-data --config " + write_config("bad", doc).string());
  EXPECT_EQ(bad.code, 2);
  EXPECT_EQ(bad.err.rfind("error: kind=config ", 0), 0u) << bad.err;
  EXPECT_NE(bad.err.find("bogus"), std::string::npos);

  const auto usage = cli("frobnicate");
  EXPECT_EQ(usage.code, 2);
  EXPECT_EQ(usage.err.rfind("error: kind=usage ", 0), 0u) << usage.err;

  const auto threads = cli("gen-data --config x.json --threads 0");
  EXPECT_EQ(threads.code, 2);

  const auto no_sweep = cli("sweep-bottleneck --config " + write_config("nob", [] {
                              auto d = minimal_doc();
                              d.erase("bottleneck");
                              return d;
                            }()).string() + " --out " + scratch("cli-nob").string());
  EXPECT_EQ(no_sweep.code, 2);
  EXPECT_EQ(no_sweep.err.rfind("error: kind=config ", 0), 0u) << no_sweep.err;
}

}  // namespace
}  // namespace simalab
