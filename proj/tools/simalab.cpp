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

// simalab command line. On failure prints one line to stderr:
//   error: kind=<kind> message="<text>"
// and exits with 2 for usage/config errors, 1 otherwise.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "simalab/simalab.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required = true) {
  auto* c = cmd->add_option("--config", f.config, "experiment config (JSON)");
  if (config_required) c->required();
  cmd->add_option("--seed", f.seed, "master seed, overrides the config");
  cmd->add_option("--out", f.out, "output directory, overrides the config");
  cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
}

simalab::Experiment open_experiment(const CommonFlags& f) {
  std::ifstream in(f.config);
  simalab::require(in.good(), simalab::ErrorKind::kIo, "cannot read config " + f.config);
  simalab::Json doc;
  try {
    doc = simalab::Json::parse(in);
  } catch (const simalab::Json::parse_error& e) {
    simalab::fail(simalab::ErrorKind::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  if (f.seed && doc.is_object()) doc["seed"] = *f.seed;
  simalab::ExperimentConfig cfg = simalab::parse_config(doc);
  const std::string out = f.out ? *f.out : cfg.output;
  const int threads = f.threads ? *f.threads : cfg.threads;
  return simalab::Experiment(std::move(cfg), out, threads);
}

std::string escape(const std::string& s) {
  std::string r;
  for (char c : s) {
    if (c == '"' || c == '\\') r.push_back('\\');
    if (c == '\n') {
      r += "\\n";
      continue;
    }
    r.push_back(c);
  }
  return r;
}

int report_error(const std::string& kind, const std::string& message, int code) {
  std::cerr << "error: kind=" << kind << " message=\"" << escape(message) << "\"\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simalab: membership inference experiments on diffusion score models"};
  app.require_subcommand(1);

  CommonFlags gen_f, train_f, attack_f, sweep_f, bneck_f, report_f, run_f;
  std::string scores_path;

  auto* gen = app.add_subcommand("gen-data", "sample member, held-out and OOD point sets");
  add_common(gen, gen_f);
  auto* train = app.add_subcommand("train-nn", "train the MLP denoiser on the member set");
  add_common(train, train_f);
  auto* attack = app.add_subcommand("attack", "score every query with each configured attack");
  add_common(attack, attack_f);
  auto* sweep = app.add_subcommand("sweep-t", "sweep the attack timestep and p");
  add_common(sweep, sweep_f);
  auto* bneck = app.add_subcommand("sweep-bottleneck", "sweep the encoder noise level");
  add_common(bneck, bneck_f);
  auto* report = app.add_subcommand("report", "recompute reports from score CSVs");
  add_common(report, report_f, false);
  report->add_option("--scores", scores_path, "single scores CSV; prints its report as JSON");
  auto* run = app.add_subcommand("run", "every stage the config asks for");
  add_common(run, run_f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what(), 2);
  }

  try {
    std::string done;
    std::string out_dir;
    if (*gen) {
      auto ex = open_experiment(gen_f);
      ex.gen_data();
      ex.write_manifest("gen-data");
      done = "gen-data";
      out_dir = ex.out().string();
    } else if (*train) {
      auto ex = open_experiment(train_f);
      ex.gen_data();
      ex.train_nn();
      ex.write_manifest("train-nn");
      done = "train-nn";
      out_dir = ex.out().string();
    } else if (*attack) {
      auto ex = open_experiment(attack_f);
      ex.gen_data();
      ex.attack();
      ex.write_manifest("attack");
      done = "attack";
      out_dir = ex.out().string();
    } else if (*sweep) {
      auto ex = open_experiment(sweep_f);
      ex.gen_data();
      const auto results = ex.sweep_t();
      for (const auto& r : results) {
        const auto& b = r.best();
        std::cout << "best: attack=" << simalab::attack_name(b.kind) << " t=" << b.t
                  << " p=" << simalab::format_double(b.p)
                  << " auc=" << simalab::format_double(b.auc) << "\n";
      }
      ex.write_manifest("sweep-t");
      done = "sweep-t";
      out_dir = ex.out().string();
    } else if (*bneck) {
      auto ex = open_experiment(bneck_f);
      ex.gen_data();
      ex.sweep_bottleneck();
      ex.write_manifest("sweep-bottleneck");
      done = "sweep-bottleneck";
      out_dir = ex.out().string();
    } else if (*report) {
      if (!scores_path.empty()) {
        const auto r = simalab::Experiment::report_from_scores(scores_path);
        std::cout << simalab::report_json(r).dump(2) << "\n";
        return 0;
      }
      simalab::require(!report_f.config.empty(), simalab::ErrorKind::kConfig,
                       "report needs --config or --scores");
      auto ex = open_experiment(report_f);
      ex.report();
      ex.write_manifest("report");
      done = "report";
      out_dir = ex.out().string();
    } else if (*run) {
      auto ex = open_experiment(run_f);
      ex.run();
      done = "run";
      out_dir = ex.out().string();
    }
    std::cout << "ok: command=" << done << " out=" << out_dir << "\n";
    return 0;
  } catch (const simalab::DivergenceError& e) {
    std::cerr << "error: kind=divergence step=" << e.step() << " message=\""
              << escape(e.what()) << "\"\n";
    return 1;
  } catch (const simalab::Error& e) {
    const int code = e.kind() == simalab::ErrorKind::kConfig ? 2 : 1;
    return report_error(std::string(simalab::error_kind_name(e.kind())), e.what(), code);
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 1);
  }
}
