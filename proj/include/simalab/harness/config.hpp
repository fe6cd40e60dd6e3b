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

// Experiment configuration: one JSON document, parsed strictly. Unknown keys,
// wrong types and inconsistent blocks are config errors naming the field path
// (e.g. "data.split.n_member"). The schema is described in README.md.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "simalab/attacks.hpp"
#include "simalab/bottleneck.hpp"
#include "simalab/denoiser.hpp"
#include "simalab/error.hpp"
#include "simalab/rng.hpp"
#include "simalab/schedule.hpp"
#include "simalab/synthdata.hpp"

namespace simalab {

using Json = nlohmann::json;

// Reads fields of one JSON object and rejects any key nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    require(obj_.is_object(), ErrorKind::kConfig, where() + " must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  const Json& at(const std::string& key) {
    seen_.insert(key);
    require(obj_.contains(key), ErrorKind::kConfig, field(key) + " is required");
    return obj_.at(key);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const std::string& path() const { return path_; }

  double number(const std::string& key) {
    const Json& v = at(key);
    require(v.is_number(), ErrorKind::kConfig, field(key) + " must be a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  std::int64_t integer(const std::string& key) {
    const Json& v = at(key);
    require(v.is_number_integer(), ErrorKind::kConfig, field(key) + " must be an integer");
    return v.get<std::int64_t>();
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    return has(key) ? integer(key) : fallback;
  }

  std::size_t count(const std::string& key) {
    const std::int64_t v = integer(key);
    require(v >= 0, ErrorKind::kConfig, field(key) + " must be >= 0");
    return static_cast<std::size_t>(v);
  }
  std::size_t count(const std::string& key, std::size_t fallback) {
    return has(key) ? count(key) : fallback;
  }

  std::uint64_t seed(const std::string& key) {
    const Json& v = at(key);
    require(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0),
            ErrorKind::kConfig, field(key) + " must be a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    require(v.is_boolean(), ErrorKind::kConfig, field(key) + " must be a boolean");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const Json& v = at(key);
    require(v.is_string(), ErrorKind::kConfig, field(key) + " must be a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : fallback;
  }

  std::vector<double> numbers(const std::string& key) {
    const Json& v = at(key);
    require(v.is_array(), ErrorKind::kConfig, field(key) + " must be an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      require(v[i].is_number(), ErrorKind::kConfig,
              field(key) + "[" + std::to_string(i) + "] must be a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  ObjectReader object(const std::string& key) { return ObjectReader(at(key), field(key)); }

  // Call after reading every field.
  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      require(seen_.count(it.key()) > 0, ErrorKind::kConfig,
              "unknown key " + field(it.key()));
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  const Json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

enum class DataKind { kMixture, kRing };
enum class ModelKind { kEmpirical, kMixture, kMlp };

struct DataConfig {
  DataKind kind = DataKind::kMixture;
  MixtureSpec mixture;
  double ring_radius = 1.0;
  double ring_noise_sd = 0.0;
  SplitSpec split;

  std::size_t dim() const { return kind == DataKind::kRing ? 2 : mixture.dim(); }

  // Typical coordinate scale, used to express bottleneck noise levels.
  double scale() const {
    if (kind == DataKind::kRing) {
      return std::sqrt(0.5 * ring_radius * ring_radius + ring_noise_sd * ring_noise_sd);
    }
    return mixture.scale();
  }
};

struct ModelConfig {
  ModelKind kind = ModelKind::kEmpirical;
  std::vector<std::size_t> widths{64, 64};
  TrainConfig train;
};

struct SweepConfig {
  int t_min = 1;
  int t_max = 300;
  int t_step = 1;
  std::vector<double> p_values;  // empty: each attack's own p
  std::size_t histogram_bins = 30;

  std::vector<int> timesteps() const {
    std::vector<int> ts;
    for (int t = t_min; t <= t_max; t += t_step) ts.push_back(t);
    return ts;
  }
};

struct BottleneckConfig {
  std::vector<double> gammas;
  bool scale_by_data = true;
  std::size_t code_dim = 0;
  ProjectionKind projection = ProjectionKind::kRandomOrthonormal;
  AttackConfig attack = AttackConfig::defaults(AttackKind::kSimA);
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  NoiseSchedule schedule = NoiseSchedule::ddpm_default();
  Json schedule_json = Json{{"type", "linear"}, {"T", 1000}, {"beta_start", 1e-4}, {"beta_end", 0.02}};
  DataConfig data;
  ModelConfig model;
  std::vector<AttackConfig> attacks;
  std::optional<SweepConfig> sweep;
  std::optional<BottleneckConfig> bottleneck;
  std::string output = "out";
  int threads = 1;
  Json source;  // the parsed document, for hashing and the manifest
};

// Sub-seeds derived from the master seed.
enum class SeedRole : std::uint64_t { kSplit = 1, kInit = 2, kTrain = 3, kAttack = 4, kEncoder = 5 };

inline std::uint64_t role_seed(std::uint64_t master, SeedRole role, std::uint64_t index = 0) {
  return derive_seed(master, static_cast<std::uint64_t>(role) * 0x10000ull + index);
}

inline NoiseSchedule parse_schedule(ObjectReader r) {
  const std::string type = r.string("type");
  NoiseSchedule s = NoiseSchedule::ddpm_default();
  if (type == "linear") {
    const std::int64_t steps = r.integer("T");
    require(steps >= 1 && steps <= 1000000, ErrorKind::kConfig, r.field("T") + " must be in 1..1e6");
    s = NoiseSchedule::linear(static_cast<int>(steps), r.number("beta_start"), r.number("beta_end"));
  } else if (type == "explicit") {
    s = NoiseSchedule::explicit_betas(r.numbers("betas"));
  } else {
    fail(ErrorKind::kConfig, r.field("type") + " must be \"linear\" or \"explicit\"");
  }
  r.finish();
  return s;
}

inline MixtureSpec parse_mixture(const Json& components, const std::string& path) {
  require(components.is_array() && !components.empty(), ErrorKind::kConfig,
          path + " must be a nonempty array");
  MixtureSpec spec;
  for (std::size_t j = 0; j < components.size(); ++j) {
    ObjectReader c(components[j], path + "[" + std::to_string(j) + "]");
    MixtureComponent comp;
    comp.weight = c.number("weight");
    comp.mean = c.numbers("mean");
    comp.variance = c.numbers("variance");
    c.finish();
    spec.components.push_back(std::move(comp));
  }
  spec.validate();
  return spec;
}

inline SplitSpec parse_split(ObjectReader r, std::uint64_t master_seed) {
  SplitSpec s;
  s.n_member = r.count("n_member");
  s.n_heldout = r.count("n_heldout");
  s.n_ood = r.count("n_ood", 0);
  if (r.has("ood_shift")) s.ood_shift = r.numbers("ood_shift");
  s.seed = r.has("seed") ? r.seed("seed") : role_seed(master_seed, SeedRole::kSplit);
  r.finish();
  require(s.n_member >= 1, ErrorKind::kConfig, r.field("n_member") + " must be >= 1");
  return s;
}

inline AttackConfig parse_attack(ObjectReader r, std::uint64_t default_seed) {
  AttackConfig a = AttackConfig::defaults(parse_attack_kind(r.string("kind")));
  if (a.uses_timestep()) {
    a.t = static_cast<int>(r.integer("t", a.t));
  } else {
    require(!r.has("t"), ErrorKind::kConfig, r.field("t") + " is not used by pfami");
  }
  a.p = r.number("p", a.p);
  a.mc_samples = static_cast<int>(r.integer("mc_samples", a.mc_samples));
  a.seed = r.has("seed") ? r.seed("seed") : default_seed;
  a.pia_first_step_proxy = r.boolean("pia_first_step_proxy", a.pia_first_step_proxy);
  a.perturb_sd = r.number("perturb_sd", a.perturb_sd);
  a.pfami_t_min = static_cast<int>(r.integer("pfami_t_min", a.pfami_t_min));
  a.pfami_t_max = static_cast<int>(r.integer("pfami_t_max", a.pfami_t_max));
  r.finish();
  try {
    a.validate();
  } catch (const Error& e) {
    fail(ErrorKind::kConfig, r.path() + ": " + e.what());
  }
  return a;
}

inline ExperimentConfig parse_config(const Json& doc) {
  ExperimentConfig cfg;
  cfg.source = doc;
  ObjectReader root(doc, "");
  cfg.seed = root.has("seed") ? root.seed("seed") : 0;
  cfg.output = root.string("output", cfg.output);
  cfg.threads = static_cast<int>(root.integer("threads", 1));
  require(cfg.threads >= 1, ErrorKind::kConfig, "threads must be >= 1");

  if (root.has("schedule")) {
    cfg.schedule_json = root.at("schedule");
    cfg.schedule = parse_schedule(root.object("schedule"));
  }

  {
    ObjectReader data = root.object("data");
    const std::string type = data.string("type");
    if (type == "mixture") {
      cfg.data.kind = DataKind::kMixture;
      cfg.data.mixture = parse_mixture(data.at("components"), data.field("components"));
    } else if (type == "ring") {
      cfg.data.kind = DataKind::kRing;
      cfg.data.ring_radius = data.number("radius");
      cfg.data.ring_noise_sd = data.number("noise_sd", 0.0);
      require(cfg.data.ring_radius > 0.0, ErrorKind::kConfig, data.field("radius") + " must be > 0");
      require(cfg.data.ring_noise_sd >= 0.0, ErrorKind::kConfig,
              data.field("noise_sd") + " must be >= 0");
    } else {
      fail(ErrorKind::kConfig, data.field("type") + " must be \"mixture\" or \"ring\"");
    }
    cfg.data.split = parse_split(data.object("split"), cfg.seed);
    require(cfg.data.split.ood_shift.empty() || cfg.data.split.ood_shift.size() == cfg.data.dim(),
            ErrorKind::kConfig, "data.split.ood_shift must have one entry per dimension");
    data.finish();
  }

  {
    ObjectReader model = root.object("model");
    const std::string type = model.string("type");
    if (type == "empirical") {
      cfg.model.kind = ModelKind::kEmpirical;
    } else if (type == "mixture") {
      cfg.model.kind = ModelKind::kMixture;
      require(cfg.data.kind == DataKind::kMixture, ErrorKind::kConfig,
              "model.type \"mixture\" needs data.type \"mixture\"");
    } else if (type == "mlp") {
      cfg.model.kind = ModelKind::kMlp;
      if (model.has("widths")) {
        cfg.model.widths.clear();
        for (double w : model.numbers("widths")) {
          require(w >= 1 && w == std::floor(w), ErrorKind::kConfig,
                  "model.widths entries must be positive integers");
          cfg.model.widths.push_back(static_cast<std::size_t>(w));
        }
        require(!cfg.model.widths.empty(), ErrorKind::kConfig, "model.widths must be nonempty");
      }
      cfg.model.train.seed = role_seed(cfg.seed, SeedRole::kTrain);
      if (model.has("train")) {
        ObjectReader tr = model.object("train");
        auto& t = cfg.model.train;
        t.steps = tr.integer("steps", t.steps);
        t.batch_size = tr.count("batch_size", t.batch_size);
        t.learning_rate = tr.number("learning_rate", t.learning_rate);
        t.momentum = tr.number("momentum", t.momentum);
        if (tr.has("seed")) t.seed = tr.seed("seed");
        tr.finish();
      }
      try {
        cfg.model.train.validate();
      } catch (const Error& e) {
        fail(ErrorKind::kConfig, e.what());
      }
    } else {
      fail(ErrorKind::kConfig, "model.type must be \"empirical\", \"mixture\" or \"mlp\"");
    }
    model.finish();
  }

  if (root.has("attacks")) {
    const Json& list = root.at("attacks");
    require(list.is_array(), ErrorKind::kConfig, "attacks must be an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      cfg.attacks.push_back(parse_attack(ObjectReader(list[i], "attacks[" + std::to_string(i) + "]"),
                                         role_seed(cfg.seed, SeedRole::kAttack, i)));
    }
  }

  if (root.has("sweep")) {
    ObjectReader s = root.object("sweep");
    SweepConfig sw;
    sw.t_min = static_cast<int>(s.integer("t_min", sw.t_min));
    sw.t_max = static_cast<int>(s.integer("t_max", sw.t_max));
    sw.t_step = static_cast<int>(s.integer("t_step", sw.t_step));
    if (s.has("p")) sw.p_values = s.numbers("p");
    sw.histogram_bins = s.count("histogram_bins", sw.histogram_bins);
    s.finish();
    require(sw.t_min >= 0 && sw.t_min <= sw.t_max, ErrorKind::kConfig,
            "sweep needs 0 <= t_min <= t_max");
    require(sw.t_max <= cfg.schedule.steps(), ErrorKind::kConfig,
            "sweep.t_max exceeds the schedule length");
    require(sw.t_step >= 1, ErrorKind::kConfig, "sweep.t_step must be >= 1");
    require(sw.histogram_bins >= 1, ErrorKind::kConfig, "sweep.histogram_bins must be >= 1");
    for (double p : sw.p_values) require(p > 0.0, ErrorKind::kConfig, "sweep.p entries must be > 0");
    require(sw.t_min >= 1 || cfg.model.kind != ModelKind::kEmpirical, ErrorKind::kConfig,
            "sweep.t_min = 0 needs a model that predicts at t = 0 (mixture or mlp)");
    cfg.sweep = sw;
  }

  if (root.has("bottleneck")) {
    ObjectReader b = root.object("bottleneck");
    BottleneckConfig bc;
    bc.gammas = b.numbers("gammas");
    require(!bc.gammas.empty(), ErrorKind::kConfig, "bottleneck.gammas must be nonempty");
    for (double g : bc.gammas) require(g >= 0.0, ErrorKind::kConfig, "bottleneck.gammas must be >= 0");
    bc.scale_by_data = b.boolean("scale_by_data", bc.scale_by_data);
    bc.code_dim = b.count("code_dim", 0);
    require(bc.code_dim <= cfg.data.dim(), ErrorKind::kConfig,
            "bottleneck.code_dim must not exceed the data dimension");
    const std::string proj = b.string("projection", "orthonormal");
    if (proj == "identity") {
      bc.projection = ProjectionKind::kIdentity;
      require(bc.code_dim == 0 || bc.code_dim == cfg.data.dim(), ErrorKind::kConfig,
              "bottleneck.projection \"identity\" needs code_dim = d");
    } else if (proj == "orthonormal") {
      bc.projection = ProjectionKind::kRandomOrthonormal;
    } else {
      fail(ErrorKind::kConfig, "bottleneck.projection must be \"identity\" or \"orthonormal\"");
    }
    if (b.has("attack")) {
      bc.attack = parse_attack(b.object("attack"), role_seed(cfg.seed, SeedRole::kAttack, 0xB0));
    } else {
      bc.attack.seed = role_seed(cfg.seed, SeedRole::kAttack, 0xB0);
    }
    b.finish();
    cfg.bottleneck = bc;
  }

  root.finish();

  for (std::size_t i = 0; i < cfg.attacks.size(); ++i) {
    const auto& a = cfg.attacks[i];
    const std::string where = "attacks[" + std::to_string(i) + "].t";
    if (!a.uses_timestep()) continue;
    const int hi = a.kind == AttackKind::kSecMI ? cfg.schedule.steps() - 1 : cfg.schedule.steps();
    require(a.t <= hi, ErrorKind::kConfig, where + " exceeds the schedule range");
    const bool clean_ok = cfg.model.kind != ModelKind::kEmpirical && a.kind == AttackKind::kSimA;
    require(a.t >= 1 || (a.t == 0 && clean_ok), ErrorKind::kConfig,
            where + " must be >= 1 for this model and attack");
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::kIo, "cannot read config " + path);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

// FNV-1a over the canonical (key-sorted) dump of the config without its
// output directory and thread count, which do not affect results.
inline std::string config_hash(const Json& doc) {
  Json science = doc;
  if (science.is_object()) {
    science.erase("output");
    science.erase("threads");
  }
  const std::string text = science.dump();
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace simalab
