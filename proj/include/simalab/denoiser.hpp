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

// A small time-conditioned MLP noise predictor trained by denoising score
// matching.
//
// Input is [x, sin(w_j t/T), cos(w_j t/T)] with w_j = (pi/2) 2^j, j < 8, so
// the first layer sees d + 16 features. Hidden layers use tanh; the output
// layer is affine. Forward and backward passes are written out by hand.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "simalab/error.hpp"
#include "simalab/pointset.hpp"
#include "simalab/rng.hpp"
#include "simalab/schedule.hpp"
#include "simalab/score_model.hpp"

namespace simalab {

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

class MlpDenoiser final : public ScoreModel {
 public:
  static constexpr int kTimeFrequencies = 8;
  static constexpr int kTimeFeatures = 2 * kTimeFrequencies;

  MlpDenoiser(std::size_t dim, std::vector<DenseLayer> layers, NoiseSchedule schedule)
      : dim_(dim), layers_(std::move(layers)), schedule_(std::move(schedule)) {
    require(dim_ >= 1, ErrorKind::kConfig, "denoiser dimension must be >= 1");
    require(layers_.size() >= 2, ErrorKind::kConfig, "denoiser needs at least one hidden layer");
    Eigen::Index in = static_cast<Eigen::Index>(input_dim());
    for (const auto& layer : layers_) {
      require(layer.weight.cols() == in && layer.bias.size() == layer.weight.rows(),
              ErrorKind::kShape, "denoiser layer shapes do not chain");
      in = layer.weight.rows();
    }
    require(in == static_cast<Eigen::Index>(dim_), ErrorKind::kShape,
            "denoiser output width must equal the data dimension");
  }

  std::size_t dim() const override { return dim_; }
  std::size_t input_dim() const { return dim_ + kTimeFeatures; }
  const NoiseSchedule& schedule() const override { return schedule_; }
  bool supports_clean_timestep() const override { return true; }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  void time_features(int t, std::span<double> out) const {
    const double tau = static_cast<double>(t) / schedule_.steps();
    for (int j = 0; j < kTimeFrequencies; ++j) {
      const double w = 0.5 * std::numbers::pi * std::ldexp(1.0, j);
      out[static_cast<std::size_t>(j)] = std::sin(w * tau);
      out[static_cast<std::size_t>(j + kTimeFrequencies)] = std::cos(w * tau);
    }
  }

  // Column b of the result is the network input for (x_b, t_b).
  Eigen::MatrixXd make_inputs(const Eigen::MatrixXd& points, std::span<const int> timesteps) const {
    const Eigen::Index batch = points.cols();
    Eigen::MatrixXd in(static_cast<Eigen::Index>(input_dim()), batch);
    in.topRows(static_cast<Eigen::Index>(dim_)) = points;
    std::vector<double> feats(kTimeFeatures);
    for (Eigen::Index b = 0; b < batch; ++b) {
      time_features(timesteps[static_cast<std::size_t>(b)], feats);
      for (int j = 0; j < kTimeFeatures; ++j) in(static_cast<Eigen::Index>(dim_) + j, b) = feats[static_cast<std::size_t>(j)];
    }
    return in;
  }

  // activations[0] is the input; activations[l] the output of layer l.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs,
                          std::vector<Eigen::MatrixXd>* activations = nullptr) const {
    Eigen::MatrixXd a = inputs;
    if (activations) {
      activations->clear();
      activations->push_back(a);
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Eigen::MatrixXd z = layers_[l].weight * a;
      z.colwise() += layers_[l].bias;
      if (l + 1 < layers_.size()) z = z.array().tanh().matrix();
      a = std::move(z);
      if (activations) activations->push_back(a);
    }
    return a;
  }

  void eps_hat_into(std::span<const double> x, int t, std::span<double> out) const override {
    check_query(x, out);
    schedule_.alpha_bar_or_clean(t);
    Eigen::MatrixXd point(static_cast<Eigen::Index>(dim_), 1);
    for (std::size_t k = 0; k < dim_; ++k) point(static_cast<Eigen::Index>(k), 0) = x[k];
    const int ts[1] = {t};
    const Eigen::MatrixXd y = forward(make_inputs(point, ts));
    for (std::size_t k = 0; k < dim_; ++k) out[k] = y(static_cast<Eigen::Index>(k), 0);
  }

  // Parameters in layer order: weight (column-major, Eigen storage), then bias.
  std::vector<double> flat_parameters() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto& l : layers_) {
      out.insert(out.end(), l.weight.data(), l.weight.data() + l.weight.size());
      out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
    }
    return out;
  }

  void set_flat_parameters(std::span<const double> values) {
    require(values.size() == parameter_count(), ErrorKind::kShape, "parameter count mismatch");
    std::size_t pos = 0;
    for (auto& l : layers_) {
      std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), l.weight.size(), l.weight.data());
      pos += static_cast<std::size_t>(l.weight.size());
      std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), l.bias.size(), l.bias.data());
      pos += static_cast<std::size_t>(l.bias.size());
    }
  }

 private:
  std::size_t dim_;
  std::vector<DenseLayer> layers_;
  NoiseSchedule schedule_;
};

// Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), drawn from one
// stream per layer.
inline MlpDenoiser init_denoiser(std::size_t dim, const std::vector<std::size_t>& widths,
                                 std::uint64_t seed, NoiseSchedule schedule) {
  require(dim >= 1, ErrorKind::kConfig, "denoiser dimension must be >= 1");
  require(!widths.empty(), ErrorKind::kConfig, "model.widths must be nonempty");
  std::vector<std::size_t> sizes{dim + MlpDenoiser::kTimeFeatures};
  for (std::size_t w : widths) {
    require(w >= 1, ErrorKind::kConfig, "model.widths entries must be >= 1");
    sizes.push_back(w);
  }
  sizes.push_back(dim);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(sizes[l]);
    const auto out = static_cast<Eigen::Index>(sizes[l + 1]);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    RandomStream rng(seed, stream_id(StreamTag::kInit, {l}));
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = bound * (2.0 * rng.uniform() - 1.0);
    }
    for (Eigen::Index r = 0; r < out; ++r) layer.bias(r) = bound * (2.0 * rng.uniform() - 1.0);
    layers.push_back(std::move(layer));
  }
  return MlpDenoiser(dim, std::move(layers), std::move(schedule));
}

struct Gradients {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;

  // Same ordering as MlpDenoiser::flat_parameters.
  std::vector<double> flatten() const {
    std::vector<double> out;
    for (std::size_t l = 0; l < weight.size(); ++l) {
      out.insert(out.end(), weight[l].data(), weight[l].data() + weight[l].size());
      out.insert(out.end(), bias[l].data(), bias[l].data() + bias[l].size());
    }
    return out;
  }
};

struct DsmLoss {
  double loss = 0.0;
  std::vector<double> per_row;  // |eps - eps_hat|^2 for each batch row
  Gradients gradients;
};

// Denoising score-matching loss for explicit (x0, t, eps) triples:
//   L = (1/B) sum_b |eps_b - eps_hat(sqrt(abar) x0_b + sigma eps_b, t_b)|^2
// x0 and noise are d x B.
inline DsmLoss dsm_loss(const MlpDenoiser& model, const Eigen::MatrixXd& x0,
                        std::span<const int> timesteps, const Eigen::MatrixXd& noise) {
  const Eigen::Index batch = x0.cols();
  require(batch >= 1, ErrorKind::kShape, "dsm_loss needs a nonempty batch");
  require(noise.rows() == x0.rows() && noise.cols() == batch &&
              static_cast<Eigen::Index>(timesteps.size()) == batch,
          ErrorKind::kShape, "dsm_loss batch shapes disagree");
  const auto& sched = model.schedule();
  Eigen::MatrixXd noised(x0.rows(), batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const int t = timesteps[static_cast<std::size_t>(b)];
    const double ra = std::sqrt(sched.alpha_bar(t));
    const double s = sched.sigma(t);
    noised.col(b) = ra * x0.col(b) + s * noise.col(b);
  }
  std::vector<Eigen::MatrixXd> acts;
  const Eigen::MatrixXd out = model.forward(model.make_inputs(noised, timesteps), &acts);
  const Eigen::MatrixXd resid = out - noise;

  DsmLoss result;
  result.per_row.resize(static_cast<std::size_t>(batch));
  for (Eigen::Index b = 0; b < batch; ++b) {
    result.per_row[static_cast<std::size_t>(b)] = resid.col(b).squaredNorm();
  }
  result.loss = resid.squaredNorm() / static_cast<double>(batch);

  const auto& layers = model.layers();
  const std::size_t depth = layers.size();
  result.gradients.weight.resize(depth);
  result.gradients.bias.resize(depth);
  Eigen::MatrixXd delta = (2.0 / static_cast<double>(batch)) * resid;
  for (std::size_t l = depth; l-- > 0;) {
    result.gradients.weight[l] = delta * acts[l].transpose();
    result.gradients.bias[l] = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = layers[l].weight.transpose() * delta;
    delta = (back.array() * (1.0 - acts[l].array().square())).matrix();
  }
  return result;
}

// Draws t ~ U{1..T} and eps ~ N(0, I) for each row from streams keyed by
// (seed, row).
inline DsmLoss dsm_loss(const MlpDenoiser& model, const PointSet& batch, std::uint64_t seed) {
  require(!batch.empty(), ErrorKind::kShape, "dsm_loss needs a nonempty batch");
  require(batch.dim() == model.dim(), ErrorKind::kShape, "batch dimension mismatch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  const auto d = static_cast<Eigen::Index>(batch.dim());
  Eigen::MatrixXd x0(d, n), noise(d, n);
  std::vector<int> ts(static_cast<std::size_t>(n));
  for (Eigen::Index b = 0; b < n; ++b) {
    RandomStream rng(seed, stream_id(StreamTag::kTrainBatch, {static_cast<std::uint64_t>(b)}));
    ts[static_cast<std::size_t>(b)] =
        static_cast<int>(rng.uniform_int(1, model.schedule().steps()));
    auto row = batch.row(static_cast<std::size_t>(b));
    for (Eigen::Index k = 0; k < d; ++k) {
      x0(k, b) = row[static_cast<std::size_t>(k)];
      noise(k, b) = rng.normal();
    }
  }
  return dsm_loss(model, x0, ts, noise);
}

struct TrainConfig {
  std::int64_t steps = 200000;
  std::size_t batch_size = 64;
  double learning_rate = 0.01;
  double momentum = 0.9;  // 0 gives plain SGD
  std::uint64_t seed = 0;

  void validate() const {
    require(steps >= 0, ErrorKind::kConfig, "train.steps must be >= 0");
    require(batch_size >= 1, ErrorKind::kConfig, "train.batch_size must be >= 1");
    require(learning_rate >= 0.0 && std::isfinite(learning_rate), ErrorKind::kConfig,
            "train.learning_rate must be >= 0");
    require(momentum >= 0.0 && momentum < 1.0, ErrorKind::kConfig,
            "train.momentum must lie in [0, 1)");
  }
};

struct TrainResult {
  MlpDenoiser model;
  std::vector<double> loss_trace;
};

// SGD with heavy-ball momentum: v <- m v + g; theta <- theta - lr v.
// Each step draws batch indices (with replacement), timesteps and noise from
// a stream keyed by (seed, step).
inline TrainResult train(MlpDenoiser model, const PointSet& members, const TrainConfig& cfg) {
  cfg.validate();
  require(!members.empty(), ErrorKind::kConfig, "cannot train on an empty member set");
  require(members.dim() == model.dim(), ErrorKind::kShape, "member dimension mismatch");
  const auto d = static_cast<Eigen::Index>(model.dim());
  const auto batch = static_cast<Eigen::Index>(cfg.batch_size);
  const int steps_t = model.schedule().steps();

  std::vector<DenseLayer> velocity;
  for (const auto& l : model.layers()) {
    velocity.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                        Eigen::VectorXd::Zero(l.bias.size())});
  }

  TrainResult result{model, {}};
  result.loss_trace.reserve(static_cast<std::size_t>(cfg.steps));
  Eigen::MatrixXd x0(d, batch), noise(d, batch);
  std::vector<int> ts(static_cast<std::size_t>(batch));
  auto& layers = result.model.mutable_layers();
  for (std::int64_t step = 0; step < cfg.steps; ++step) {
    RandomStream rng(cfg.seed, stream_id(StreamTag::kTrainBatch,
                                         {0xB47C4ull, static_cast<std::uint64_t>(step)}));
    for (Eigen::Index b = 0; b < batch; ++b) {
      const auto idx = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(members.size()) - 1));
      ts[static_cast<std::size_t>(b)] = static_cast<int>(rng.uniform_int(1, steps_t));
      auto row = members.row(idx);
      for (Eigen::Index k = 0; k < d; ++k) {
        x0(k, b) = row[static_cast<std::size_t>(k)];
        noise(k, b) = rng.normal();
      }
    }
    DsmLoss l = dsm_loss(result.model, x0, ts, noise);
    if (!std::isfinite(l.loss)) throw DivergenceError(step, "training loss is not finite");
    result.loss_trace.push_back(l.loss);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      velocity[i].weight = cfg.momentum * velocity[i].weight + l.gradients.weight[i];
      velocity[i].bias = cfg.momentum * velocity[i].bias + l.gradients.bias[i];
      layers[i].weight -= cfg.learning_rate * velocity[i].weight;
      layers[i].bias -= cfg.learning_rate * velocity[i].bias;
    }
  }
  return result;
}

// Checkpoint layout (little-endian): magic "SIMAMLP1", uint32 version (1),
// uint64 d, uint64 time frequencies, uint64 T, T doubles of betas,
// uint64 layer count, then per layer uint64 rows, uint64 cols, rows*cols
// doubles of weights in row-major order, rows doubles of bias.
inline constexpr char kCheckpointMagic[8] = {'S', 'I', 'M', 'A', 'M', 'L', 'P', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  require(in.good(), ErrorKind::kIo, "truncated checkpoint");
  return v;
}

}  // namespace detail

inline void write_checkpoint(const MlpDenoiser& model, std::ostream& out) {
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::write_pod(out, kCheckpointVersion);
  detail::write_pod(out, static_cast<std::uint64_t>(model.dim()));
  detail::write_pod(out, static_cast<std::uint64_t>(MlpDenoiser::kTimeFrequencies));
  detail::write_pod(out, static_cast<std::uint64_t>(model.schedule().steps()));
  for (double b : model.schedule().betas()) detail::write_pod(out, b);
  detail::write_pod(out, static_cast<std::uint64_t>(model.layers().size()));
  for (const auto& l : model.layers()) {
    detail::write_pod(out, static_cast<std::uint64_t>(l.weight.rows()));
    detail::write_pod(out, static_cast<std::uint64_t>(l.weight.cols()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) detail::write_pod(out, l.weight(r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) detail::write_pod(out, l.bias(r));
  }
}

inline MlpDenoiser read_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  require(in.good() && std::equal(magic, magic + 8, kCheckpointMagic), ErrorKind::kIo,
          "not a denoiser checkpoint");
  const auto version = detail::read_pod<std::uint32_t>(in);
  require(version == kCheckpointVersion, ErrorKind::kIo,
          "unsupported checkpoint version " + std::to_string(version));
  const auto d = detail::read_pod<std::uint64_t>(in);
  const auto freqs = detail::read_pod<std::uint64_t>(in);
  require(freqs == MlpDenoiser::kTimeFrequencies, ErrorKind::kIo,
          "checkpoint time-embedding size mismatch");
  const auto steps = detail::read_pod<std::uint64_t>(in);
  require(steps >= 1 && steps <= 1000000, ErrorKind::kIo, "implausible schedule length");
  std::vector<double> betas(steps);
  for (auto& b : betas) b = detail::read_pod<double>(in);
  const auto depth = detail::read_pod<std::uint64_t>(in);
  require(depth >= 1 && depth <= 1024, ErrorKind::kIo, "implausible layer count");
  std::vector<DenseLayer> layers;
  for (std::uint64_t l = 0; l < depth; ++l) {
    const auto rows = static_cast<Eigen::Index>(detail::read_pod<std::uint64_t>(in));
    const auto cols = static_cast<Eigen::Index>(detail::read_pod<std::uint64_t>(in));
    require(rows >= 1 && cols >= 1 && rows * cols <= (1 << 26), ErrorKind::kIo,
            "implausible layer shape");
    DenseLayer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) layer.weight(r, c) = detail::read_pod<double>(in);
    }
    for (Eigen::Index r = 0; r < rows; ++r) layer.bias(r) = detail::read_pod<double>(in);
    layers.push_back(std::move(layer));
  }
  return MlpDenoiser(d, std::move(layers), NoiseSchedule::explicit_betas(std::move(betas)));
}

inline void save_checkpoint(const MlpDenoiser& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::kIo, "cannot write " + path);
  write_checkpoint(model, out);
}

inline MlpDenoiser load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::kIo, "cannot read " + path);
  return read_checkpoint(in);
}

}  // namespace simalab
