// Copyright 2026 The DCLS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Feedforward spiking network whose synapses carry learnable delays.
//
// Every tensor is laid out [batch, channels, time]. A delay connection is a
// 1D temporal convolution per synapse with a T_d-tap Gaussian kernel centred
// at tap T_d - d - 1 and a causal left zero-pad of T_d - 1, so an input spike
// at t reaches the output at t + d.

#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "dcls/layers.hpp"
#include "dcls/random.hpp"
#include "dcls/tensor.hpp"

namespace dcls {

inline constexpr double kDelayNormalizationEps = 1e-7;

struct LifConfig {
  double tau = 10.05;
  double threshold = 1.0;  // +inf for a readout that never fires
  double reset = 0.0;
  double surrogate_alpha = 2.0;

  double leak() const { return 1.0 - 1.0 / tau; }
  /// Throws std::invalid_argument unless tau > 1 and threshold > 0.
  void validate() const;
};

/// alpha / (2 (1 + (pi alpha x / 2)^2)); integrates to 1 over the real line.
double surrogate_derivative(double x, double alpha);

/// atan(pi alpha x / 2) / pi + 1/2, whose derivative is surrogate_derivative.
double smooth_heaviside(double x, double alpha);

/// Hidden LIF population. Forward returns spikes; the membrane is reset to
/// `reset` after a spike and the reset is excluded from the gradient.
///
/// In smooth mode the emitted value is smooth_heaviside(v - threshold)
/// instead of the step, which makes the forward pass differentiable for
/// finite-difference checks while the reset still uses the hard step.
template <typename T>
class Lif : public Layer<T> {
 public:
  explicit Lif(LifConfig config, bool smooth = false);

  std::string name() const override { return "lif"; }
  Tensor<T> forward(const Tensor<T>& current, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_spikes) override;

  /// Pre-reset membrane potential of the last forward call.
  const Tensor<T>& potentials() const { return potentials_; }
  const LifConfig& config() const { return config_; }

 private:
  LifConfig config_;
  bool smooth_;
  Tensor<T> potentials_;
  Tensor<T> fired_;  // hard step, used by the reset
};

/// Non-firing leaky integrator u[t] = leak * u[t-1] + I[t]; outputs u.
template <typename T>
class LeakyReadout : public Layer<T> {
 public:
  explicit LeakyReadout(double tau);
  std::string name() const override { return "readout"; }
  Tensor<T> forward(const Tensor<T>& current, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_potentials) override;

 private:
  double leak_;
};

/// Class scores y[b,k] = sum_t softmax_k(u[b,:,t]).
template <typename T>
Tensor<T> readout_scores(const Tensor<T>& potentials);

/// Mean over the batch of -log softmax(scores)[label]; writes d loss / d u.
template <typename T>
T readout_loss(const Tensor<T>& potentials, const std::vector<int>& labels, Tensor<T>* grad);

/// Tap index holding a discretized delay: T_d - round(d) - 1, halves
/// rounded away from zero.
std::size_t discrete_tap(double delay, std::size_t kernel_size);

/// Per-synapse binary mask keeping exactly `fan_in` distinct inputs for every
/// output; row-major [out, in].
std::vector<std::uint8_t> fixed_fan_in_mask(std::size_t in, std::size_t out, std::size_t fan_in, Random& rng);

/// Fan-in that leaves roughly `sparsity` of the synapses removed, at least 1.
std::size_t fan_in_for_sparsity(std::size_t in, double sparsity);

template <typename T>
class DelayConnection : public Layer<T> {
 public:
  /// Weights uniform in +-1/sqrt(fan_in); delays uniform over [0, T_d - 1].
  DelayConnection(std::size_t in, std::size_t out, std::size_t kernel_size, Random& rng,
                  std::vector<std::uint8_t> mask = {});

  std::string name() const override { return "delay"; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override;
  std::vector<ParamPtr<T>> parameters() override { return {weights_, delays_}; }

  /// Shared Gaussian width, scheduled externally. Must be > 0.
  void set_sigma(double sigma);
  double sigma() const { return sigma_; }
  /// Single-tap kernels at the rounded delays. Parameters are left untouched;
  /// the delay gradient is zero in this mode.
  void set_discrete(bool discrete) { discrete_ = discrete; }
  bool discrete() const { return discrete_; }
  /// Rounds the delay parameters in place and switches to discrete mode.
  void discretize();

  /// Explicit [out, in, T_d] kernels of the current mode; masked synapses are 0.
  Tensor<T> kernel() const;

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  std::size_t kernel_size() const { return kernel_size_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }
  const ParamPtr<T>& weights() const { return weights_; }
  const ParamPtr<T>& delays() const { return delays_; }
  std::size_t synapse_count() const;

 private:
  void check_delays() const;
  void build_kernel();

  std::size_t in_, out_, kernel_size_;
  double sigma_ = 1.0;
  bool discrete_ = false;
  ParamPtr<T> weights_;  // [out, in]
  ParamPtr<T> delays_;   // [out, in], delay coordinates
  std::vector<std::uint8_t> mask_;
  std::vector<std::vector<std::size_t>> targets_;  // per input: connected outputs
  Tensor<T> kernel_;       // [out, in, T_d], refreshed every forward
  Tensor<T> normalizer_;   // [out, in], eps + sum_n exp(.)
  Tensor<T> input_;
};

// ---------------------------------------------------------------------------
// Model

enum class Ablation { LearnDelays, FixedRandomDelays, NoDelays, FixedWeights, ConstantSigma };

std::string_view to_string(Ablation mode);
Ablation parse_ablation(std::string_view name);

struct SnnConfig {
  std::size_t inputs = 2;
  std::vector<std::size_t> hidden{8};
  std::size_t classes = 2;
  std::size_t kernel_size = 25;  // T_d
  LifConfig lif;
  double readout_tau = 10.05;
  double sparsity = 0.0;       // fraction of hidden-layer synapses removed
  bool batchnorm = true;
  double dropout = 0.0;
  bool smooth = false;         // differentiable spikes for gradient checks
};

template <typename T>
class SnnModel {
 public:
  SnnModel(const SnnConfig& config, Random& rng, std::uint64_t dropout_seed = 0);

  /// [B, inputs, T] spikes -> [B, classes, T] readout potentials.
  Tensor<T> forward(const Tensor<T>& spikes, Mode mode);
  void backward(const Tensor<T>& grad_potentials);
  std::vector<ParamPtr<T>> parameters() { return net_.parameters(); }

  void set_sigma(double sigma);
  void set_discrete(bool discrete);
  /// Zeroes every delay; used by the no-delay control.
  void zero_delays();

  const std::vector<std::shared_ptr<DelayConnection<T>>>& delay_layers() const { return delay_layers_; }
  const std::vector<std::shared_ptr<Lif<T>>>& lif_layers() const { return lif_layers_; }
  const SnnConfig& config() const { return config_; }

 private:
  SnnConfig config_;
  Sequential<T> net_;
  std::vector<std::shared_ptr<DelayConnection<T>>> delay_layers_;
  std::vector<std::shared_ptr<Lif<T>>> lif_layers_;
};

// ---------------------------------------------------------------------------
// Synthetic spike datasets

enum class SpikeTaskKind { Coincidence, DelayedPattern };

struct SpikeTaskSpec {
  SpikeTaskKind kind = SpikeTaskKind::DelayedPattern;
  std::size_t classes = 10;
  std::size_t channels = 20;
  std::size_t steps = 50;
  std::size_t max_offset = 20;  // largest per-channel offset inside a pattern
  std::size_t jitter = 0;       // +- steps added to every pattern spike
  std::size_t noise_spikes = 0; // extra spikes per channel at uniform times
  std::size_t samples = 1000;
};

struct SpikeDataset {
  Tensor<double> spikes;  // [N, channels, steps], values in {0, 1}
  std::vector<int> labels;
  std::size_t classes = 0;

  std::size_t size() const { return labels.size(); }
  /// Copies the rows listed in `indices` into a batch.
  template <typename T>
  Tensor<T> batch(const std::vector<std::size_t>& indices, std::size_t begin, std::size_t end) const;
  std::vector<int> batch_labels(const std::vector<std::size_t>& indices, std::size_t begin, std::size_t end) const;
};

/// Coincidence: 2 channels, class 0 fires both together, class 1 fires the
/// second channel 8 steps later. DelayedPattern: every class owns a fixed
/// offset per channel; a sample fires each channel once at its offset from
/// a random onset, plus `noise_spikes` random spikes per channel. Spike
/// counts per channel do not depend on the class. Samples cycle through the
/// classes so every class has the same count.
SpikeDataset make_synthetic_dataset(const SpikeTaskSpec& spec, std::uint64_t seed);

SpikeTaskKind parse_spike_task(std::string_view name);

}  // namespace dcls
