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

// Sequential layers with explicit reverse-mode chaining.
//
// forward() caches whatever backward() needs; backward() adds parameter
// gradients into Parameter::grad (so shared parameters accumulate across
// layers) and returns the input gradient. Gradients are cleared only by
// zero_grad().

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dcls/conv.hpp"
#include "dcls/interp.hpp"
#include "dcls/kernel.hpp"
#include "dcls/random.hpp"
#include "dcls/tensor.hpp"

namespace dcls {

enum class Mode { Train, Eval };

enum class ParamRole { Weight, Bias, Position, Sigma, Norm };

std::string_view to_string(ParamRole role);

template <typename T>
struct Parameter {
  std::string name;
  ParamRole role = ParamRole::Weight;
  Tensor<T> value;
  Tensor<T> grad;
  /// Per-slice clamp bounds: the tensor is split into bounds.size() equal
  /// contiguous slices (e.g. one per spatial axis of a position tensor).
  std::vector<std::pair<T, T>> bounds;

  Parameter(std::string n, ParamRole r, Tensor<T> v) : name(std::move(n)), role(r), value(std::move(v)) {
    grad = Tensor<T>(value.shape());
  }
  void zero_grad() { grad.fill(T{0}); }
  /// Projects value onto bounds; no-op when unbounded.
  void clamp();
};

template <typename T>
using ParamPtr = std::shared_ptr<Parameter<T>>;

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string name() const = 0;
  virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad_output) = 0;
  virtual std::vector<ParamPtr<T>> parameters() { return {}; }
  virtual bool has_input_gradient() const { return true; }
  /// The first layer of a model may skip computing its input gradient.
  void set_input_gradient_required(bool required) { input_gradient_required_ = required; }
  bool input_gradient_required() const { return input_gradient_required_; }

 protected:
  bool input_gradient_required_ = true;
};

template <typename T>
using LayerPtr = std::shared_ptr<Layer<T>>;

template <typename T>
class Sequential : public Layer<T> {
 public:
  Sequential() = default;
  explicit Sequential(std::vector<LayerPtr<T>> layers);

  void add(LayerPtr<T> layer) { layers_.push_back(std::move(layer)); }
  const std::vector<LayerPtr<T>>& layers() const { return layers_; }

  std::string name() const override { return "sequential"; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override;
  /// Unique parameters in first-seen order; shared ones appear once.
  std::vector<ParamPtr<T>> parameters() override;
  bool has_input_gradient() const override;

 private:
  std::vector<LayerPtr<T>> layers_;
};

template <typename T>
void zero_grad(const std::vector<ParamPtr<T>>& params);

// ---------------------------------------------------------------------------

template <typename T>
class Conv : public Layer<T> {
 public:
  /// Kaiming-uniform weights and a uniform bias, as common frameworks do.
  Conv(std::size_t in_channels, std::size_t out_channels, ConvSpec spec, bool bias, Random& rng);

  std::string name() const override { return "conv"; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override;
  std::vector<ParamPtr<T>> parameters() override;

  const ParamPtr<T>& weight() const { return weight_; }
  const ParamPtr<T>& bias() const { return bias_; }
  const ConvSpec& spec() const { return spec_; }

 private:
  ConvSpec spec_;
  ParamPtr<T> weight_;
  ParamPtr<T> bias_;  // null when disabled
  Tensor<T> input_;
};

/// Position and sigma tensors that several DCLS layers read and write as
/// one parameter; their gradients accumulate in the shared tensor.
template <typename T>
struct SharedPositions {
  ParamPtr<T> positions;
  ParamPtr<T> sigmas;  // null for bilinear
};

struct DclsConvConfig {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t groups = 1;
  std::size_t kernel_count = 1;
  Shape dilated_kernel_size;
  Shape padding;  // defaults to dilated size / 2 per axis when empty
  InterpKind interp = InterpKind::Gauss;
  bool bias = true;
  double position_std = 0.5;
};

template <typename T>
class DclsConv : public Layer<T> {
 public:
  /// Initializes fresh positions (N(0, position_std), clamped) and sigmas
  /// (0.23 Gauss, 0 Triangle) unless `shared` provides them.
  DclsConv(const DclsConvConfig& config, Random& rng, std::optional<SharedPositions<T>> shared = std::nullopt);

  std::string name() const override { return "dcls"; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override;
  std::vector<ParamPtr<T>> parameters() override;

  /// Snapshot of the learnable triple for kernel construction.
  DclsParams<T> params() const;
  Tensor<T> kernel() const { return construct_kernel(params(), config_.interp); }
  SharedPositions<T> shared_positions() const { return {positions_, sigmas_}; }
  const ParamPtr<T>& weight() const { return weight_; }
  const ParamPtr<T>& positions() const { return positions_; }
  const ParamPtr<T>& sigmas() const { return sigmas_; }
  const DclsConvConfig& config() const { return config_; }

 private:
  DclsConvConfig config_;
  ConvSpec spec_;
  ParamPtr<T> weight_;
  ParamPtr<T> positions_;
  ParamPtr<T> sigmas_;
  ParamPtr<T> bias_;
  Tensor<T> input_;
  Tensor<T> kernel_;
};

/// Fresh shared position (and sigma) parameters shaped for `config`.
template <typename T>
SharedPositions<T> make_shared_positions(const DclsConvConfig& config, Random& rng);

template <typename T>
class ReLU : public Layer<T> {
 public:
  std::string name() const override { return "relu"; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override;

 private:
  Tensor<T> input_;
};

/// [B, C, ...] -> [B, C], mean over every trailing axis.
template <typename T>
class GlobalAvgPool : public Layer<T> {
 public:
  std::string name() const override { return "gap"; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override;

 private:
  Shape input_shape_;
};

/// [B, in] -> [B, out].
template <typename T>
class Linear : public Layer<T> {
 public:
  Linear(std::size_t in_features, std::size_t out_features, Random& rng);
  std::string name() const override { return "linear"; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override;
  std::vector<ParamPtr<T>> parameters() override { return {weight_, bias_}; }

 private:
  ParamPtr<T> weight_;  // [out, in]
  ParamPtr<T> bias_;
  Tensor<T> input_;
};

/// Per-channel standardization of [B, C, ...] over every axis but C, with
/// learnable scale and shift. Eval uses running statistics.
template <typename T>
class BatchNorm : public Layer<T> {
 public:
  explicit BatchNorm(std::size_t channels, double momentum = 0.1, double eps = 1e-5);
  std::string name() const override { return "batchnorm"; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override;
  std::vector<ParamPtr<T>> parameters() override { return {scale_, shift_}; }

 private:
  double momentum_;
  double eps_;
  ParamPtr<T> scale_;
  ParamPtr<T> shift_;
  std::vector<double> running_mean_;
  std::vector<double> running_var_;
  Tensor<T> normalized_;
  std::vector<double> inv_std_;
  Mode last_mode_ = Mode::Train;
};

/// Inverted dropout; identity in eval mode.
template <typename T>
class Dropout : public Layer<T> {
 public:
  Dropout(double rate, std::uint64_t seed);
  std::string name() const override { return "dropout"; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override;

 private:
  double rate_;
  Random rng_;
  std::vector<T> mask_;
};

/// Mean softmax cross-entropy of logits [B, K]; writes d loss / d logits.
template <typename T>
T softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels, Tensor<T>* grad);

/// Row-wise argmax of [B, K].
template <typename T>
std::vector<int> argmax_rows(const Tensor<T>& scores);

}  // namespace dcls
