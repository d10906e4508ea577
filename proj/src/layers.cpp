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

#include "dcls/layers.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace dcls {

std::string_view to_string(ParamRole role) {
  switch (role) {
    case ParamRole::Weight: return "weight";
    case ParamRole::Bias: return "bias";
    case ParamRole::Position: return "position";
    case ParamRole::Sigma: return "sigma";
    case ParamRole::Norm: return "norm";
  }
  return "?";
}

template <typename T>
void Parameter<T>::clamp() {
  if (bounds.empty()) return;
  const std::size_t slice = value.size() / bounds.size();
  for (std::size_t s = 0; s < bounds.size(); ++s) {
    const auto [lo, hi] = bounds[s];
    for (std::size_t i = s * slice; i < (s + 1) * slice; ++i) value[i] = std::clamp(value[i], lo, hi);
  }
}

template <typename T>
void zero_grad(const std::vector<ParamPtr<T>>& params) {
  for (const auto& p : params) p->zero_grad();
}

// ---------------------------------------------------------------------------
// Sequential

template <typename T>
Sequential<T>::Sequential(std::vector<LayerPtr<T>> layers) : layers_(std::move(layers)) {}

template <typename T>
Tensor<T> Sequential<T>::forward(const Tensor<T>& x, Mode mode) {
  Tensor<T> h = x;
  for (auto& layer : layers_) h = layer->forward(h, mode);
  return h;
}

template <typename T>
Tensor<T> Sequential<T>::backward(const Tensor<T>& grad_output) {
  Tensor<T> g = grad_output;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    if (l == 0) layers_[0]->set_input_gradient_required(this->input_gradient_required_);
    g = layers_[l]->backward(g);
  }
  return g;
}

template <typename T>
std::vector<ParamPtr<T>> Sequential<T>::parameters() {
  std::vector<ParamPtr<T>> out;
  std::set<const Parameter<T>*> seen;
  for (auto& layer : layers_)
    for (auto& p : layer->parameters())
      if (seen.insert(p.get()).second) out.push_back(p);
  return out;
}

template <typename T>
bool Sequential<T>::has_input_gradient() const {
  return std::all_of(layers_.begin(), layers_.end(), [](const auto& l) { return l->has_input_gradient(); });
}

// ---------------------------------------------------------------------------
// Conv

namespace {

template <typename T>
Tensor<T> uniform_tensor(const Shape& shape, double bound, Random& rng) {
  Tensor<T> t(shape);
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

}  // namespace

template <typename T>
Conv<T>::Conv(std::size_t in_channels, std::size_t out_channels, ConvSpec spec, bool bias, Random& rng)
    : spec_(std::move(spec)) {
  spec_.validate();
  if (in_channels % spec_.groups || out_channels % spec_.groups)
    throw std::invalid_argument("conv: groups must divide in and out channels");
  Shape wshape{out_channels, in_channels / spec_.groups};
  wshape.insert(wshape.end(), spec_.kernel_size.begin(), spec_.kernel_size.end());
  const double fan_in = static_cast<double>(in_channels / spec_.groups * spec_.kernel_cells());
  const double bound = 1.0 / std::sqrt(fan_in);
  weight_ = std::make_shared<Parameter<T>>("conv.weight", ParamRole::Weight, uniform_tensor<T>(wshape, bound, rng));
  if (bias)
    bias_ = std::make_shared<Parameter<T>>("conv.bias", ParamRole::Bias, uniform_tensor<T>({out_channels}, bound, rng));
}

template <typename T>
Tensor<T> Conv<T>::forward(const Tensor<T>& x, Mode) {
  input_ = x;
  return conv_forward(x, weight_->value, bias_ ? bias_->value : Tensor<T>(), spec_);
}

template <typename T>
Tensor<T> Conv<T>::backward(const Tensor<T>& grad_output) {
  weight_->grad += conv_backward_weight(input_, grad_output, spec_);
  if (bias_) bias_->grad += conv_backward_bias(grad_output);
  if (!this->input_gradient_required_) return {};
  return conv_backward_input(grad_output, weight_->value, input_.shape(), spec_);
}

template <typename T>
std::vector<ParamPtr<T>> Conv<T>::parameters() {
  if (bias_) return {weight_, bias_};
  return {weight_};
}

// ---------------------------------------------------------------------------
// DclsConv

namespace {

void check_dcls_config(const DclsConvConfig& c) {
  if (c.dilated_kernel_size.empty() || c.dilated_kernel_size.size() > 3)
    throw std::invalid_argument("dcls: 1 to 3 spatial axes");
  if (c.groups == 0 || c.in_channels % c.groups || c.out_channels % c.groups)
    throw std::invalid_argument("dcls: groups must divide in and out channels");
  if (c.kernel_count == 0) throw std::invalid_argument("dcls: kernel_count must be >= 1");
  if (!c.padding.empty() && c.padding.size() != c.dilated_kernel_size.size())
    throw std::invalid_argument("dcls: padding rank differs from kernel rank");
}

Shape element_shape(const DclsConvConfig& c) {
  return {c.dilated_kernel_size.size(), c.out_channels, c.in_channels / c.groups, c.kernel_count};
}

}  // namespace

template <typename T>
SharedPositions<T> make_shared_positions(const DclsConvConfig& config, Random& rng) {
  check_dcls_config(config);
  const Shape shape = element_shape(config);
  const std::size_t dims = config.dilated_kernel_size.size();
  Tensor<T> pos(shape);
  for (auto& v : pos.values()) v = static_cast<T>(rng.normal(0.0, config.position_std));
  auto positions = std::make_shared<Parameter<T>>("dcls.positions", ParamRole::Position, std::move(pos));
  for (std::size_t a = 0; a < dims; ++a) {
    const auto b = position_bounds(config.dilated_kernel_size[a]);
    positions->bounds.emplace_back(static_cast<T>(b.lo), static_cast<T>(b.hi));
  }
  positions->clamp();

  SharedPositions<T> shared{positions, nullptr};
  if (config.interp != InterpKind::Bilinear) {
    const T init = config.interp == InterpKind::Gauss ? T(0.23) : T(0);
    shared.sigmas = std::make_shared<Parameter<T>>("dcls.sigmas", ParamRole::Sigma, Tensor<T>(shape, init));
  }
  return shared;
}

template <typename T>
DclsConv<T>::DclsConv(const DclsConvConfig& config, Random& rng, std::optional<SharedPositions<T>> shared)
    : config_(config) {
  check_dcls_config(config_);
  const std::size_t dims = config_.dilated_kernel_size.size();
  if (config_.padding.empty())
    for (auto s : config_.dilated_kernel_size) config_.padding.push_back(s / 2);
  spec_ = ConvSpec{config_.dilated_kernel_size, Shape(dims, 1), Shape(dims, 1), config_.padding, config_.groups};

  const std::size_t cin_g = config_.in_channels / config_.groups;
  const double bound = 1.0 / std::sqrt(static_cast<double>(cin_g * config_.kernel_count));
  weight_ = std::make_shared<Parameter<T>>(
      "dcls.weight", ParamRole::Weight,
      uniform_tensor<T>({config_.out_channels, cin_g, config_.kernel_count}, bound, rng));

  SharedPositions<T> pos = shared ? *shared : make_shared_positions<T>(config_, rng);
  if (pos.positions->value.shape() != element_shape(config_))
    throw std::invalid_argument("dcls: shared positions shape " + shape_to_string(pos.positions->value.shape()) +
                                " does not fit this layer");
  if (config_.interp != InterpKind::Bilinear && !pos.sigmas)
    throw std::invalid_argument("dcls: shared positions lack sigmas for a non-bilinear layer");
  positions_ = pos.positions;
  sigmas_ = config_.interp == InterpKind::Bilinear ? nullptr : pos.sigmas;

  if (config_.bias)
    bias_ = std::make_shared<Parameter<T>>("dcls.bias", ParamRole::Bias,
                                           uniform_tensor<T>({config_.out_channels}, bound, rng));
}

template <typename T>
DclsParams<T> DclsConv<T>::params() const {
  DclsParams<T> p;
  p.weights = weight_->value;
  p.positions = positions_->value;
  if (sigmas_) p.sigmas = sigmas_->value;
  p.dilated_kernel_size = config_.dilated_kernel_size;
  return p;
}

template <typename T>
Tensor<T> DclsConv<T>::forward(const Tensor<T>& x, Mode) {
  input_ = x;
  kernel_ = kernel();
  return conv_forward(x, kernel_, bias_ ? bias_->value : Tensor<T>(), spec_);
}

template <typename T>
Tensor<T> DclsConv<T>::backward(const Tensor<T>& grad_output) {
  const Tensor<T> grad_kernel = conv_backward_weight(input_, grad_output, spec_);
  const auto grads = backward_kernel(grad_kernel, params(), config_.interp);
  weight_->grad += grads.weights;
  positions_->grad += grads.positions;
  if (sigmas_) sigmas_->grad += grads.sigmas;
  if (bias_) bias_->grad += conv_backward_bias(grad_output);
  if (!this->input_gradient_required_) return {};
  return conv_backward_input(grad_output, kernel_, input_.shape(), spec_);
}

template <typename T>
std::vector<ParamPtr<T>> DclsConv<T>::parameters() {
  std::vector<ParamPtr<T>> out{weight_, positions_};
  if (sigmas_) out.push_back(sigmas_);
  if (bias_) out.push_back(bias_);
  return out;
}

// ---------------------------------------------------------------------------
// Elementwise, pooling, linear

template <typename T>
Tensor<T> ReLU<T>::forward(const Tensor<T>& x, Mode) {
  input_ = x;
  Tensor<T> out = x;
  for (auto& v : out.values()) v = std::max(v, T{0});
  return out;
}

template <typename T>
Tensor<T> ReLU<T>::backward(const Tensor<T>& grad_output) {
  Tensor<T> g = grad_output;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (input_[i] <= T{0}) g[i] = T{0};
  return g;
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::forward(const Tensor<T>& x, Mode) {
  if (x.ndim() < 3) throw std::invalid_argument("gap expects [B, C, ...]");
  input_shape_ = x.shape();
  const std::size_t planes = x.dim(0) * x.dim(1);
  const std::size_t cells = x.size() / planes;
  Tensor<T> out({x.dim(0), x.dim(1)});
  for (std::size_t p = 0; p < planes; ++p) {
    T acc{0};
    for (std::size_t i = 0; i < cells; ++i) acc += x[p * cells + i];
    out[p] = acc / static_cast<T>(cells);
  }
  return out;
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::backward(const Tensor<T>& grad_output) {
  Tensor<T> g(input_shape_);
  const std::size_t planes = input_shape_[0] * input_shape_[1];
  const std::size_t cells = g.size() / planes;
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t i = 0; i < cells; ++i) g[p * cells + i] = grad_output[p] / static_cast<T>(cells);
  return g;
}

template <typename T>
Linear<T>::Linear(std::size_t in_features, std::size_t out_features, Random& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_features));
  weight_ = std::make_shared<Parameter<T>>("linear.weight", ParamRole::Weight,
                                           uniform_tensor<T>({out_features, in_features}, bound, rng));
  bias_ = std::make_shared<Parameter<T>>("linear.bias", ParamRole::Bias, uniform_tensor<T>({out_features}, bound, rng));
}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x, Mode) {
  const std::size_t in = weight_->value.dim(1), out = weight_->value.dim(0);
  if (x.ndim() != 2 || x.dim(1) != in)
    throw std::invalid_argument("linear expects [B, " + std::to_string(in) + "], got " + shape_to_string(x.shape()));
  input_ = x;
  Tensor<T> y({x.dim(0), out});
  gemm<T>(x.dim(0), out, in, x.data(), false, weight_->value.data(), true, y.data(), false);
  for (std::size_t b = 0; b < x.dim(0); ++b)
    for (std::size_t o = 0; o < out; ++o) y[b * out + o] += bias_->value[o];
  return y;
}

template <typename T>
Tensor<T> Linear<T>::backward(const Tensor<T>& grad_output) {
  const std::size_t batch = input_.dim(0), in = weight_->value.dim(1), out = weight_->value.dim(0);
  gemm<T>(out, in, batch, grad_output.data(), true, input_.data(), false, weight_->grad.data(), true);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t o = 0; o < out; ++o) bias_->grad[o] += grad_output[b * out + o];
  if (!this->input_gradient_required_) return {};
  Tensor<T> gx({batch, in});
  gemm<T>(batch, in, out, grad_output.data(), false, weight_->value.data(), false, gx.data(), false);
  return gx;
}

// ---------------------------------------------------------------------------
// BatchNorm

template <typename T>
BatchNorm<T>::BatchNorm(std::size_t channels, double momentum, double eps)
    : momentum_(momentum),
      eps_(eps),
      scale_(std::make_shared<Parameter<T>>("bn.scale", ParamRole::Norm, Tensor<T>({channels}, T{1}))),
      shift_(std::make_shared<Parameter<T>>("bn.shift", ParamRole::Norm, Tensor<T>({channels}, T{0}))),
      running_mean_(channels, 0.0),
      running_var_(channels, 1.0) {}

template <typename T>
Tensor<T> BatchNorm<T>::forward(const Tensor<T>& x, Mode mode) {
  const std::size_t channels = scale_->value.size();
  if (x.ndim() < 2 || x.dim(1) != channels)
    throw std::invalid_argument("batchnorm expects [B, " + std::to_string(channels) + ", ...]");
  const std::size_t batch = x.dim(0);
  const std::size_t cells = x.size() / (batch * channels);
  const double count = static_cast<double>(batch * cells);
  last_mode_ = mode;
  normalized_ = Tensor<T>(x.shape());
  inv_std_.assign(channels, 0.0);
  Tensor<T> y(x.shape());
  for (std::size_t c = 0; c < channels; ++c) {
    double mean = 0.0, var = 0.0;
    if (mode == Mode::Train) {
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t i = 0; i < cells; ++i) mean += x[(b * channels + c) * cells + i];
      mean /= count;
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t i = 0; i < cells; ++i) {
          const double d = x[(b * channels + c) * cells + i] - mean;
          var += d * d;
        }
      var /= count;
      const double unbiased = count > 1 ? var * count / (count - 1) : var;
      running_mean_[c] = (1 - momentum_) * running_mean_[c] + momentum_ * mean;
      running_var_[c] = (1 - momentum_) * running_var_[c] + momentum_ * unbiased;
    } else {
      mean = running_mean_[c];
      var = running_var_[c];
    }
    const double inv = 1.0 / std::sqrt(var + eps_);
    inv_std_[c] = inv;
    const T gamma = scale_->value[c], beta = shift_->value[c];
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < cells; ++i) {
        const std::size_t k = (b * channels + c) * cells + i;
        const T n = static_cast<T>((x[k] - mean) * inv);
        normalized_[k] = n;
        y[k] = gamma * n + beta;
      }
  }
  return y;
}

template <typename T>
Tensor<T> BatchNorm<T>::backward(const Tensor<T>& grad_output) {
  const std::size_t channels = scale_->value.size();
  const std::size_t batch = grad_output.dim(0);
  const std::size_t cells = grad_output.size() / (batch * channels);
  const double count = static_cast<double>(batch * cells);
  Tensor<T> gx(grad_output.shape());
  for (std::size_t c = 0; c < channels; ++c) {
    double sum_g = 0.0, sum_gn = 0.0;
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < cells; ++i) {
        const std::size_t k = (b * channels + c) * cells + i;
        sum_g += grad_output[k];
        sum_gn += static_cast<double>(grad_output[k]) * normalized_[k];
      }
    scale_->grad[c] += static_cast<T>(sum_gn);
    shift_->grad[c] += static_cast<T>(sum_g);
    if (!this->input_gradient_required_) continue;
    const double gamma = scale_->value[c];
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < cells; ++i) {
        const std::size_t k = (b * channels + c) * cells + i;
        if (last_mode_ == Mode::Eval) {
          gx[k] = static_cast<T>(gamma * inv_std_[c] * grad_output[k]);
        } else {
          gx[k] = static_cast<T>(gamma * inv_std_[c] *
                                 (grad_output[k] - sum_g / count - normalized_[k] * sum_gn / count));
        }
      }
  }
  if (!this->input_gradient_required_) return {};
  return gx;
}

// ---------------------------------------------------------------------------
// Dropout

template <typename T>
Dropout<T>::Dropout(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout rate must be in [0, 1)");
}

template <typename T>
Tensor<T> Dropout<T>::forward(const Tensor<T>& x, Mode mode) {
  if (mode == Mode::Eval || rate_ == 0.0) {
    mask_.assign(x.size(), T{1});
    return x;
  }
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate_));
  mask_.resize(x.size());
  Tensor<T> y = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask_[i] = rng_.uniform() < rate_ ? T{0} : keep_scale;
    y[i] *= mask_[i];
  }
  return y;
}

template <typename T>
Tensor<T> Dropout<T>::backward(const Tensor<T>& grad_output) {
  Tensor<T> g = grad_output;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= mask_[i];
  return g;
}

// ---------------------------------------------------------------------------
// Loss

template <typename T>
T softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels, Tensor<T>* grad) {
  if (logits.ndim() != 2 || logits.dim(0) != labels.size())
    throw std::invalid_argument("softmax_cross_entropy expects [B, K] logits and B labels");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  if (grad) *grad = Tensor<T>(logits.shape());
  double loss = 0.0;
  std::vector<double> p(classes);
  for (std::size_t b = 0; b < batch; ++b) {
    const int y = labels[b];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) throw std::out_of_range("label out of range");
    double peak = logits[b * classes];
    for (std::size_t k = 1; k < classes; ++k) peak = std::max<double>(peak, logits[b * classes + k]);
    double z = 0.0;
    for (std::size_t k = 0; k < classes; ++k) z += (p[k] = std::exp(logits[b * classes + k] - peak));
    loss += -(logits[b * classes + y] - peak - std::log(z));
    if (grad)
      for (std::size_t k = 0; k < classes; ++k)
        (*grad)[b * classes + k] = static_cast<T>((p[k] / z - (static_cast<int>(k) == y ? 1.0 : 0.0)) / batch);
  }
  return static_cast<T>(loss / batch);
}

template <typename T>
std::vector<int> argmax_rows(const Tensor<T>& scores) {
  const std::size_t batch = scores.dim(0), classes = scores.dim(1);
  std::vector<int> out(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const T* row = scores.data() + b * classes;
    out[b] = static_cast<int>(std::max_element(row, row + classes) - row);
  }
  return out;
}

#define DCLS_INSTANTIATE(T)                                                                              \
  template struct Parameter<T>;                                                                          \
  template void zero_grad<T>(const std::vector<ParamPtr<T>>&);                                           \
  template class Sequential<T>;                                                                          \
  template class Conv<T>;                                                                                \
  template class DclsConv<T>;                                                                            \
  template SharedPositions<T> make_shared_positions<T>(const DclsConvConfig&, Random&);                  \
  template class ReLU<T>;                                                                                \
  template class GlobalAvgPool<T>;                                                                       \
  template class Linear<T>;                                                                              \
  template class BatchNorm<T>;                                                                           \
  template class Dropout<T>;                                                                             \
  template T softmax_cross_entropy<T>(const Tensor<T>&, const std::vector<int>&, Tensor<T>*);            \
  template std::vector<int> argmax_rows<T>(const Tensor<T>&);

DCLS_INSTANTIATE(float)
DCLS_INSTANTIATE(double)

#undef DCLS_INSTANTIATE

}  // namespace dcls
