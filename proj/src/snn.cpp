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

#include "dcls/snn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace dcls {

void LifConfig::validate() const {
  if (!(tau > 1.0)) throw std::invalid_argument("lif: tau must be > 1, got " + std::to_string(tau));
  if (!(threshold > 0.0)) throw std::invalid_argument("lif: threshold must be > 0");
  if (!(surrogate_alpha > 0.0)) throw std::invalid_argument("lif: surrogate alpha must be > 0");
}

double surrogate_derivative(double x, double alpha) {
  const double z = std::numbers::pi * alpha * x / 2.0;
  return alpha / (2.0 * (1.0 + z * z));
}

double smooth_heaviside(double x, double alpha) {
  return std::atan(std::numbers::pi * alpha * x / 2.0) / std::numbers::pi + 0.5;
}

namespace {

void check_btc(const Shape& shape, const char* who) {
  if (shape.size() != 3) throw std::invalid_argument(std::string(who) + " expects [batch, channels, time]");
}

}  // namespace

// ---------------------------------------------------------------------------
// LIF

template <typename T>
Lif<T>::Lif(LifConfig config, bool smooth) : config_(config), smooth_(smooth) {
  config_.validate();
}

template <typename T>
Tensor<T> Lif<T>::forward(const Tensor<T>& current, Mode) {
  check_btc(current.shape(), "lif");
  const std::size_t rows = current.dim(0) * current.dim(1), steps = current.dim(2);
  const double leak = config_.leak();
  potentials_ = Tensor<T>(current.shape());
  fired_ = Tensor<T>(current.shape());
  Tensor<T> out(current.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    double p = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
      const std::size_t k = r * steps + t;
      const double v = leak * p + current[k];
      const bool fired = v - config_.threshold >= 0.0;
      potentials_[k] = static_cast<T>(v);
      fired_[k] = fired ? T{1} : T{0};
      out[k] = smooth_ ? static_cast<T>(smooth_heaviside(v - config_.threshold, config_.surrogate_alpha)) : fired_[k];
      p = fired ? config_.reset : v;
    }
  }
  return out;
}

template <typename T>
Tensor<T> Lif<T>::backward(const Tensor<T>& grad_spikes) {
  const std::size_t rows = grad_spikes.dim(0) * grad_spikes.dim(1), steps = grad_spikes.dim(2);
  const double leak = config_.leak();
  Tensor<T> grad(grad_spikes.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    double carry = 0.0;  // d loss / d p[t], arriving from v[t+1]
    for (std::size_t t = steps; t-- > 0;) {
      const std::size_t k = r * steps + t;
      const double gv = grad_spikes[k] * surrogate_derivative(potentials_[k] - config_.threshold, config_.surrogate_alpha) +
                        carry * (1.0 - fired_[k]);
      grad[k] = static_cast<T>(gv);
      carry = leak * gv;
    }
  }
  return grad;
}

template <typename T>
LeakyReadout<T>::LeakyReadout(double tau) {
  LifConfig{tau, std::numeric_limits<double>::infinity()}.validate();
  leak_ = 1.0 - 1.0 / tau;
}

template <typename T>
Tensor<T> LeakyReadout<T>::forward(const Tensor<T>& current, Mode) {
  check_btc(current.shape(), "readout");
  const std::size_t rows = current.dim(0) * current.dim(1), steps = current.dim(2);
  Tensor<T> u(current.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t t = 0; t < steps; ++t) u[r * steps + t] = static_cast<T>(acc = leak_ * acc + current[r * steps + t]);
  }
  return u;
}

template <typename T>
Tensor<T> LeakyReadout<T>::backward(const Tensor<T>& grad_potentials) {
  const std::size_t rows = grad_potentials.dim(0) * grad_potentials.dim(1), steps = grad_potentials.dim(2);
  Tensor<T> g(grad_potentials.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t t = steps; t-- > 0;) g[r * steps + t] = static_cast<T>(acc = grad_potentials[r * steps + t] + leak_ * acc);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Readout loss

namespace {

/// softmax over classes at every step, written to `out` ([K, T] slice of b).
template <typename T>
void softmax_per_step(const Tensor<T>& u, std::size_t b, std::vector<double>& out) {
  const std::size_t classes = u.dim(1), steps = u.dim(2);
  out.assign(classes * steps, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < classes; ++k) peak = std::max<double>(peak, u[(b * classes + k) * steps + t]);
    double z = 0.0;
    for (std::size_t k = 0; k < classes; ++k) z += out[k * steps + t] = std::exp(u[(b * classes + k) * steps + t] - peak);
    for (std::size_t k = 0; k < classes; ++k) out[k * steps + t] /= z;
  }
}

}  // namespace

template <typename T>
Tensor<T> readout_scores(const Tensor<T>& potentials) {
  check_btc(potentials.shape(), "readout_scores");
  const std::size_t batch = potentials.dim(0), classes = potentials.dim(1), steps = potentials.dim(2);
  Tensor<T> scores({batch, classes});
  std::vector<double> prob;
  for (std::size_t b = 0; b < batch; ++b) {
    softmax_per_step(potentials, b, prob);
    for (std::size_t k = 0; k < classes; ++k) {
      double acc = 0.0;
      for (std::size_t t = 0; t < steps; ++t) acc += prob[k * steps + t];
      scores[b * classes + k] = static_cast<T>(acc);
    }
  }
  return scores;
}

template <typename T>
T readout_loss(const Tensor<T>& potentials, const std::vector<int>& labels, Tensor<T>* grad) {
  check_btc(potentials.shape(), "readout_loss");
  const std::size_t batch = potentials.dim(0), classes = potentials.dim(1), steps = potentials.dim(2);
  if (labels.size() != batch) throw std::invalid_argument("readout_loss: one label per sample");
  const Tensor<T> scores = readout_scores(potentials);
  Tensor<T> grad_scores;
  const T loss = softmax_cross_entropy(scores, labels, grad ? &grad_scores : nullptr);
  if (!grad) return loss;
  *grad = Tensor<T>(potentials.shape());
  std::vector<double> prob;
  for (std::size_t b = 0; b < batch; ++b) {
    softmax_per_step(potentials, b, prob);
    for (std::size_t t = 0; t < steps; ++t) {
      double inner = 0.0;
      for (std::size_t k = 0; k < classes; ++k) inner += grad_scores[b * classes + k] * prob[k * steps + t];
      for (std::size_t k = 0; k < classes; ++k)
        (*grad)[(b * classes + k) * steps + t] =
            static_cast<T>(prob[k * steps + t] * (grad_scores[b * classes + k] - inner));
    }
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Delay connection

std::size_t discrete_tap(double delay, std::size_t kernel_size) {
  const double rounded = std::round(delay);  // halves away from zero
  if (rounded < 0.0 || rounded > static_cast<double>(kernel_size) - 1.0)
    throw std::out_of_range("delay " + std::to_string(delay) + " outside [0, " + std::to_string(kernel_size - 1) + "]");
  return kernel_size - static_cast<std::size_t>(rounded) - 1;
}

std::size_t fan_in_for_sparsity(std::size_t in, double sparsity) {
  if (sparsity < 0.0 || sparsity >= 1.0) throw std::invalid_argument("sparsity must be in [0, 1)");
  const auto kept = static_cast<std::size_t>(std::llround((1.0 - sparsity) * static_cast<double>(in)));
  return std::clamp<std::size_t>(kept, 1, in);
}

std::vector<std::uint8_t> fixed_fan_in_mask(std::size_t in, std::size_t out, std::size_t fan_in, Random& rng) {
  if (fan_in == 0 || fan_in > in) throw std::invalid_argument("fan_in must be in [1, in]");
  std::vector<std::uint8_t> mask(in * out, 0);
  std::vector<std::size_t> order(in);
  for (std::size_t o = 0; o < out; ++o) {
    std::iota(order.begin(), order.end(), 0);
    // partial Fisher-Yates: the first fan_in entries are a uniform subset
    for (std::size_t k = 0; k < fan_in; ++k) {
      const auto j = static_cast<std::size_t>(rng.integer(static_cast<std::int64_t>(k), static_cast<std::int64_t>(in - 1)));
      std::swap(order[k], order[j]);
      mask[o * in + order[k]] = 1;
    }
  }
  return mask;
}

template <typename T>
DelayConnection<T>::DelayConnection(std::size_t in, std::size_t out, std::size_t kernel_size, Random& rng,
                                    std::vector<std::uint8_t> mask)
    : in_(in), out_(out), kernel_size_(kernel_size), mask_(std::move(mask)) {
  if (in == 0 || out == 0 || kernel_size == 0) throw std::invalid_argument("delay connection: empty dimension");
  if (!mask_.empty() && mask_.size() != in * out) throw std::invalid_argument("delay connection: mask size mismatch");
  targets_.assign(in_, {});
  std::vector<std::size_t> fan_in(out_, 0);
  for (std::size_t o = 0; o < out_; ++o)
    for (std::size_t i = 0; i < in_; ++i)
      if (mask_.empty() || mask_[o * in_ + i]) {
        targets_[i].push_back(o);
        ++fan_in[o];
      }

  Tensor<T> w({out_, in_}), d({out_, in_});
  const double max_delay = static_cast<double>(kernel_size_ - 1);
  for (std::size_t o = 0; o < out_; ++o)
    for (std::size_t i = 0; i < in_; ++i) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in[o], 1)));
      const double wv = rng.uniform(-bound, bound);
      const double dv = rng.uniform(0.0, max_delay);
      const bool on = mask_.empty() || mask_[o * in_ + i];
      w[o * in_ + i] = on ? static_cast<T>(wv) : T{0};
      d[o * in_ + i] = static_cast<T>(dv);
    }
  weights_ = std::make_shared<Parameter<T>>("delay.weight", ParamRole::Weight, std::move(w));
  delays_ = std::make_shared<Parameter<T>>("delay.delay", ParamRole::Position, std::move(d));
  delays_->bounds = {{T{0}, static_cast<T>(max_delay)}};
}

template <typename T>
void DelayConnection<T>::set_sigma(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("delay sigma must be > 0");
  sigma_ = sigma;
}

template <typename T>
std::size_t DelayConnection<T>::synapse_count() const {
  std::size_t n = 0;
  for (const auto& t : targets_) n += t.size();
  return n;
}

template <typename T>
void DelayConnection<T>::check_delays() const {
  const double hi = static_cast<double>(kernel_size_ - 1);
  for (T d : delays_->value.values())
    if (!(d >= T{0} && d <= static_cast<T>(hi)))
      throw std::out_of_range("delay " + std::to_string(static_cast<double>(d)) + " outside [0, " +
                              std::to_string(kernel_size_ - 1) + "]");
}

template <typename T>
void DelayConnection<T>::build_kernel() {
  check_delays();
  kernel_ = Tensor<T>({out_, in_, kernel_size_});
  normalizer_ = Tensor<T>({out_, in_});
  const double centre_base = static_cast<double>(kernel_size_) - 1.0;
  for (std::size_t i = 0; i < in_; ++i)
    for (std::size_t o : targets_[i]) {
      const std::size_t s = o * in_ + i;
      const double w = weights_->value[s], d = delays_->value[s];
      T* k = kernel_.data() + s * kernel_size_;
      if (discrete_) {
        k[discrete_tap(d, kernel_size_)] = static_cast<T>(w);
        continue;
      }
      double c = kDelayNormalizationEps;
      for (std::size_t n = 0; n < kernel_size_; ++n) {
        const double z = (static_cast<double>(n) - centre_base + d) / sigma_;
        const double e = std::exp(-0.5 * z * z);
        k[n] = static_cast<T>(e);
        c += e;
      }
      normalizer_[s] = static_cast<T>(c);
      for (std::size_t n = 0; n < kernel_size_; ++n) k[n] = static_cast<T>(w * k[n] / c);
    }
}

template <typename T>
Tensor<T> DelayConnection<T>::kernel() const {
  auto copy = *this;
  copy.build_kernel();
  return copy.kernel_;
}

template <typename T>
void DelayConnection<T>::discretize() {
  for (auto& d : delays_->value.values()) d = static_cast<T>(std::round(static_cast<double>(d)));
  discrete_ = true;
}

// out[b,o,t] = sum_i sum_n k[o,i,n] x[b,i,t+n-T_d+1]; driven by the nonzero
// inputs, so spike trains cost in proportion to their spike count.
template <typename T>
Tensor<T> DelayConnection<T>::forward(const Tensor<T>& x, Mode) {
  check_btc(x.shape(), "delay connection");
  if (x.dim(1) != in_) throw std::invalid_argument("delay connection: expected " + std::to_string(in_) + " inputs");
  build_kernel();
  input_ = x;
  const std::size_t batch = x.dim(0), steps = x.dim(2), td = kernel_size_;
  Tensor<T> out({batch, out_, steps});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < in_; ++i) {
      const T* xi = x.data() + (b * in_ + i) * steps;
      for (std::size_t ts = 0; ts < steps; ++ts) {
        const T xv = xi[ts];
        if (xv == T{0}) continue;
        // tap n lands at t = ts + td - 1 - n
        const std::size_t n_lo = ts + td > steps ? ts + td - steps : 0;
        for (std::size_t o : targets_[i]) {
          const T* k = kernel_.data() + (o * in_ + i) * td;
          T* y = out.data() + (b * out_ + o) * steps + ts + td - 1;
          if (discrete_) {
            const std::size_t n = discrete_tap(delays_->value[o * in_ + i], td);
            if (n >= n_lo) *(y - n) += k[n] * xv;
            continue;
          }
          for (std::size_t n = n_lo; n < td; ++n) *(y - n) += k[n] * xv;
        }
      }
    }
  return out;
}

template <typename T>
Tensor<T> DelayConnection<T>::backward(const Tensor<T>& grad_output) {
  const std::size_t batch = input_.dim(0), steps = input_.dim(2), td = kernel_size_;
  // grad of each kernel tap: gk[o,i,n] = sum_b sum_ts x[b,i,ts] g[b,o,ts+td-1-n]
  Tensor<T> gk({out_, in_, td});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < in_; ++i) {
      const T* xi = input_.data() + (b * in_ + i) * steps;
      for (std::size_t ts = 0; ts < steps; ++ts) {
        const T xv = xi[ts];
        if (xv == T{0}) continue;
        const std::size_t n_lo = ts + td > steps ? ts + td - steps : 0;
        for (std::size_t o : targets_[i]) {
          T* g_k = gk.data() + (o * in_ + i) * td;
          const T* g = grad_output.data() + (b * out_ + o) * steps + ts + td - 1;
          for (std::size_t n = n_lo; n < td; ++n) g_k[n] += *(g - n) * xv;
        }
      }
    }

  const double centre_base = static_cast<double>(td) - 1.0;
  for (std::size_t i = 0; i < in_; ++i)
    for (std::size_t o : targets_[i]) {
      const std::size_t s = o * in_ + i;
      const T* g_k = gk.data() + s * td;
      if (discrete_) {
        weights_->grad[s] += g_k[discrete_tap(delays_->value[s], td)];
        continue;
      }
      const double w = weights_->value[s], d = delays_->value[s], c = normalizer_[s];
      // e_n = exp(-z^2/2), z = (n - td + 1 + d)/sigma, de/dd = -z e / sigma
      double ge = 0.0, ge_prime = 0.0, c_prime = 0.0;
      for (std::size_t n = 0; n < td; ++n) {
        const double z = (static_cast<double>(n) - centre_base + d) / sigma_;
        const double e = std::exp(-0.5 * z * z);
        const double e_prime = -z * e / sigma_;
        ge += g_k[n] * e;
        ge_prime += g_k[n] * e_prime;
        c_prime += e_prime;
      }
      weights_->grad[s] += static_cast<T>(ge / c);
      delays_->grad[s] += static_cast<T>(w / c * (ge_prime - ge * c_prime / c));
    }

  if (!this->input_gradient_required_) return {};
  // gx[b,i,ts] = sum_o sum_n k[o,i,n] g[b,o,ts+td-1-n]
  Tensor<T> gx(input_.shape());
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < in_; ++i) {
      T* gxi = gx.data() + (b * in_ + i) * steps;
      for (std::size_t o : targets_[i]) {
        const T* k = kernel_.data() + (o * in_ + i) * td;
        const T* g = grad_output.data() + (b * out_ + o) * steps;
        if (discrete_) {
          const std::size_t n = discrete_tap(delays_->value[o * in_ + i], td);
          for (std::size_t ts = 0; ts + td - 1 - n < steps; ++ts) gxi[ts] += k[n] * g[ts + td - 1 - n];
          continue;
        }
        for (std::size_t n = 0; n < td; ++n) {
          const T kn = k[n];
          const std::size_t shift = td - 1 - n;
          for (std::size_t ts = 0; ts + shift < steps; ++ts) gxi[ts] += kn * g[ts + shift];
        }
      }
    }
  return gx;
}

// ---------------------------------------------------------------------------
// Model

std::string_view to_string(Ablation mode) {
  switch (mode) {
    case Ablation::LearnDelays: return "learn-delays";
    case Ablation::FixedRandomDelays: return "fixed-random-delays";
    case Ablation::NoDelays: return "no-delays";
    case Ablation::FixedWeights: return "fixed-weights";
    case Ablation::ConstantSigma: return "constant-sigma";
  }
  return "?";
}

Ablation parse_ablation(std::string_view name) {
  for (auto mode : {Ablation::LearnDelays, Ablation::FixedRandomDelays, Ablation::NoDelays, Ablation::FixedWeights,
                    Ablation::ConstantSigma})
    if (to_string(mode) == name) return mode;
  throw std::invalid_argument("unknown ablation mode '" + std::string(name) + "'");
}

template <typename T>
SnnModel<T>::SnnModel(const SnnConfig& config, Random& rng, std::uint64_t dropout_seed) : config_(config) {
  if (config_.inputs == 0 || config_.classes == 0) throw std::invalid_argument("snn: inputs and classes must be > 0");
  config_.lif.validate();
  std::size_t prev = config_.inputs;
  for (std::size_t h = 0; h < config_.hidden.size(); ++h) {
    const std::size_t width = config_.hidden[h];
    std::vector<std::uint8_t> mask;
    if (config_.sparsity > 0.0) mask = fixed_fan_in_mask(prev, width, fan_in_for_sparsity(prev, config_.sparsity), rng);
    auto delay = std::make_shared<DelayConnection<T>>(prev, width, config_.kernel_size, rng, std::move(mask));
    delay_layers_.push_back(delay);
    net_.add(delay);
    if (config_.batchnorm) net_.add(std::make_shared<BatchNorm<T>>(width));
    auto lif = std::make_shared<Lif<T>>(config_.lif, config_.smooth);
    lif_layers_.push_back(lif);
    net_.add(lif);
    if (config_.dropout > 0.0) net_.add(std::make_shared<Dropout<T>>(config_.dropout, dropout_seed + h));
    prev = width;
  }
  auto readout = std::make_shared<DelayConnection<T>>(prev, config_.classes, config_.kernel_size, rng);
  delay_layers_.push_back(readout);
  net_.add(readout);
  net_.add(std::make_shared<LeakyReadout<T>>(config_.readout_tau));
  net_.set_input_gradient_required(false);
}

template <typename T>
Tensor<T> SnnModel<T>::forward(const Tensor<T>& spikes, Mode mode) {
  return net_.forward(spikes, mode);
}

template <typename T>
void SnnModel<T>::backward(const Tensor<T>& grad_potentials) {
  net_.backward(grad_potentials);
}

template <typename T>
void SnnModel<T>::set_sigma(double sigma) {
  for (auto& d : delay_layers_) d->set_sigma(sigma);
}

template <typename T>
void SnnModel<T>::set_discrete(bool discrete) {
  for (auto& d : delay_layers_) d->set_discrete(discrete);
}

template <typename T>
void SnnModel<T>::zero_delays() {
  for (auto& d : delay_layers_) d->delays()->value.fill(T{0});
}

// ---------------------------------------------------------------------------
// Datasets

SpikeTaskKind parse_spike_task(std::string_view name) {
  if (name == "coincidence") return SpikeTaskKind::Coincidence;
  if (name == "delayed-pattern") return SpikeTaskKind::DelayedPattern;
  throw std::invalid_argument("unknown spike task '" + std::string(name) + "'");
}

template <typename T>
Tensor<T> SpikeDataset::batch(const std::vector<std::size_t>& indices, std::size_t begin, std::size_t end) const {
  const std::size_t row = spikes.size() / std::max<std::size_t>(size(), 1);
  Tensor<T> out({end - begin, spikes.dim(1), spikes.dim(2)});
  for (std::size_t r = begin; r < end; ++r)
    std::copy_n(spikes.data() + indices[r] * row, row, out.data() + (r - begin) * row);
  return out;
}

std::vector<int> SpikeDataset::batch_labels(const std::vector<std::size_t>& indices, std::size_t begin,
                                            std::size_t end) const {
  std::vector<int> out;
  for (std::size_t r = begin; r < end; ++r) out.push_back(labels[indices[r]]);
  return out;
}

SpikeDataset make_synthetic_dataset(const SpikeTaskSpec& spec_in, std::uint64_t seed) {
  SpikeTaskSpec spec = spec_in;
  if (spec.kind == SpikeTaskKind::Coincidence) {
    spec.classes = 2;
    spec.channels = 2;
    spec.max_offset = 8;
  }
  if (spec.classes < 2 || spec.channels == 0 || spec.samples == 0)
    throw std::invalid_argument("spike task: need >= 2 classes, >= 1 channel, >= 1 sample");
  if (spec.steps < spec.max_offset + 2 * spec.jitter + 1)
    throw std::invalid_argument("spike task: steps too short for max_offset and jitter");
  if (spec.noise_spikes + 1 > spec.steps) throw std::invalid_argument("spike task: too many noise spikes");

  Random rng(seed);
  // offsets[c][i]: onset-relative spike time of channel i in class c
  std::vector<std::vector<std::size_t>> offsets(spec.classes, std::vector<std::size_t>(spec.channels, 0));
  if (spec.kind == SpikeTaskKind::Coincidence) {
    offsets[1][1] = 8;
  } else {
    for (auto& row : offsets)
      for (auto& v : row) v = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(spec.max_offset)));
  }

  SpikeDataset data;
  data.classes = spec.classes;
  data.spikes = Tensor<double>({spec.samples, spec.channels, spec.steps});
  data.labels.resize(spec.samples);
  const auto last_onset = static_cast<std::int64_t>(spec.steps - 1 - spec.max_offset - 2 * spec.jitter);
  const auto jitter = static_cast<std::int64_t>(spec.jitter);
  for (std::size_t s = 0; s < spec.samples; ++s) {
    const auto label = static_cast<int>(s % spec.classes);
    data.labels[s] = label;
    const std::int64_t onset = rng.integer(0, last_onset) + jitter;
    double* row = data.spikes.data() + s * spec.channels * spec.steps;
    for (std::size_t i = 0; i < spec.channels; ++i) {
      double* train = row + i * spec.steps;
      const std::int64_t t = onset + static_cast<std::int64_t>(offsets[label][i]) + (jitter ? rng.integer(-jitter, jitter) : 0);
      train[t] = 1.0;
      for (std::size_t k = 0; k < spec.noise_spikes;) {
        const auto u = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(spec.steps - 1)));
        if (train[u] != 0.0) continue;
        train[u] = 1.0;
        ++k;
      }
    }
  }
  return data;
}

#define DCLS_INSTANTIATE(T)                                                                                 \
  template class Lif<T>;                                                                                    \
  template class LeakyReadout<T>;                                                                           \
  template Tensor<T> readout_scores<T>(const Tensor<T>&);                                                   \
  template T readout_loss<T>(const Tensor<T>&, const std::vector<int>&, Tensor<T>*);                        \
  template class DelayConnection<T>;                                                                        \
  template class SnnModel<T>;                                                                               \
  template Tensor<T> SpikeDataset::batch<T>(const std::vector<std::size_t>&, std::size_t, std::size_t) const;

DCLS_INSTANTIATE(float)
DCLS_INSTANTIATE(double)

#undef DCLS_INSTANTIATE

}  // namespace dcls
