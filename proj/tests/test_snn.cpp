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

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "dcls/conv.hpp"
#include "dcls/optim.hpp"
#include "dcls/snn.hpp"
#include "oracles.hpp"

using dcls::LifConfig;
using dcls::Mode;
using dcls::Tensor;

TEST_CASE("lif: configuration is validated") {
  CHECK_THROWS_AS(dcls::Lif<double>(LifConfig{1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(dcls::Lif<double>(LifConfig{0.5, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(dcls::Lif<double>(LifConfig{2.0, 0.0}), std::invalid_argument);
  CHECK_NOTHROW(dcls::Lif<double>(LifConfig{1.0001, 1.0}));
}

TEST_CASE("lif: hand-traced membrane with leak 1/2") {
  dcls::Lif<double> lif(LifConfig{2.0, 1.0});
  const Tensor<double> current({1, 1, 6}, {0.6, 0.6, 0.6, 0.0, 1.2, 0.1});
  const auto spikes = lif.forward(current, Mode::Train);
  // v: 0.6, 0.9, 1.05 (fire, reset), 0, 1.2 (fire, reset), 0.1
  const double v[6] = {0.6, 0.9, 1.05, 0.0, 1.2, 0.1};
  const double s[6] = {0, 0, 1, 0, 1, 0};
  for (std::size_t t = 0; t < 6; ++t) {
    CHECK(lif.potentials()[t] == doctest::Approx(v[t]).epsilon(1e-15));
    CHECK(spikes[t] == s[t]);
  }
}

TEST_CASE("lif: near-unit tau is memoryless, threshold-level input fires every step") {
  oracle::Rng rng(1);
  dcls::Lif<double> fast(LifConfig{1.0001, 10.0});
  const auto current = rng.tensor({2, 3, 20}, 0.0, 1.0);
  fast.forward(current, Mode::Train);
  for (std::size_t k = 0; k < current.size(); ++k) CHECK(std::abs(fast.potentials()[k] - current[k]) < 1e-3);

  dcls::Lif<double> slow(LifConfig{1e6, 0.7});
  const auto spikes = slow.forward(Tensor<double>::full({1, 1, 10}, 0.7), Mode::Train);
  for (double v : spikes.values()) CHECK(v == 1.0);
}

TEST_CASE("surrogate: peak, symmetry, tails, unit mass, matches smooth step") {
  CHECK(dcls::surrogate_derivative(0.0, 2.0) == 1.0);
  CHECK(dcls::surrogate_derivative(0.3, 2.0) == dcls::surrogate_derivative(-0.3, 2.0));
  CHECK(dcls::surrogate_derivative(1e6, 2.0) < 1e-12);
  CHECK(dcls::surrogate_derivative(0.1, 2.0) < dcls::surrogate_derivative(0.05, 2.0));

  // trapezoid over [-L, L]; each tail beyond L holds about 2/(pi^2 alpha L)
  const double L = 1e4, h = 1e-3;
  for (double alpha : {2.0, 0.5, 5.0}) {
    double integral = 0.0;
    const auto n = static_cast<long>(2 * L / h);
    for (long i = 0; i <= n; ++i) {
      const double x = -L + i * h;
      integral += (i == 0 || i == n ? 0.5 : 1.0) * dcls::surrogate_derivative(x, alpha);
    }
    integral *= h;
    const double tails = 4.0 / (std::numbers::pi * std::numbers::pi * alpha * L);
    CHECK(std::abs(integral + tails - 1.0) < 1e-6);
  }

  for (double x : {-0.7, -0.01, 0.0, 0.2, 1.5}) {
    const double fd = (dcls::smooth_heaviside(x + 1e-6, 2.0) - dcls::smooth_heaviside(x - 1e-6, 2.0)) / 2e-6;
    CHECK(fd == doctest::Approx(dcls::surrogate_derivative(x, 2.0)).epsilon(1e-8));
  }
}

TEST_CASE("lif backward: surrogate gradient through the leak, reset detached") {
  dcls::Lif<double> lif(LifConfig{2.0, 1.0, 0.0, 2.0});
  const Tensor<double> current({1, 1, 3}, {0.6, 0.6, 0.6});
  lif.forward(current, Mode::Train);
  const Tensor<double> g({1, 1, 3}, {0.0, 0.0, 1.0});
  const auto gi = lif.backward(g);
  // v2 = 1.05, dS2/dv2 = surrogate(0.05); v2 = 0.5 v1 + I2, v1 = 0.5 v0 + I1
  const double sg = dcls::surrogate_derivative(0.05, 2.0);
  CHECK(gi[2] == doctest::Approx(sg).epsilon(1e-15));
  CHECK(gi[1] == doctest::Approx(0.5 * sg).epsilon(1e-15));
  CHECK(gi[0] == doctest::Approx(0.25 * sg).epsilon(1e-15));
}

TEST_CASE("readout loss: uniform potentials give log K, dominance gives a small loss") {
  const auto uniform = Tensor<double>::full({3, 4, 7}, 0.3);
  CHECK(dcls::readout_loss(uniform, {0, 1, 3}, static_cast<Tensor<double>*>(nullptr)) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-14));

  Tensor<double> dominant({1, 3, 10});
  for (std::size_t t = 0; t < 10; ++t) dominant.at(0, 1, t) = 200.0;
  // scores: 10 for the label, 0 elsewhere
  CHECK(dcls::readout_loss(dominant, {1}, static_cast<Tensor<double>*>(nullptr)) ==
        doctest::Approx(std::log(1.0 + 2.0 * std::exp(-10.0))).epsilon(1e-12));
}

TEST_CASE("readout loss gradient matches finite differences") {
  oracle::Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    auto u = rng.tensor({2, 3, 6}, -2, 2);
    const std::vector<int> labels{static_cast<int>(rng.index(0, 2)), static_cast<int>(rng.index(0, 2))};
    Tensor<double> grad;
    dcls::readout_loss(u, labels, &grad);
    auto f = [&] { return dcls::readout_loss(u, labels, static_cast<Tensor<double>*>(nullptr)); };
    CHECK(oracle::relative_error(grad, oracle::central_difference(f, u)) < 1e-7);
  }
}

TEST_CASE("readout integrator: leaky sum and its adjoint") {
  dcls::LeakyReadout<double> readout(2.0);
  const auto u = readout.forward(Tensor<double>({1, 1, 3}, {1, 2, 4}), Mode::Train);
  CHECK(u[0] == 1.0);
  CHECK(u[1] == 2.5);
  CHECK(u[2] == 5.25);
  const auto g = readout.backward(Tensor<double>({1, 1, 3}, {1, 0, 1}));
  CHECK(g[2] == 1.0);
  CHECK(g[1] == 0.5);
  CHECK(g[0] == 1.25);
}

// ---------------------------------------------------------------------------
// Delay connections

namespace {

dcls::DelayConnection<double> single_synapse(double w, double d, std::size_t td) {
  dcls::Random rng(0);
  dcls::DelayConnection<double> layer(1, 1, td, rng);
  layer.weights()->value[0] = w;
  layer.delays()->value[0] = d;
  return layer;
}

/// Dense oracle: left-pad by T_d - 1, then a plain valid cross-correlation.
Tensor<double> padded_conv(const Tensor<double>& x, const Tensor<double>& kernel) {
  const std::size_t td = kernel.dim(2), steps = x.dim(2);
  Tensor<double> padded({x.dim(0), x.dim(1), steps + td - 1});
  for (std::size_t r = 0; r < x.dim(0) * x.dim(1); ++r)
    for (std::size_t t = 0; t < steps; ++t) padded[r * (steps + td - 1) + td - 1 + t] = x[r * steps + t];
  return dcls::conv_forward(padded, kernel, Tensor<double>(), dcls::ConvSpec::uniform(1, td));
}

}  // namespace

TEST_CASE("discrete delay of 8 moves a spike from t=3 to t=11") {
  auto layer = single_synapse(1.0, 8.0, 10);
  layer.set_discrete(true);
  Tensor<double> x({1, 1, 20});
  x[3] = 1.0;
  const auto y = layer.forward(x, Mode::Eval);
  for (std::size_t t = 0; t < 20; ++t) CHECK(y[t] == (t == 11 ? 1.0 : 0.0));
}

TEST_CASE("discrete tap rounds halves away from zero") {
  CHECK(dcls::discrete_tap(3.4, 10) == 10 - 4);
  CHECK(dcls::discrete_tap(3.5, 10) == 10 - 5);
  CHECK(dcls::discrete_tap(2.5, 10) == 10 - 4);
  CHECK(dcls::discrete_tap(0.0, 10) == 9);
  CHECK(dcls::discrete_tap(9.0, 10) == 0);
  CHECK_THROWS_AS(dcls::discrete_tap(9.6, 10), std::out_of_range);
  CHECK_THROWS_AS(dcls::discrete_tap(-0.6, 10), std::out_of_range);
}

TEST_CASE("zero weight gives zero output; out-of-range delay is an error") {
  oracle::Rng rng(3);
  auto layer = single_synapse(0.0, 2.3, 5);
  layer.set_sigma(1.5);
  const auto y = layer.forward(rng.tensor({2, 1, 12}), Mode::Train);
  for (double v : y.values()) CHECK(v == 0.0);
  layer.delays()->value[0] = 4.5;
  CHECK_THROWS_AS(layer.forward(rng.tensor({2, 1, 12}), Mode::Train), std::out_of_range);
  CHECK_THROWS_AS(layer.set_sigma(0.0), std::invalid_argument);
}

TEST_CASE("delay forward equals a dense padded conv with the explicit kernels") {
  oracle::Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    dcls::Random init(trial);
    const bool masked = trial % 2;
    auto mask = masked ? dcls::fixed_fan_in_mask(3, 2, 2, init) : std::vector<std::uint8_t>{};
    dcls::DelayConnection<double> layer(3, 2, 5, init, mask);
    layer.set_sigma(rng.uniform(0.3, 3.0));
    layer.set_discrete(trial % 3 == 0);
    const auto x = rng.tensor({2, 3, 20});
    const auto kernel = layer.kernel();
    CHECK(dcls::max_abs_diff(layer.forward(x, Mode::Train), padded_conv(x, kernel)) < 1e-12);
    if (masked)
      for (std::size_t s = 0; s < 6; ++s)
        if (!mask[s])
          for (std::size_t n = 0; n < 5; ++n) CHECK(kernel[s * 5 + n] == 0.0);
  }
}

TEST_CASE("continuous kernel: closed form at sigma 0.5, single tap as sigma shrinks") {
  const std::size_t td = 9;
  for (double d : {0.0, 3.0, 8.0}) {
    auto layer = single_synapse(1.7, d, td);
    layer.set_sigma(0.5);
    const auto k = layer.kernel();
    double mass = dcls::kDelayNormalizationEps;
    for (std::size_t n = 0; n < td; ++n) {
      const double z = (static_cast<double>(n) - (td - 1.0 - d)) / 0.5;
      mass += std::exp(-0.5 * z * z);
    }
    CHECK(k[td - 1 - static_cast<std::size_t>(d)] == doctest::Approx(1.7 / mass).epsilon(1e-14));

    // within 1e-3 of the single tap once the neighbours carry < 1e-3
    layer.set_sigma(0.25);
    auto discrete = single_synapse(1.7, d, td);
    discrete.set_discrete(true);
    CHECK(dcls::max_abs_diff(layer.kernel(), discrete.kernel()) / 1.7 < 1e-3);
  }
}

TEST_CASE("delay connection gradients match finite differences") {
  oracle::Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    dcls::Random init(100 + trial);
    const std::size_t in = rng.index(1, 3), out = rng.index(1, 3), td = rng.index(2, 7);
    auto mask = trial % 4 == 0 ? dcls::fixed_fan_in_mask(in, out, 1, init) : std::vector<std::uint8_t>{};
    dcls::DelayConnection<double> layer(in, out, td, init, mask);
    layer.set_sigma(rng.uniform(0.5, 3.0));
    // keep delays off the clamp bounds
    for (auto& d : layer.delays()->value.values()) d = rng.uniform(0.01, static_cast<double>(td) - 1.01);
    auto x = rng.tensor({2, in, rng.index(3, 12)});
    const auto y = layer.forward(x, Mode::Train);
    const auto g = rng.tensor(y.shape());
    for (auto& p : layer.parameters()) p->zero_grad();
    const auto gx = layer.backward(g);
    auto f = [&] { return oracle::dot(g, layer.forward(x, Mode::Train)); };
    CHECK(oracle::relative_error(layer.weights()->grad, oracle::central_difference(f, layer.weights()->value)) < 1e-6);
    CHECK(oracle::relative_error(layer.delays()->grad, oracle::central_difference(f, layer.delays()->value)) < 1e-6);
    CHECK(oracle::relative_error(gx, oracle::central_difference(f, x)) < 1e-6);
  }
}

TEST_CASE("fixed fan-in masks") {
  dcls::Random rng(6);
  const auto mask = dcls::fixed_fan_in_mask(100, 40, 2, rng);
  for (std::size_t o = 0; o < 40; ++o) CHECK(std::accumulate(mask.begin() + o * 100, mask.begin() + (o + 1) * 100, 0) == 2);
  CHECK(dcls::fan_in_for_sparsity(100, 0.98) == 2);
  CHECK(dcls::fan_in_for_sparsity(20, 0.98) == 1);
  CHECK(dcls::fan_in_for_sparsity(20, 0.0) == 20);
  CHECK_THROWS_AS(dcls::fan_in_for_sparsity(20, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(dcls::fixed_fan_in_mask(3, 2, 4, rng), std::invalid_argument);
}

TEST_CASE("discretize rounds delays and leaves one tap of value w per synapse") {
  dcls::Random init(7);
  dcls::DelayConnection<double> layer(4, 3, 6, init);
  layer.delays()->value[0] = 3.5;
  layer.delays()->value[1] = 3.4;
  layer.discretize();
  CHECK(layer.discrete());
  CHECK(layer.delays()->value[0] == 4.0);
  CHECK(layer.delays()->value[1] == 3.0);
  const auto k = layer.kernel();
  for (std::size_t s = 0; s < 12; ++s) {
    std::size_t nonzero = 0;
    for (std::size_t n = 0; n < 6; ++n)
      if (k[s * 6 + n] != 0.0) {
        ++nonzero;
        CHECK(n == 6 - static_cast<std::size_t>(layer.delays()->value[s]) - 1);
        CHECK(k[s * 6 + n] == layer.weights()->value[s]);
      }
    CHECK(nonzero == 1);
  }
}

TEST_CASE("optimizer steps keep delays inside [0, T_d - 1]") {
  dcls::Random init(8);
  dcls::DelayConnection<double> layer(3, 3, 5, init);
  dcls::Adam<double> opt({{"delays", {layer.delays()}, 0.5, 1.0, 0.0}});
  for (int step = 0; step < 40; ++step) {
    for (std::size_t i = 0; i < 9; ++i) layer.delays()->grad[i] = (step / 5 + i) % 2 ? 1e3 : -1e3;
    opt.step();
    for (double d : layer.delays()->value.values()) {
      CHECK(d >= 0.0);
      CHECK(d <= 4.0);
    }
  }
}

// ---------------------------------------------------------------------------
// End to end

namespace {

dcls::SnnConfig small_config(bool smooth, bool batchnorm) {
  dcls::SnnConfig c;
  c.inputs = 3;
  c.hidden = {4};
  c.classes = 3;
  c.kernel_size = 4;
  c.lif = LifConfig{3.0, 0.5};
  c.readout_tau = 2.5;
  c.batchnorm = batchnorm;
  c.smooth = smooth;
  return c;
}

bool near_threshold(dcls::SnnModel<double>& model, double margin) {
  for (const auto& lif : model.lif_layers())
    for (double v : lif->potentials().values())
      if (std::abs(v - lif->config().threshold) < margin) return true;
  return false;
}

}  // namespace

TEST_CASE("end-to-end SNN gradients of weights and delays match finite differences") {
  oracle::Rng rng(9);
  int checked = 0;
  double largest_delay_grad = 0.0;
  for (int trial = 0; checked < 200; ++trial) {
    dcls::Random init(1000 + trial);
    dcls::SnnModel<double> model(small_config(true, trial % 2 == 0), init);
    model.set_sigma(rng.uniform(0.5, 2.0));
    for (const auto& layer : model.delay_layers())
      for (auto& d : layer->delays()->value.values()) d = rng.uniform(0.05, 2.95);
    Tensor<double> x({2, 3, 10});
    for (auto& v : x.values()) v = rng.uniform(0, 1) < 0.3 ? 1.0 : 0.0;
    const std::vector<int> labels{static_cast<int>(rng.index(0, 2)), static_cast<int>(rng.index(0, 2))};

    auto loss = [&] {
      return dcls::readout_loss(model.forward(x, Mode::Train), labels, static_cast<Tensor<double>*>(nullptr));
    };
    Tensor<double> gu;
    dcls::readout_loss(model.forward(x, Mode::Train), labels, &gu);
    if (near_threshold(model, 1e-4)) continue;  // the hard reset flips there
    for (auto& p : model.parameters()) p->zero_grad();
    model.backward(gu);
    ++checked;
    for (const auto& layer : model.delay_layers()) {
      for (double v : layer->delays()->grad.values()) largest_delay_grad = std::max(largest_delay_grad, std::abs(v));
      CHECK(oracle::relative_error(layer->weights()->grad, oracle::central_difference(loss, layer->weights()->value)) <
            1e-4);
      CHECK(oracle::relative_error(layer->delays()->grad, oracle::central_difference(loss, layer->delays()->value)) <
            1e-4);
    }
  }
  CHECK(largest_delay_grad > 1e-2);
}

TEST_CASE("batch loss is the mean of per-sample losses") {
  dcls::Random init(10);
  dcls::SnnModel<double> model(small_config(false, false), init);
  model.set_sigma(1.0);
  oracle::Rng rng(11);
  Tensor<double> x({4, 3, 12});
  for (auto& v : x.values()) v = rng.uniform(0, 1) < 0.4 ? 1.0 : 0.0;
  const std::vector<int> labels{0, 2, 1, 2};
  const double batch = dcls::readout_loss(model.forward(x, Mode::Eval), labels, static_cast<Tensor<double>*>(nullptr));
  double mean = 0.0;
  for (std::size_t b = 0; b < 4; ++b) {
    Tensor<double> one({1, 3, 12});
    std::copy_n(x.data() + b * 36, 36, one.data());
    mean += dcls::readout_loss(model.forward(one, Mode::Eval), {labels[b]}, static_cast<Tensor<double>*>(nullptr)) / 4;
  }
  CHECK(batch == doctest::Approx(mean).epsilon(1e-14));
}

// ---------------------------------------------------------------------------
// Datasets

namespace {

std::vector<double> spike_counts(const dcls::SpikeDataset& data, std::size_t s) {
  const std::size_t channels = data.spikes.dim(1), steps = data.spikes.dim(2);
  std::vector<double> counts(channels, 0.0);
  for (std::size_t i = 0; i < channels; ++i)
    for (std::size_t t = 0; t < steps; ++t) counts[i] += data.spikes[(s * channels + i) * steps + t];
  return counts;
}

/// Softmax regression on the given features, trained by full-batch gradient
/// descent; returns accuracy on the held-out half.
double rate_classifier_accuracy(const std::vector<std::vector<double>>& features, const std::vector<int>& labels,
                                std::size_t classes) {
  const std::size_t n = features.size(), dim = features[0].size() + 1, half = n / 2;
  std::vector<double> w(classes * dim, 0.0);
  auto logits = [&](const std::vector<double>& f, std::vector<double>& z) {
    z.assign(classes, 0.0);
    for (std::size_t k = 0; k < classes; ++k) {
      z[k] = w[k * dim + dim - 1];
      for (std::size_t j = 0; j + 1 < dim; ++j) z[k] += w[k * dim + j] * f[j];
    }
  };
  std::vector<double> z, grad;
  for (int it = 0; it < 300; ++it) {
    grad.assign(w.size(), 0.0);
    for (std::size_t s = 0; s < half; ++s) {
      logits(features[s], z);
      const double peak = *std::max_element(z.begin(), z.end());
      double total = 0.0;
      for (auto& v : z) total += v = std::exp(v - peak);
      for (std::size_t k = 0; k < classes; ++k) {
        const double err = z[k] / total - (static_cast<int>(k) == labels[s] ? 1.0 : 0.0);
        for (std::size_t j = 0; j + 1 < dim; ++j) grad[k * dim + j] += err * features[s][j];
        grad[k * dim + dim - 1] += err;
      }
    }
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= 0.1 * grad[i] / static_cast<double>(half);
  }
  std::size_t correct = 0;
  for (std::size_t s = half; s < n; ++s) {
    logits(features[s], z);
    correct += static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin()) == labels[s];
  }
  return static_cast<double>(correct) / static_cast<double>(n - half);
}

}  // namespace

TEST_CASE("coincidence set: two channels, offset 8 against 0") {
  dcls::SpikeTaskSpec spec;
  spec.kind = dcls::SpikeTaskKind::Coincidence;
  spec.steps = 30;
  spec.samples = 40;
  const auto data = dcls::make_synthetic_dataset(spec, 3);
  CHECK(data.classes == 2);
  CHECK(data.spikes.shape() == dcls::Shape{40, 2, 30});
  for (std::size_t s = 0; s < 40; ++s) {
    long t0 = -1, t1 = -1;
    for (std::size_t t = 0; t < 30; ++t) {
      if (data.spikes.at(s, 0, t) == 1.0) t0 = static_cast<long>(t);
      if (data.spikes.at(s, 1, t) == 1.0) t1 = static_cast<long>(t);
    }
    CHECK(t1 - t0 == (data.labels[s] == 1 ? 8 : 0));
    CHECK(spike_counts(data, s) == std::vector<double>{1, 1});
  }
}

TEST_CASE("delayed-pattern set: shape, balance, reproducibility") {
  dcls::SpikeTaskSpec spec;
  spec.samples = 200;
  spec.noise_spikes = 2;
  spec.jitter = 1;
  const auto a = dcls::make_synthetic_dataset(spec, 5);
  const auto b = dcls::make_synthetic_dataset(spec, 5);
  const auto c = dcls::make_synthetic_dataset(spec, 6);
  CHECK(a.spikes.shape() == dcls::Shape{200, 20, 50});
  CHECK(a.classes == 10);
  CHECK(a.spikes == b.spikes);
  CHECK(a.labels == b.labels);
  CHECK(!(a.spikes == c.spikes));
  for (int k = 0; k < 10; ++k) CHECK(std::count(a.labels.begin(), a.labels.end(), k) == 20);
  for (std::size_t s = 0; s < 200; ++s) CHECK(spike_counts(a, s) == std::vector<double>(20, 3.0));
  spec.steps = 20;
  CHECK_THROWS_AS(dcls::make_synthetic_dataset(spec, 0), std::invalid_argument);
}

TEST_CASE("time-shuffled trains carry no class information for a rate classifier") {
  dcls::SpikeTaskSpec spec;
  spec.samples = 1000;
  spec.noise_spikes = 3;
  auto data = dcls::make_synthetic_dataset(spec, 7);
  std::mt19937_64 shuffle(8);
  const std::size_t channels = 20, steps = 50;
  std::vector<std::vector<double>> features;
  for (std::size_t s = 0; s < data.size(); ++s) {
    for (std::size_t i = 0; i < channels; ++i) {
      double* row = data.spikes.data() + (s * channels + i) * steps;
      std::shuffle(row, row + steps, shuffle);
    }
    features.push_back(spike_counts(data, s));
  }
  CHECK(rate_classifier_accuracy(features, data.labels, 10) <= 0.1 + 0.05);
}
