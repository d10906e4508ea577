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

#include "dcls/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dcls/conv.hpp"
#include "dcls/kernel.hpp"
#include "dcls/random.hpp"
#include "dcls/snn.hpp"

namespace dcls {

std::vector<double> central_difference(const std::function<double()>& f, Tensor<double>& theta, double step) {
  std::vector<double> grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + step;
    const double up = f();
    theta[i] = saved - step;
    const double down = f();
    theta[i] = saved;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

double gradient_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  if (analytic.size() != numeric.size()) throw std::invalid_argument("gradient sizes differ");
  double diff = 0.0, scale = 1e-6;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  return diff / scale;
}

namespace {

constexpr double kKinkMargin = 1e-4;

class Checker {
 public:
  Checker(GradcheckReport& report, bool fault) : report_(report), fault_(fault) {}

  void compare(Tensor<double> analytic, const std::vector<double>& numeric, const std::string& what) {
    if (fault_)
      for (auto& v : analytic.values()) v = v * 1.01 + 1e-3;
    const double err = gradient_error(analytic.vector(), numeric);
    if (err >= report_.worst) {
      report_.worst = err;
      report_.worst_case = "instance " + std::to_string(report_.instances) + " " + what;
    }
  }

 private:
  GradcheckReport& report_;
  bool fault_;
};

Tensor<double> uniform_tensor(Random& rng, const Shape& shape, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(shape);
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

DclsParams<double> random_kernel_params(Random& rng, std::size_t dims, bool with_sigma) {
  const auto c_out = static_cast<std::size_t>(rng.integer(1, 2));
  const auto c_in = static_cast<std::size_t>(rng.integer(1, 2));
  const auto m = static_cast<std::size_t>(rng.integer(1, 4));
  DclsParams<double> p;
  p.dilated_kernel_size.resize(dims);
  for (auto& s : p.dilated_kernel_size) s = static_cast<std::size_t>(rng.integer(2, 6));
  p.weights = uniform_tensor(rng, {c_out, c_in, m});
  p.positions = Tensor<double>({dims, c_out, c_in, m});
  const std::size_t per_axis = c_out * c_in * m;
  for (std::size_t a = 0; a < dims; ++a) {
    const auto b = position_bounds(p.dilated_kernel_size[a]);
    for (std::size_t e = 0; e < per_axis; ++e) p.positions[a * per_axis + e] = rng.uniform(b.lo, b.hi);
  }
  if (with_sigma) p.sigmas = uniform_tensor(rng, {dims, c_out, c_in, m}, -0.8, 0.8);
  return p;
}

bool near_kink(const DclsParams<double>& p, InterpKind kind) {
  const std::size_t n = p.weights.size();
  for (std::size_t a = 0; a < p.spatial_dims(); ++a)
    for (std::size_t e = 0; e < n; ++e) {
      const double q = p.positions[a * n + e] + static_cast<double>(p.dilated_kernel_size[a] / 2);
      if (kind == InterpKind::Bilinear) {
        const double r = q - std::floor(q);
        if (r < kKinkMargin || r > 1 - kKinkMargin) return true;
        continue;
      }
      const double sigma = p.sigmas[a * n + e];
      if (std::abs(sigma) < kKinkMargin) return true;
      if (kind != InterpKind::Triangle) continue;
      const double scale = effective_scale(kind, sigma);
      for (std::size_t c = 0; c < p.dilated_kernel_size[a]; ++c) {
        const double x = std::abs(q - static_cast<double>(c));
        if (x < kKinkMargin || std::abs(x - scale) < kKinkMargin) return true;
      }
    }
  return false;
}

void check_kernel(Checker& check, Random& rng, std::size_t dims, InterpKind kind) {
  DclsParams<double> p;
  do p = random_kernel_params(rng, dims, kind != InterpKind::Bilinear);
  while (near_kink(p, kind));
  const Tensor<double> g = uniform_tensor(rng, p.kernel_shape());
  const auto grads = backward_kernel(g, p, kind);
  auto f = [&] { return dot(g, construct_kernel(p, kind)); };
  const std::string tag = std::string(to_string(kind)) + " " + std::to_string(dims) + "d ";
  check.compare(grads.weights, central_difference(f, p.weights), tag + "weights");
  check.compare(grads.positions, central_difference(f, p.positions), tag + "positions");
  if (kind != InterpKind::Bilinear) check.compare(grads.sigmas, central_difference(f, p.sigmas), tag + "sigmas");
}

void check_conv(Checker& check, Random& rng) {
  const auto dims = static_cast<std::size_t>(rng.integer(1, 2));
  const auto groups = static_cast<std::size_t>(rng.integer(1, 2));
  const std::size_t c_in = groups * static_cast<std::size_t>(rng.integer(1, 2));
  const std::size_t c_out = groups * static_cast<std::size_t>(rng.integer(1, 2));
  ConvSpec spec;
  Shape in_shape{static_cast<std::size_t>(rng.integer(1, 2)), c_in};
  Shape w_shape{c_out, c_in / groups};
  for (std::size_t a = 0; a < dims; ++a) {
    spec.kernel_size.push_back(static_cast<std::size_t>(rng.integer(1, 3)));
    spec.stride.push_back(static_cast<std::size_t>(rng.integer(1, 2)));
    spec.dilation.push_back(static_cast<std::size_t>(rng.integer(1, 2)));
    spec.padding.push_back(static_cast<std::size_t>(rng.integer(0, 1)));
    in_shape.push_back(static_cast<std::size_t>(rng.integer(5, 8)));
    w_shape.push_back(spec.kernel_size.back());
  }
  spec.groups = groups;
  auto x = uniform_tensor(rng, in_shape);
  auto w = uniform_tensor(rng, w_shape);
  const auto y = conv_forward(x, w, Tensor<double>(), spec);
  const auto g = uniform_tensor(rng, y.shape());
  auto f = [&] { return dot(g, conv_forward(x, w, Tensor<double>(), spec)); };
  check.compare(conv_backward_weight(x, g, spec), central_difference(f, w), "conv weight");
  check.compare(conv_backward_input(g, w, x.shape(), spec), central_difference(f, x), "conv input");
}

void check_snn(Checker& check, Random& rng) {
  SnnConfig config;
  config.inputs = 3;
  config.hidden = {4};
  config.classes = 3;
  config.kernel_size = 4;
  config.lif = LifConfig{3.0, 0.5};
  config.readout_tau = 2.5;
  config.smooth = true;
  for (;;) {
    config.batchnorm = rng.bernoulli(0.5);
    Random init(static_cast<std::uint64_t>(rng.integer(0, 1 << 30)));
    SnnModel<double> model(config, init);
    model.set_sigma(rng.uniform(0.5, 2.0));
    for (const auto& layer : model.delay_layers())
      for (auto& d : layer->delays()->value.values()) d = rng.uniform(0.05, 2.95);
    Tensor<double> x({2, 3, 10});
    for (auto& v : x.values()) v = rng.bernoulli(0.3) ? 1.0 : 0.0;
    const std::vector<int> labels{static_cast<int>(rng.integer(0, 2)), static_cast<int>(rng.integer(0, 2))};
    Tensor<double> gu;
    readout_loss(model.forward(x, Mode::Train), labels, &gu);
    bool kink = false;
    for (const auto& lif : model.lif_layers())
      for (double v : lif->potentials().values()) kink |= std::abs(v - lif->config().threshold) < kKinkMargin;
    if (kink) continue;
    for (auto& p : model.parameters()) p->zero_grad();
    model.backward(gu);
    auto loss = [&] { return static_cast<double>(readout_loss(model.forward(x, Mode::Train), labels, static_cast<Tensor<double>*>(nullptr))); };
    for (std::size_t l = 0; l < model.delay_layers().size(); ++l) {
      const auto& layer = model.delay_layers()[l];
      const std::string tag = "snn layer " + std::to_string(l);
      const Tensor<double> gw = layer->weights()->grad, gd = layer->delays()->grad;
      check.compare(gw, central_difference(loss, layer->weights()->value), tag + " weights");
      check.compare(gd, central_difference(loss, layer->delays()->value), tag + " delays");
    }
    return;
  }
}

}  // namespace

std::vector<std::string> gradcheck_scopes() { return {"dcls1d", "dcls2d", "dcls3d", "interp", "conv", "snn"}; }

GradcheckReport run_gradcheck(const std::string& scope, std::uint64_t seed, std::size_t instances, bool inject_fault) {
  const auto scopes = gradcheck_scopes();
  if (std::find(scopes.begin(), scopes.end(), scope) == scopes.end())
    throw std::invalid_argument("unknown gradcheck scope '" + scope + "'");
  GradcheckReport report;
  report.scope = scope;
  report.threshold = scope == "snn" ? 1e-4 : 1e-5;
  Checker check(report, inject_fault);
  Random rng(seed);
  for (std::size_t i = 0; i < instances; ++i) {
    if (scope == "dcls1d" || scope == "dcls2d" || scope == "dcls3d") {
      check_kernel(check, rng, static_cast<std::size_t>(scope[4] - '0'), InterpKind::Bilinear);
    } else if (scope == "interp") {
      check_kernel(check, rng, 1 + i % 3, InterpKind::Triangle);
      check_kernel(check, rng, 1 + i % 3, InterpKind::Gauss);
    } else if (scope == "conv") {
      check_conv(check, rng);
    } else {
      check_snn(check, rng);
    }
    ++report.instances;
  }
  return report;
}

}  // namespace dcls
