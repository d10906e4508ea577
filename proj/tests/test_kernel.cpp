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

#include "dcls/kernel.hpp"
#include "oracles.hpp"

using dcls::DclsParams;
using dcls::InterpKind;
using dcls::Shape;
using dcls::Tensor;

namespace {

DclsParams<double> single(double w, std::vector<double> pos, Shape size) {
  const std::size_t d = size.size();
  DclsParams<double> p;
  p.weights = Tensor<double>({1, 1, 1}, {w});
  p.positions = Tensor<double>({d, 1, 1, 1}, std::move(pos));
  p.sigmas = Tensor<double>({d, 1, 1, 1});
  p.dilated_kernel_size = std::move(size);
  return p;
}

/// Random parameters; positions uniform over the full clamp range.
DclsParams<double> random_params(oracle::Rng& rng, std::size_t dims, bool with_sigma) {
  const std::size_t c_out = rng.index(1, 2), c_in = rng.index(1, 2), m = rng.index(1, 4);
  Shape size(dims);
  for (auto& s : size) s = rng.index(2, 6);
  DclsParams<double> p;
  p.dilated_kernel_size = size;
  p.weights = rng.tensor({c_out, c_in, m});
  p.positions = Tensor<double>({dims, c_out, c_in, m});
  const std::size_t per_axis = c_out * c_in * m;
  for (std::size_t a = 0; a < dims; ++a) {
    const auto b = dcls::position_bounds(size[a]);
    for (std::size_t e = 0; e < per_axis; ++e) p.positions[a * per_axis + e] = rng.uniform(b.lo, b.hi);
  }
  if (with_sigma) p.sigmas = rng.tensor({dims, c_out, c_in, m}, -0.8, 0.8);
  return p;
}

double fractional(double v) { return v - std::floor(v); }

/// True when some element sits within `margin` of a non-differentiable point.
bool near_kink(const DclsParams<double>& p, InterpKind kind, double margin = 1e-4) {
  const std::size_t n = p.weights.size();
  for (std::size_t a = 0; a < p.spatial_dims(); ++a)
    for (std::size_t e = 0; e < n; ++e) {
      const double q = p.positions[a * n + e] + static_cast<double>(p.dilated_kernel_size[a] / 2);
      if (kind == InterpKind::Bilinear) {
        const double r = fractional(q);
        if (r < margin || r > 1 - margin) return true;
        continue;
      }
      const double sigma = p.sigmas[a * n + e];
      if (std::abs(sigma) < margin) return true;
      if (kind != InterpKind::Triangle) continue;
      const double scale = dcls::effective_scale(kind, sigma);
      for (std::size_t c = 0; c < p.dilated_kernel_size[a]; ++c) {
        const double x = std::abs(q - static_cast<double>(c));
        if (x < margin || std::abs(x - scale) < margin) return true;
      }
    }
  return false;
}

struct GradErrors {
  double weights = 0, positions = 0, sigmas = 0;
};

GradErrors fd_errors(DclsParams<double> p, InterpKind kind, oracle::Rng& rng) {
  const Tensor<double> g = rng.tensor(p.kernel_shape());
  const auto grads = dcls::backward_kernel(g, p, kind);
  auto f = [&] { return oracle::dot(g, dcls::construct_kernel(p, kind)); };
  GradErrors err;
  err.weights = oracle::relative_error(grads.weights, oracle::central_difference(f, p.weights));
  err.positions = oracle::relative_error(grads.positions, oracle::central_difference(f, p.positions));
  if (kind != InterpKind::Bilinear)
    err.sigmas = oracle::relative_error(grads.sigmas, oracle::central_difference(f, p.sigmas));
  return err;
}

}  // namespace

TEST_CASE("bilinear: integer position puts the whole weight on one cell") {
  const auto k = dcls::construct_bilinear(single(2.0, {0, 0}, {3, 3}));
  REQUIRE(k.shape() == Shape{1, 1, 3, 3});
  for (std::size_t i = 0; i < 9; ++i) CHECK(k[i] == (i == 4 ? 2.0 : 0.0));
}

TEST_CASE("bilinear: half-cell position splits evenly over four cells") {
  const auto k = dcls::construct_bilinear(single(1.0, {0.5, 0.5}, {3, 3}));
  const double expected[9] = {0, 0, 0, 0, 0.25, 0.25, 0, 0.25, 0.25};
  for (std::size_t i = 0; i < 9; ++i) CHECK(k[i] == expected[i]);
}

TEST_CASE("bilinear: out-of-range position throws, upper edge is a single cell") {
  CHECK_THROWS_AS(dcls::construct_bilinear(single(1.0, {1.5, 0}, {3, 3})), std::out_of_range);
  const auto k = dcls::construct_bilinear(single(1.0, {1.0, -1.0}, {3, 3}));
  CHECK(k.at(0, 0, 2, 0) == 1.0);
  CHECK(dcls::sum(k) == 1.0);
}

TEST_CASE("position bounds cover exactly [0, s-1] after centering") {
  for (std::size_t s = 1; s < 10; ++s) {
    const auto b = dcls::position_bounds(s);
    CHECK(b.lo + static_cast<double>(s / 2) == 0.0);
    CHECK(b.hi + static_cast<double>(s / 2) == static_cast<double>(s - 1));
  }
}

TEST_CASE("bilinear 1D backward: hand-evaluated cases") {
  // shifted position 0.5 between cells 0 and 1
  auto p = single(3.0, {0.5 - 2.0}, {5});
  const Tensor<double> g({1, 1, 5}, {0, 1, 0, 0, 0});
  const auto grads = dcls::backward_bilinear(g, p);
  CHECK(grads.positions[0] == 3.0);
  CHECK(grads.weights[0] == 0.5);

  const auto ones = Tensor<double>::full({1, 1, 5}, 1.0);
  CHECK(dcls::backward_bilinear(ones, p).positions[0] == 0.0);
}

TEST_CASE("bilinear backward with unit field: gradW = 1, gradP = 0") {
  oracle::Rng rng(21);
  for (int i = 0; i < 100; ++i) {
    const auto p = random_params(rng, 2, false);
    // only interior elements have a complete support
    if (near_kink(p, InterpKind::Bilinear)) continue;
    const auto grads = dcls::backward_bilinear(Tensor<double>::full(p.kernel_shape(), 1.0), p);
    for (double v : grads.weights.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
    for (double v : grads.positions.values()) CHECK(std::abs(v) < 1e-15);
  }
}

TEST_CASE("bilinear kernel sums to the sum of its weights") {
  oracle::Rng rng(22);
  for (std::size_t dims = 1; dims <= 3; ++dims)
    for (int i = 0; i < 200; ++i) {
      const auto p = random_params(rng, dims, false);
      const auto k = dcls::construct_bilinear(p);
      const std::size_t pairs = p.out_channels() * p.in_channels_per_group();
      const std::size_t cells = k.size() / pairs;
      for (std::size_t pair = 0; pair < pairs; ++pair) {
        double ks = 0, ws = 0;
        for (std::size_t c = 0; c < cells; ++c) ks += k[pair * cells + c];
        for (std::size_t e = 0; e < p.kernel_count(); ++e) ws += p.weights[pair * p.kernel_count() + e];
        CHECK(std::abs(ks - ws) <= 1e-12);
      }
    }
}

TEST_CASE("bilinear translation: +1 cell shifts the support with identical weights") {
  oracle::Rng rng(23);
  for (int i = 0; i < 200; ++i) {
    const double px = rng.uniform(-2, 0.99), py = rng.uniform(-2, 2);
    const auto a = dcls::construct_bilinear(single(1.3, {px, py}, {6, 5}));
    const auto b = dcls::construct_bilinear(single(1.3, {px + 1.0, py}, {6, 5}));
    for (std::size_t r = 0; r + 1 < 6; ++r)
      for (std::size_t c = 0; c < 5; ++c) CHECK(b.at(0, 0, r + 1, c) == doctest::Approx(a.at(0, 0, r, c)).epsilon(1e-12));
  }
}

namespace {

double random_element_mass(oracle::Rng& rng, InterpKind kind, std::size_t dims, double* raw_mass) {
  Shape size(dims);
  std::vector<double> pos(dims);
  for (std::size_t a = 0; a < dims; ++a) {
    size[a] = rng.index(3, 9);
    const auto b = dcls::position_bounds(size[a]);
    pos[a] = rng.uniform(b.lo, b.hi);
  }
  const auto p = single(1.0, pos, size);
  *raw_mass = 1.0;
  for (std::size_t a = 0; a < dims; ++a) {
    double axis = 0.0;
    const double q = pos[a] + static_cast<double>(size[a] / 2);
    for (std::size_t c = 0; c < size[a]; ++c) axis += dcls::weight(kind, q - static_cast<double>(c), 0.0);
    *raw_mass *= axis;
  }
  return dcls::sum(dcls::construct_interp(p, kind));
}

}  // namespace

TEST_CASE("normalized interp: single element mass in (1 - 1e-6, 1)") {
  oracle::Rng rng(24);
  double raw = 0.0;
  for (std::size_t dims = 1; dims <= 3; ++dims)
    for (int i = 0; i < 200; ++i) {
      const double mass = random_element_mass(rng, InterpKind::Triangle, dims, &raw);
      CHECK(mass < 1.0);
      CHECK(mass > 1.0 - 1e-6);
    }
  for (std::size_t dims = 1; dims <= 2; ++dims)
    for (int i = 0; i < 200; ++i) {
      const double mass = random_element_mass(rng, InterpKind::Gauss, dims, &raw);
      CHECK(mass < 1.0);
      CHECK(mass > 1.0 - 1e-6);
    }
}

TEST_CASE("normalized interp: 3D Gauss mass is raw / (eps + raw)") {
  // raw mass drops to about 0.36^3 at half-cell positions, so the deficit
  // can exceed 1e-6 here; it never exceeds eps / min raw mass.
  oracle::Rng rng(28);
  double raw = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mass = random_element_mass(rng, InterpKind::Gauss, 3, &raw);
    CHECK(mass < 1.0);
    CHECK(std::abs(mass - raw / (dcls::kNormalizationEps + raw)) < 1e-13);
    CHECK(mass > 1.0 - dcls::kNormalizationEps / 0.04);
  }
}

TEST_CASE("normalized interp: zero weights give a zero kernel") {
  oracle::Rng rng(25);
  auto p = random_params(rng, 2, true);
  p.weights.fill(0.0);
  const auto k = dcls::construct_interp(p, InterpKind::Gauss);
  for (double v : k.values()) CHECK(v == 0.0);
}

TEST_CASE("triangle with sigma 0 equals bilinear up to the normalization factor") {
  oracle::Rng rng(26);
  for (std::size_t dims = 1; dims <= 3; ++dims)
    for (int i = 0; i < 50; ++i) {
      auto p = random_params(rng, dims, true);
      p.sigmas.fill(0.0);
      const auto tri = dcls::construct_interp(p, InterpKind::Triangle);
      const auto bil = dcls::construct_bilinear(p);
      const double factor = 1.0 / (1.0 + dcls::kNormalizationEps);
      for (std::size_t c = 0; c < tri.size(); ++c) CHECK(std::abs(tri[c] - bil[c] * factor) < 1e-12);
    }
}

TEST_CASE("normalized interp: constant field gives zero position and sigma gradient") {
  // Interior element. The residual is 2 w eps S' / (eps + S)^2, of order eps.
  for (InterpKind kind : {InterpKind::Gauss, InterpKind::Triangle}) {
    auto p = single(1.7, {0.3, -0.2}, {15, 15});
    p.sigmas = Tensor<double>({2, 1, 1, 1}, {0.4, -0.1});
    const auto grads = dcls::backward_interp(Tensor<double>::full(p.kernel_shape(), 2.0), p, kind);
    CHECK(std::abs(grads.positions[0]) < 1e-6);
    CHECK(std::abs(grads.positions[1]) < 1e-6);
    CHECK(std::abs(grads.sigmas[0]) < 1e-6);
    CHECK(std::abs(grads.sigmas[1]) < 1e-6);
    const auto exact = dcls::backward_interp(Tensor<double>::full(p.kernel_shape(), 2.0), p, kind, 0.0);
    for (double v : exact.positions.values()) CHECK(std::abs(v) < 1e-13);
    for (double v : exact.sigmas.values()) CHECK(std::abs(v) < 1e-13);
  }
}

TEST_CASE("backward passes match central differences (200 instances per case)") {
  oracle::Rng rng(27);
  for (InterpKind kind : {InterpKind::Bilinear, InterpKind::Triangle, InterpKind::Gauss})
    for (std::size_t dims = 1; dims <= 3; ++dims) {
      CAPTURE(dcls::to_string(kind));
      CAPTURE(dims);
      int done = 0;
      double worst = 0;
      while (done < 200) {
        const auto p = random_params(rng, dims, kind != InterpKind::Bilinear);
        if (near_kink(p, kind)) continue;
        const auto err = fd_errors(p, kind, rng);
        worst = std::max({worst, err.weights, err.positions, err.sigmas});
        ++done;
      }
      CHECK(worst < 1e-5);
    }
}

TEST_CASE("shape validation") {
  auto p = single(1.0, {0, 0}, {3, 3});
  p.positions = Tensor<double>({1, 1, 1, 1});
  CHECK_THROWS_AS(dcls::construct_bilinear(p), std::invalid_argument);
  auto q = single(1.0, {0, 0}, {3, 3});
  CHECK_THROWS_AS(dcls::backward_bilinear(Tensor<double>({1, 1, 4, 4}), q), std::invalid_argument);
  CHECK_THROWS_AS(dcls::construct_interp(q, InterpKind::Bilinear), std::invalid_argument);
}
