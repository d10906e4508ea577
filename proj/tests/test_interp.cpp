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

#include "dcls/interp.hpp"
#include "oracles.hpp"

using dcls::InterpKind;

TEST_CASE("weight: frozen point values") {
  CHECK(dcls::weight(InterpKind::Triangle, 0.0, 0.0) == 1.0);
  CHECK(dcls::weight(InterpKind::Triangle, 0.5, 0.0) == 0.5);
  CHECK(dcls::weight(InterpKind::Gauss, 0.27, 0.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(dcls::weight(InterpKind::Gauss, 0.27 + 0.8, -0.8) == doctest::Approx(0.60653066).epsilon(1e-8));
  CHECK(dcls::weight(InterpKind::Triangle, 1.0, 0.0) == 0.0);
  CHECK(dcls::weight(InterpKind::Triangle, 1.2, 0.5) == doctest::Approx(0.3));
}

TEST_CASE("derivatives: frozen point values") {
  CHECK(dcls::d_weight_dx(InterpKind::Gauss, 0.0, 0.4) == 0.0);
  CHECK(dcls::d_weight_dx(InterpKind::Triangle, 0.5, 0.0) == -1.0);
  CHECK(dcls::d_weight_dx(InterpKind::Triangle, -0.5, 0.0) == 1.0);
  // one-sided right value at the kinks
  CHECK(dcls::d_weight_dx(InterpKind::Triangle, 0.0, 0.0) == -1.0);
  CHECK(dcls::d_weight_dx(InterpKind::Triangle, -1.0, 0.0) == 1.0);
  CHECK(dcls::d_weight_dx(InterpKind::Triangle, 1.0, 0.0) == 0.0);
  // |sigma| derivative at 0 taken in the + direction
  CHECK(dcls::d_weight_dsigma(InterpKind::Triangle, 0.2, 0.0) == 1.0);
  CHECK(dcls::d_weight_dsigma(InterpKind::Triangle, 0.2, -0.3) == -1.0);
}

TEST_CASE("Gauss at x=0.3, sigma=0.1 matches central differences") {
  const double h = 1e-6;
  const double fd = (dcls::weight(InterpKind::Gauss, 0.3 + h, 0.1) - dcls::weight(InterpKind::Gauss, 0.3 - h, 0.1)) /
                    (2 * h);
  const double an = dcls::d_weight_dx(InterpKind::Gauss, 0.3, 0.1);
  CHECK(std::abs(an - fd) / std::abs(an) < 1e-6);
}

TEST_CASE("bilinear evaluates like triangle with sigma 0 and like the hat function") {
  oracle::Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    const double x = rng.uniform(-1.5, 1.5);
    const double sigma = rng.uniform(-2, 2);
    CHECK(dcls::weight(InterpKind::Bilinear, x, sigma) == dcls::weight(InterpKind::Triangle, x, 0.0));
    if (std::abs(x) <= 1.0) CHECK(dcls::weight(InterpKind::Triangle, x, 0.0) == doctest::Approx(1.0 - std::abs(x)));
  }
}

TEST_CASE("weight is non-negative, even and non-increasing in |x|") {
  oracle::Rng rng(2);
  for (InterpKind kind : {InterpKind::Triangle, InterpKind::Gauss}) {
    for (int i = 0; i < 1000; ++i) {
      const double x = rng.uniform(-4, 4);
      const double sigma = rng.uniform(-2, 2);
      const double w = dcls::weight(kind, x, sigma);
      CHECK(w >= 0.0);
      CHECK(w == dcls::weight(kind, -x, sigma));
      const double further = std::abs(x) + rng.uniform(0, 1);
      CHECK(dcls::weight(kind, further, sigma) <= w);
    }
  }
}

TEST_CASE("analytic derivatives match central differences away from kinks") {
  oracle::Rng rng(3);
  const double h = 1e-6;
  int checked = 0;
  for (InterpKind kind : {InterpKind::Triangle, InterpKind::Gauss}) {
    for (int i = 0; i < 1000; ++i) {
      const double x = rng.uniform(-3, 3);
      const double sigma = rng.uniform(-1.5, 1.5);
      const double scale = dcls::effective_scale(kind, sigma);
      if (std::abs(sigma) < 1e-4) continue;
      if (kind == InterpKind::Triangle && (std::abs(x) < 1e-4 || std::abs(std::abs(x) - scale) < 1e-4)) continue;
      const double fdx = (dcls::weight(kind, x + h, sigma) - dcls::weight(kind, x - h, sigma)) / (2 * h);
      const double fds = (dcls::weight(kind, x, sigma + h) - dcls::weight(kind, x, sigma - h)) / (2 * h);
      const double adx = dcls::d_weight_dx(kind, x, sigma);
      const double ads = dcls::d_weight_dsigma(kind, x, sigma);
      CHECK(oracle::relative_error(std::vector<double>{adx}, std::vector<double>{fdx}) < 1e-5);
      CHECK(oracle::relative_error(std::vector<double>{ads}, std::vector<double>{fds}) < 1e-5);
      ++checked;
    }
  }
  CHECK(checked > 1900);
}

TEST_CASE("kind names round trip") {
  for (InterpKind kind : {InterpKind::Bilinear, InterpKind::Triangle, InterpKind::Gauss})
    CHECK(dcls::parse_interp_kind(dcls::to_string(kind)) == kind);
  CHECK_THROWS_AS(dcls::parse_interp_kind("sinc"), std::invalid_argument);
}
