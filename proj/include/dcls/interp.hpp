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

// Scalar interpolation weightings used to spread a kernel element over the
// integer cells around its real-valued position.
//
// The raw standard deviation parameter sigma is never used directly: the
// effective scale is sigma0 + |sigma|, so sigma = 0 is a valid (and
// trainable) starting point. Bilinear ignores sigma and always uses scale 1.

#pragma once

#include <cmath>
#include <string>
#include <string_view>

namespace dcls {

enum class InterpKind { Bilinear, Triangle, Gauss };

inline constexpr double kTriangleSigma0 = 1.0;
inline constexpr double kGaussSigma0 = 0.27;

constexpr double sigma0(InterpKind kind) {
  return kind == InterpKind::Gauss ? kGaussSigma0 : kTriangleSigma0;
}

std::string_view to_string(InterpKind kind);
InterpKind parse_interp_kind(std::string_view name);

namespace interp_detail {

/// sign with sign(0) = +1, so |sigma| is differentiable from the right at 0.
template <typename T>
constexpr T sign_pos(T v) {
  return v < T{0} ? T{-1} : T{1};
}

}  // namespace interp_detail

/// max(0, scale - |x|)
template <typename T>
T triangle(T x, T scale) {
  const T v = scale - std::abs(x);
  return v > T{0} ? v : T{0};
}

/// exp(-x^2 / (2 scale^2))
template <typename T>
T gauss(T x, T scale) {
  const T z = x / scale;
  return std::exp(T{-0.5} * z * z);
}

template <typename T>
T effective_scale(InterpKind kind, T sigma) {
  if (kind == InterpKind::Bilinear) return T{1};
  return static_cast<T>(sigma0(kind)) + std::abs(sigma);
}

template <typename T>
T weight(InterpKind kind, T x, T sigma) {
  const T s = effective_scale(kind, sigma);
  return kind == InterpKind::Gauss ? gauss(x, s) : triangle(x, s);
}

/// Derivative w.r.t. the offset x. Triangle kinks take the right-hand
/// derivative: the support is treated as the half-open interval [-s, s).
template <typename T>
T d_weight_dx(InterpKind kind, T x, T sigma) {
  const T s = effective_scale(kind, sigma);
  if (kind == InterpKind::Gauss) return -x / (s * s) * gauss(x, s);
  if (x >= T{0}) return x < s ? T{-1} : T{0};
  return x >= -s ? T{1} : T{0};
}

/// Derivative w.r.t. the raw sigma (through sigma0 + |sigma|).
template <typename T>
T d_weight_dsigma(InterpKind kind, T x, T sigma) {
  if (kind == InterpKind::Bilinear) return T{0};
  const T s = effective_scale(kind, sigma);
  const T ds = interp_detail::sign_pos(sigma);
  if (kind == InterpKind::Gauss) return ds * x * x / (s * s * s) * gauss(x, s);
  return std::abs(x) < s ? ds : T{0};
}

}  // namespace dcls
