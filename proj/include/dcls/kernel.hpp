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

// Dense kernel construction from learnable (weight, position, sigma) triples.
//
// Each of the m kernel elements of a (c_out, c_in/groups) channel pair has a
// real-valued position per spatial axis. Positions are stored centered: the
// value 0 maps to cell s/2 (integer division) of an axis of dilated size s.
// The constructed kernel has shape [c_out, c_in/groups, s_0, ..., s_{d-1}]
// and overlapping element contributions are summed.

#pragma once

#include <cstddef>
#include <utility>

#include "dcls/interp.hpp"
#include "dcls/tensor.hpp"

namespace dcls {

/// Closed interval a centered position may occupy on one axis; shifted by
/// s/2 it is exactly [0, s-1].
struct PositionBounds {
  double lo;
  double hi;
};

PositionBounds position_bounds(std::size_t dilated_size);

template <typename T>
struct DclsParams {
  Tensor<T> weights;           // [c_out, c_in/groups, m]
  Tensor<T> positions;         // [d, c_out, c_in/groups, m]
  Tensor<T> sigmas;            // [d, c_out, c_in/groups, m]; unset for bilinear
  Shape dilated_kernel_size;   // d entries

  std::size_t spatial_dims() const { return dilated_kernel_size.size(); }
  std::size_t out_channels() const { return weights.dim(0); }
  std::size_t in_channels_per_group() const { return weights.dim(1); }
  std::size_t kernel_count() const { return weights.dim(2); }
  Shape kernel_shape() const;

  /// Throws std::invalid_argument on inconsistent shapes.
  void validate(bool need_sigmas) const;
};

template <typename T>
struct DclsGrads {
  Tensor<T> weights;
  Tensor<T> positions;
  Tensor<T> sigmas;  // unset for bilinear
};

/// Bilinear (hat-function) construction, d in {1,2,3}. Every element spreads
/// its weight over at most 2^d adjacent cells; a shifted position outside
/// [0, s-1] throws std::out_of_range.
template <typename T>
Tensor<T> construct_bilinear(const DclsParams<T>& params);

/// Exact gradient of <grad_kernel, construct_bilinear(params)> w.r.t. the
/// weights and positions (floor treated as having zero derivative).
template <typename T>
DclsGrads<T> backward_bilinear(const Tensor<T>& grad_kernel, const DclsParams<T>& params);

inline constexpr double kNormalizationEps = 1e-7;

/// Normalized separable interpolation (Triangle or Gauss), d in {1,2,3}:
///   H_k[c] = prod_a weight(kind, q_a - c_a, sigma_a)
///   K      = sum_k w_k * H_k / (eps + sum_c H_k[c])
template <typename T>
Tensor<T> construct_interp(const DclsParams<T>& params, InterpKind kind, T eps = T(kNormalizationEps));

/// Exact gradient of <grad_kernel, construct_interp(...)> w.r.t. weights,
/// positions and sigmas, including the normalization quotient.
template <typename T>
DclsGrads<T> backward_interp(const Tensor<T>& grad_kernel, const DclsParams<T>& params, InterpKind kind,
                             T eps = T(kNormalizationEps));

/// Dispatches on kind: Bilinear goes to construct_bilinear.
template <typename T>
Tensor<T> construct_kernel(const DclsParams<T>& params, InterpKind kind, T eps = T(kNormalizationEps));

template <typename T>
DclsGrads<T> backward_kernel(const Tensor<T>& grad_kernel, const DclsParams<T>& params, InterpKind kind,
                             T eps = T(kNormalizationEps));

}  // namespace dcls
