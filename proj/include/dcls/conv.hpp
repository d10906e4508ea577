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

// Reference convolution engine (cross-correlation, zero padding).
//
// Layouts:
//   input   [B, C_in, X_0, ..., X_{d-1}]
//   weight  [C_out, C_in/groups, K_0, ..., K_{d-1}]
//   output  [B, C_out, Y_0, ..., Y_{d-1}]
//   columns [C_in * prod(K), B * prod(Y)]
// Column rows are channel-major then kernel cell row-major; columns are
// batch-major then output location row-major.

#pragma once

#include <cstddef>

#include "dcls/tensor.hpp"

namespace dcls {

struct ConvSpec {
  Shape kernel_size;
  Shape stride;
  Shape dilation;
  Shape padding;
  std::size_t groups = 1;

  /// Uniform geometry on every one of `dims` axes.
  static ConvSpec uniform(std::size_t dims, std::size_t kernel, std::size_t stride = 1, std::size_t dilation = 1,
                          std::size_t padding = 0, std::size_t groups = 1);

  std::size_t spatial_dims() const { return kernel_size.size(); }
  std::size_t kernel_cells() const { return shape_size(kernel_size); }

  /// Throws std::invalid_argument on zero entries or mismatched ranks.
  void validate() const;
};

/// Per-axis floor((X + 2 pad - df (k - 1) - 1) / s + 1). Throws
/// std::invalid_argument("kernel larger than padded input") when any result
/// would be < 1.
Shape output_size(const Shape& input_spatial, const ConvSpec& spec);

template <typename T>
Tensor<T> im2col(const Tensor<T>& input, const ConvSpec& spec);

/// Adjoint of im2col: every column entry is added back to the input cell it
/// was read from (padding cells are discarded).
template <typename T>
Tensor<T> col2im(const Tensor<T>& columns, const Shape& input_shape, const ConvSpec& spec);

/// `bias` may be unset (no bias) or have shape [C_out].
template <typename T>
Tensor<T> conv_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                       const ConvSpec& spec);

template <typename T>
Tensor<T> conv_backward_weight(const Tensor<T>& input, const Tensor<T>& grad_output, const ConvSpec& spec);

template <typename T>
Tensor<T> conv_backward_input(const Tensor<T>& grad_output, const Tensor<T>& weight, const Shape& input_shape,
                              const ConvSpec& spec);

/// Sum of grad_output over batch and spatial axes: [C_out].
template <typename T>
Tensor<T> conv_backward_bias(const Tensor<T>& grad_output);

/// Direct nested-loop evaluation of the same operator, any spatial rank.
template <typename T>
Tensor<T> conv_direct(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                      const ConvSpec& spec);

/// Inserts dilation[a] - 1 zeros between neighbouring taps on every axis.
template <typename T>
Tensor<T> inflate_kernel(const Tensor<T>& weight, const Shape& dilation);

/// max |conv(x, w; df) - conv(x, inflate(w, df); 1)|.
template <typename T>
T dilated_equivalence_error(const Tensor<T>& input, const Tensor<T>& weight, const ConvSpec& spec);

template <typename T>
bool dilated_equivalence_check(const Tensor<T>& input, const Tensor<T>& weight, const ConvSpec& spec,
                               T tolerance = T(1e-12));

}  // namespace dcls
