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

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "dcls/tensor.hpp"

namespace dcls {

struct ChainLayer {
  std::string label;
  std::int64_t kernel = 1;
  std::int64_t stride = 1;
  std::int64_t dilation = 1;
};

using LayerChain = std::vector<ChainLayer>;

/// Receptive field after every layer of the chain:
///   r_0 = df_0 (k_0 - 1) + 1
///   r_l = r_{l-1} + df_l (k_l - 1) * prod_{i<l} s_i
/// A layer's own stride only affects the layers after it.
std::vector<std::int64_t> rf_chain(const LayerChain& chain);

/// ConvNeXt-T style chain: stem (4, s4), stages of 3/3/9/3 depthwise blocks
/// of size `block_kernel` separated by (2, s2) downsampling layers.
LayerChain convnext_chain(std::int64_t block_kernel);

/// "convnext-t" (k=7), "convnext-t-dcls17", "convnext-t-dcls23".
LayerChain named_chain(std::string_view name);

/// Comma-separated "k:s" or "k:s:df" entries, e.g. "4:4,7:1,2:2".
LayerChain parse_chain(std::string_view text);

/// Gradient of the centre output location w.r.t. the input.
/// `forward` maps [B, C, H, W] to [B, C', H', W']; `backward` maps a seed of
/// the output's shape to the input gradient.
template <typename T>
struct GradientModel {
  std::function<Tensor<T>(const Tensor<T>&)> forward;
  std::function<Tensor<T>(const Tensor<T>&)> backward;
};

/// Heatmap [H, W] of |d out[:, :, centre] / d input| averaged over batch and
/// input channels, scaled by its maximum into [0, 1]. Throws
/// std::invalid_argument when the model has no backward path.
template <typename T>
Tensor<T> erf_estimate(const GradientModel<T>& model, const Tensor<T>& input);

}  // namespace dcls
