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

#include "dcls/receptive_field.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace dcls {

std::vector<std::int64_t> rf_chain(const LayerChain& chain) {
  if (chain.empty()) throw std::invalid_argument("receptive field chain is empty");
  std::vector<std::int64_t> rf;
  rf.reserve(chain.size());
  std::int64_t jump = 1;
  std::int64_t r = 1;
  for (const auto& layer : chain) {
    if (layer.kernel < 1 || layer.stride < 1 || layer.dilation < 1)
      throw std::invalid_argument("chain layer '" + layer.label + "' needs kernel, stride, dilation >= 1");
    r += layer.dilation * (layer.kernel - 1) * jump;
    jump *= layer.stride;
    rf.push_back(r);
  }
  return rf;
}

LayerChain convnext_chain(std::int64_t block_kernel) {
  constexpr int kDepths[] = {3, 3, 9, 3};
  LayerChain chain{{"stem", 4, 4, 1}};
  for (int stage = 0; stage < 4; ++stage) {
    if (stage > 0) chain.push_back({"downsample" + std::to_string(stage), 2, 2, 1});
    for (int block = 0; block < kDepths[stage]; ++block)
      chain.push_back({"stage" + std::to_string(stage) + ".block" + std::to_string(block), block_kernel, 1, 1});
  }
  return chain;
}

LayerChain named_chain(std::string_view name) {
  if (name == "convnext-t") return convnext_chain(7);
  if (name == "convnext-t-dcls17") return convnext_chain(17);
  if (name == "convnext-t-dcls23") return convnext_chain(23);
  throw std::invalid_argument("unknown chain '" + std::string(name) +
                              "' (convnext-t|convnext-t-dcls17|convnext-t-dcls23)");
}

namespace {

std::int64_t parse_field(std::string_view text, std::string_view entry) {
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || value < 1)
    throw std::invalid_argument("bad chain entry '" + std::string(entry) + "' (expected k:s or k:s:df, all >= 1)");
  return value;
}

}  // namespace

LayerChain parse_chain(std::string_view text) {
  LayerChain chain;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string_view entry = text.substr(start, comma - start);
    std::vector<std::string_view> fields;
    std::size_t f = 0;
    while (f <= entry.size()) {
      const std::size_t colon = std::min(entry.find(':', f), entry.size());
      fields.push_back(entry.substr(f, colon - f));
      f = colon + 1;
    }
    if (fields.size() < 2 || fields.size() > 3)
      throw std::invalid_argument("bad chain entry '" + std::string(entry) + "' (expected k:s or k:s:df)");
    ChainLayer layer{"layer" + std::to_string(chain.size()), parse_field(fields[0], entry),
                     parse_field(fields[1], entry), fields.size() == 3 ? parse_field(fields[2], entry) : 1};
    chain.push_back(std::move(layer));
    start = comma + 1;
  }
  return chain;
}

template <typename T>
Tensor<T> erf_estimate(const GradientModel<T>& model, const Tensor<T>& input) {
  if (!model.forward || !model.backward) throw std::invalid_argument("model has no input-gradient path");
  if (input.ndim() != 4) throw std::invalid_argument("erf input must be [B, C, H, W]");
  const Tensor<T> out = model.forward(input);
  if (out.ndim() != 4 || out.dim(0) != input.dim(0)) throw std::invalid_argument("erf model output must be [B, C, H, W]");

  Tensor<T> seed(out.shape());
  const std::size_t ch = out.dim(2) / 2;
  const std::size_t cw = out.dim(3) / 2;
  for (std::size_t b = 0; b < out.dim(0); ++b)
    for (std::size_t c = 0; c < out.dim(1); ++c) seed.at(b, c, ch, cw) = T{1};

  const Tensor<T> grad = model.backward(seed);
  if (grad.shape() != input.shape())
    throw std::invalid_argument("erf backward returned " + shape_to_string(grad.shape()) + ", expected " +
                                shape_to_string(input.shape()));

  const std::size_t batch = input.dim(0), channels = input.dim(1), h = input.dim(2), w = input.dim(3);
  Tensor<T> heat({h, w});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t i = 0; i < h * w; ++i) heat[i] += std::abs(grad[(b * channels + c) * h * w + i]);
  T peak{0};
  for (std::size_t i = 0; i < heat.size(); ++i) peak = std::max(peak, heat[i]);
  if (peak > T{0}) heat *= T{1} / peak;
  return heat;
}

template Tensor<float> erf_estimate<float>(const GradientModel<float>&, const Tensor<float>&);
template Tensor<double> erf_estimate<double>(const GradientModel<double>&, const Tensor<double>&);

}  // namespace dcls
