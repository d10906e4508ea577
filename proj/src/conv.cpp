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

#include "dcls/conv.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcls {

ConvSpec ConvSpec::uniform(std::size_t dims, std::size_t kernel, std::size_t stride, std::size_t dilation,
                           std::size_t padding, std::size_t groups) {
  return {Shape(dims, kernel), Shape(dims, stride), Shape(dims, dilation), Shape(dims, padding), groups};
}

void ConvSpec::validate() const {
  const std::size_t d = kernel_size.size();
  if (d == 0) throw std::invalid_argument("conv spec needs at least one spatial axis");
  if (stride.size() != d || dilation.size() != d || padding.size() != d)
    throw std::invalid_argument("conv spec: kernel/stride/dilation/padding ranks differ");
  for (std::size_t a = 0; a < d; ++a) {
    if (kernel_size[a] == 0) throw std::invalid_argument("conv spec: kernel size must be >= 1");
    if (stride[a] == 0) throw std::invalid_argument("conv spec: stride must be >= 1");
    if (dilation[a] == 0) throw std::invalid_argument("conv spec: dilation must be >= 1");
  }
  if (groups == 0) throw std::invalid_argument("conv spec: groups must be >= 1");
}

Shape output_size(const Shape& input_spatial, const ConvSpec& spec) {
  spec.validate();
  if (input_spatial.size() != spec.spatial_dims())
    throw std::invalid_argument("input has " + std::to_string(input_spatial.size()) + " spatial axes, spec has " +
                                std::to_string(spec.spatial_dims()));
  Shape out(input_spatial.size());
  for (std::size_t a = 0; a < out.size(); ++a) {
    const auto padded = static_cast<std::int64_t>(input_spatial[a] + 2 * spec.padding[a]);
    const auto span = static_cast<std::int64_t>(spec.dilation[a] * (spec.kernel_size[a] - 1) + 1);
    if (padded < span) throw std::invalid_argument("kernel larger than padded input");
    out[a] = static_cast<std::size_t>((padded - span) / static_cast<std::int64_t>(spec.stride[a]) + 1);
  }
  return out;
}

namespace {

struct Geometry {
  std::size_t batch = 0;
  std::size_t channels = 0;
  Shape in_spatial;
  Shape out_spatial;
  std::size_t in_cells = 0;   // prod(in_spatial)
  std::size_t out_cells = 0;  // prod(out_spatial)
  std::size_t kernel_cells = 0;
};

Geometry geometry_of(const Shape& input_shape, const ConvSpec& spec) {
  if (input_shape.size() != spec.spatial_dims() + 2)
    throw std::invalid_argument("input shape " + shape_to_string(input_shape) + " must be [B, C, " +
                                std::to_string(spec.spatial_dims()) + " spatial]");
  Geometry g;
  g.batch = input_shape[0];
  g.channels = input_shape[1];
  g.in_spatial.assign(input_shape.begin() + 2, input_shape.end());
  g.out_spatial = output_size(g.in_spatial, spec);
  g.in_cells = shape_size(g.in_spatial);
  g.out_cells = shape_size(g.out_spatial);
  g.kernel_cells = spec.kernel_cells();
  return g;
}

/// For every (kernel cell, output location) pair: flat spatial offset of the
/// input cell it reads, or -1 when it falls into padding.
std::vector<std::int64_t> gather_table(const Geometry& g, const ConvSpec& spec) {
  const std::size_t d = spec.spatial_dims();
  const Shape in_strides = row_major_strides(g.in_spatial);
  std::vector<std::int64_t> table(g.kernel_cells * g.out_cells);
  Shape kidx(d, 0);
  for (std::size_t kc = 0; kc < g.kernel_cells; ++kc) {
    Shape oidx(d, 0);
    for (std::size_t oc = 0; oc < g.out_cells; ++oc) {
      std::int64_t off = 0;
      for (std::size_t a = 0; a < d; ++a) {
        const auto pos = static_cast<std::int64_t>(oidx[a] * spec.stride[a] + kidx[a] * spec.dilation[a]) -
                         static_cast<std::int64_t>(spec.padding[a]);
        if (pos < 0 || pos >= static_cast<std::int64_t>(g.in_spatial[a])) {
          off = -1;
          break;
        }
        off += pos * static_cast<std::int64_t>(in_strides[a]);
      }
      table[kc * g.out_cells + oc] = off;
      for (std::size_t a = d; a-- > 0;) {
        if (++oidx[a] < g.out_spatial[a]) break;
        oidx[a] = 0;
      }
    }
    for (std::size_t a = d; a-- > 0;) {
      if (++kidx[a] < spec.kernel_size[a]) break;
      kidx[a] = 0;
    }
  }
  return table;
}

void check_groups(std::size_t c_in, std::size_t c_out, std::size_t groups) {
  if (c_in % groups != 0 || c_out % groups != 0)
    throw std::invalid_argument("groups=" + std::to_string(groups) + " must divide c_in=" + std::to_string(c_in) +
                                " and c_out=" + std::to_string(c_out));
}

template <typename T>
void check_weight(const Tensor<T>& weight, const Geometry& g, const ConvSpec& spec) {
  if (weight.ndim() != spec.spatial_dims() + 2)
    throw std::invalid_argument("weight shape " + shape_to_string(weight.shape()) + " has wrong rank");
  check_groups(g.channels, weight.dim(0), spec.groups);
  if (weight.dim(1) != g.channels / spec.groups)
    throw std::invalid_argument("weight shape " + shape_to_string(weight.shape()) + ": dim 1 must be c_in/groups = " +
                                std::to_string(g.channels / spec.groups));
  for (std::size_t a = 0; a < spec.spatial_dims(); ++a)
    if (weight.dim(a + 2) != spec.kernel_size[a])
      throw std::invalid_argument("weight shape " + shape_to_string(weight.shape()) + " disagrees with kernel size " +
                                  shape_to_string(spec.kernel_size));
}

template <typename T>
void check_grad_output(const Tensor<T>& grad_output, const Geometry& g, std::size_t c_out) {
  Shape expected{g.batch, c_out};
  expected.insert(expected.end(), g.out_spatial.begin(), g.out_spatial.end());
  if (grad_output.shape() != expected)
    throw std::invalid_argument("grad_output shape " + shape_to_string(grad_output.shape()) + " != expected " +
                                shape_to_string(expected));
}

/// [B, C, L] <-> [C, B*L] layout swaps between tensors and GEMM operands.
template <typename T>
void batch_to_columns(const T* src, std::size_t batch, std::size_t channels, std::size_t cells, T* dst) {
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t l = 0; l < cells; ++l) dst[c * batch * cells + b * cells + l] = src[(b * channels + c) * cells + l];
}

template <typename T>
void columns_to_batch(const T* src, std::size_t batch, std::size_t channels, std::size_t cells, T* dst) {
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t l = 0; l < cells; ++l) dst[(b * channels + c) * cells + l] = src[c * batch * cells + b * cells + l];
}

}  // namespace

template <typename T>
Tensor<T> im2col(const Tensor<T>& input, const ConvSpec& spec) {
  const Geometry g = geometry_of(input.shape(), spec);
  const auto table = gather_table(g, spec);
  const std::size_t cols = g.batch * g.out_cells;
  Tensor<T> out({g.channels * g.kernel_cells, cols});
  T* dst = out.data();
  for (std::size_t c = 0; c < g.channels; ++c)
    for (std::size_t kc = 0; kc < g.kernel_cells; ++kc) {
      const std::int64_t* row_table = table.data() + kc * g.out_cells;
      T* row = dst + (c * g.kernel_cells + kc) * cols;
      for (std::size_t b = 0; b < g.batch; ++b) {
        const T* plane = input.data() + (b * g.channels + c) * g.in_cells;
        for (std::size_t oc = 0; oc < g.out_cells; ++oc) {
          const std::int64_t off = row_table[oc];
          row[b * g.out_cells + oc] = off < 0 ? T{0} : plane[off];
        }
      }
    }
  return out;
}

template <typename T>
Tensor<T> col2im(const Tensor<T>& columns, const Shape& input_shape, const ConvSpec& spec) {
  const Geometry g = geometry_of(input_shape, spec);
  const std::size_t cols = g.batch * g.out_cells;
  const Shape expected{g.channels * g.kernel_cells, cols};
  if (columns.shape() != expected)
    throw std::invalid_argument("columns shape " + shape_to_string(columns.shape()) + " != expected " +
                                shape_to_string(expected));
  const auto table = gather_table(g, spec);
  Tensor<T> out(input_shape);
  for (std::size_t c = 0; c < g.channels; ++c)
    for (std::size_t kc = 0; kc < g.kernel_cells; ++kc) {
      const std::int64_t* row_table = table.data() + kc * g.out_cells;
      const T* row = columns.data() + (c * g.kernel_cells + kc) * cols;
      for (std::size_t b = 0; b < g.batch; ++b) {
        T* plane = out.data() + (b * g.channels + c) * g.in_cells;
        for (std::size_t oc = 0; oc < g.out_cells; ++oc) {
          const std::int64_t off = row_table[oc];
          if (off >= 0) plane[off] += row[b * g.out_cells + oc];
        }
      }
    }
  return out;
}

template <typename T>
Tensor<T> conv_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                       const ConvSpec& spec) {
  const Geometry g = geometry_of(input.shape(), spec);
  check_weight(weight, g, spec);
  const std::size_t c_out = weight.dim(0);
  if (!bias.empty() && bias.shape() != Shape{c_out})
    throw std::invalid_argument("bias shape " + shape_to_string(bias.shape()) + " must be [" + std::to_string(c_out) + "]");

  const Tensor<T> cols = im2col(input, spec);
  const std::size_t n = g.batch * g.out_cells;
  const std::size_t cout_g = c_out / spec.groups;
  const std::size_t k = (g.channels / spec.groups) * g.kernel_cells;
  std::vector<T> result(c_out * n);
  for (std::size_t grp = 0; grp < spec.groups; ++grp)
    gemm<T>(cout_g, n, k, weight.data() + grp * cout_g * k, false, cols.data() + grp * k * n, false,
            result.data() + grp * cout_g * n, false);
  if (!bias.empty())
    for (std::size_t co = 0; co < c_out; ++co)
      for (std::size_t j = 0; j < n; ++j) result[co * n + j] += bias[co];

  Shape out_shape{g.batch, c_out};
  out_shape.insert(out_shape.end(), g.out_spatial.begin(), g.out_spatial.end());
  Tensor<T> out(out_shape);
  columns_to_batch(result.data(), g.batch, c_out, g.out_cells, out.data());
  return out;
}

template <typename T>
Tensor<T> conv_backward_weight(const Tensor<T>& input, const Tensor<T>& grad_output, const ConvSpec& spec) {
  const Geometry g = geometry_of(input.shape(), spec);
  if (grad_output.ndim() != spec.spatial_dims() + 2)
    throw std::invalid_argument("grad_output shape " + shape_to_string(grad_output.shape()) + " has wrong rank");
  const std::size_t c_out = grad_output.dim(1);
  check_groups(g.channels, c_out, spec.groups);
  check_grad_output(grad_output, g, c_out);

  const Tensor<T> cols = im2col(input, spec);
  const std::size_t n = g.batch * g.out_cells;
  std::vector<T> gout(c_out * n);
  batch_to_columns(grad_output.data(), g.batch, c_out, g.out_cells, gout.data());

  const std::size_t cout_g = c_out / spec.groups;
  const std::size_t k = (g.channels / spec.groups) * g.kernel_cells;
  Shape wshape{c_out, g.channels / spec.groups};
  wshape.insert(wshape.end(), spec.kernel_size.begin(), spec.kernel_size.end());
  Tensor<T> grad_w(wshape);
  for (std::size_t grp = 0; grp < spec.groups; ++grp)
    gemm<T>(cout_g, k, n, gout.data() + grp * cout_g * n, false, cols.data() + grp * k * n, true,
            grad_w.data() + grp * cout_g * k, false);
  return grad_w;
}

template <typename T>
Tensor<T> conv_backward_input(const Tensor<T>& grad_output, const Tensor<T>& weight, const Shape& input_shape,
                              const ConvSpec& spec) {
  const Geometry g = geometry_of(input_shape, spec);
  check_weight(weight, g, spec);
  const std::size_t c_out = weight.dim(0);
  check_grad_output(grad_output, g, c_out);

  const std::size_t n = g.batch * g.out_cells;
  std::vector<T> gout(c_out * n);
  batch_to_columns(grad_output.data(), g.batch, c_out, g.out_cells, gout.data());

  const std::size_t cout_g = c_out / spec.groups;
  const std::size_t k = (g.channels / spec.groups) * g.kernel_cells;
  Tensor<T> cols({g.channels * g.kernel_cells, n});
  for (std::size_t grp = 0; grp < spec.groups; ++grp)
    gemm<T>(k, n, cout_g, weight.data() + grp * cout_g * k, true, gout.data() + grp * cout_g * n, false,
            cols.data() + grp * k * n, false);
  return col2im(cols, input_shape, spec);
}

template <typename T>
Tensor<T> conv_backward_bias(const Tensor<T>& grad_output) {
  if (grad_output.ndim() < 2) throw std::invalid_argument("grad_output must be [B, C_out, ...]");
  const std::size_t batch = grad_output.dim(0);
  const std::size_t c_out = grad_output.dim(1);
  const std::size_t cells = grad_output.size() / (batch * c_out);
  Tensor<T> grad_b({c_out});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < c_out; ++c) {
      const T* plane = grad_output.data() + (b * c_out + c) * cells;
      T acc{0};
      for (std::size_t l = 0; l < cells; ++l) acc += plane[l];
      grad_b[c] += acc;
    }
  return grad_b;
}

template <typename T>
Tensor<T> conv_direct(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                      const ConvSpec& spec) {
  const Geometry g = geometry_of(input.shape(), spec);
  check_weight(weight, g, spec);
  const std::size_t c_out = weight.dim(0);
  const std::size_t cin_g = g.channels / spec.groups;
  const std::size_t cout_g = c_out / spec.groups;
  if (!bias.empty() && bias.shape() != Shape{c_out})
    throw std::invalid_argument("bias shape " + shape_to_string(bias.shape()) + " must be [" + std::to_string(c_out) + "]");
  const auto table = gather_table(g, spec);

  Shape out_shape{g.batch, c_out};
  out_shape.insert(out_shape.end(), g.out_spatial.begin(), g.out_spatial.end());
  Tensor<T> out(out_shape);
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t co = 0; co < c_out; ++co) {
      const std::size_t grp = co / cout_g;
      T* dst = out.data() + (b * c_out + co) * g.out_cells;
      for (std::size_t oc = 0; oc < g.out_cells; ++oc) {
        T acc = bias.empty() ? T{0} : bias[co];
        for (std::size_t ci = 0; ci < cin_g; ++ci) {
          const T* plane = input.data() + (b * g.channels + grp * cin_g + ci) * g.in_cells;
          const T* taps = weight.data() + (co * cin_g + ci) * g.kernel_cells;
          for (std::size_t kc = 0; kc < g.kernel_cells; ++kc) {
            const std::int64_t off = table[kc * g.out_cells + oc];
            if (off >= 0) acc += taps[kc] * plane[off];
          }
        }
        dst[oc] = acc;
      }
    }
  return out;
}

template <typename T>
Tensor<T> inflate_kernel(const Tensor<T>& weight, const Shape& dilation) {
  if (weight.ndim() != dilation.size() + 2)
    throw std::invalid_argument("inflate_kernel: dilation rank does not match weight " + shape_to_string(weight.shape()));
  const std::size_t d = dilation.size();
  Shape src_spatial(weight.shape().begin() + 2, weight.shape().end());
  Shape dst_spatial(d);
  for (std::size_t a = 0; a < d; ++a) {
    if (dilation[a] == 0) throw std::invalid_argument("inflate_kernel: dilation must be >= 1");
    dst_spatial[a] = dilation[a] * (src_spatial[a] - 1) + 1;
  }
  Shape out_shape{weight.dim(0), weight.dim(1)};
  out_shape.insert(out_shape.end(), dst_spatial.begin(), dst_spatial.end());
  Tensor<T> out(out_shape);

  const std::size_t src_cells = shape_size(src_spatial);
  const std::size_t dst_cells = shape_size(dst_spatial);
  const Shape dst_strides = row_major_strides(dst_spatial);
  const std::size_t pairs = weight.dim(0) * weight.dim(1);
  Shape idx(d, 0);
  for (std::size_t sc = 0; sc < src_cells; ++sc) {
    std::size_t off = 0;
    for (std::size_t a = 0; a < d; ++a) off += idx[a] * dilation[a] * dst_strides[a];
    for (std::size_t p = 0; p < pairs; ++p) out[p * dst_cells + off] = weight[p * src_cells + sc];
    for (std::size_t a = d; a-- > 0;) {
      if (++idx[a] < src_spatial[a]) break;
      idx[a] = 0;
    }
  }
  return out;
}

template <typename T>
T dilated_equivalence_error(const Tensor<T>& input, const Tensor<T>& weight, const ConvSpec& spec) {
  ConvSpec plain = spec;
  const Tensor<T> inflated = inflate_kernel(weight, spec.dilation);
  plain.kernel_size.assign(inflated.shape().begin() + 2, inflated.shape().end());
  plain.dilation.assign(spec.spatial_dims(), 1);
  const Tensor<T> none;
  return max_abs_diff(conv_forward(input, weight, none, spec), conv_forward(input, inflated, none, plain));
}

template <typename T>
bool dilated_equivalence_check(const Tensor<T>& input, const Tensor<T>& weight, const ConvSpec& spec, T tolerance) {
  return dilated_equivalence_error(input, weight, spec) < tolerance;
}

#define DCLS_INSTANTIATE(T)                                                                                   \
  template Tensor<T> im2col<T>(const Tensor<T>&, const ConvSpec&);                                           \
  template Tensor<T> col2im<T>(const Tensor<T>&, const Shape&, const ConvSpec&);                             \
  template Tensor<T> conv_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const ConvSpec&); \
  template Tensor<T> conv_backward_weight<T>(const Tensor<T>&, const Tensor<T>&, const ConvSpec&);           \
  template Tensor<T> conv_backward_input<T>(const Tensor<T>&, const Tensor<T>&, const Shape&, const ConvSpec&); \
  template Tensor<T> conv_backward_bias<T>(const Tensor<T>&);                                                 \
  template Tensor<T> conv_direct<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const ConvSpec&);  \
  template Tensor<T> inflate_kernel<T>(const Tensor<T>&, const Shape&);                                      \
  template T dilated_equivalence_error<T>(const Tensor<T>&, const Tensor<T>&, const ConvSpec&);              \
  template bool dilated_equivalence_check<T>(const Tensor<T>&, const Tensor<T>&, const ConvSpec&, T);

DCLS_INSTANTIATE(float)
DCLS_INSTANTIATE(double)

#undef DCLS_INSTANTIATE

}  // namespace dcls
