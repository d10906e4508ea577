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

#include "dcls/kernel.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dcls {

namespace {

constexpr std::size_t kMaxDims = 3;

template <typename T>
using AxisArray = std::array<T, kMaxDims>;

/// Per-element indexing helper: element e of the [c_out, c_in/g, m] grid.
struct ElementGrid {
  std::size_t count;       // c_out * c_in/g * m
  std::size_t per_pair;    // m
  std::size_t cells;       // prod(s)
  std::size_t dims;
};

template <typename T>
ElementGrid grid_of(const DclsParams<T>& p) {
  return {p.weights.size(), p.kernel_count(), shape_size(p.dilated_kernel_size), p.spatial_dims()};
}

/// Flat offset of a cell inside one (c_out, c_in) kernel slab.
inline std::size_t cell_offset(const AxisArray<std::size_t>& cell, const Shape& sizes, std::size_t dims) {
  std::size_t off = 0;
  for (std::size_t a = 0; a < dims; ++a) off = off * sizes[a] + cell[a];
  return off;
}

template <typename T>
AxisArray<T> shifted_position(const DclsParams<T>& p, std::size_t e, std::size_t n_elem) {
  AxisArray<T> q{};
  for (std::size_t a = 0; a < p.spatial_dims(); ++a)
    q[a] = p.positions[a * n_elem + e] + static_cast<T>(p.dilated_kernel_size[a] / 2);
  return q;
}

}  // namespace

PositionBounds position_bounds(std::size_t dilated_size) {
  if (dilated_size == 0) throw std::invalid_argument("dilated kernel size must be >= 1");
  const double half = static_cast<double>(dilated_size / 2);
  return {-half, static_cast<double>(dilated_size - 1) - half};
}

template <typename T>
Shape DclsParams<T>::kernel_shape() const {
  Shape shape{out_channels(), in_channels_per_group()};
  shape.insert(shape.end(), dilated_kernel_size.begin(), dilated_kernel_size.end());
  return shape;
}

template <typename T>
void DclsParams<T>::validate(bool need_sigmas) const {
  const std::size_t d = dilated_kernel_size.size();
  if (d < 1 || d > kMaxDims) throw std::invalid_argument("DCLS kernels support 1 to 3 spatial dims");
  for (auto s : dilated_kernel_size)
    if (s == 0) throw std::invalid_argument("dilated kernel size must be >= 1");
  if (weights.ndim() != 3) throw std::invalid_argument("weights must be [c_out, c_in/groups, m]");
  Shape expected{d, weights.dim(0), weights.dim(1), weights.dim(2)};
  if (positions.shape() != expected)
    throw std::invalid_argument("positions shape " + shape_to_string(positions.shape()) + " != expected " +
                                shape_to_string(expected));
  if (need_sigmas && sigmas.shape() != expected)
    throw std::invalid_argument("sigmas shape " + shape_to_string(sigmas.shape()) + " != expected " +
                                shape_to_string(expected));
}

// ---------------------------------------------------------------------------
// Bilinear
// ---------------------------------------------------------------------------

namespace {

template <typename T>
struct BilinearSupport {
  AxisArray<std::size_t> base{};
  AxisArray<T> frac{};
};

template <typename T>
BilinearSupport<T> bilinear_support(const DclsParams<T>& p, std::size_t e, std::size_t n_elem) {
  const auto q = shifted_position(p, e, n_elem);
  BilinearSupport<T> sup;
  for (std::size_t a = 0; a < p.spatial_dims(); ++a) {
    const T limit = static_cast<T>(p.dilated_kernel_size[a] - 1);
    if (!(q[a] >= T{0} && q[a] <= limit))
      throw std::out_of_range("bilinear position " + std::to_string(static_cast<double>(q[a])) + " on axis " +
                              std::to_string(a) + " outside [0, " + std::to_string(static_cast<double>(limit)) +
                              "] after centering");
    const T fl = std::floor(q[a]);
    sup.base[a] = static_cast<std::size_t>(fl);
    sup.frac[a] = q[a] - fl;
  }
  return sup;
}

}  // namespace

template <typename T>
Tensor<T> construct_bilinear(const DclsParams<T>& params) {
  params.validate(false);
  const auto g = grid_of(params);
  const auto& sizes = params.dilated_kernel_size;
  Tensor<T> kernel(params.kernel_shape());
  const std::size_t corners = std::size_t{1} << g.dims;

  for (std::size_t e = 0; e < g.count; ++e) {
    const std::size_t pair = e / g.per_pair;
    T* slab = kernel.data() + pair * g.cells;
    const T w = params.weights[e];
    const auto sup = bilinear_support(params, e, g.count);
    for (std::size_t corner = 0; corner < corners; ++corner) {
      AxisArray<std::size_t> cell{};
      T coeff{1};
      bool inside = true;
      for (std::size_t a = 0; a < g.dims; ++a) {
        const bool upper = (corner >> (g.dims - 1 - a)) & 1U;
        cell[a] = sup.base[a] + (upper ? 1 : 0);
        if (cell[a] >= sizes[a]) {
          inside = false;
          break;
        }
        coeff *= upper ? sup.frac[a] : T{1} - sup.frac[a];
      }
      if (inside) slab[cell_offset(cell, sizes, g.dims)] += w * coeff;
    }
  }
  return kernel;
}

template <typename T>
DclsGrads<T> backward_bilinear(const Tensor<T>& grad_kernel, const DclsParams<T>& params) {
  params.validate(false);
  if (grad_kernel.shape() != params.kernel_shape())
    throw std::invalid_argument("grad kernel shape " + shape_to_string(grad_kernel.shape()) + " != kernel shape " +
                                shape_to_string(params.kernel_shape()));
  const auto g = grid_of(params);
  const auto& sizes = params.dilated_kernel_size;
  DclsGrads<T> grads{Tensor<T>(params.weights.shape()), Tensor<T>(params.positions.shape()), {}};
  const std::size_t corners = std::size_t{1} << g.dims;

  for (std::size_t e = 0; e < g.count; ++e) {
    const std::size_t pair = e / g.per_pair;
    const T* slab = grad_kernel.data() + pair * g.cells;
    const T w = params.weights[e];
    const auto sup = bilinear_support(params, e, g.count);
    T grad_w{0};
    AxisArray<T> grad_p{};
    for (std::size_t corner = 0; corner < corners; ++corner) {
      AxisArray<std::size_t> cell{};
      AxisArray<T> factor{};
      AxisArray<bool> upper{};
      bool inside = true;
      for (std::size_t a = 0; a < g.dims; ++a) {
        upper[a] = (corner >> (g.dims - 1 - a)) & 1U;
        cell[a] = sup.base[a] + (upper[a] ? 1 : 0);
        if (cell[a] >= sizes[a]) {
          inside = false;
          break;
        }
        factor[a] = upper[a] ? sup.frac[a] : T{1} - sup.frac[a];
      }
      if (!inside) continue;
      const T gk = slab[cell_offset(cell, sizes, g.dims)];
      T all{1};
      for (std::size_t a = 0; a < g.dims; ++a) all *= factor[a];
      grad_w += all * gk;
      for (std::size_t a = 0; a < g.dims; ++a) {
        T others{1};
        for (std::size_t b = 0; b < g.dims; ++b)
          if (b != a) others *= factor[b];
        grad_p[a] += (upper[a] ? others : -others) * gk;
      }
    }
    grads.weights[e] = grad_w;
    for (std::size_t a = 0; a < g.dims; ++a) grads.positions[a * g.count + e] = w * grad_p[a];
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Normalized Triangle / Gauss
// ---------------------------------------------------------------------------

namespace {

/// Per-axis 1D profiles of one element: values and their derivatives w.r.t.
/// the shifted position and the raw sigma, one entry per cell.
template <typename T>
struct AxisProfiles {
  std::array<std::vector<T>, kMaxDims> value, d_pos, d_sigma;
  AxisArray<T> total{}, total_d_pos{}, total_d_sigma{};
};

template <typename T>
void fill_profiles(AxisProfiles<T>& prof, const DclsParams<T>& p, InterpKind kind, std::size_t e,
                   std::size_t n_elem, bool derivatives) {
  const auto q = shifted_position(p, e, n_elem);
  for (std::size_t a = 0; a < p.spatial_dims(); ++a) {
    const std::size_t s = p.dilated_kernel_size[a];
    const T sigma = p.sigmas[a * n_elem + e];
    auto& v = prof.value[a];
    v.resize(s);
    prof.total[a] = T{0};
    for (std::size_t c = 0; c < s; ++c) {
      v[c] = weight<T>(kind, q[a] - static_cast<T>(c), sigma);
      prof.total[a] += v[c];
    }
    if (!derivatives) continue;
    auto& dp = prof.d_pos[a];
    auto& ds = prof.d_sigma[a];
    dp.resize(s);
    ds.resize(s);
    prof.total_d_pos[a] = T{0};
    prof.total_d_sigma[a] = T{0};
    for (std::size_t c = 0; c < s; ++c) {
      const T x = q[a] - static_cast<T>(c);
      dp[c] = d_weight_dx<T>(kind, x, sigma);
      ds[c] = d_weight_dsigma<T>(kind, x, sigma);
      prof.total_d_pos[a] += dp[c];
      prof.total_d_sigma[a] += ds[c];
    }
  }
}

void check_interp_kind(InterpKind kind) {
  if (kind == InterpKind::Bilinear)
    throw std::invalid_argument("construct_interp expects Triangle or Gauss; use construct_bilinear");
}

/// Visits every cell of a slab with its multi-index.
template <typename F>
void for_each_cell(const Shape& sizes, std::size_t dims, F&& f) {
  AxisArray<std::size_t> cell{};
  const std::size_t total = shape_size(sizes);
  for (std::size_t flat = 0; flat < total; ++flat) {
    f(flat, cell);
    for (std::size_t a = dims; a-- > 0;) {
      if (++cell[a] < sizes[a]) break;
      cell[a] = 0;
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> construct_interp(const DclsParams<T>& params, InterpKind kind, T eps) {
  check_interp_kind(kind);
  params.validate(true);
  const auto g = grid_of(params);
  const auto& sizes = params.dilated_kernel_size;
  Tensor<T> kernel(params.kernel_shape());
  AxisProfiles<T> prof;

  for (std::size_t e = 0; e < g.count; ++e) {
    fill_profiles(prof, params, kind, e, g.count, false);
    T mass{1};
    for (std::size_t a = 0; a < g.dims; ++a) mass *= prof.total[a];
    const T scale = params.weights[e] / (eps + mass);
    T* slab = kernel.data() + (e / g.per_pair) * g.cells;
    for_each_cell(sizes, g.dims, [&](std::size_t flat, const AxisArray<std::size_t>& cell) {
      T h{1};
      for (std::size_t a = 0; a < g.dims; ++a) h *= prof.value[a][cell[a]];
      slab[flat] += scale * h;
    });
  }
  return kernel;
}

template <typename T>
DclsGrads<T> backward_interp(const Tensor<T>& grad_kernel, const DclsParams<T>& params, InterpKind kind, T eps) {
  check_interp_kind(kind);
  params.validate(true);
  if (grad_kernel.shape() != params.kernel_shape())
    throw std::invalid_argument("grad kernel shape " + shape_to_string(grad_kernel.shape()) + " != kernel shape " +
                                shape_to_string(params.kernel_shape()));
  const auto g = grid_of(params);
  const auto& sizes = params.dilated_kernel_size;
  DclsGrads<T> grads{Tensor<T>(params.weights.shape()), Tensor<T>(params.positions.shape()),
                     Tensor<T>(params.sigmas.shape())};
  AxisProfiles<T> prof;

  for (std::size_t e = 0; e < g.count; ++e) {
    fill_profiles(prof, params, kind, e, g.count, true);
    const T* slab = grad_kernel.data() + (e / g.per_pair) * g.cells;

    // u = <G, H>, du_* = <G, dH/d*> per axis.
    T u{0};
    AxisArray<T> du_pos{}, du_sigma{};
    for_each_cell(sizes, g.dims, [&](std::size_t flat, const AxisArray<std::size_t>& cell) {
      const T gk = slab[flat];
      if (gk == T{0}) return;
      T h{1};
      for (std::size_t a = 0; a < g.dims; ++a) h *= prof.value[a][cell[a]];
      u += gk * h;
      for (std::size_t a = 0; a < g.dims; ++a) {
        T others{1};
        for (std::size_t b = 0; b < g.dims; ++b)
          if (b != a) others *= prof.value[b][cell[b]];
        du_pos[a] += gk * others * prof.d_pos[a][cell[a]];
        du_sigma[a] += gk * others * prof.d_sigma[a][cell[a]];
      }
    });

    T mass{1};
    for (std::size_t a = 0; a < g.dims; ++a) mass *= prof.total[a];
    const T denom = eps + mass;
    const T w = params.weights[e];
    grads.weights[e] = u / denom;
    for (std::size_t a = 0; a < g.dims; ++a) {
      T others{1};
      for (std::size_t b = 0; b < g.dims; ++b)
        if (b != a) others *= prof.total[b];
      const T dmass_pos = prof.total_d_pos[a] * others;
      const T dmass_sigma = prof.total_d_sigma[a] * others;
      grads.positions[a * g.count + e] = w * (du_pos[a] / denom - u * dmass_pos / (denom * denom));
      grads.sigmas[a * g.count + e] = w * (du_sigma[a] / denom - u * dmass_sigma / (denom * denom));
    }
  }
  return grads;
}

template <typename T>
Tensor<T> construct_kernel(const DclsParams<T>& params, InterpKind kind, T eps) {
  return kind == InterpKind::Bilinear ? construct_bilinear(params) : construct_interp(params, kind, eps);
}

template <typename T>
DclsGrads<T> backward_kernel(const Tensor<T>& grad_kernel, const DclsParams<T>& params, InterpKind kind, T eps) {
  return kind == InterpKind::Bilinear ? backward_bilinear(grad_kernel, params)
                                      : backward_interp(grad_kernel, params, kind, eps);
}

#define DCLS_INSTANTIATE(T)                                                                               \
  template struct DclsParams<T>;                                                                          \
  template Tensor<T> construct_bilinear<T>(const DclsParams<T>&);                                         \
  template DclsGrads<T> backward_bilinear<T>(const Tensor<T>&, const DclsParams<T>&);                    \
  template Tensor<T> construct_interp<T>(const DclsParams<T>&, InterpKind, T);                            \
  template DclsGrads<T> backward_interp<T>(const Tensor<T>&, const DclsParams<T>&, InterpKind, T);       \
  template Tensor<T> construct_kernel<T>(const DclsParams<T>&, InterpKind, T);                            \
  template DclsGrads<T> backward_kernel<T>(const Tensor<T>&, const DclsParams<T>&, InterpKind, T);

DCLS_INSTANTIATE(float)
DCLS_INSTANTIATE(double)

#undef DCLS_INSTANTIATE

}  // namespace dcls
