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

#include "dcls/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

namespace dcls {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Shape row_major_strides(const Shape& shape) {
  Shape strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) strides[i - 1] = strides[i] * shape[i];
  return strides;
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) throw std::invalid_argument("tensor shape must have at least one axis");
  for (auto d : shape)
    if (d == 0) throw std::invalid_argument("tensor dims must be >= 1, got " + shape_to_string(shape));
}

}  // namespace

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(shape_size(shape_), fill);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (data_.size() != shape_size(shape_))
    throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape_to_string(shape_));
}

template <typename T>
std::size_t Tensor<T>::offset(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size())
    throw std::out_of_range("index rank " + std::to_string(index.size()) + " != tensor rank " +
                            std::to_string(shape_.size()));
  std::size_t flat = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= shape_[i]) throw std::out_of_range("index out of bounds on axis " + std::to_string(i));
    flat = flat * shape_[i] + index[i];
  }
  return flat;
}

template <typename T>
Tensor<T> Tensor<T>::reshape(Shape shape) const& {
  Tensor copy = *this;
  return std::move(copy).reshape(std::move(shape));
}

template <typename T>
Tensor<T> Tensor<T>::reshape(Shape shape) && {
  check_shape(shape);
  if (shape_size(shape) != data_.size())
    throw std::invalid_argument("cannot reshape " + shape_to_string(shape_) + " into " + shape_to_string(shape));
  shape_ = std::move(shape);
  return std::move(*this);
}

std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> axes) {
  std::vector<std::size_t> inv(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i) inv.at(axes[i]) = i;
  return inv;
}

template <typename T>
Tensor<T> Tensor<T>::permute(std::span<const std::size_t> axes) const {
  const std::size_t n = ndim();
  if (axes.size() != n) throw std::invalid_argument("permute: wrong number of axes");
  std::vector<bool> seen(n, false);
  for (auto a : axes) {
    if (a >= n || seen[a]) throw std::invalid_argument("permute: axes must be a permutation");
    seen[a] = true;
  }
  Shape out_shape(n);
  for (std::size_t i = 0; i < n; ++i) out_shape[i] = shape_[axes[i]];
  const Shape in_strides = strides();
  // Stride in the source for each output axis.
  Shape src_stride(n);
  for (std::size_t i = 0; i < n; ++i) src_stride[i] = in_strides[axes[i]];

  Tensor out(out_shape);
  std::vector<std::size_t> idx(n, 0);
  std::size_t src = 0;
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    out.data_[flat] = data_[src];
    for (std::size_t ax = n; ax-- > 0;) {
      ++idx[ax];
      src += src_stride[ax];
      if (idx[ax] < out_shape[ax]) break;
      src -= src_stride[ax] * idx[ax];
      idx[ax] = 0;
    }
  }
  return out;
}

template <typename T>
void Tensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
Tensor<T>& Tensor<T>::operator+=(const Tensor& other) {
  if (other.shape_ != shape_)
    throw std::invalid_argument("shape mismatch " + shape_to_string(shape_) + " vs " + shape_to_string(other.shape_));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

template <typename T>
Tensor<T>& Tensor<T>::operator-=(const Tensor& other) {
  if (other.shape_ != shape_)
    throw std::invalid_argument("shape mismatch " + shape_to_string(shape_) + " vs " + shape_to_string(other.shape_));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

template <typename T>
Tensor<T>& Tensor<T>::operator*=(T scale) {
  for (auto& v : data_) v *= scale;
  return *this;
}

template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, bool trans_a, const T* b, bool trans_b, T* c,
          bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, T{0});
  if (!trans_b) {
    for (std::size_t i = 0; i < m; ++i) {
      T* crow = c + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const T av = trans_a ? a[p * m + i] : a[i * k + p];
        if (av == T{0}) continue;
        const T* brow = b + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
    return;
  }
  // b stored as [n,k]: dot products over contiguous rows.
  if (!trans_a) {
    for (std::size_t i = 0; i < m; ++i) {
      const T* arow = a + i * k;
      for (std::size_t j = 0; j < n; ++j) {
        const T* brow = b + j * k;
        T acc{0};
        for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
        c[i * n + j] += acc;
      }
    }
    return;
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      T acc{0};
      for (std::size_t p = 0; p < k; ++p) acc += a[p * m + i] * b[j * k + p];
      c[i * n + j] += acc;
    }
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.ndim() != 2 || b.ndim() != 2) throw std::invalid_argument("matmul expects rank-2 tensors");
  if (a.dim(1) != b.dim(0))
    throw std::invalid_argument("matmul inner dims differ: " + shape_to_string(a.shape()) + " x " +
                                shape_to_string(b.shape()));
  Tensor<T> out({a.dim(0), b.dim(1)});
  gemm<T>(a.dim(0), b.dim(1), a.dim(1), a.data(), false, b.data(), false, out.data(), false);
  return out;
}

template <typename T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) throw std::invalid_argument("max_abs_diff: shape mismatch");
  T worst{0};
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

template <typename T>
T sum(const Tensor<T>& t) {
  T acc{0};
  for (auto v : t.values()) acc += v;
  return acc;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'D', 'C', 'L', 'S'};

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U value) {
  static_assert(std::is_trivially_copyable_v<U>);
  std::uint8_t bytes[sizeof(U)];
  std::memcpy(bytes, &value, sizeof(U));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
  out.insert(out.end(), std::begin(bytes), std::end(bytes));
}

template <typename U>
U get_le(const std::uint8_t* p) {
  std::uint8_t bytes[sizeof(U)];
  std::memcpy(bytes, p, sizeof(U));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
  U value;
  std::memcpy(&value, bytes, sizeof(U));
  return value;
}

template <typename T>
void encode_into(std::vector<std::uint8_t>& out, const Tensor<T>& t) {
  if (t.empty()) throw std::invalid_argument("cannot serialize an unset tensor");
  if (t.ndim() > 255) throw std::invalid_argument("tensor rank exceeds 255");
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(kFormatVersion);
  out.push_back(static_cast<std::uint8_t>(dtype_of<T>()));
  out.push_back(static_cast<std::uint8_t>(t.ndim()));
  for (auto d : t.shape()) put_le<std::uint64_t>(out, d);
  out.reserve(out.size() + t.size() * sizeof(T));
  for (auto v : t.values()) put_le<T>(out, v);
}

template <typename T>
Tensor<T> decode_payload(const std::uint8_t* p, std::size_t available, Shape shape) {
  const std::size_t n = shape_size(shape);
  if (available < n * sizeof(T))
    throw FormatError(FormatError::Kind::Truncated, "truncated payload: expected " + std::to_string(n * sizeof(T)) +
                                                        " bytes, found " + std::to_string(available));
  if (available > n * sizeof(T))
    throw FormatError(FormatError::Kind::TrailingData, "trailing data after payload");
  std::vector<T> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = get_le<T>(p + i * sizeof(T));
  return Tensor<T>(std::move(shape), std::move(data));
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const AnyTensor& tensor) {
  std::vector<std::uint8_t> out;
  std::visit([&](const auto& t) { encode_into(out, t); }, tensor);
  return out;
}

AnyTensor decode_tensor(std::span<const std::uint8_t> bytes) {
  constexpr std::size_t kHeader = 7;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError(FormatError::Kind::BadMagic, "bad magic");
  if (bytes.size() < kHeader) throw FormatError(FormatError::Kind::Truncated, "truncated header");
  if (bytes[4] != kFormatVersion)
    throw FormatError(FormatError::Kind::BadVersion, "unsupported format version " + std::to_string(bytes[4]));
  const std::uint8_t dtype = bytes[5];
  if (dtype > 1) throw FormatError(FormatError::Kind::BadDtype, "bad dtype code " + std::to_string(dtype));
  const std::size_t ndim = bytes[6];
  if (ndim == 0) throw FormatError(FormatError::Kind::BadShape, "bad shape: ndim is 0");
  if (bytes.size() < kHeader + 8 * ndim) throw FormatError(FormatError::Kind::Truncated, "truncated header");
  Shape shape(ndim);
  for (std::size_t i = 0; i < ndim; ++i) {
    const auto d = get_le<std::uint64_t>(bytes.data() + kHeader + 8 * i);
    if (d == 0) throw FormatError(FormatError::Kind::BadShape, "bad shape: zero extent");
    shape[i] = static_cast<std::size_t>(d);
  }
  const std::size_t start = kHeader + 8 * ndim;
  const std::uint8_t* payload = bytes.data() + start;
  const std::size_t available = bytes.size() - start;
  if (dtype == static_cast<std::uint8_t>(DType::F32)) return decode_payload<float>(payload, available, std::move(shape));
  return decode_payload<double>(payload, available, std::move(shape));
}

template <typename T>
void save_tensor(const std::filesystem::path& path, const Tensor<T>& tensor) {
  save_tensor(path, AnyTensor(tensor));
}

void save_tensor(const std::filesystem::path& path, const AnyTensor& tensor) {
  const auto bytes = encode_tensor(tensor);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError(FormatError::Kind::Io, "cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw FormatError(FormatError::Kind::Io, "write failed for " + path.string());
}

AnyTensor load_any(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(FormatError::Kind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_tensor(bytes);
}

template <typename T>
Tensor<T> load_tensor(const std::filesystem::path& path) {
  return std::visit(
      [](auto&& t) -> Tensor<T> {
        using Stored = typename std::decay_t<decltype(t)>::value_type;
        if constexpr (std::is_same_v<Stored, T>)
          return std::move(t);
        else
          return t.template cast<T>();
      },
      load_any(path));
}

#define DCLS_INSTANTIATE(T)                                                                                  \
  template class Tensor<T>;                                                                                  \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);                                         \
  template void gemm<T>(std::size_t, std::size_t, std::size_t, const T*, bool, const T*, bool, T*, bool);   \
  template T max_abs_diff<T>(const Tensor<T>&, const Tensor<T>&);                                           \
  template T sum<T>(const Tensor<T>&);                                                                       \
  template void save_tensor<T>(const std::filesystem::path&, const Tensor<T>&);                             \
  template Tensor<T> load_tensor<T>(const std::filesystem::path&);

DCLS_INSTANTIATE(float)
DCLS_INSTANTIATE(double)

#undef DCLS_INSTANTIATE

}  // namespace dcls
