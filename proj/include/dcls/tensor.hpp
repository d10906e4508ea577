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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace dcls {

using Shape = std::vector<std::size_t>;

/// Number of elements described by a shape (1 for an empty shape).
std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Row-major strides: the last axis has stride 1.
Shape row_major_strides(const Shape& shape);

enum class DType : std::uint8_t { F32 = 0, F64 = 1 };

template <typename T>
constexpr DType dtype_of();
template <>
constexpr DType dtype_of<float>() { return DType::F32; }
template <>
constexpr DType dtype_of<double>() { return DType::F64; }

/// Dense row-major n-dimensional array.
///
/// A default-constructed tensor is "unset": it has no shape and no data and
/// is only useful as a placeholder. Every other tensor has a non-empty shape
/// of positive extents and holds exactly product(shape) elements.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{0});
  Tensor(Shape shape, std::vector<T> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, T value) { return Tensor(std::move(shape), value); }

  bool empty() const { return data_.empty(); }
  const Shape& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  Shape strides() const { return row_major_strides(shape_); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  const std::vector<T>& vector() const { return data_; }

  T& operator[](std::size_t flat) { return data_[flat]; }
  const T& operator[](std::size_t flat) const { return data_[flat]; }

  /// Flat offset of a multi-index; bounds-checked.
  std::size_t offset(std::span<const std::size_t> index) const;

  template <typename... Idx>
  T& at(Idx... idx) {
    const std::size_t index[] = {static_cast<std::size_t>(idx)...};
    return data_[offset(index)];
  }
  template <typename... Idx>
  const T& at(Idx... idx) const {
    const std::size_t index[] = {static_cast<std::size_t>(idx)...};
    return data_[offset(index)];
  }

  /// Same data, new shape; sizes must agree.
  Tensor reshape(Shape shape) const&;
  Tensor reshape(Shape shape) &&;

  /// Materialized axis permutation: result.dim(i) == dim(axes[i]).
  Tensor permute(std::span<const std::size_t> axes) const;
  Tensor permute(std::initializer_list<std::size_t> axes) const {
    return permute(std::span<const std::size_t>(axes.begin(), axes.size()));
  }

  void fill(T value);
  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(T scale);

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

/// Inverse of an axis permutation.
std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> axes);

/// Standard matrix product of [m,k] and [k,n].
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

/// Raw row-major GEMM: c[m,n] (+)= op(a) * op(b).
/// op(a) is [m,k] (a stored as [k,m] when trans_a); op(b) is [k,n]
/// (b stored as [n,k] when trans_b).
template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, bool trans_a, const T* b,
          bool trans_b, T* c, bool accumulate);

template <typename T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
T sum(const Tensor<T>& t);

// ---------------------------------------------------------------------------
// Binary file format
//
//   offset  size      field
//   0       4         magic "DCLS"
//   4       1         format version (1)
//   5       1         dtype code (0 = f32, 1 = f64)
//   6       1         ndim (1..255)
//   7       8*ndim    dims, uint64 little-endian
//   ...     n*width   payload, little-endian, row-major
// ---------------------------------------------------------------------------

inline constexpr std::uint8_t kFormatVersion = 1;

class FormatError : public std::runtime_error {
 public:
  enum class Kind { Io, BadMagic, BadVersion, BadDtype, BadShape, Truncated, TrailingData };
  FormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

using AnyTensor = std::variant<Tensor<float>, Tensor<double>>;

template <typename T>
void save_tensor(const std::filesystem::path& path, const Tensor<T>& tensor);
void save_tensor(const std::filesystem::path& path, const AnyTensor& tensor);

/// Loads a tensor keeping the stored dtype.
AnyTensor load_any(const std::filesystem::path& path);

/// Loads a tensor and converts it to T when the stored dtype differs.
template <typename T>
Tensor<T> load_tensor(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_tensor(const AnyTensor& tensor);
AnyTensor decode_tensor(std::span<const std::uint8_t> bytes);

}  // namespace dcls
