// Copyright 2026 The TPGN Authors.
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

// Dense row-major arrays of rank 1-4 and the handful of kernels the
// generation network needs: outer products, order-3/order-4 contractions,
// (pseudo-)inversion and softmax. Everything is double precision.

#ifndef TPGN_TENSOR_HPP_
#define TPGN_TENSOR_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "tpgn/error.hpp"

namespace tpgn {

template <std::size_t Rank>
class Dense {
 public:
  static_assert(Rank >= 1 && Rank <= 4);
  using Shape = std::array<std::size_t, Rank>;

  // Unset value; only useful as a placeholder before assignment.
  Dense() = default;

  explicit Dense(Shape shape, double fill = 0.0) : shape_(shape) {
    data_.assign(checked_size(shape), fill);
  }

  Dense(Shape shape, std::vector<double> data)
      : shape_(shape), data_(std::move(data)) {
    if (data_.size() != checked_size(shape))
      fail(ErrorCode::kInvalidArgument,
           "dense array: data length " + std::to_string(data_.size()) +
               " does not match shape product " +
               std::to_string(checked_size(shape)));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  double& operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }

  template <class... Idx>
    requires(sizeof...(Idx) == Rank)
  double& operator()(Idx... idx) {
    return data_[offset(static_cast<std::size_t>(idx)...)];
  }
  template <class... Idx>
    requires(sizeof...(Idx) == Rank)
  double operator()(Idx... idx) const {
    return data_[offset(static_cast<std::size_t>(idx)...)];
  }

  void fill(double value) { data_.assign(data_.size(), value); }

  bool same_shape(const Dense& other) const noexcept {
    return shape_ == other.shape_;
  }

  friend bool operator==(const Dense& a, const Dense& b) = default;

 private:
  static std::size_t checked_size(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t s : shape) {
      if (s == 0) fail(ErrorCode::kInvalidArgument, "dense array: zero extent");
      n *= s;
    }
    return n;
  }

  template <class... Idx>
  std::size_t offset(Idx... idx) const noexcept {
    const std::array<std::size_t, Rank> ix{idx...};
    std::size_t off = 0;
    for (std::size_t a = 0; a < Rank; ++a) off = off * shape_[a] + ix[a];
    return off;
  }

  Shape shape_{};
  std::vector<double> data_;
};

using Vec = Dense<1>;
using Mat = Dense<2>;
using Tensor3 = Dense<3>;
using Tensor4 = Dense<4>;

Vec make_vec(std::initializer_list<double> values);
Vec make_vec(std::vector<double> values);
Mat make_mat(std::initializer_list<std::initializer_list<double>> rows);
Vec zeros(std::size_t n);
Mat zeros(std::size_t rows, std::size_t cols);

// Throws ErrorCode::kNotFinite naming `what` if any entry is NaN or Inf.
void require_finite(std::span<const double> values, const std::string& what);
bool all_finite(std::span<const double> values) noexcept;

inline double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

double dot(std::span<const double> a, std::span<const double> b);
double max_abs_diff(std::span<const double> a, std::span<const double> b);

// result[i][j] = a[i] * b[j].
Mat outer_product(const Vec& a, const Vec& b);

Vec matvec(const Mat& m, const Vec& x);
// m^T x without forming the transpose.
Vec matvec_transposed(const Mat& m, const Vec& x);
Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& m);
Mat identity(std::size_t n);

// (T x)_{ij} = sum_k T_{ijk} x_k
Mat order3_apply(const Tensor3& t, const Vec& x);
// (T^T M)_k = sum_{ij} T_{ijk} M_{ij}; the adjoint of order3_apply in x.
Vec order3_apply_transposed(const Tensor3& t, const Mat& m);
// T_{ijk} += scale * M_{ij} x_k; the adjoint of order3_apply in T.
void order3_accumulate(Tensor3& t, const Mat& m, const Vec& x, double scale = 1.0);

// (T M)_{ij} = sum_{kl} T_{ijkl} M_{kl}
Mat order4_apply(const Tensor4& t, const Mat& m);
// (T^T A)_{kl} = sum_{ij} T_{ijkl} A_{ij}
Mat order4_apply_transposed(const Tensor4& t, const Mat& a);
// T_{ijkl} += scale * A_{ij} B_{kl}
void order4_accumulate(Tensor4& t, const Mat& a, const Mat& b, double scale = 1.0);

struct InverseOptions {
  // Singular values below cutoff_ratio * sigma_max are treated as zero.
  double cutoff_ratio = 1e-10;
  // Square matrices with sigma_max / sigma_min at or above this get the
  // pseudo-inverse instead of the inverse.
  double condition_threshold = 1e12;
};

struct InverseResult {
  Mat inverse;          // cols x rows
  bool exact = false;   // true iff a genuine inverse of a square matrix
  double condition = 0; // sigma_max / sigma_min (Inf when rank deficient)
  std::size_t rank = 0;
};

InverseResult invert_or_pinv(const Mat& r, const InverseOptions& options = {});

// Max-subtracted softmax; entries are positive and sum to one.
Vec softmax(const Vec& z);
// log(softmax(z)) evaluated without forming the probabilities.
Vec log_softmax(const Vec& z);

}  // namespace tpgn

#endif  // TPGN_TENSOR_HPP_
