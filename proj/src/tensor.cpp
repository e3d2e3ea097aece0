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

#include "tpgn/tensor.hpp"

#include <algorithm>
#include <limits>

#include <Eigen/Dense>

namespace tpgn {

namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string shape_str(std::size_t a, std::size_t b) {
  return std::to_string(a) + "x" + std::to_string(b);
}

}  // namespace

Vec make_vec(std::initializer_list<double> values) {
  return make_vec(std::vector<double>(values));
}

Vec make_vec(std::vector<double> values) {
  const std::size_t n = values.size();
  return Vec({n}, std::move(values));
}

Mat make_mat(std::initializer_list<std::initializer_list<double>> rows) {
  require(rows.size() > 0, "make_mat: no rows");
  const std::size_t cols = rows.begin()->size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto& row : rows) {
    require(row.size() == cols, "make_mat: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Mat({rows.size(), cols}, std::move(data));
}

Vec zeros(std::size_t n) { return Vec({n}); }
Mat zeros(std::size_t rows, std::size_t cols) { return Mat({rows, cols}); }

bool all_finite(std::span<const double> values) noexcept {
  return std::all_of(values.begin(), values.end(),
                     [](double x) { return std::isfinite(x); });
}

void require_finite(std::span<const double> values, const std::string& what) {
  if (!all_finite(values))
    fail(ErrorCode::kNotFinite, what + ": non-finite entry");
}

std::size_t argmax(std::span<const double> values) {
  require(!values.empty(), "argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "max_abs_diff: length mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Mat outer_product(const Vec& a, const Vec& b) {
  require(!a.empty() && !b.empty(), "outer_product: empty operand");
  require_finite(a.data(), "outer_product lhs");
  require_finite(b.data(), "outer_product rhs");
  Mat out({a.size(), b.size()});
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out(i, j) = a[i] * b[j];
  return out;
}

Vec matvec(const Mat& m, const Vec& x) {
  if (m.dim(1) != x.size())
    fail(ErrorCode::kInvalidArgument,
         "matvec: " + shape_str(m.dim(0), m.dim(1)) + " times " +
             std::to_string(x.size()));
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  Vec out({rows});
  const double* a = m.data().data();
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += a[i * cols + j] * x[j];
    out[i] = s;
  }
  return out;
}

Vec matvec_transposed(const Mat& m, const Vec& x) {
  if (m.dim(0) != x.size())
    fail(ErrorCode::kInvalidArgument,
         "matvec_transposed: " + shape_str(m.dim(0), m.dim(1)) +
             " transposed times " + std::to_string(x.size()));
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  Vec out({cols});
  const double* a = m.data().data();
  for (std::size_t i = 0; i < rows; ++i) {
    const double xi = x[i];
    for (std::size_t j = 0; j < cols; ++j) out[j] += a[i * cols + j] * xi;
  }
  return out;
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.dim(1) != b.dim(0))
    fail(ErrorCode::kInvalidArgument,
         "matmul: " + shape_str(a.dim(0), a.dim(1)) + " times " +
             shape_str(b.dim(0), b.dim(1)));
  Mat out({a.dim(0), b.dim(1)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t k = 0; k < a.dim(1); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.dim(1); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

Mat transpose(const Mat& m) {
  Mat out({m.dim(1), m.dim(0)});
  for (std::size_t i = 0; i < m.dim(0); ++i)
    for (std::size_t j = 0; j < m.dim(1); ++j) out(j, i) = m(i, j);
  return out;
}

Mat identity(std::size_t n) {
  Mat out({n, n});
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

Mat order3_apply(const Tensor3& t, const Vec& x) {
  const auto [d1, d2, d3] = t.shape();
  if (d3 != x.size())
    fail(ErrorCode::kInvalidArgument,
         "order3_apply: trailing dim " + std::to_string(d3) +
             " vs vector length " + std::to_string(x.size()));
  Mat out({d1, d2});
  const double* tp = t.data().data();
  double* op = out.data().data();
  for (std::size_t ij = 0; ij < d1 * d2; ++ij) {
    const double* row = tp + ij * d3;
    double s = 0.0;
    for (std::size_t k = 0; k < d3; ++k) s += row[k] * x[k];
    op[ij] = s;
  }
  return out;
}

Vec order3_apply_transposed(const Tensor3& t, const Mat& m) {
  const auto [d1, d2, d3] = t.shape();
  if (m.dim(0) != d1 || m.dim(1) != d2)
    fail(ErrorCode::kInvalidArgument, "order3_apply_transposed: shape mismatch");
  Vec out({d3});
  const double* tp = t.data().data();
  const double* mp = m.data().data();
  for (std::size_t ij = 0; ij < d1 * d2; ++ij) {
    const double w = mp[ij];
    if (w == 0.0) continue;
    const double* row = tp + ij * d3;
    for (std::size_t k = 0; k < d3; ++k) out[k] += row[k] * w;
  }
  return out;
}

void order3_accumulate(Tensor3& t, const Mat& m, const Vec& x, double scale) {
  const auto [d1, d2, d3] = t.shape();
  if (m.dim(0) != d1 || m.dim(1) != d2 || x.size() != d3)
    fail(ErrorCode::kInvalidArgument, "order3_accumulate: shape mismatch");
  double* tp = t.data().data();
  const double* mp = m.data().data();
  for (std::size_t ij = 0; ij < d1 * d2; ++ij) {
    const double w = scale * mp[ij];
    if (w == 0.0) continue;
    double* row = tp + ij * d3;
    for (std::size_t k = 0; k < d3; ++k) row[k] += w * x[k];
  }
}

Mat order4_apply(const Tensor4& t, const Mat& m) {
  const auto [d1, d2, d3, d4] = t.shape();
  if (m.dim(0) != d3 || m.dim(1) != d4)
    fail(ErrorCode::kInvalidArgument,
         "order4_apply: trailing dims " + shape_str(d3, d4) + " vs matrix " +
             shape_str(m.dim(0), m.dim(1)));
  const std::size_t inner = d3 * d4;
  Mat out({d1, d2});
  const double* tp = t.data().data();
  const double* mp = m.data().data();
  double* op = out.data().data();
  for (std::size_t ij = 0; ij < d1 * d2; ++ij) {
    const double* block = tp + ij * inner;
    double s = 0.0;
    for (std::size_t kl = 0; kl < inner; ++kl) s += block[kl] * mp[kl];
    op[ij] = s;
  }
  return out;
}

Mat order4_apply_transposed(const Tensor4& t, const Mat& a) {
  const auto [d1, d2, d3, d4] = t.shape();
  if (a.dim(0) != d1 || a.dim(1) != d2)
    fail(ErrorCode::kInvalidArgument, "order4_apply_transposed: shape mismatch");
  const std::size_t inner = d3 * d4;
  Mat out({d3, d4});
  const double* tp = t.data().data();
  const double* ap = a.data().data();
  double* op = out.data().data();
  for (std::size_t ij = 0; ij < d1 * d2; ++ij) {
    const double w = ap[ij];
    if (w == 0.0) continue;
    const double* block = tp + ij * inner;
    for (std::size_t kl = 0; kl < inner; ++kl) op[kl] += block[kl] * w;
  }
  return out;
}

void order4_accumulate(Tensor4& t, const Mat& a, const Mat& b, double scale) {
  const auto [d1, d2, d3, d4] = t.shape();
  if (a.dim(0) != d1 || a.dim(1) != d2 || b.dim(0) != d3 || b.dim(1) != d4)
    fail(ErrorCode::kInvalidArgument, "order4_accumulate: shape mismatch");
  const std::size_t inner = d3 * d4;
  double* tp = t.data().data();
  const double* ap = a.data().data();
  const double* bp = b.data().data();
  for (std::size_t ij = 0; ij < d1 * d2; ++ij) {
    const double w = scale * ap[ij];
    if (w == 0.0) continue;
    double* block = tp + ij * inner;
    for (std::size_t kl = 0; kl < inner; ++kl) block[kl] += w * bp[kl];
  }
}

InverseResult invert_or_pinv(const Mat& r, const InverseOptions& options) {
  require(!r.empty(), "invert_or_pinv: empty matrix");
  require_finite(r.data(), "invert_or_pinv input");
  const auto rows = static_cast<Eigen::Index>(r.dim(0));
  const auto cols = static_cast<Eigen::Index>(r.dim(1));
  const Eigen::Map<const RowMatrix> m(r.data().data(), rows, cols);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double sigma_max = sigma(0);
  const double cutoff = options.cutoff_ratio * sigma_max;

  InverseResult result;
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > cutoff) ++result.rank;
  const double sigma_min = sigma(sigma.size() - 1);
  result.condition = sigma_min > 0.0 && result.rank == std::size_t(sigma.size())
                         ? sigma_max / sigma_min
                         : std::numeric_limits<double>::infinity();

  RowMatrix inv;
  if (rows == cols && result.rank == std::size_t(rows) &&
      result.condition < options.condition_threshold) {
    inv = m.partialPivLu().inverse();
    result.exact = true;
  } else {
    Eigen::VectorXd sigma_inv = Eigen::VectorXd::Zero(sigma.size());
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
      if (sigma(i) > cutoff) sigma_inv(i) = 1.0 / sigma(i);
    inv = svd.matrixV() * sigma_inv.asDiagonal() * svd.matrixU().transpose();
  }
  std::vector<double> data(inv.data(), inv.data() + inv.size());
  result.inverse = Mat({r.dim(1), r.dim(0)}, std::move(data));
  return result;
}

Vec softmax(const Vec& z) {
  require(!z.empty(), "softmax: empty input");
  require_finite(z.data(), "softmax input");
  const double zmax = z[argmax(z.data())];
  Vec out({z.size()});
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - zmax);
    total += out[i];
  }
  for (std::size_t i = 0; i < z.size(); ++i) out[i] /= total;
  return out;
}

Vec log_softmax(const Vec& z) {
  require(!z.empty(), "log_softmax: empty input");
  require_finite(z.data(), "log_softmax input");
  const double zmax = z[argmax(z.data())];
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) total += std::exp(z[i] - zmax);
  const double log_total = std::log(total);
  Vec out({z.size()});
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - zmax - log_total;
  return out;
}

}  // namespace tpgn
