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

#include "tpgn/tpr.hpp"

#include <algorithm>

namespace tpgn {

RoleBasis make_role_basis(std::vector<Vec> roles,
                          const InverseOptions& options) {
  require(!roles.empty(), "make_role_basis: no roles");
  const std::size_t dim = roles.front().size();
  const std::size_t count = roles.size();
  for (const Vec& r : roles) {
    require(r.size() == dim, "make_role_basis: role vectors differ in length");
    require_finite(r.data(), "role vector");
  }

  Mat columns({dim, count});
  for (std::size_t j = 0; j < count; ++j)
    for (std::size_t i = 0; i < dim; ++i) columns(i, j) = roles[j][i];

  const InverseResult inv = invert_or_pinv(columns, options);

  RoleBasis basis;
  basis.duals_.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    Vec u({dim});
    for (std::size_t i = 0; i < dim; ++i) u[i] = inv.inverse(j, i);
    basis.duals_.push_back(std::move(u));
  }
  basis.roles_ = std::move(roles);
  basis.condition_ = inv.condition;
  // A tall full-column-rank R has a pseudo-inverse that is an exact left
  // inverse, so independence (not squareness) decides exactness.
  basis.exact_ =
      inv.rank == count && inv.condition < options.condition_threshold;

  double residual = 0.0;
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < count; ++j) {
      const double target = i == j ? 1.0 : 0.0;
      residual = std::max(
          residual,
          std::abs(dot(basis.roles_[i].data(), basis.duals_[j].data()) - target));
    }
  basis.residual_ = residual;
  return basis;
}

Tpr bind_and_superpose(std::span<const Binding> bindings,
                       const RoleBasis& basis) {
  require(!bindings.empty(), "bind_and_superpose: no bindings");
  const std::size_t filler_dim = bindings.front().filler.size();
  Mat sum({filler_dim, basis.role_dim()});
  for (const Binding& b : bindings) {
    if (b.filler.size() != filler_dim)
      fail(ErrorCode::kInvalidArgument,
           "bind_and_superpose: filler length " + std::to_string(b.filler.size()) +
               " differs from " + std::to_string(filler_dim));
    if (b.role_index >= basis.size())
      fail(ErrorCode::kInvalidArgument,
           "bind_and_superpose: role index " + std::to_string(b.role_index) +
               " out of range");
    const Mat bound = outer_product(b.filler, basis.roles()[b.role_index]);
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += bound[k];
  }
  return Tpr{std::move(sum)};
}

Vec unbind(const Tpr& t, const RoleBasis& basis, std::size_t role_index) {
  if (role_index >= basis.size())
    fail(ErrorCode::kInvalidArgument,
         "unbind: role index " + std::to_string(role_index) + " out of range");
  require(basis.role_dim() == t.role_dim(),
          "unbind: basis role dimension differs from the representation");
  return matvec(t.matrix, basis.duals()[role_index]);
}

std::vector<Vec> generate_sequence(const Tpr& t, const RoleBasis& basis,
                                   std::span<const std::size_t> role_order) {
  std::vector<Vec> words;
  words.reserve(role_order.size());
  for (std::size_t role : role_order) words.push_back(unbind(t, basis, role));
  return words;
}

std::vector<Vec> random_orthonormal_roles(std::size_t count, std::size_t dim,
                                          std::mt19937_64& rng) {
  require(count >= 1 && count <= dim,
          "random_orthonormal_roles: need 1 <= count <= dim");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Vec> out;
  while (out.size() < count) {
    Vec v({dim});
    for (std::size_t i = 0; i < dim; ++i) v[i] = gauss(rng);
    // Two passes of modified Gram-Schmidt keep orthogonality at rounding level.
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& q : out) {
        const double proj = dot(v.data(), q.data());
        for (std::size_t i = 0; i < dim; ++i) v[i] -= proj * q[i];
      }
    const double norm = std::sqrt(dot(v.data(), v.data()));
    if (norm < 1e-6) continue;
    for (std::size_t i = 0; i < dim; ++i) v[i] /= norm;
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace tpgn
