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

// Tensor product representations of order 2: a structure is the sum of
// filler (x) role outer products, and a filler is recovered by multiplying
// the structure with the dual ("unbinding") vector of its role.

#ifndef TPGN_TPR_HPP_
#define TPGN_TPR_HPP_

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "tpgn/tensor.hpp"

namespace tpgn {

class RoleBasis {
 public:
  const std::vector<Vec>& roles() const noexcept { return roles_; }
  const std::vector<Vec>& duals() const noexcept { return duals_; }
  std::size_t size() const noexcept { return roles_.size(); }
  std::size_t role_dim() const noexcept { return roles_.front().size(); }

  // True when the roles are linearly independent and well conditioned, so
  // that roles[i] . duals[j] == delta_ij up to rounding.
  bool exact() const noexcept { return exact_; }
  // max_ij |roles[i] . duals[j] - delta_ij|
  double residual() const noexcept { return residual_; }
  double condition() const noexcept { return condition_; }

 private:
  friend RoleBasis make_role_basis(std::vector<Vec> roles,
                                   const InverseOptions& options);
  std::vector<Vec> roles_;
  std::vector<Vec> duals_;
  bool exact_ = false;
  double residual_ = 0.0;
  double condition_ = 0.0;
};

// Duals are the rows of R^{-1} (or of the pseudo-inverse when R is not
// invertible), where R has the role vectors as columns.
RoleBasis make_role_basis(std::vector<Vec> roles,
                          const InverseOptions& options = {});

struct Tpr {
  Mat matrix;  // filler_dim x role_dim
  std::size_t filler_dim() const { return matrix.dim(0); }
  std::size_t role_dim() const { return matrix.dim(1); }
};

struct Binding {
  Vec filler;
  std::size_t role_index = 0;
};

// Sum of filler (x) role over all bindings. A role bound twice holds the sum
// of its fillers.
Tpr bind_and_superpose(std::span<const Binding> bindings,
                       const RoleBasis& basis);

Vec unbind(const Tpr& t, const RoleBasis& basis, std::size_t role_index);

// Word-by-word readout: element k is unbind(t, basis, role_order[k]).
std::vector<Vec> generate_sequence(const Tpr& t, const RoleBasis& basis,
                                   std::span<const std::size_t> role_order);

// `count` orthonormal vectors of length `dim` (count <= dim), by
// Gram-Schmidt on Gaussian draws.
std::vector<Vec> random_orthonormal_roles(std::size_t count, std::size_t dim,
                                          std::mt19937_64& rng);

}  // namespace tpgn

#endif  // TPGN_TPR_HPP_
