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

#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "tpgn/tpr.hpp"

using namespace tpgn;
using tpgn::testing::random_vec;

TEST_SUITE("tpr") {

TEST_CASE("orthonormal roles are their own duals") {
  std::mt19937_64 rng(21);
  const RoleBasis basis = make_role_basis(random_orthonormal_roles(4, 6, rng));
  CHECK(basis.exact());
  CHECK(basis.residual() < 1e-12);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(max_abs_diff(basis.roles()[i].data(), basis.duals()[i].data()) < 1e-12);
}

TEST_CASE("duals of (1,0),(1,1) are (1,-1),(0,1)") {
  const RoleBasis basis = make_role_basis({make_vec({1, 0}), make_vec({1, 1})});
  CHECK(basis.exact());
  CHECK(max_abs_diff(basis.duals()[0].data(), make_vec({1, -1}).data()) < 1e-15);
  CHECK(max_abs_diff(basis.duals()[1].data(), make_vec({0, 1}).data()) < 1e-15);
}

TEST_CASE("dependent roles fall back to the pseudo-inverse") {
  const RoleBasis basis = make_role_basis({make_vec({1, 0}), make_vec({2, 0})});
  CHECK_FALSE(basis.exact());
  CHECK(max_abs_diff(basis.duals()[0].data(), make_vec({0.2, 0}).data()) < 1e-15);
  CHECK(max_abs_diff(basis.duals()[1].data(), make_vec({0.4, 0}).data()) < 1e-15);
  // r_1 . u_0 = 2 * 0.2 = 0.4 and r_1 . u_1 = 0.8: the worst entry is 1 - 0.2.
  CHECK(basis.residual() == doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("tall independent roles unbind exactly") {
  // Two roles in R^3.
  const RoleBasis basis = make_role_basis({make_vec({1, 0, 1}), make_vec({0, 1, 1})});
  CHECK(basis.exact());
  const std::vector<Binding> b = {{make_vec({3, -1}), 0}, {make_vec({0.5, 2}), 1}};
  const Tpr t = bind_and_superpose(b, basis);
  CHECK(max_abs_diff(unbind(t, basis, 0).data(), b[0].filler.data()) < 1e-12);
  CHECK(max_abs_diff(unbind(t, basis, 1).data(), b[1].filler.data()) < 1e-12);
}

TEST_CASE("binding is the outer product and superposition is the sum") {
  std::mt19937_64 rng(2);
  const RoleBasis basis = make_role_basis(random_orthonormal_roles(3, 3, rng));
  const Vec f0 = random_vec(2, rng), f1 = random_vec(2, rng);
  const std::vector<Binding> b = {{f0, 0}, {f1, 2}};
  const Tpr t = bind_and_superpose(b, basis);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(t.matrix(i, j) == doctest::Approx(f0[i] * basis.roles()[0][j] +
                                              f1[i] * basis.roles()[2][j]).epsilon(1e-15));
  // The unused role unbinds to zero.
  const Vec unused = unbind(t, basis, 1);
  for (double x : unused.data()) CHECK(std::abs(x) < 1e-14);
}

TEST_CASE("a role bound twice holds the sum of its fillers") {
  const RoleBasis basis = make_role_basis({make_vec({1, 0}), make_vec({0, 1})});
  const std::vector<Binding> b = {{make_vec({1, 2}), 0}, {make_vec({3, 4}), 0}};
  const Tpr t = bind_and_superpose(b, basis);
  CHECK(max_abs_diff(unbind(t, basis, 0).data(), make_vec({4, 6}).data()) < 1e-15);
}

TEST_CASE("bad arguments are rejected") {
  const RoleBasis basis = make_role_basis({make_vec({1, 0}), make_vec({0, 1})});
  CHECK_THROWS_AS(bind_and_superpose(std::vector<Binding>{}, basis), Error);
  const std::vector<Binding> b = {{make_vec({1}), 5}};
  CHECK_THROWS_AS(bind_and_superpose(b, basis), Error);
  CHECK_THROWS_AS(make_role_basis({}), Error);
  CHECK_THROWS_AS(make_role_basis({make_vec({1, 0}), make_vec({1, 0, 0})}), Error);
}

TEST_CASE("Jay saw Kay is generated in role order and differs from Kay saw Jay") {
  const Vec jay = make_vec({1, 0, 0}), saw = make_vec({0, 1, 0}), kay = make_vec({0, 0, 1});
  std::mt19937_64 rng(4);
  const RoleBasis basis = make_role_basis(random_orthonormal_roles(3, 3, rng));
  const std::vector<Binding> jsk = {{jay, 0}, {saw, 1}, {kay, 2}};
  const std::vector<Binding> ksj = {{kay, 0}, {saw, 1}, {jay, 2}};
  const Tpr a = bind_and_superpose(jsk, basis), b = bind_and_superpose(ksj, basis);
  const std::vector<std::size_t> order = {0, 1, 2};
  const auto words = generate_sequence(a, basis, order);
  CHECK(argmax(words[0].data()) == 0);
  CHECK(argmax(words[1].data()) == 1);
  CHECK(argmax(words[2].data()) == 2);
  CHECK(max_abs_diff(a.matrix.data(), b.matrix.data()) > 0.5);
}

TEST_CASE("random orthonormal roles are orthonormal") {
  std::mt19937_64 rng(8);
  for (std::size_t dim = 1; dim <= 8; ++dim) {
    const auto roles = random_orthonormal_roles(dim, dim, rng);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j)
        CHECK(dot(roles[i].data(), roles[j].data()) ==
              doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12).scale(1.0));
  }
  CHECK_THROWS_AS(random_orthonormal_roles(4, 3, rng), Error);
}

}  // TEST_SUITE
