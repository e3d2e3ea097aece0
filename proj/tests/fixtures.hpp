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

// Shared test fixtures and independent reference implementations.

#ifndef TPGN_TESTS_FIXTURES_HPP_
#define TPGN_TESTS_FIXTURES_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <unistd.h>
#include <string>
#include <vector>

#include "tpgn/model.hpp"
#include "tpgn/train.hpp"

namespace tpgn::testing {

inline Vec random_vec(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec v({n});
  for (double& x : v.data()) x = u(rng);
  return v;
}

inline Mat random_mat(std::size_t r, std::size_t c, std::mt19937_64& rng,
                      double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat m({r, c});
  for (double& x : m.data()) x = u(rng);
  return m;
}

inline ModelParams random_params(const HyperParams& h, std::uint64_t seed,
                                 double scale = 0.5) {
  ModelParams p = ModelParams::zeros(h);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for_each_tensor(p, [&](std::string_view, std::span<double> data, const auto&) {
    for (double& x : data) x = u(rng);
  });
  if (h.wx_mode == WxMode::kTiedAverage) p.Wx = tied_wx(p.We);
  return p;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("tpgn_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Hand-built TPR-capable network.
//
// Vocabulary {<s>, </s>, Jay, saw, Kay}; d = 4; tied decoding. The word
// embeddings are </s> = e0, Jay = e1, saw = e2, Kay = e3 (<s> = 0). Feature
// k of the two-dimensional visual input selects an encoded sentence:
//   feature 0: Jay (x) r_subj + saw (x) r_verb + Kay (x) r_obj + </s> (x) r_end
//   feature 1: Kay (x) r_subj + saw (x) r_verb + Jay (x) r_obj + </s> (x) r_end
// with standard-basis roles r_subj = e0, r_verb = e1, r_obj = e2, r_end = e3.
//
// The S cell copies S_hat forward (forget gate shut, input and output gates
// open, U1_c a scaled identity). The U cell is a counter: from p_0 = 0 the
// bias points p_1 at r_subj, and U2_c moves p from role r to role r+1 while
// cancelling that bias. u = tanh(Wu p) with Wu = d stacked copies of kappa*I
// turns p into the (scaled) dual of the current role, so S_hat u reads out
// the bound filler.
struct Witness {
  HyperParams hyper;
  ModelParams params;
  Vec v_mean;
  static constexpr std::size_t kJay = 2, kSaw = 3, kKay = 4;
};

inline Witness make_witness() {
  constexpr double kOpen = 30.0;   // saturates a sigmoid gate
  constexpr double kBeta = 20.0;   // U-cell drive
  constexpr double kKappa = 10.0;  // S-cell self-copy and u gain
  Witness w;
  HyperParams& h = w.hyper;
  h.d = 4;
  h.vocab_size = 5;
  h.feature_dim = 2;
  h.max_len = 6;
  h.wx_mode = WxMode::kTiedAverage;
  const std::size_t d = h.d;
  ModelParams p = ModelParams::zeros(h);

  // Embeddings: word id -> basis index.
  const std::array<int, 5> basis = {-1, 0, 1, 2, 3};
  for (std::size_t word = 0; word < 5; ++word)
    if (basis[word] >= 0) p.We(std::size_t(basis[word]), word) = 1.0;
  p.Wx = tied_wx(p.We);

  // Cs(i, j, k): filler i bound to role j in sentence k.
  const std::array<std::array<std::size_t, 4>, 2> sentences = {{
      {Witness::kJay, Witness::kSaw, Witness::kKay, 1},
      {Witness::kKay, Witness::kSaw, Witness::kJay, 1},
  }};
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t role = 0; role < 4; ++role)
      p.Cs(std::size_t(basis[sentences[k][role]]), role, k) = 1.0;

  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      p.s[kForget].bias(i, j) = -kOpen;
      p.s[kInput].bias(i, j) = kOpen;
      p.s[kOutput].bias(i, j) = kOpen;
      p.s[kCell].U(i, j, i, j) = kKappa;
    }

  // Steady active value of p: tanh(tanh(beta)).
  const double p_star = std::tanh(std::tanh(kBeta));
  for (std::size_t i = 0; i < d; ++i) {
    p.u[kForget].bias[i] = -kOpen;
    p.u[kInput].bias[i] = kOpen;
    p.u[kOutput].bias[i] = kOpen;
  }
  p.u[kCell].bias[0] = kBeta;
  for (std::size_t r = 0; r + 1 < d; ++r) p.u[kCell].U(r + 1, r) = kBeta / p_star;
  for (std::size_t r = 0; r < d; ++r) p.u[kCell].U(0, r) -= kBeta / p_star;

  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t i = 0; i < d; ++i) p.Wu(k * d + i, i) = kKappa;

  w.params = std::move(p);
  w.v_mean = Vec({2});
  return w;
}

}  // namespace tpgn::testing

#endif  // TPGN_TESTS_FIXTURES_HPP_
