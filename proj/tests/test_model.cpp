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

#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "tpgn/model.hpp"

using namespace tpgn;
using tpgn::testing::random_mat;
using tpgn::testing::random_params;
using tpgn::testing::random_vec;

namespace {

HyperParams small_hyper(WxMode mode = WxMode::kTiedAverage) {
  HyperParams h;
  h.d = 3;
  h.vocab_size = 6;
  h.feature_dim = 4;
  h.max_len = 5;
  h.wx_mode = mode;
  return h;
}

// The S-cell update written out entry by entry.
Mat reference_s_cell(const TpgnState& st, const ModelParams& p, const HyperParams& h) {
  const std::size_t d = h.d;
  Mat gates[4] = {Mat({d, d}), Mat({d, d}), Mat({d, d}), Mat({d, d})};
  for (std::size_t g = 0; g < 4; ++g)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        double a = p.s[g].bias(i, j);
        for (std::size_t k = 0; k < d; ++k) {
          a += p.s[g].W(i, j, k) * st.p[k];
          a -= p.s[g].D(i, j, k) * p.We(k, st.prev_word);
          for (std::size_t l = 0; l < d; ++l) a += p.s[g].U(i, j, k, l) * st.S_hat(k, l);
        }
        gates[g](i, j) = g == kCell ? std::tanh(a) : 1.0 / (1.0 + std::exp(-a));
      }
  Mat s({d, d});
  for (std::size_t k = 0; k < d * d; ++k) {
    const double c = gates[kForget][k] * st.c1[k] + gates[kInput][k] * gates[kCell][k];
    s[k] = gates[kOutput][k] * std::tanh(c);
  }
  return s;
}

Vec reference_u_cell(const TpgnState& st, const ModelParams& p, const HyperParams& h) {
  const std::size_t d = h.d;
  Vec gates[4] = {Vec({d}), Vec({d}), Vec({d}), Vec({d})};
  for (std::size_t g = 0; g < 4; ++g)
    for (std::size_t i = 0; i < d; ++i) {
      double a = p.u[g].bias[i];
      for (std::size_t k = 0; k < d; ++k) {
        a += st.S_hat(i, k) * p.u[g].w[k];
        a -= p.u[g].D(i, k) * p.We(k, st.prev_word);
        a += p.u[g].U(i, k) * st.p[k];
      }
      gates[g][i] = g == kCell ? std::tanh(a) : 1.0 / (1.0 + std::exp(-a));
    }
  Vec out({d});
  for (std::size_t i = 0; i < d; ++i)
    out[i] = gates[kOutput][i] *
             std::tanh(gates[kForget][i] * st.c2[i] + gates[kInput][i] * gates[kCell][i]);
  return out;
}

TpgnState random_state(const HyperParams& h, std::mt19937_64& rng) {
  TpgnState st;
  st.S_hat = random_mat(h.d, h.d, rng);
  st.c1 = random_mat(h.d, h.d, rng);
  st.p = random_vec(h.d, rng);
  st.c2 = random_vec(h.d, rng);
  st.prev_word = 2;
  return st;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("parameter table has one unique name per tensor") {
  const auto names = parameter_names();
  CHECK(names.size() == 4 * 4 + 1 + 4 * 4 + 5);
  CHECK(std::set<std::string>(names.begin(), names.end()).size() == names.size());
  CHECK(names.front() == "W1_f");
  CHECK(names.back() == "bx");
}

TEST_CASE("S and U cells match entry-by-entry references") {
  const HyperParams h = small_hyper();
  const ModelParams p = random_params(h, 31);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const TpgnState st = random_state(h, rng);
    const Mat s = s_cell_step(st, p, h).S_hat;
    CHECK(max_abs_diff(s.data(), reference_s_cell(st, p, h).data()) < 1e-13);
    const Vec u = u_cell_step(st, p, h).p;
    CHECK(max_abs_diff(u.data(), reference_u_cell(st, p, h).data()) < 1e-13);
  }
}

TEST_CASE("the embedding term enters the gates with a minus sign") {
  const HyperParams h = small_hyper();
  ModelParams p = ModelParams::zeros(h);
  p.We(0, 2) = 1.0;
  p.s[kCell].D(0, 0, 0) = 1.0;
  p.s[kOutput].bias.fill(50.0);
  p.s[kInput].bias.fill(50.0);
  TpgnState st;
  st.S_hat = Mat({3, 3});
  st.c1 = Mat({3, 3});
  st.p = Vec({3});
  st.c2 = Vec({3});
  st.prev_word = 2;
  const Mat s = s_cell_step(st, p, h).S_hat;
  CHECK(s(0, 0) == doctest::Approx(std::tanh(std::tanh(-1.0))).epsilon(1e-12));
}

TEST_CASE("S_hat_0 is Cs applied to the centred features") {
  const HyperParams h = small_hyper();
  const ModelParams p = random_params(h, 4);
  std::mt19937_64 rng(9);
  const Vec v = random_vec(4, rng), mean = random_vec(4, rng);
  const TpgnState st = init_state(v, mean, p, h);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < 4; ++k) s += p.Cs(i, j, k) * (v[k] - mean[k]);
      CHECK(st.S_hat(i, j) == doctest::Approx(s).epsilon(1e-14));
    }
  CHECK(st.prev_word == h.start_id);
  for (double x : st.p.data()) CHECK(x == 0.0);
  CHECK_THROWS_AS(init_state(random_vec(3, rng), mean, p, h), Error);
}

TEST_CASE("unbind_filler equals the materialised block-diagonal product") {
  std::mt19937_64 rng(17);
  for (std::size_t d = 2; d <= 4; ++d) {
    const Mat s = random_mat(d, d, rng);
    const Vec u = random_vec(d * d, rng);
    Mat big({d * d, d * d});
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) big(k * d + i, k * d + j) = s(i, j);
    CHECK(max_abs_diff(unbind_filler(s, u).data(), matvec(big, u).data()) < 1e-12);
  }
  CHECK_THROWS_AS(unbind_filler(Mat({2, 3}), Vec({6})), Error);
}

TEST_CASE("tied-average decoding equals free decoding with Wx = tied_wx(We)") {
  HyperParams tied = small_hyper(WxMode::kTiedAverage);
  HyperParams free = small_hyper(WxMode::kFree);
  ModelParams p = random_params(free, 8);
  p.Wx = tied_wx(p.We);
  std::mt19937_64 rng(2);
  const Vec f = random_vec(9, rng);
  CHECK(max_abs_diff(decode_logits(f, p, tied).data(), decode_logits(f, p, free).data()) <
        1e-14);
  // Tied decoding ignores whatever is stored in Wx.
  ModelParams q = p;
  q.Wx.fill(3.0);
  CHECK(decode_logits(f, p, tied) == decode_logits(f, q, tied));
}

TEST_CASE("teacher forcing runs exactly the teacher length") {
  const HyperParams h = small_hyper();
  const ModelParams p = random_params(h, 5);
  std::mt19937_64 rng(3);
  const Vec v = random_vec(4, rng);
  const std::vector<std::size_t> teacher = {2, 3, 1};
  const CaptionResult r = forward_caption(v, Vec({4}), p, h, teacher);
  CHECK(r.steps.size() == 3);
  for (const StepRecord& s : r.steps) {
    CHECK(s.u.size() == 9);
    CHECK(s.probs.size() == 6);
  }
  const std::vector<std::size_t> too_long(6, 2);
  CHECK_THROWS_AS(forward_caption(v, Vec({4}), p, h, too_long), Error);
}

TEST_CASE("free running stops after the end token or max_len") {
  const HyperParams h = small_hyper();
  ModelParams p = random_params(h, 6);
  std::mt19937_64 rng(3);
  const Vec v = random_vec(4, rng);
  p.bx.fill(0.0);
  p.bx[h.end_id] = 100.0;
  CHECK(forward_caption(v, Vec({4}), p, h).word_ids == std::vector<std::size_t>{h.end_id});
  p.bx[h.end_id] = -100.0;
  CHECK(forward_caption(v, Vec({4}), p, h).word_ids.size() == h.max_len);
}

TEST_CASE("sampled decoding is reproducible per seed") {
  const HyperParams h = small_hyper();
  const ModelParams p = random_params(h, 12, 0.1);
  std::mt19937_64 rng(3);
  const Vec v = random_vec(4, rng);
  auto run = [&](std::uint64_t seed) {
    std::mt19937_64 r(seed);
    return forward_caption(v, Vec({4}), p, h, {}, {DecodeStrategy::kSample, &r}).word_ids;
  };
  CHECK(run(1) == run(1));
  DecodeOptions missing{DecodeStrategy::kSample, nullptr};
  CHECK_THROWS_AS(decode_word(Vec({9}), p, h, missing), Error);
}

TEST_CASE("hand-built network emits the encoded structure") {
  const auto w = tpgn::testing::make_witness();
  const std::vector<std::size_t> jay_saw_kay = {w.kJay, w.kSaw, w.kKay, 1};
  const std::vector<std::size_t> kay_saw_jay = {w.kKay, w.kSaw, w.kJay, 1};
  CHECK(forward_caption(make_vec({1, 0}), w.v_mean, w.params, w.hyper).word_ids == jay_saw_kay);
  CHECK(forward_caption(make_vec({0, 1}), w.v_mean, w.params, w.hyper).word_ids == kay_saw_jay);
}

TEST_CASE("validate rejects mismatched shapes and non-finite entries") {
  const HyperParams h = small_hyper();
  ModelParams p = random_params(h, 1);
  CHECK_NOTHROW(p.validate(h));
  ModelParams bad = p;
  bad.bu = Vec({4});
  CHECK_THROWS_AS(bad.validate(h), Error);
  bad = p;
  bad.Cs(0, 0, 0) = std::nan("");
  CHECK_THROWS_AS(bad.validate(h), Error);
}

}  // TEST_SUITE
