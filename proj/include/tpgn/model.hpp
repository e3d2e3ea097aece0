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

// Forward computation of the tensor product generation network.
//
// Two coupled LSTMs run in lockstep. The sentence-encoding cell keeps a
// d x d matrix state S_hat; the unbinding cell keeps a d-vector state p.
// Each step the unbinding cell emits u = tanh(Wu p + bu) in R^{d^2}, the
// filler f = blockdiag(S_hat, ..., S_hat) u is read out of the sentence
// state, and the word is decoded from f by a softmax layer.

#ifndef TPGN_MODEL_HPP_
#define TPGN_MODEL_HPP_

#include <array>
#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tpgn/tensor.hpp"

namespace tpgn {

// How the word de-embedding Wx relates to the embedding We.
//  kTiedAverage: logits = We^T mean_k(f^(k)) + bx, where f^(k) are the d
//                length-d blocks of f. No separate Wx is trained.
//  kFree:        logits = Wx f + bx with a trainable V x d^2 Wx.
enum class WxMode { kTiedAverage = 0, kFree = 1 };

std::string_view to_string(WxMode mode);
std::optional<WxMode> parse_wx_mode(std::string_view text);

struct HyperParams {
  std::size_t d = 8;
  std::size_t vocab_size = 3;
  std::size_t feature_dim = 1;
  std::size_t max_len = 8;
  std::size_t start_id = 0;
  std::size_t end_id = 1;
  WxMode wx_mode = WxMode::kTiedAverage;

  void validate() const;
};

enum Gate : std::size_t { kForget = 0, kInput = 1, kOutput = 2, kCell = 3 };
inline constexpr std::size_t kNumGates = 4;
inline constexpr std::array<std::string_view, kNumGates> kGateSuffix = {
    "f", "i", "o", "c"};

struct SentenceGate {
  Tensor3 W;   // d x d x d, applied to p_{t-1}
  Tensor3 D;   // d x d x d, applied to We x_{t-1}
  Tensor4 U;   // d x d x d x d, applied to S_hat_{t-1}
  Mat bias;    // d x d
  bool operator==(const SentenceGate&) const = default;
};

struct UnbindingGate {
  Vec w;       // d, right-multiplies S_hat_{t-1}
  Mat D;       // d x d, applied to We x_{t-1}
  Mat U;       // d x d, applied to p_{t-1}
  Vec bias;    // d
  bool operator==(const UnbindingGate&) const = default;
};

struct ModelParams {
  std::array<SentenceGate, kNumGates> s;
  Tensor3 Cs;  // d x d x feature_dim
  std::array<UnbindingGate, kNumGates> u;
  Mat Wu;      // d^2 x d
  Vec bu;      // d^2
  Mat We;      // d x V, column j embeds word j
  Mat Wx;      // V x d^2; in tied mode it mirrors We (see tied_wx)
  Vec bx;      // V

  static ModelParams zeros(const HyperParams& hyper);
  // Throws on any shape inconsistency with `hyper` or non-finite entry.
  void validate(const HyperParams& hyper) const;
  bool operator==(const ModelParams&) const = default;
};

// The V x d^2 matrix equivalent to tied-average decoding: each row is the
// word's embedding repeated d times and divided by d.
Mat tied_wx(const Mat& We);

// Calls fn(name, span, shape) for every tensor in a fixed order. `name`
// follows the parameter naming used in checkpoints (W1_f, U2_c, Cs, ...).
template <class Params, class Fn>
void for_each_tensor(Params& params, Fn&& fn) {
  auto visit = [&](std::string name, auto& t) {
    const auto& shape = t.shape();
    fn(std::string_view(name), t.data(),
       std::vector<std::size_t>(shape.begin(), shape.end()));
  };
  for (std::size_t g = 0; g < kNumGates; ++g) {
    const std::string sfx(kGateSuffix[g]);
    visit("W1_" + sfx, params.s[g].W);
    visit("D1_" + sfx, params.s[g].D);
    visit("U1_" + sfx, params.s[g].U);
    visit("b1_" + sfx, params.s[g].bias);
  }
  visit("Cs", params.Cs);
  for (std::size_t g = 0; g < kNumGates; ++g) {
    const std::string sfx(kGateSuffix[g]);
    visit("w2_" + sfx, params.u[g].w);
    visit("D2_" + sfx, params.u[g].D);
    visit("U2_" + sfx, params.u[g].U);
    visit("b2_" + sfx, params.u[g].bias);
  }
  visit("Wu", params.Wu);
  visit("bu", params.bu);
  visit("We", params.We);
  visit("Wx", params.Wx);
  visit("bx", params.bx);
}

std::vector<std::string> parameter_names();

struct TpgnState {
  Mat S_hat;   // d x d
  Mat c1;      // d x d
  Vec p;       // d
  Vec c2;      // d
  std::size_t prev_word = 0;
};

TpgnState init_state(const Vec& v, const Vec& v_mean, const ModelParams& params,
                     const HyperParams& hyper);

// Gate activations kept for the backward pass.
struct SentenceCellTrace {
  std::array<Mat, kNumGates> gate;  // sigma(.) for f,i,o; tanh(.) for c
  Mat c1;
  Mat tanh_c1;
  Mat S_hat;
};

struct UnbindingCellTrace {
  std::array<Vec, kNumGates> gate;
  Vec c2;
  Vec tanh_c2;
  Vec p;
};

SentenceCellTrace s_cell_forward(const TpgnState& state, const ModelParams& params,
                                 const HyperParams& hyper);
UnbindingCellTrace u_cell_forward(const TpgnState& state, const ModelParams& params,
                                  const HyperParams& hyper);

struct SentenceCellOutput {
  Mat S_hat;
  Mat c1;
};
struct UnbindingCellOutput {
  Vec p;
  Vec c2;
};

SentenceCellOutput s_cell_step(const TpgnState& state, const ModelParams& params,
                               const HyperParams& hyper);
UnbindingCellOutput u_cell_step(const TpgnState& state, const ModelParams& params,
                                const HyperParams& hyper);

// u = tanh(Wu p + bu), length d^2.
Vec compute_unbinding(const Vec& p, const ModelParams& params);

// f = blockdiag(S_hat x d) u, computed blockwise without forming the d^2 x d^2
// matrix: f^(k) = S_hat u^(k).
Vec unbind_filler(const Mat& S_hat, const Vec& u);

Vec decode_logits(const Vec& f, const ModelParams& params, const HyperParams& hyper);

enum class DecodeStrategy { kGreedy, kSample };

struct DecodeOptions {
  DecodeStrategy strategy = DecodeStrategy::kGreedy;
  std::mt19937_64* rng = nullptr;  // required for kSample
};

struct DecodedWord {
  Vec probs;
  std::size_t word_id = 0;
};

DecodedWord decode_word(const Vec& f, const ModelParams& params,
                        const HyperParams& hyper, const DecodeOptions& options = {});

struct StepRecord {
  Vec u;
  Vec f;
  Vec probs;
  std::size_t word_id = 0;
};

struct CaptionResult {
  std::vector<std::size_t> word_ids;
  std::vector<StepRecord> steps;
};

// Teacher-forced when `teacher` is given (feeds teacher[t-1] back, runs
// exactly teacher.size() steps); free-running otherwise (feeds the decoded
// word back, stops after emitting end_id or max_len words).
CaptionResult forward_caption(const Vec& v, const Vec& v_mean,
                              const ModelParams& params, const HyperParams& hyper,
                              std::optional<std::span<const std::size_t>> teacher = {},
                              const DecodeOptions& options = {});

}  // namespace tpgn

#endif  // TPGN_MODEL_HPP_
