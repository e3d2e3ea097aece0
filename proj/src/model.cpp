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

#include "tpgn/model.hpp"

#include <cmath>

namespace tpgn {

std::string_view to_string(WxMode mode) {
  return mode == WxMode::kFree ? "free" : "tied";
}

std::optional<WxMode> parse_wx_mode(std::string_view text) {
  if (text == "tied" || text == "tied-average") return WxMode::kTiedAverage;
  if (text == "free") return WxMode::kFree;
  return std::nullopt;
}

void HyperParams::validate() const {
  require(d >= 2, "hyper: d must be >= 2");
  require(vocab_size >= 3, "hyper: vocabulary needs start, end and one word");
  require(feature_dim >= 1, "hyper: feature_dim must be >= 1");
  require(max_len >= 1, "hyper: max_len must be >= 1");
  require(start_id < vocab_size && end_id < vocab_size && start_id != end_id,
          "hyper: start/end ids must be distinct and inside the vocabulary");
}

ModelParams ModelParams::zeros(const HyperParams& hyper) {
  hyper.validate();
  const std::size_t d = hyper.d, V = hyper.vocab_size;
  ModelParams p;
  for (std::size_t g = 0; g < kNumGates; ++g) {
    p.s[g].W = Tensor3({d, d, d});
    p.s[g].D = Tensor3({d, d, d});
    p.s[g].U = Tensor4({d, d, d, d});
    p.s[g].bias = Mat({d, d});
    p.u[g].w = Vec({d});
    p.u[g].D = Mat({d, d});
    p.u[g].U = Mat({d, d});
    p.u[g].bias = Vec({d});
  }
  p.Cs = Tensor3({d, d, hyper.feature_dim});
  p.Wu = Mat({d * d, d});
  p.bu = Vec({d * d});
  p.We = Mat({d, V});
  p.Wx = Mat({V, d * d});
  p.bx = Vec({V});
  return p;
}

void ModelParams::validate(const HyperParams& hyper) const {
  const ModelParams reference = zeros(hyper);
  std::vector<std::vector<std::size_t>> expected;
  for_each_tensor(reference, [&](std::string_view, auto, std::vector<std::size_t> shape) {
    expected.push_back(std::move(shape));
  });
  std::size_t k = 0;
  for_each_tensor(*this, [&](std::string_view name, std::span<const double> data,
                             const std::vector<std::size_t>& shape) {
    if (shape != expected[k++])
      fail(ErrorCode::kInvalidArgument,
           "model parameters: tensor " + std::string(name) +
               " has the wrong shape for these hyper-parameters");
    require_finite(data, "model parameter " + std::string(name));
  });
}

Mat tied_wx(const Mat& We) {
  const std::size_t d = We.dim(0), V = We.dim(1);
  Mat wx({V, d * d});
  for (std::size_t w = 0; w < V; ++w)
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t i = 0; i < d; ++i) wx(w, k * d + i) = We(i, w) / double(d);
  return wx;
}

std::vector<std::string> parameter_names() {
  std::vector<std::string> names;
  HyperParams h;
  const ModelParams p = ModelParams::zeros(h);
  for_each_tensor(p, [&](std::string_view name, auto, auto) {
    names.emplace_back(name);
  });
  return names;
}

namespace {

Vec embed(const ModelParams& params, std::size_t word) {
  const std::size_t d = params.We.dim(0);
  Vec e({d});
  for (std::size_t i = 0; i < d; ++i) e[i] = params.We(i, word);
  return e;
}

void check_state(const TpgnState& state, const HyperParams& hyper) {
  const std::size_t d = hyper.d;
  if (state.S_hat.shape() != Mat::Shape{d, d} ||
      state.c1.shape() != Mat::Shape{d, d} || state.p.size() != d ||
      state.c2.size() != d)
    fail(ErrorCode::kInvalidArgument, "state shape does not match d");
  if (state.prev_word >= hyper.vocab_size)
    fail(ErrorCode::kInvalidArgument, "state: previous word id out of range");
}

}  // namespace

TpgnState init_state(const Vec& v, const Vec& v_mean, const ModelParams& params,
                     const HyperParams& hyper) {
  if (v.size() != hyper.feature_dim || v_mean.size() != hyper.feature_dim)
    fail(ErrorCode::kInvalidArgument,
         "init_state: feature length " + std::to_string(v.size()) + " / mean " +
             std::to_string(v_mean.size()) + " vs feature_dim " +
             std::to_string(hyper.feature_dim));
  Vec centred({v.size()});
  for (std::size_t k = 0; k < v.size(); ++k) centred[k] = v[k] - v_mean[k];
  TpgnState state;
  state.S_hat = order3_apply(params.Cs, centred);
  state.c1 = Mat({hyper.d, hyper.d});
  state.p = Vec({hyper.d});
  state.c2 = Vec({hyper.d});
  state.prev_word = hyper.start_id;
  return state;
}

SentenceCellTrace s_cell_forward(const TpgnState& state, const ModelParams& params,
                                 const HyperParams& hyper) {
  check_state(state, hyper);
  const Vec e = embed(params, state.prev_word);
  const std::size_t n = hyper.d * hyper.d;
  SentenceCellTrace tr;
  for (std::size_t g = 0; g < kNumGates; ++g) {
    const SentenceGate& sg = params.s[g];
    Mat a = order3_apply(sg.W, state.p);
    const Mat de = order3_apply(sg.D, e);
    const Mat us = order4_apply(sg.U, state.S_hat);
    for (std::size_t k = 0; k < n; ++k) {
      const double pre = a[k] - de[k] + us[k] + sg.bias[k];
      a[k] = g == kCell ? std::tanh(pre) : sigmoid(pre);
    }
    tr.gate[g] = std::move(a);
  }
  tr.c1 = Mat({hyper.d, hyper.d});
  tr.tanh_c1 = Mat({hyper.d, hyper.d});
  tr.S_hat = Mat({hyper.d, hyper.d});
  for (std::size_t k = 0; k < n; ++k) {
    tr.c1[k] = tr.gate[kForget][k] * state.c1[k] +
               tr.gate[kInput][k] * tr.gate[kCell][k];
    tr.tanh_c1[k] = std::tanh(tr.c1[k]);
    tr.S_hat[k] = tr.gate[kOutput][k] * tr.tanh_c1[k];
  }
  return tr;
}

UnbindingCellTrace u_cell_forward(const TpgnState& state, const ModelParams& params,
                                  const HyperParams& hyper) {
  check_state(state, hyper);
  const Vec e = embed(params, state.prev_word);
  const std::size_t d = hyper.d;
  UnbindingCellTrace tr;
  for (std::size_t g = 0; g < kNumGates; ++g) {
    const UnbindingGate& ug = params.u[g];
    Vec a = matvec(state.S_hat, ug.w);
    const Vec de = matvec(ug.D, e);
    const Vec up = matvec(ug.U, state.p);
    for (std::size_t i = 0; i < d; ++i) {
      const double pre = a[i] - de[i] + up[i] + ug.bias[i];
      a[i] = g == kCell ? std::tanh(pre) : sigmoid(pre);
    }
    tr.gate[g] = std::move(a);
  }
  tr.c2 = Vec({d});
  tr.tanh_c2 = Vec({d});
  tr.p = Vec({d});
  for (std::size_t i = 0; i < d; ++i) {
    tr.c2[i] = tr.gate[kForget][i] * state.c2[i] +
               tr.gate[kInput][i] * tr.gate[kCell][i];
    tr.tanh_c2[i] = std::tanh(tr.c2[i]);
    tr.p[i] = tr.gate[kOutput][i] * tr.tanh_c2[i];
  }
  return tr;
}

SentenceCellOutput s_cell_step(const TpgnState& state, const ModelParams& params,
                               const HyperParams& hyper) {
  SentenceCellTrace tr = s_cell_forward(state, params, hyper);
  return {std::move(tr.S_hat), std::move(tr.c1)};
}

UnbindingCellOutput u_cell_step(const TpgnState& state, const ModelParams& params,
                                const HyperParams& hyper) {
  UnbindingCellTrace tr = u_cell_forward(state, params, hyper);
  return {std::move(tr.p), std::move(tr.c2)};
}

Vec compute_unbinding(const Vec& p, const ModelParams& params) {
  if (p.size() != params.Wu.dim(1))
    fail(ErrorCode::kInvalidArgument, "compute_unbinding: p length mismatch");
  Vec u = matvec(params.Wu, p);
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = std::tanh(u[k] + params.bu[k]);
  return u;
}

Vec unbind_filler(const Mat& S_hat, const Vec& u) {
  const std::size_t d = S_hat.dim(0);
  if (S_hat.dim(1) != d || u.size() != d * d)
    fail(ErrorCode::kInvalidArgument,
         "unbind_filler: need a square d x d state and a d^2 unbinding vector");
  Vec f({d * d});
  for (std::size_t k = 0; k < d; ++k) {
    const double* chunk = u.data().data() + k * d;
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += S_hat(i, j) * chunk[j];
      f[k * d + i] = s;
    }
  }
  return f;
}

Vec decode_logits(const Vec& f, const ModelParams& params, const HyperParams& hyper) {
  const std::size_t d = hyper.d;
  if (f.size() != d * d)
    fail(ErrorCode::kInvalidArgument, "decode_word: filler length must be d^2");
  Vec z;
  if (hyper.wx_mode == WxMode::kFree) {
    z = matvec(params.Wx, f);
  } else {
    Vec mean({d});
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t i = 0; i < d; ++i) mean[i] += f[k * d + i];
    for (std::size_t i = 0; i < d; ++i) mean[i] /= double(d);
    z = matvec_transposed(params.We, mean);
  }
  for (std::size_t w = 0; w < z.size(); ++w) z[w] += params.bx[w];
  return z;
}

DecodedWord decode_word(const Vec& f, const ModelParams& params,
                        const HyperParams& hyper, const DecodeOptions& options) {
  DecodedWord out;
  out.probs = softmax(decode_logits(f, params, hyper));
  if (options.strategy == DecodeStrategy::kSample) {
    require(options.rng != nullptr, "decode_word: sampling needs an rng");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double r = unif(*options.rng);
    double acc = 0.0;
    out.word_id = out.probs.size() - 1;
    for (std::size_t w = 0; w < out.probs.size(); ++w) {
      acc += out.probs[w];
      if (r < acc) {
        out.word_id = w;
        break;
      }
    }
  } else {
    out.word_id = argmax(out.probs.data());
  }
  return out;
}

CaptionResult forward_caption(const Vec& v, const Vec& v_mean,
                              const ModelParams& params, const HyperParams& hyper,
                              std::optional<std::span<const std::size_t>> teacher,
                              const DecodeOptions& options) {
  if (teacher) {
    if (teacher->size() > hyper.max_len)
      fail(ErrorCode::kInvalidArgument, "forward_caption: teacher longer than max_len");
    for (std::size_t w : *teacher)
      if (w >= hyper.vocab_size)
        fail(ErrorCode::kInvalidArgument, "forward_caption: teacher word id out of range");
  }
  TpgnState state = init_state(v, v_mean, params, hyper);
  CaptionResult result;
  const std::size_t steps = teacher ? teacher->size() : hyper.max_len;
  for (std::size_t t = 0; t < steps; ++t) {
    SentenceCellOutput s = s_cell_step(state, params, hyper);
    UnbindingCellOutput u = u_cell_step(state, params, hyper);
    StepRecord rec;
    rec.u = compute_unbinding(u.p, params);
    rec.f = unbind_filler(s.S_hat, rec.u);
    DecodedWord dw = decode_word(rec.f, params, hyper, options);
    rec.probs = std::move(dw.probs);
    rec.word_id = dw.word_id;
    result.word_ids.push_back(rec.word_id);
    result.steps.push_back(std::move(rec));

    state.S_hat = std::move(s.S_hat);
    state.c1 = std::move(s.c1);
    state.p = std::move(u.p);
    state.c2 = std::move(u.c2);
    state.prev_word = teacher ? (*teacher)[t] : dw.word_id;
    if (!teacher && dw.word_id == hyper.end_id) break;
  }
  return result;
}

}  // namespace tpgn
