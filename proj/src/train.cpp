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

#include "tpgn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace tpgn {

namespace {

struct StepCache {
  TpgnState prev;
  Vec e;  // embedding of prev.prev_word
  SentenceCellTrace s;
  UnbindingCellTrace uc;
  Vec u;
  Vec f;
  Vec probs;
  double log_prob = 0.0;
  std::size_t target = 0;
};

Vec embedding_column(const Mat& We, std::size_t word) {
  Vec e({We.dim(0)});
  for (std::size_t i = 0; i < We.dim(0); ++i) e[i] = We(i, word);
  return e;
}

void check_targets(std::span<const std::size_t> targets, const HyperParams& hyper) {
  require(!targets.empty(), "caption targets are empty");
  require(targets.back() == hyper.end_id, "caption targets must end with the end token");
  require(targets.size() <= hyper.max_len, "caption longer than max_len");
  for (std::size_t w : targets)
    require(w < hyper.vocab_size, "caption word id out of range");
}

// Teacher-forced forward pass keeping everything the backward pass needs.
std::vector<StepCache> forward_cached(const Vec& v, const Vec& v_mean,
                                      std::span<const std::size_t> targets,
                                      const ModelParams& params,
                                      const HyperParams& hyper, Vec* centred_out) {
  check_targets(targets, hyper);
  TpgnState state = init_state(v, v_mean, params, hyper);
  if (centred_out) {
    *centred_out = Vec({v.size()});
    for (std::size_t k = 0; k < v.size(); ++k) (*centred_out)[k] = v[k] - v_mean[k];
  }
  std::vector<StepCache> caches;
  caches.reserve(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t) {
    StepCache c;
    c.e = embedding_column(params.We, state.prev_word);
    c.s = s_cell_forward(state, params, hyper);
    c.uc = u_cell_forward(state, params, hyper);
    c.u = compute_unbinding(c.uc.p, params);
    c.f = unbind_filler(c.s.S_hat, c.u);
    const Vec logits = decode_logits(c.f, params, hyper);
    const Vec logp = log_softmax(logits);
    c.probs = Vec({logp.size()});
    for (std::size_t w = 0; w < logp.size(); ++w) c.probs[w] = std::exp(logp[w]);
    c.target = targets[t];
    c.log_prob = logp[c.target];

    TpgnState next;
    next.S_hat = c.s.S_hat;
    next.c1 = c.s.c1;
    next.p = c.uc.p;
    next.c2 = c.uc.c2;
    next.prev_word = targets[t];
    c.prev = std::move(state);
    state = std::move(next);
    caches.push_back(std::move(c));
  }
  return caches;
}

LossResult summarize(const std::vector<StepCache>& caches) {
  LossResult r;
  r.steps = caches.size();
  double total = 0.0;
  for (const StepCache& c : caches) {
    double step_loss = -c.log_prob;
    if (!(step_loss <= kMaxStepLoss)) {
      step_loss = kMaxStepLoss;
      r.underflow = true;
    }
    total += step_loss;
    if (argmax(c.probs.data()) == c.target) ++r.correct;
  }
  r.loss = total / double(caches.size());
  return r;
}

// Derivative of the pre-activation given the upstream gradient and the
// activation value.
inline double dsigmoid(double grad, double y) { return grad * y * (1.0 - y); }
inline double dtanh(double grad, double y) { return grad * (1.0 - y * y); }

}  // namespace

LossResult caption_loss(const Vec& v, const Vec& v_mean,
                        std::span<const std::size_t> targets,
                        const ModelParams& params, const HyperParams& hyper) {
  return summarize(forward_cached(v, v_mean, targets, params, hyper, nullptr));
}

BackwardResult backward_caption(const Vec& v, const Vec& v_mean,
                                std::span<const std::size_t> targets,
                                const ModelParams& params, const HyperParams& hyper) {
  Vec centred;
  const std::vector<StepCache> caches =
      forward_cached(v, v_mean, targets, params, hyper, &centred);
  BackwardResult out;
  out.loss = summarize(caches);
  GradientSet& g = out.grads;
  g = ModelParams::zeros(hyper);

  const std::size_t d = hyper.d, n = d * d, V = hyper.vocab_size;
  const double scale = 1.0 / double(caches.size());

  Mat dS_next({d, d}), dC1_next({d, d});
  Vec dp_next({d}), dc2_next({d});

  for (std::size_t t = caches.size(); t-- > 0;) {
    const StepCache& c = caches[t];

    // Softmax cross-entropy.
    Vec dz({V});
    for (std::size_t w = 0; w < V; ++w) dz[w] = c.probs[w] * scale;
    dz[c.target] -= scale;
    for (std::size_t w = 0; w < V; ++w) g.bx[w] += dz[w];

    Vec df({n});
    if (hyper.wx_mode == WxMode::kFree) {
      for (std::size_t w = 0; w < V; ++w)
        for (std::size_t k = 0; k < n; ++k) g.Wx(w, k) += dz[w] * c.f[k];
      df = matvec_transposed(params.Wx, dz);
    } else {
      Vec fbar({d});
      for (std::size_t k = 0; k < d; ++k)
        for (std::size_t i = 0; i < d; ++i) fbar[i] += c.f[k * d + i];
      for (std::size_t i = 0; i < d; ++i) fbar[i] /= double(d);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t w = 0; w < V; ++w) g.We(i, w) += fbar[i] * dz[w];
      const Vec dfbar = matvec(params.We, dz);
      for (std::size_t k = 0; k < d; ++k)
        for (std::size_t i = 0; i < d; ++i) df[k * d + i] = dfbar[i] / double(d);
    }

    // f^(k) = S_hat u^(k)
    Mat dS = dS_next;
    Vec du({n});
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t i = 0; i < d; ++i) {
        const double dfi = df[k * d + i];
        for (std::size_t j = 0; j < d; ++j) {
          dS(i, j) += dfi * c.u[k * d + j];
          du[k * d + j] += c.s.S_hat(i, j) * dfi;
        }
      }

    // u = tanh(Wu p + bu)
    Vec dp = dp_next;
    {
      Vec da({n});
      for (std::size_t k = 0; k < n; ++k) da[k] = dtanh(du[k], c.u[k]);
      for (std::size_t k = 0; k < n; ++k) {
        g.bu[k] += da[k];
        for (std::size_t j = 0; j < d; ++j) g.Wu(k, j) += da[k] * c.uc.p[j];
      }
      const Vec back = matvec_transposed(params.Wu, da);
      for (std::size_t j = 0; j < d; ++j) dp[j] += back[j];
    }

    Mat dS_prev({d, d}), dC1_prev({d, d});
    Vec dp_prev({d}), dc2_prev({d}), de({d});

    // Unbinding cell: p = o * tanh(c2), c2 = f * c2_prev + i * g.
    {
      const UnbindingCellTrace& tr = c.uc;
      std::array<Vec, kNumGates> da;
      for (auto& x : da) x = Vec({d});
      for (std::size_t i = 0; i < d; ++i) {
        const double dout = dp[i] * tr.tanh_c2[i];
        const double dc2 = dc2_next[i] + dtanh(dp[i] * tr.gate[kOutput][i], tr.tanh_c2[i]);
        da[kForget][i] = dsigmoid(dc2 * c.prev.c2[i], tr.gate[kForget][i]);
        da[kInput][i] = dsigmoid(dc2 * tr.gate[kCell][i], tr.gate[kInput][i]);
        da[kOutput][i] = dsigmoid(dout, tr.gate[kOutput][i]);
        da[kCell][i] = dtanh(dc2 * tr.gate[kInput][i], tr.gate[kCell][i]);
        dc2_prev[i] = dc2 * tr.gate[kForget][i];
      }
      for (std::size_t gi = 0; gi < kNumGates; ++gi) {
        const UnbindingGate& pg = params.u[gi];
        UnbindingGate& gg = g.u[gi];
        const Vec& a = da[gi];
        // a = S_prev w - D e + U p_prev + b
        const Vec dw = matvec_transposed(c.prev.S_hat, a);
        const Vec dD_e = matvec_transposed(pg.D, a);
        const Vec dU_p = matvec_transposed(pg.U, a);
        for (std::size_t i = 0; i < d; ++i) {
          gg.w[i] += dw[i];
          gg.bias[i] += a[i];
          de[i] -= dD_e[i];
          dp_prev[i] += dU_p[i];
          for (std::size_t j = 0; j < d; ++j) {
            dS_prev(i, j) += a[i] * pg.w[j];
            gg.D(i, j) -= a[i] * c.e[j];
            gg.U(i, j) += a[i] * c.prev.p[j];
          }
        }
      }
    }

    // Sentence cell: S = O * tanh(C1), C1 = F * C1_prev + I * G.
    {
      const SentenceCellTrace& tr = c.s;
      std::array<Mat, kNumGates> dA;
      for (auto& x : dA) x = Mat({d, d});
      for (std::size_t k = 0; k < n; ++k) {
        const double dout = dS[k] * tr.tanh_c1[k];
        const double dc1 =
            dC1_next[k] + dtanh(dS[k] * tr.gate[kOutput][k], tr.tanh_c1[k]);
        dA[kForget][k] = dsigmoid(dc1 * c.prev.c1[k], tr.gate[kForget][k]);
        dA[kInput][k] = dsigmoid(dc1 * tr.gate[kCell][k], tr.gate[kInput][k]);
        dA[kOutput][k] = dsigmoid(dout, tr.gate[kOutput][k]);
        dA[kCell][k] = dtanh(dc1 * tr.gate[kInput][k], tr.gate[kCell][k]);
        dC1_prev[k] = dc1 * tr.gate[kForget][k];
      }
      for (std::size_t gi = 0; gi < kNumGates; ++gi) {
        const SentenceGate& pg = params.s[gi];
        SentenceGate& gg = g.s[gi];
        const Mat& a = dA[gi];
        // A = W p_prev - D e + U S_prev + B
        order3_accumulate(gg.W, a, c.prev.p);
        order3_accumulate(gg.D, a, c.e, -1.0);
        order4_accumulate(gg.U, a, c.prev.S_hat);
        for (std::size_t k = 0; k < n; ++k) gg.bias[k] += a[k];
        const Vec dpw = order3_apply_transposed(pg.W, a);
        const Vec ded = order3_apply_transposed(pg.D, a);
        const Mat dsu = order4_apply_transposed(pg.U, a);
        for (std::size_t i = 0; i < d; ++i) {
          dp_prev[i] += dpw[i];
          de[i] -= ded[i];
        }
        for (std::size_t k = 0; k < n; ++k) dS_prev[k] += dsu[k];
      }
    }

    for (std::size_t i = 0; i < d; ++i) g.We(i, c.prev.prev_word) += de[i];

    dS_next = std::move(dS_prev);
    dC1_next = std::move(dC1_prev);
    dp_next = std::move(dp_prev);
    dc2_next = std::move(dc2_prev);
  }

  // S_hat_0 = Cs (v - v_mean)
  order3_accumulate(g.Cs, dS_next, centred);
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    fail(ErrorCode::kConfig, "learning rate must be a finite non-negative number");
  if (epochs < 1) fail(ErrorCode::kConfig, "epochs must be >= 1");
  if (batch_size < 1) fail(ErrorCode::kConfig, "batch size must be >= 1");
  if (optimizer == OptimizerKind::kAdam &&
      !(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 &&
        adam_beta2 < 1.0 && adam_epsilon > 0.0))
    fail(ErrorCode::kConfig, "adam parameters out of range");
  if (grad_clip && !(*grad_clip > 0.0))
    fail(ErrorCode::kConfig, "gradient clip must be positive");
}

bool is_trainable(std::string_view name, const TrainConfig& config,
                  const HyperParams& hyper) {
  if (name == "We") return config.train_embeddings;
  if (name == "Wx") return hyper.wx_mode == WxMode::kFree;
  return true;
}

double global_norm(const GradientSet& grads) {
  double sq = 0.0;
  for_each_tensor(grads, [&](std::string_view, std::span<const double> data, auto) {
    for (double x : data) sq += x * x;
  });
  return std::sqrt(sq);
}

void optimizer_step(ModelParams& params, const GradientSet& grads,
                    const TrainConfig& config, const HyperParams& hyper,
                    OptimizerState& state) {
  std::vector<std::span<const double>> gspans;
  for_each_tensor(grads, [&](std::string_view name, std::span<const double> data,
                             auto) {
    if (!is_trainable(name, config, hyper)) {
      gspans.emplace_back();
      return;
    }
    if (!all_finite(data))
      fail(ErrorCode::kNumeric, "non-finite gradient in tensor " + std::string(name));
    gspans.push_back(data);
  });

  double factor = 1.0;
  if (config.grad_clip) {
    double sq = 0.0;
    for (auto s : gspans)
      for (double x : s) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm > *config.grad_clip) factor = *config.grad_clip / norm;
  }

  const double lr = config.learning_rate;
  if (config.optimizer == OptimizerKind::kSgd) {
    std::size_t k = 0;
    for_each_tensor(params, [&](std::string_view, std::span<double> data, auto) {
      const auto gs = gspans[k++];
      for (std::size_t i = 0; i < gs.size(); ++i) data[i] -= lr * factor * gs[i];
    });
  } else {
    if (!state.m) {
      state.m = ModelParams::zeros(hyper);
      state.v = ModelParams::zeros(hyper);
    }
    ++state.step;
    const double b1 = config.adam_beta1, b2 = config.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, double(state.step));
    const double c2 = 1.0 - std::pow(b2, double(state.step));
    std::vector<std::span<double>> ms, vs;
    for_each_tensor(*state.m, [&](std::string_view, std::span<double> s, auto) { ms.push_back(s); });
    for_each_tensor(*state.v, [&](std::string_view, std::span<double> s, auto) { vs.push_back(s); });
    std::size_t k = 0;
    for_each_tensor(params, [&](std::string_view, std::span<double> data, auto) {
      const auto gs = gspans[k];
      auto m = ms[k];
      auto v = vs[k];
      ++k;
      for (std::size_t i = 0; i < gs.size(); ++i) {
        const double gi = factor * gs[i];
        m[i] = b1 * m[i] + (1.0 - b1) * gi;
        v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        data[i] -= lr * mhat / (std::sqrt(vhat) + config.adam_epsilon);
      }
    });
  }
  if (hyper.wx_mode == WxMode::kTiedAverage && config.train_embeddings)
    params.Wx = tied_wx(params.We);
}

ModelParams init_params(const HyperParams& hyper, const Mat& embeddings,
                        std::uint64_t seed) {
  hyper.validate();
  if (embeddings.shape() != Mat::Shape{hyper.d, hyper.vocab_size})
    fail(ErrorCode::kInvalidArgument,
         "init_params: embedding table must be d x V (" + std::to_string(hyper.d) +
             " x " + std::to_string(hyper.vocab_size) + ")");
  ModelParams p = ModelParams::zeros(hyper);
  std::mt19937_64 rng(seed);
  const std::size_t d = hyper.d;
  auto fill = [&](std::span<double> data, std::size_t fan_in) {
    const double a = 1.0 / std::sqrt(double(fan_in));
    std::uniform_real_distribution<double> unif(-a, a);
    for (double& x : data) x = unif(rng);
  };
  for (std::size_t g = 0; g < kNumGates; ++g) {
    fill(p.s[g].W.data(), d);
    fill(p.s[g].D.data(), d);
    fill(p.s[g].U.data(), d * d);
  }
  fill(p.Cs.data(), hyper.feature_dim);
  for (std::size_t g = 0; g < kNumGates; ++g) {
    fill(p.u[g].w.data(), d);
    fill(p.u[g].D.data(), d);
    fill(p.u[g].U.data(), d);
  }
  fill(p.Wu.data(), d);
  p.s[kForget].bias.fill(1.0);
  p.u[kForget].bias.fill(1.0);
  p.We = embeddings;
  if (hyper.wx_mode == WxMode::kFree)
    fill(p.Wx.data(), d * d);
  else
    p.Wx = tied_wx(p.We);
  return p;
}

Vec feature_mean(std::span<const Sample> samples) {
  require(!samples.empty(), "feature_mean: no samples");
  Vec mean({samples.front().features.size()});
  for (const Sample& s : samples) {
    require(s.features.size() == mean.size(), "feature_mean: ragged feature vectors");
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += s.features[k];
  }
  for (std::size_t k = 0; k < mean.size(); ++k) mean[k] /= double(samples.size());
  return mean;
}

namespace {

void add_into(GradientSet& acc, const GradientSet& g) {
  std::vector<std::span<const double>> src;
  for_each_tensor(g, [&](std::string_view, std::span<const double> s, auto) { src.push_back(s); });
  std::size_t k = 0;
  for_each_tensor(acc, [&](std::string_view, std::span<double> s, auto) {
    const auto from = src[k++];
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += from[i];
  });
}

void scale_by(GradientSet& g, double factor) {
  for_each_tensor(g, [&](std::string_view, std::span<double> s, auto) {
    for (double& x : s) x *= factor;
  });
}

}  // namespace

TrainResult train(std::span<const Sample> samples, const TrainConfig& config,
                  const HyperParams& hyper, const Mat& embeddings,
                  const std::function<void(const EpochStats&)>& on_epoch) {
  require(!samples.empty(), "train: dataset is empty");
  config.validate();
  hyper.validate();
  for (const Sample& s : samples) {
    if (s.caption.size() > hyper.max_len)
      fail(ErrorCode::kInvalidArgument, "train: caption longer than max_len");
    if (s.features.size() != hyper.feature_dim)
      fail(ErrorCode::kInvalidArgument, "train: feature length differs from feature_dim");
  }

  TrainResult result;
  result.v_mean = feature_mean(samples);
  result.params = init_params(hyper, embeddings, config.seed);
  ModelParams last_good = result.params;

  std::mt19937_64 order_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  OptimizerState opt;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double loss_sum = 0.0;
    std::size_t correct = 0, tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      GradientSet acc;
      for (std::size_t b = start; b < stop; ++b) {
        const Sample& s = samples[order[b]];
        BackwardResult br = backward_caption(s.features, result.v_mean, s.caption,
                                             result.params, hyper);
        loss_sum += br.loss.loss;
        correct += br.loss.correct;
        tokens += br.loss.steps;
        if (b == start)
          acc = std::move(br.grads);
        else
          add_into(acc, br.grads);
      }
      if (stop - start > 1) scale_by(acc, 1.0 / double(stop - start));
      try {
        optimizer_step(result.params, acc, config, hyper, opt);
      } catch (const Error& e) {
        throw TrainingDiverged(std::string("training diverged in epoch ") +
                                   std::to_string(epoch) + ": " + e.what(),
                               last_good);
      }
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = loss_sum / double(samples.size());
    stats.token_accuracy = double(correct) / double(tokens);
    if (!std::isfinite(stats.mean_loss))
      throw TrainingDiverged("training diverged in epoch " + std::to_string(epoch) +
                                 ": loss is not finite",
                             last_good);
    last_good = result.params;
    result.curve.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return result;
}

AccuracyReport evaluate(std::span<const Sample> samples, const ModelParams& params,
                        const Vec& v_mean, const HyperParams& hyper) {
  require(!samples.empty(), "evaluate: no samples");
  std::size_t correct = 0, tokens = 0, exact = 0;
  for (const Sample& s : samples) {
    const LossResult lr = caption_loss(s.features, v_mean, s.caption, params, hyper);
    correct += lr.correct;
    tokens += lr.steps;
    const CaptionResult free = forward_caption(s.features, v_mean, params, hyper);
    if (free.word_ids == s.caption) ++exact;
  }
  AccuracyReport r;
  r.token_accuracy = double(correct) / double(tokens);
  r.exact_match = double(exact) / double(samples.size());
  return r;
}

GradCheckReport gradient_check(const HyperParams& hyper, std::size_t caption_len,
                               std::uint64_t seed, double step, double floor) {
  hyper.validate();
  require(caption_len >= 1 && caption_len <= hyper.max_len,
          "gradient_check: caption length must be in [1, max_len]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  std::normal_distribution<double> gauss(0.0, 1.0);

  ModelParams params = ModelParams::zeros(hyper);
  for_each_tensor(params, [&](std::string_view, std::span<double> data, auto) {
    for (double& x : data) x = unif(rng);
  });
  Vec v({hyper.feature_dim}), v_mean({hyper.feature_dim});
  for (std::size_t k = 0; k < hyper.feature_dim; ++k) {
    v[k] = gauss(rng);
    v_mean[k] = 0.3 * gauss(rng);
  }
  std::vector<std::size_t> caption;
  std::uniform_int_distribution<std::size_t> word(0, hyper.vocab_size - 1);
  while (caption.size() + 1 < caption_len) {
    const std::size_t w = word(rng);
    if (w != hyper.end_id) caption.push_back(w);
  }
  caption.push_back(hyper.end_id);

  const GradientSet analytic = backward_caption(v, v_mean, caption, params, hyper).grads;
  std::vector<std::span<const double>> gspans;
  for_each_tensor(analytic, [&](std::string_view, std::span<const double> s, auto) {
    gspans.push_back(s);
  });

  GradCheckReport report;
  std::size_t k = 0;
  ModelParams probe = params;
  for_each_tensor(probe, [&](std::string_view name, std::span<double> data, auto) {
    const auto ga = gspans[k++];
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + step;
      const double up = caption_loss(v, v_mean, caption, probe, hyper).loss;
      data[i] = saved - step;
      const double down = caption_loss(v, v_mean, caption, probe, hyper).loss;
      data[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      ++report.total;
      const double denom = std::abs(ga[i]) + std::abs(numeric);
      if (denom <= floor) continue;
      ++report.checked;
      const double rel = std::abs(ga[i] - numeric) / denom;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_tensor = std::string(name);
      }
    }
  });
  return report;
}

}  // namespace tpgn
