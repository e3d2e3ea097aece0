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

#ifndef TPGN_TRAIN_HPP_
#define TPGN_TRAIN_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tpgn/data.hpp"
#include "tpgn/model.hpp"

namespace tpgn {

// Same layout as ModelParams; one gradient entry per parameter entry.
using GradientSet = ModelParams;

// Per-step negative log-likelihood is capped here; hitting the cap sets
// LossResult::underflow.
inline constexpr double kMaxStepLoss = 700.0;

struct LossResult {
  double loss = 0.0;          // mean over steps of -log p(target_t)
  bool underflow = false;
  std::size_t correct = 0;    // teacher-forced argmax hits
  std::size_t steps = 0;
};

LossResult caption_loss(const Vec& v, const Vec& v_mean,
                        std::span<const std::size_t> targets,
                        const ModelParams& params, const HyperParams& hyper);

struct BackwardResult {
  LossResult loss;
  GradientSet grads;
};

// Exact gradient of caption_loss with respect to every parameter tensor,
// by reverse-mode differentiation of the unrolled teacher-forced pass.
// Frozen tensors (We, Wx in tied mode) still receive their gradient.
BackwardResult backward_caption(const Vec& v, const Vec& v_mean,
                                std::span<const std::size_t> targets,
                                const ModelParams& params, const HyperParams& hyper);

enum class OptimizerKind { kSgd, kAdam };

struct TrainConfig {
  double learning_rate = 0.003;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t epochs = 200;
  std::size_t batch_size = 1;
  std::uint64_t seed = 1;
  std::optional<double> grad_clip = 5.0;  // global L2 norm; nullopt disables
  bool train_embeddings = false;

  void validate() const;
};

struct OptimizerState {
  std::uint64_t step = 0;
  std::optional<GradientSet> m;
  std::optional<GradientSet> v;
};

// Whether the optimizer updates the named tensor.
bool is_trainable(std::string_view name, const TrainConfig& config,
                  const HyperParams& hyper);

double global_norm(const GradientSet& grads);

// One SGD or Adam update of every trainable tensor. Throws kNumeric naming
// the tensor if a gradient is not finite.
void optimizer_step(ModelParams& params, const GradientSet& grads,
                    const TrainConfig& config, const HyperParams& hyper,
                    OptimizerState& state);

// Uniform(-a, a) with a = 1/sqrt(product of trailing dims), zero biases,
// forget-gate biases +1. We is copied from `embeddings`; in tied mode Wx is
// tied_wx(We).
ModelParams init_params(const HyperParams& hyper, const Mat& embeddings,
                        std::uint64_t seed);

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double token_accuracy = 0.0;
};

struct TrainResult {
  ModelParams params;
  Vec v_mean;
  std::vector<EpochStats> curve;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, ModelParams last_good)
      : Error(ErrorCode::kNumeric, what), last_good_(std::move(last_good)) {}
  const ModelParams& last_good() const noexcept { return last_good_; }

 private:
  ModelParams last_good_;
};

Vec feature_mean(std::span<const Sample> samples);

// Per-caption BPTT with one optimizer update per mini-batch; sample order is
// reshuffled each epoch from `config.seed`. Throws TrainingDiverged carrying
// the parameters from the end of the last finite epoch.
TrainResult train(std::span<const Sample> samples, const TrainConfig& config,
                  const HyperParams& hyper, const Mat& embeddings,
                  const std::function<void(const EpochStats&)>& on_epoch = {});

struct AccuracyReport {
  double token_accuracy = 0.0;   // teacher-forced
  double exact_match = 0.0;      // free-running greedy caption == target
};

AccuracyReport evaluate(std::span<const Sample> samples, const ModelParams& params,
                        const Vec& v_mean, const HyperParams& hyper);

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  std::size_t checked = 0;       // entries with |a|+|n| above the floor
  std::size_t total = 0;
};

// Central-difference check of backward_caption on a random model with the
// given shape. Relative error is |a - n| / (|a| + |n|), counted where
// |a| + |n| > floor.
GradCheckReport gradient_check(const HyperParams& hyper, std::size_t caption_len,
                               std::uint64_t seed, double step = 1e-5,
                               double floor = 1e-8);

}  // namespace tpgn

#endif  // TPGN_TRAIN_HPP_
