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

// End-to-end commands behind the C API and the command-line tool.

#ifndef TPGN_PIPELINE_HPP_
#define TPGN_PIPELINE_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tpgn/checkpoint.hpp"
#include "tpgn/config.hpp"
#include "tpgn/interpret.hpp"

namespace tpgn {

using LineSink = std::function<void(std::string_view)>;

// Samples the default toy grammar; needs `samples` and `seed`.
std::size_t gen_data(const RunConfig& config, const std::string& out_path);

struct TrainOutcome {
  double final_loss = 0.0;
  std::size_t epochs = 0;
  AccuracyReport accuracy;
};

// Needs `dataset`, `d`, `epochs` and `seed`. Writes model.ckpt, loss.csv
// (epoch,mean_loss,token_accuracy) and train.log into out_dir. On divergence
// writes last_good.ckpt and rethrows.
TrainOutcome train_run(const RunConfig& config, const std::string& out_dir);

// POS per vocabulary id: tags seen in the samples, then the default grammar,
// then `tags_path` ("word TAG" per line) which overrides both.
std::vector<std::optional<PosTag>> word_tags(const Vocabulary& vocab,
                                             std::span<const Sample> samples,
                                             const std::string* tags_path);

// Reads a dataset against the checkpoint vocabulary and feature size.
std::vector<Sample> read_dataset_for(const Checkpoint& ckpt, const std::string& path);

// One "index<TAB>caption" line per sample; the end token is not printed.
void generate_captions(const Checkpoint& ckpt, const std::string& data_path,
                       DecodeStrategy strategy, std::uint64_t seed, const LineSink& sink);

struct AnalyzeResult {
  std::size_t records = 0;
  NvSeparation separation;
  ConformityTable conformity;
  std::vector<ClusterSummary> clusters;
  bool degenerate_projection = false;
  std::string summary;  // also written to summary.txt
};

// Writes conformity.csv, clusters.csv, projection.csv and summary.txt.
// Conformity always uses a two-cluster model, fitted separately when
// n_clusters != 2.
AnalyzeResult analyze(const Checkpoint& ckpt, const std::string& data_path,
                      const std::string* tags_path, std::size_t n_clusters,
                      std::uint64_t seed, const std::string& out_dir);

// Corpus BLEU-1..4 of greedy captions against the dataset captions.
std::array<double, 4> eval_bleu(const Checkpoint& ckpt, const std::string& data_path);

// Gradient check at V=5, T=4 over both Wx modes; returns the worse report.
GradCheckReport grad_check(std::size_t d, std::uint64_t seed);

// Binding/unbinding walkthrough of "Jay saw Kay".
void tpr_demo(const LineSink& sink);

}  // namespace tpgn

#endif  // TPGN_PIPELINE_HPP_
