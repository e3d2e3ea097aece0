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

// Analysis of learned unbinding vectors: clustering, grammatical-category
// conformity, per-cluster interpretation, 2-D projection, and BLEU.

#ifndef TPGN_INTERPRET_HPP_
#define TPGN_INTERPRET_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tpgn/data.hpp"
#include "tpgn/model.hpp"

namespace tpgn {

struct UnbindingRecord {
  Vec u;
  std::size_t word_id = 0;
  std::optional<PosTag> pos;
  std::size_t position = 0;  // 1-based position in the generated caption
  std::size_t caption_id = 0;
};

// Free-running greedy generation for each sample; one record per emitted
// word (end token included). `word_tags[id]` gives the POS of word `id`.
std::vector<UnbindingRecord> collect_unbinding(
    const ModelParams& params, const Vec& v_mean, const HyperParams& hyper,
    std::span<const Sample> samples,
    std::span<const std::optional<PosTag>> word_tags);

struct ClusterModel {
  std::vector<Vec> centroids;
  double inertia = 0.0;              // sum of squared distances at exit
  std::vector<double> inertia_trace; // after every assignment step
  std::vector<std::size_t> assignments;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::size_t num_clusters() const { return centroids.size(); }
};

// Lloyd's algorithm with k-means++ seeding. Stops at an assignment fixpoint
// or after max_iter iterations. A cluster that empties is re-seeded with the
// point farthest from its current centroid.
ClusterModel kmeans(std::span<const Vec> vectors, std::size_t k, std::uint64_t seed,
                    std::size_t max_iter = 300);

// Nearest centroid by Euclidean distance; ties go to the lower index.
std::vector<std::size_t> assign_nearest(const ClusterModel& model,
                                        std::span<const Vec> vectors);

enum class ConformityCategory {
  kNouns,
  kPronouns,
  kIndefiniteArticles,
  kDefiniteArticles,
  kAdjectives,
  kVerbs,
  kPrepositionsConjunctions,
  kAdverbs,
};
inline constexpr std::size_t kNumConformityCategories = 8;

std::string_view to_string(ConformityCategory c);
bool is_nominal(ConformityCategory c);
std::optional<ConformityCategory> categorize(PosTag tag, std::string_view word);

struct ConformityRow {
  ConformityCategory category;
  std::size_t n_words = 0;       // N_w
  std::size_t n_conforming = 0;  // N_r
  // N_r / N_w; empty when the category has no tokens.
  std::optional<double> proportion() const;
};

struct ConformityOptions {
  bool exclude_caption_initial = true;
};

struct ConformityTable {
  std::vector<ConformityRow> rows;  // one per category, fixed order
  std::size_t noun_cluster = 0;     // cluster holding most nouns
};

// Requires a two-cluster assignment. Nominal categories conform when the
// token sits in the noun cluster, verbal ones when it sits in the other.
ConformityTable conformity_table(std::span<const UnbindingRecord> records,
                                 std::span<const std::size_t> assignments,
                                 const Vocabulary& vocab,
                                 const ConformityOptions& options = {});

// Nouns against verbs and prepositions in a two-cluster assignment. The
// noun cluster is the one holding most noun tokens; the split holds when a
// strict majority of nouns sits there and a strict majority of verb and
// preposition tokens sits in the other cluster.
struct NvSeparation {
  std::size_t noun_cluster = 0;
  std::size_t nouns = 0;
  std::size_t nouns_in_noun_cluster = 0;
  std::size_t verbal = 0;
  std::size_t verbal_in_other_cluster = 0;
  bool holds() const {
    return 2 * nouns_in_noun_cluster > nouns && 2 * verbal_in_other_cluster > verbal;
  }
};

NvSeparation nv_separation(std::span<const UnbindingRecord> records,
                           std::span<const std::size_t> assignments);

struct ClusterSummary {
  std::size_t cluster = 0;
  std::size_t size = 0;
  std::map<std::string, double> pos_share;  // POS name -> proportion
  double position1_share = 0.0;
  double position2_share = 0.0;
  // "Position 1 (1.00)" when every member is caption-initial (same for 2);
  // otherwise the leading POS shares, e.g. "N (0.88), ADJ (0.09)".
  std::string interpretation;
};

std::vector<ClusterSummary> cluster_report(std::span<const UnbindingRecord> records,
                                           std::span<const std::size_t> assignments,
                                           std::size_t num_clusters);

// Mean over clusters (weighted by size) of the share of the cluster's most
// frequent POS tag.
double mean_dominant_pos_share(std::span<const ClusterSummary> report);

struct Projection {
  std::vector<std::array<double, 2>> points;
  std::array<double, 2> variances{};  // top two covariance eigenvalues
  bool degenerate = false;            // all input vectors identical
};

// Projection of the mean-centred vectors onto the top two principal axes of
// the sample covariance (1/(n-1) normalisation). Axis signs are fixed so the
// largest-magnitude loading is positive.
Projection pca_project(std::span<const Vec> vectors);

using Sentence = std::vector<std::string>;

// Corpus BLEU-1..n_max with clipped n-gram counts, closest-reference-length
// brevity penalty and uniform weights.
std::vector<double> bleu_n(std::span<const Sentence> candidates,
                           std::span<const std::vector<Sentence>> references,
                           std::size_t n_max = 4);
std::vector<double> bleu_n(std::span<const Sentence> candidates,
                           std::span<const Sentence> references,
                           std::size_t n_max = 4);

// CSV writers. UTF-8, header row, '.' decimal separator.
void write_conformity_csv(const ConformityTable& table, const std::string& path);
void write_cluster_report_csv(std::span<const ClusterSummary> report,
                              const std::string& path);
void write_projection_csv(const Projection& projection,
                          std::span<const UnbindingRecord> records,
                          std::span<const std::size_t> assignments,
                          const Vocabulary& vocab, const std::string& path);

}  // namespace tpgn

#endif  // TPGN_INTERPRET_HPP_
