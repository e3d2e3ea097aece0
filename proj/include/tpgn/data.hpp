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

// Synthetic scene/caption data, vocabularies and word embeddings.

#ifndef TPGN_DATA_HPP_
#define TPGN_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tpgn/tensor.hpp"

namespace tpgn {

enum class PosTag {
  kDet,
  kNoun,
  kVerb,
  kPrepSpatial,
  kPrepOther,
  kAdj,
  kPron,
  kConj,
  kAdv,
  kEnd,
  kStart,
};

std::string_view to_string(PosTag tag);
std::optional<PosTag> parse_pos_tag(std::string_view text);

inline constexpr std::string_view kStartToken = "<s>";
inline constexpr std::string_view kEndToken = "</s>";

// Word <-> id map. Ids 0 and 1 are always the start and end tokens.
class Vocabulary {
 public:
  Vocabulary();
  explicit Vocabulary(std::span<const std::string> words);

  static constexpr std::size_t kStartId = 0;
  static constexpr std::size_t kEndId = 1;

  std::size_t size() const noexcept { return words_.size(); }
  const std::string& word(std::size_t id) const { return words_.at(id); }
  const std::vector<std::string>& words() const noexcept { return words_; }
  std::optional<std::size_t> find(std::string_view word) const;
  // Returns the existing id or appends the word.
  std::size_t add(std::string_view word);

  bool operator==(const Vocabulary& other) const { return words_ == other.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct LexiconWord {
  std::string word;
  PosTag tag;
};

// Captions are produced by picking a template (a sequence of slot names) and
// filling each slot with a word from that slot's lexicon.
class SceneGrammar {
 public:
  SceneGrammar(std::map<std::string, std::vector<LexiconWord>> lexicons,
               std::vector<std::vector<std::string>> templates);

  // "DET N V P DET N" and "DET ADJ N V P DET N" over
  // {DET:2, ADJ:3, N:6, V:4, P:4}.
  static SceneGrammar default_toy();

  const Vocabulary& vocab() const noexcept { return vocab_; }
  PosTag tag(std::size_t word_id) const { return tags_.at(word_id); }
  const std::vector<PosTag>& tags() const noexcept { return tags_; }
  const std::vector<std::vector<std::string>>& templates() const noexcept {
    return templates_;
  }
  const std::vector<std::size_t>& lexicon(const std::string& slot) const;
  // Sum of lexicon sizes over every slot of every template.
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  // Offset of (template, slot) in the feature vector.
  std::size_t feature_offset(std::size_t tmpl, std::size_t slot) const {
    return offsets_.at(tmpl).at(slot);
  }
  std::size_t max_caption_len() const;

 private:
  Vocabulary vocab_;
  std::vector<PosTag> tags_;
  std::map<std::string, std::vector<std::size_t>> lexicons_;
  std::vector<std::vector<std::string>> templates_;
  std::vector<std::vector<std::size_t>> offsets_;
  std::size_t feature_dim_ = 0;
};

struct Sample {
  Vec features;
  std::vector<std::size_t> caption;  // word ids, ends with the end token
  std::vector<PosTag> pos_tags;      // aligned with caption
  bool operator==(const Sample&) const = default;
};

// Draws `n` captions uniformly over templates and slot words. Features are
// the one-hot indicators of the chosen word for every slot of the chosen
// template (other templates' blocks stay zero), plus N(0, noise^2) noise.
std::vector<Sample> sample_dataset(const SceneGrammar& grammar, std::size_t n,
                                   double noise, std::uint64_t seed,
                                   std::size_t max_len);

enum class EmbeddingSource { kSynthetic, kFile };

struct EmbeddingTable {
  Mat We;  // d x V
  EmbeddingSource source = EmbeddingSource::kSynthetic;
  std::size_t missing = 0;  // vocabulary words absent from the file
};

// Subtracts the mean column so the columns average to zero.
void recentre_columns(Mat& We);

EmbeddingTable make_embeddings(std::size_t vocab_size, std::size_t d,
                               std::uint64_t seed);

// Whitespace-separated text, one `word v1 ... vd` per line. Words not in the
// file get zero columns; the result is recentred.
EmbeddingTable load_embeddings_text(const std::string& path, const Vocabulary& vocab);
void write_embeddings_text(const Mat& We, const Vocabulary& vocab,
                           const std::string& path);

// One sample per line: comma-separated features, TAB, space-separated caption
// words, TAB, space-separated POS tags.
void write_dataset(std::span<const Sample> samples, const Vocabulary& vocab,
                   const std::string& path);
// Unknown words are appended to `vocab` when `grow` is set, rejected otherwise.
std::vector<Sample> read_dataset(const std::string& path, Vocabulary& vocab,
                                 bool grow);

}  // namespace tpgn

#endif  // TPGN_DATA_HPP_
