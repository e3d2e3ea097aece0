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

#include "tpgn/data.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace tpgn {

namespace {

constexpr std::array<std::string_view, 11> kTagNames = {
    "DET", "N", "V", "P-spatial", "P-other", "ADJ",
    "PRON", "CONJ", "ADV", "END", "START"};

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::vector<std::string_view> split_ws(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) parts.push_back(text.substr(start, i - start));
  }
  return parts;
}

std::optional<double> parse_double(std::string_view text) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value))
    return std::nullopt;
  return value;
}

std::string format_double(double x) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), ptr);
}

[[noreturn]] void format_error(const std::string& path, std::size_t line,
                               const std::string& what) {
  fail(ErrorCode::kFormat, path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

std::string_view to_string(PosTag tag) {
  return kTagNames[static_cast<std::size_t>(tag)];
}

std::optional<PosTag> parse_pos_tag(std::string_view text) {
  for (std::size_t i = 0; i < kTagNames.size(); ++i)
    if (kTagNames[i] == text) return static_cast<PosTag>(i);
  return std::nullopt;
}

Vocabulary::Vocabulary() {
  add(kStartToken);
  add(kEndToken);
}

Vocabulary::Vocabulary(std::span<const std::string> words) {
  for (const std::string& w : words) {
    if (index_.count(w))
      fail(ErrorCode::kFormat, "vocabulary: duplicate word '" + w + "'");
    add(w);
  }
  if (words_.size() < 2 || words_[kStartId] != kStartToken ||
      words_[kEndId] != kEndToken)
    fail(ErrorCode::kFormat, "vocabulary must begin with the start and end tokens");
}

std::optional<std::size_t> Vocabulary::find(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::add(std::string_view word) {
  require(!word.empty(), "vocabulary: empty word");
  if (auto id = find(word)) return *id;
  words_.emplace_back(word);
  index_.emplace(words_.back(), words_.size() - 1);
  return words_.size() - 1;
}

SceneGrammar::SceneGrammar(std::map<std::string, std::vector<LexiconWord>> lexicons,
                           std::vector<std::vector<std::string>> templates)
    : templates_(std::move(templates)) {
  require(!templates_.empty(), "grammar: no templates");
  tags_ = {PosTag::kStart, PosTag::kEnd};
  for (const auto& [slot, words] : lexicons) {
    if (words.empty())
      fail(ErrorCode::kInvalidArgument, "grammar: empty lexicon for slot " + slot);
    auto& ids = lexicons_[slot];
    for (const LexiconWord& lw : words) {
      const std::size_t before = vocab_.size();
      const std::size_t id = vocab_.add(lw.word);
      if (id == before)
        tags_.push_back(lw.tag);
      else if (tags_[id] != lw.tag)
        fail(ErrorCode::kInvalidArgument,
             "grammar: word '" + lw.word + "' listed with two tags");
      ids.push_back(id);
    }
  }
  for (const auto& tmpl : templates_) {
    require(!tmpl.empty(), "grammar: empty template");
    std::vector<std::size_t> offs;
    for (const std::string& slot : tmpl) {
      const auto it = lexicons_.find(slot);
      if (it == lexicons_.end())
        fail(ErrorCode::kInvalidArgument, "grammar: template slot '" + slot +
                                              "' has no lexicon");
      offs.push_back(feature_dim_);
      feature_dim_ += it->second.size();
    }
    offsets_.push_back(std::move(offs));
  }
}

SceneGrammar SceneGrammar::default_toy() {
  std::map<std::string, std::vector<LexiconWord>> lex;
  lex["DET"] = {{"a", PosTag::kDet}, {"the", PosTag::kDet}};
  lex["ADJ"] = {{"red", PosTag::kAdj}, {"small", PosTag::kAdj}, {"wooden", PosTag::kAdj}};
  lex["N"] = {{"man", PosTag::kNoun},   {"dog", PosTag::kNoun},
              {"cat", PosTag::kNoun},   {"table", PosTag::kNoun},
              {"room", PosTag::kNoun},  {"suitcase", PosTag::kNoun}};
  lex["V"] = {{"sits", PosTag::kVerb}, {"stands", PosTag::kVerb},
              {"sleeps", PosTag::kVerb}, {"waits", PosTag::kVerb}};
  lex["P"] = {{"on", PosTag::kPrepSpatial}, {"in", PosTag::kPrepSpatial},
              {"near", PosTag::kPrepSpatial}, {"with", PosTag::kPrepOther}};
  std::vector<std::vector<std::string>> templates = {
      {"DET", "N", "V", "P", "DET", "N"},
      {"DET", "ADJ", "N", "V", "P", "DET", "N"},
  };
  return SceneGrammar(std::move(lex), std::move(templates));
}

const std::vector<std::size_t>& SceneGrammar::lexicon(const std::string& slot) const {
  const auto it = lexicons_.find(slot);
  if (it == lexicons_.end())
    fail(ErrorCode::kInvalidArgument, "grammar: unknown slot " + slot);
  return it->second;
}

std::size_t SceneGrammar::max_caption_len() const {
  std::size_t m = 0;
  for (const auto& t : templates_) m = std::max(m, t.size() + 1);
  return m;
}

std::vector<Sample> sample_dataset(const SceneGrammar& grammar, std::size_t n,
                                   double noise, std::uint64_t seed,
                                   std::size_t max_len) {
  require(n >= 1, "sample_dataset: n must be >= 1");
  require(noise >= 0.0 && std::isfinite(noise), "sample_dataset: noise must be >= 0");
  if (grammar.max_caption_len() > max_len)
    fail(ErrorCode::kInvalidArgument,
         "sample_dataset: a template (plus end token) is longer than max_len " +
             std::to_string(max_len));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, noise > 0.0 ? noise : 1.0);
  std::uniform_int_distribution<std::size_t> pick_template(0, grammar.templates().size() - 1);
  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t t = pick_template(rng);
    const auto& tmpl = grammar.templates()[t];
    Sample sample;
    sample.features = Vec({grammar.feature_dim()});
    for (std::size_t slot = 0; slot < tmpl.size(); ++slot) {
      const auto& lex = grammar.lexicon(tmpl[slot]);
      std::uniform_int_distribution<std::size_t> pick(0, lex.size() - 1);
      const std::size_t choice = pick(rng);
      sample.features[grammar.feature_offset(t, slot) + choice] = 1.0;
      sample.caption.push_back(lex[choice]);
      sample.pos_tags.push_back(grammar.tag(lex[choice]));
    }
    sample.caption.push_back(Vocabulary::kEndId);
    sample.pos_tags.push_back(PosTag::kEnd);
    if (noise > 0.0)
      for (std::size_t k = 0; k < sample.features.size(); ++k)
        sample.features[k] += gauss(rng);
    out.push_back(std::move(sample));
  }
  return out;
}

void recentre_columns(Mat& We) {
  const std::size_t d = We.dim(0), V = We.dim(1);
  for (std::size_t i = 0; i < d; ++i) {
    double mean = 0.0;
    for (std::size_t w = 0; w < V; ++w) mean += We(i, w);
    mean /= double(V);
    for (std::size_t w = 0; w < V; ++w) We(i, w) -= mean;
  }
}

EmbeddingTable make_embeddings(std::size_t vocab_size, std::size_t d,
                               std::uint64_t seed) {
  require(vocab_size >= 1 && d >= 1, "make_embeddings: empty table");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  EmbeddingTable table;
  table.We = Mat({d, vocab_size});
  for (double& x : table.We.data()) x = gauss(rng);
  recentre_columns(table.We);
  table.source = EmbeddingSource::kSynthetic;
  return table;
}

EmbeddingTable load_embeddings_text(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open embeddings file " + path);
  std::size_t d = 0;
  std::vector<std::optional<std::vector<double>>> columns(vocab.size());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() < 2) format_error(path, lineno, "expected a word followed by values");
    if (d == 0) d = fields.size() - 1;
    if (fields.size() - 1 != d)
      format_error(path, lineno,
                   "dimension " + std::to_string(fields.size() - 1) +
                       " differs from earlier lines (" + std::to_string(d) + ")");
    std::vector<double> values;
    values.reserve(d);
    for (std::size_t k = 1; k < fields.size(); ++k) {
      const auto v = parse_double(fields[k]);
      if (!v) format_error(path, lineno, "not a number: '" + std::string(fields[k]) + "'");
      values.push_back(*v);
    }
    if (const auto id = vocab.find(fields[0])) columns[*id] = std::move(values);
  }
  if (d == 0) fail(ErrorCode::kFormat, path + ": no embedding vectors");

  EmbeddingTable table;
  table.source = EmbeddingSource::kFile;
  table.We = Mat({d, vocab.size()});
  for (std::size_t w = 0; w < vocab.size(); ++w) {
    if (!columns[w]) {
      ++table.missing;
      continue;
    }
    for (std::size_t i = 0; i < d; ++i) table.We(i, w) = (*columns[w])[i];
  }
  recentre_columns(table.We);
  return table;
}

void write_embeddings_text(const Mat& We, const Vocabulary& vocab,
                           const std::string& path) {
  require(We.dim(1) == vocab.size(), "write_embeddings_text: table/vocabulary size mismatch");
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write embeddings file " + path);
  for (std::size_t w = 0; w < vocab.size(); ++w) {
    out << vocab.word(w);
    for (std::size_t i = 0; i < We.dim(0); ++i) out << ' ' << format_double(We(i, w));
    out << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "error writing " + path);
}

void write_dataset(std::span<const Sample> samples, const Vocabulary& vocab,
                   const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write dataset file " + path);
  for (const Sample& s : samples) {
    require(s.caption.size() == s.pos_tags.size(),
            "write_dataset: caption and tags differ in length");
    for (std::size_t k = 0; k < s.features.size(); ++k) {
      if (k) out << ',';
      out << format_double(s.features[k]);
    }
    out << '\t';
    for (std::size_t k = 0; k < s.caption.size(); ++k) {
      if (k) out << ' ';
      out << vocab.word(s.caption[k]);
    }
    out << '\t';
    for (std::size_t k = 0; k < s.pos_tags.size(); ++k) {
      if (k) out << ' ';
      out << to_string(s.pos_tags[k]);
    }
    out << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "error writing " + path);
}

std::vector<Sample> read_dataset(const std::string& path, Vocabulary& vocab, bool grow) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open dataset file " + path);
  std::vector<Sample> samples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3)
      format_error(path, lineno,
                   "expected 3 tab-separated fields, found " + std::to_string(fields.size()));
    Sample s;
    std::vector<double> feats;
    for (std::string_view f : split(fields[0], ',')) {
      const auto v = parse_double(f);
      if (!v) format_error(path, lineno, "non-numeric feature '" + std::string(f) + "'");
      feats.push_back(*v);
    }
    s.features = make_vec(std::move(feats));
    for (std::string_view w : split_ws(fields[1])) {
      auto id = vocab.find(w);
      if (!id) {
        if (!grow) format_error(path, lineno, "unknown word '" + std::string(w) + "'");
        id = vocab.add(w);
      }
      s.caption.push_back(*id);
    }
    for (std::string_view t : split_ws(fields[2])) {
      const auto tag = parse_pos_tag(t);
      if (!tag) format_error(path, lineno, "unknown POS tag '" + std::string(t) + "'");
      s.pos_tags.push_back(*tag);
    }
    if (s.caption.empty()) format_error(path, lineno, "empty caption");
    if (s.caption.size() != s.pos_tags.size())
      format_error(path, lineno, "caption has " + std::to_string(s.caption.size()) +
                                     " words but " + std::to_string(s.pos_tags.size()) +
                                     " tags");
    if (!samples.empty() && samples.front().features.size() != s.features.size())
      format_error(path, lineno, "feature count differs from the first sample");
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace tpgn
