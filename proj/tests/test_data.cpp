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

#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "tpgn/data.hpp"

using namespace tpgn;
using tpgn::testing::TempDir;

TEST_SUITE("data") {

TEST_CASE("default toy grammar sizes") {
  const SceneGrammar g = SceneGrammar::default_toy();
  // <s>, </s> and 2 + 3 + 6 + 4 + 4 lexicon words.
  CHECK(g.vocab().size() == 21);
  // Template slot lexicon sizes: (2+6+4+4+2+6) + (2+3+6+4+4+2+6).
  CHECK(g.feature_dim() == 24 + 27);
  CHECK(g.max_caption_len() == 8);
  CHECK(g.vocab().word(Vocabulary::kStartId) == "<s>");
  CHECK(g.vocab().word(Vocabulary::kEndId) == "</s>");
  CHECK(g.tag(*g.vocab().find("with")) == PosTag::kPrepOther);
  CHECK(g.tag(*g.vocab().find("near")) == PosTag::kPrepSpatial);
}

TEST_CASE("caption tags are the lexicon tags and features are one-hot per slot") {
  const SceneGrammar g = SceneGrammar::default_toy();
  const auto samples = sample_dataset(g, 200, 0.0, 4, 8);
  for (const Sample& s : samples) {
    REQUIRE(s.caption.size() == s.pos_tags.size());
    CHECK(s.caption.back() == Vocabulary::kEndId);
    CHECK(s.pos_tags.back() == PosTag::kEnd);
    for (std::size_t i = 0; i + 1 < s.caption.size(); ++i) CHECK(s.pos_tags[i] == g.tag(s.caption[i]));
    double ones = 0;
    for (double x : s.features.data()) {
      CHECK((x == 0.0 || x == 1.0));
      ones += x;
    }
    CHECK(ones == double(s.caption.size() - 1));
  }
}

TEST_CASE("noise-free features determine captions injectively") {
  std::map<std::string, std::vector<LexiconWord>> lex;
  lex["DET"] = {{"a", PosTag::kDet}, {"the", PosTag::kDet}};
  lex["N"] = {{"dog", PosTag::kNoun}, {"cat", PosTag::kNoun}};
  lex["V"] = {{"runs", PosTag::kVerb}};
  const SceneGrammar g(lex, {{"DET", "N"}, {"N", "V"}});
  const auto samples = sample_dataset(g, 300, 0.0, 1, 3);
  std::map<std::vector<double>, std::vector<std::size_t>> seen;
  std::set<std::vector<std::size_t>> captions;
  for (const Sample& s : samples) {
    auto [it, fresh] = seen.emplace(s.features.storage(), s.caption);
    CHECK(it->second == s.caption);
    captions.insert(s.caption);
  }
  // All 4 + 2 scenes appear, each with its own caption.
  CHECK(seen.size() == 6);
  CHECK(captions.size() == 6);
}

TEST_CASE("sampling is seeded and validates its arguments") {
  const SceneGrammar g = SceneGrammar::default_toy();
  CHECK(sample_dataset(g, 20, 0.1, 9, 8) == sample_dataset(g, 20, 0.1, 9, 8));
  CHECK_FALSE(sample_dataset(g, 20, 0.1, 9, 8) == sample_dataset(g, 20, 0.1, 10, 8));
  CHECK_THROWS_AS(sample_dataset(g, 20, 0.0, 9, 7), Error);
  CHECK_THROWS_AS(sample_dataset(g, 20, -1.0, 9, 8), Error);
}

TEST_CASE("vocabulary reserves start and end ids") {
  Vocabulary v;
  CHECK(v.size() == 2);
  CHECK(v.add("dog") == 2);
  CHECK(v.add("dog") == 2);
  CHECK(v.find("cat") == std::nullopt);
  const std::vector<std::string> bad = {"</s>", "<s>"};
  CHECK_THROWS_AS(Vocabulary{bad}, Error);
  const std::vector<std::string> dup = {"<s>", "</s>", "x", "x"};
  CHECK_THROWS_AS(Vocabulary{dup}, Error);
}

TEST_CASE("dataset files round trip") {
  TempDir dir("data");
  const SceneGrammar g = SceneGrammar::default_toy();
  const auto samples = sample_dataset(g, 30, 0.25, 2, 8);
  write_dataset(samples, g.vocab(), dir.file("d.tsv"));
  Vocabulary vocab = g.vocab();
  const auto back = read_dataset(dir.file("d.tsv"), vocab, false);
  REQUIRE(back.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(back[i].caption == samples[i].caption);
    CHECK(back[i].pos_tags == samples[i].pos_tags);
    CHECK(max_abs_diff(back[i].features.data(), samples[i].features.data()) < 1e-12);
  }
  CHECK(vocab == g.vocab());
}

TEST_CASE("an empty sample list gives an empty file") {
  TempDir dir("data");
  write_dataset({}, Vocabulary(), dir.file("e.tsv"));
  CHECK(std::filesystem::file_size(dir.file("e.tsv")) == 0);
  Vocabulary v;
  CHECK(read_dataset(dir.file("e.tsv"), v, false).empty());
}

TEST_CASE("malformed dataset lines are reported with their line number") {
  TempDir dir("data");
  const SceneGrammar g = SceneGrammar::default_toy();
  {
    std::ofstream out(dir.file("bad.tsv"));
    out << "1,0\ta dog </s>\tDET N END\n";
    out << "1,x\ta dog </s>\tDET N END\n";
  }
  Vocabulary v = g.vocab();
  try {
    read_dataset(dir.file("bad.tsv"), v, false);
    FAIL("expected a format error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kFormat);
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  {
    std::ofstream out(dir.file("fields.tsv"));
    out << "1,0\ta dog </s>\n";
  }
  CHECK_THROWS_AS(read_dataset(dir.file("fields.tsv"), v, false), Error);
  {
    std::ofstream out(dir.file("unknown.tsv"));
    out << "1,0\ta zebra </s>\tDET N END\n";
  }
  CHECK_THROWS_AS(read_dataset(dir.file("unknown.tsv"), v, false), Error);
  Vocabulary grow = g.vocab();
  CHECK(read_dataset(dir.file("unknown.tsv"), grow, true).size() == 1);
  CHECK(grow.find("zebra").has_value());
}

TEST_CASE("synthetic embeddings are recentred and seeded") {
  const EmbeddingTable a = make_embeddings(10, 4, 1);
  for (std::size_t i = 0; i < 4; ++i) {
    double s = 0;
    for (std::size_t w = 0; w < 10; ++w) s += a.We(i, w);
    CHECK(std::abs(s) < 1e-12);
  }
  CHECK(make_embeddings(10, 4, 1).We == a.We);
  CHECK(max_abs_diff(make_embeddings(10, 4, 2).We.data(), a.We.data()) > 0);
}

TEST_CASE("embedding text files load by word") {
  TempDir dir("emb");
  const SceneGrammar g = SceneGrammar::default_toy();
  const EmbeddingTable synth = make_embeddings(g.vocab().size(), 3, 5);
  write_embeddings_text(synth.We, g.vocab(), dir.file("all.txt"));
  const EmbeddingTable back = load_embeddings_text(dir.file("all.txt"), g.vocab());
  CHECK(back.missing == 0);
  CHECK(max_abs_diff(back.We.data(), synth.We.data()) < 1e-12);

  // Drop "dog": its column is zero before recentring.
  {
    std::ifstream in(dir.file("all.txt"));
    std::ofstream out(dir.file("some.txt"));
    std::string line;
    while (std::getline(in, line))
      if (line.rfind("dog ", 0) != 0) out << line << '\n';
  }
  const EmbeddingTable part = load_embeddings_text(dir.file("some.txt"), g.vocab());
  CHECK(part.missing == 1);
  const std::size_t dog = *g.vocab().find("dog");
  const double n = double(g.vocab().size());
  for (std::size_t i = 0; i < 3; ++i) {
    double sum_others = 0;
    for (std::size_t w = 0; w < g.vocab().size(); ++w)
      if (w != dog) sum_others += synth.We(i, w);
    CHECK(part.We(i, dog) == doctest::Approx(-sum_others / n).epsilon(1e-12).scale(1.0));
  }

  {
    std::ofstream out(dir.file("ragged.txt"));
    out << "a 1 2 3\nthe 1 2\n";
  }
  try {
    load_embeddings_text(dir.file("ragged.txt"), g.vocab());
    FAIL("expected a format error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
}

}  // TEST_SUITE
