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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Tolerances are fixed here.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "tpgn/checkpoint.hpp"
#include "tpgn/config.hpp"
#include "tpgn/interpret.hpp"
#include "tpgn/pipeline.hpp"
#include "tpgn/tpr.hpp"
#include "tpgn/train.hpp"

namespace {

using namespace tpgn;
using Clock = std::chrono::steady_clock;

// Criterion 1
constexpr int kTprTrials = 100;
constexpr double kOrthonormalTol = 1e-10;
constexpr double kIndependentTol = 1e-8;
constexpr double kTprSeconds = 5.0;
// Criterion 3
constexpr double kWitnessSeconds = 1.0;
// Criterion 4
constexpr double kGradTol = 1e-4;
constexpr double kGradSeconds = 120.0;
// Criterion 5
constexpr double kBlockTol = 1e-12;
// Criterion 6: toy run settings and thresholds.
constexpr std::uint64_t kToySeed = 7;
constexpr std::size_t kToySamples = 500;
constexpr std::size_t kToyD = 8;
constexpr std::size_t kToyEpochs = 200;
constexpr double kTokenAccuracyMin = 0.95;
constexpr double kExactMatchMin = 0.80;
constexpr double kToySeconds = 15 * 60.0;
// Criterion 9
constexpr double kBleuTol = 1e-9;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// Runs a criterion body; an exception counts as a failure.
void criterion(int id, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

Vec to_vec(const Eigen::VectorXd& v) {
  Vec out({std::size_t(v.size())});
  for (Eigen::Index i = 0; i < v.size(); ++i) out[std::size_t(i)] = v[i];
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Bind random fillers to `roles` and unbind each one again; returns the
// largest absolute error.
double bind_unbind_error(const std::vector<Vec>& roles, std::size_t filler_dim,
                         std::mt19937_64& rng) {
  const RoleBasis basis = make_role_basis(roles);
  std::vector<Binding> bindings;
  for (std::size_t j = 0; j < roles.size(); ++j)
    bindings.push_back({tpgn::testing::random_vec(filler_dim, rng), j});
  const Tpr t = bind_and_superpose(bindings, basis);
  double worst = 0;
  for (std::size_t j = 0; j < roles.size(); ++j)
    worst = std::max(worst, max_abs_diff(unbind(t, basis, j).data(), bindings[j].filler.data()));
  return worst;
}

void tpr_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2026);
  std::uniform_int_distribution<std::size_t> dim(1, 8);
  double ortho = 0, indep = 0;
  for (int trial = 0; trial < kTprTrials; ++trial) {
    const std::size_t role_dim = dim(rng), filler_dim = dim(rng);
    const std::size_t count = std::uniform_int_distribution<std::size_t>(1, role_dim)(rng);
    Eigen::MatrixXd g(role_dim, role_dim);
    std::normal_distribution<double> gauss;
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = gauss(rng);
    // Q from a Householder QR is orthonormal; the raw Gaussian columns are
    // independent with probability one.
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
    std::vector<Vec> orth, raw;
    for (std::size_t j = 0; j < count; ++j) {
      orth.push_back(to_vec(q.col(Eigen::Index(j))));
      raw.push_back(to_vec(g.col(Eigen::Index(j))));
    }
    ortho = std::max(ortho, bind_unbind_error(orth, filler_dim, rng));
    indep = std::max(indep, bind_unbind_error(raw, filler_dim, rng));
  }
  const double secs = seconds_since(start);
  report(1, ortho < kOrthonormalTol && indep < kIndependentTol && secs < kTprSeconds,
         "orthonormal max err " + fmt("%.2e", ortho) + ", independent max err " +
             fmt("%.2e", indep) + ", " + fmt("%.3f", secs) + " s");
}

void jay_saw_kay() {
  // Fillers J, s, K as basis vectors; roles subj, verb, obj independent
  // but not orthogonal.
  const std::vector<Vec> fillers = {make_vec({1, 0, 0}), make_vec({0, 1, 0}),
                                    make_vec({0, 0, 1})};
  const RoleBasis basis =
      make_role_basis({make_vec({1, 1, 0}), make_vec({0, 1, 1}), make_vec({1, 0, 1})});
  const std::vector<Binding> jsk = {{fillers[0], 0}, {fillers[1], 1}, {fillers[2], 2}};
  const std::vector<Binding> ksj = {{fillers[2], 0}, {fillers[1], 1}, {fillers[0], 2}};
  const Tpr t1 = bind_and_superpose(jsk, basis);
  const Tpr t2 = bind_and_superpose(ksj, basis);
  const std::vector<std::size_t> order = {0, 1, 2};
  const std::vector<Vec> seq = generate_sequence(t1, basis, order);
  bool exact = seq.size() == 3;
  for (std::size_t k = 0; exact && k < 3; ++k)
    exact = argmax(seq[k].data()) == k && max_abs_diff(seq[k].data(), fillers[k].data()) < 1e-12;
  const double diff = max_abs_diff(t1.matrix.data(), t2.matrix.data());
  report(2, exact && diff > 0.5,
         std::string("sequence ") + (exact ? "J s K" : "wrong") + ", max |S1 - S2| = " +
             fmt("%.4f", diff));
}

void witness() {
  const auto start = Clock::now();
  const auto w = tpgn::testing::make_witness();
  const std::vector<std::size_t> jsk = {w.kJay, w.kSaw, w.kKay, w.hyper.end_id};
  const std::vector<std::size_t> ksj = {w.kKay, w.kSaw, w.kJay, w.hyper.end_id};
  const bool a = forward_caption(make_vec({1, 0}), w.v_mean, w.params, w.hyper).word_ids == jsk;
  const bool b = forward_caption(make_vec({0, 1}), w.v_mean, w.params, w.hyper).word_ids == ksj;
  const double secs = seconds_since(start);
  report(3, a && b && secs < kWitnessSeconds,
         std::string("Jay saw Kay ") + (a ? "ok" : "wrong") + ", Kay saw Jay " +
             (b ? "ok" : "wrong") + ", " + fmt("%.4f", secs) + " s");
}

void gradients() {
  const auto start = Clock::now();
  double worst = 0;
  std::string where;
  std::size_t checked = 0;
  for (std::uint64_t seed : {1, 2, 3})
    for (WxMode mode : {WxMode::kTiedAverage, WxMode::kFree}) {
      HyperParams h;
      h.d = 3;
      h.vocab_size = 5;
      h.feature_dim = 3;
      h.max_len = 4;
      h.wx_mode = mode;
      const GradCheckReport r = gradient_check(h, 4, seed, 1e-5, 1e-8);
      checked += r.checked;
      if (r.max_relative_error >= worst) {
        worst = r.max_relative_error;
        where = std::string(to_string(mode)) + ":" + r.worst_tensor;
      }
    }
  const double secs = seconds_since(start);
  report(4, worst < kGradTol && checked > 0 && secs < kGradSeconds,
         "max relative error " + fmt("%.2e", worst) + " (" + where + "), " +
             std::to_string(checked) + " entries, " + fmt("%.2f", secs) + " s");
}

void block_diagonal() {
  std::mt19937_64 rng(99);
  double worst = 0;
  for (std::size_t d = 2; d <= 4; ++d)
    for (int trial = 0; trial < 100; ++trial) {
      const Mat s = tpgn::testing::random_mat(d, d, rng);
      const Vec u = tpgn::testing::random_vec(d * d, rng);
      // Naive d^2 x d^2 block-diagonal matrix times u.
      std::vector<double> big(d * d * d * d, 0.0);
      for (std::size_t k = 0; k < d; ++k)
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < d; ++j) big[(k * d + i) * d * d + k * d + j] = s(i, j);
      std::vector<double> naive(d * d, 0.0);
      for (std::size_t r = 0; r < d * d; ++r)
        for (std::size_t c = 0; c < d * d; ++c) naive[r] += big[r * d * d + c] * u[c];
      worst = std::max(worst, max_abs_diff(unbind_filler(s, u).data(), naive));
    }
  report(5, worst < kBlockTol, "max abs diff " + fmt("%.2e", worst) + " over d = 2..4");
}

RunConfig toy_config(const std::string& dataset, std::uint64_t seed, std::size_t samples,
                     std::size_t d, std::size_t epochs) {
  std::ostringstream text;
  text << "seed = " << seed << "\nsamples = " << samples << "\nd = " << d
       << "\nepochs = " << epochs << "\ndataset = " << dataset << "\n";
  return parse_config(text.str(), "acceptance");
}

void toy_training_and_analysis(const tpgn::testing::TempDir& dir) {
  const RunConfig cfg =
      toy_config(dir.file("toy.tsv"), kToySeed, kToySamples, kToyD, kToyEpochs);
  gen_data(cfg, cfg.dataset);
  const auto start = Clock::now();
  const TrainOutcome out = train_run(cfg, dir.file("toy"));
  const double secs = seconds_since(start);
  report(6,
         out.accuracy.token_accuracy >= kTokenAccuracyMin &&
             out.accuracy.exact_match >= kExactMatchMin && secs < kToySeconds,
         "token accuracy " + fmt("%.4f", out.accuracy.token_accuracy) + " (min " +
             fmt("%.2f", kTokenAccuracyMin) + "), exact match " +
             fmt("%.4f", out.accuracy.exact_match) + " (min " + fmt("%.2f", kExactMatchMin) +
             "), " + std::to_string(out.epochs) + " epochs, " + fmt("%.1f", secs) + " s");

  criterion(7, [&] {
    const Checkpoint ckpt = load_checkpoint(dir.file("toy/model.ckpt"));
    const AnalyzeResult a = analyze(ckpt, cfg.dataset, nullptr, 2, 1, dir.file("analysis"));
    const NvSeparation& s = a.separation;

    // Pronoun row fixture: 462 pronoun tokens, 442 in the noun cluster.
    std::vector<UnbindingRecord> recs;
    std::vector<std::size_t> assign;
    for (std::size_t i = 0; i < 462; ++i) {
      UnbindingRecord r;
      r.word_id = 2;
      r.pos = PosTag::kPron;
      r.position = 2;
      recs.push_back(r);
      assign.push_back(i < 442 ? 0 : 1);
    }
    const std::vector<std::string> words = {"<s>", "</s>", "he"};
    const ConformityTable t = conformity_table(recs, assign, Vocabulary(words));
    write_conformity_csv(t, dir.file("pronouns.csv"));
    const bool row = slurp(dir.file("pronouns.csv")).find("Pronouns,462,442,0.957\n") !=
                     std::string::npos;
    report(7, s.holds() && row,
           "nouns in noun cluster " + std::to_string(s.nouns_in_noun_cluster) + "/" +
               std::to_string(s.nouns) + ", verbs+prepositions in other " +
               std::to_string(s.verbal_in_other_cluster) + "/" + std::to_string(s.verbal) +
               ", pronoun row " + (row ? "0.957" : "wrong"));
  });

  criterion(8, [&] {
    // Small config trained twice from scratch.
    const RunConfig small = toy_config(dir.file("small.tsv"), 11, 60, 4, 5);
    gen_data(small, small.dataset);
    train_run(small, dir.file("run_a"));
    train_run(small, dir.file("run_b"));
    const std::string a = slurp(dir.file("run_a/loss.csv"));
    const bool same_loss = !a.empty() && a == slurp(dir.file("run_b/loss.csv"));
    const bool same_ckpt = slurp(dir.file("run_a/model.ckpt")) == slurp(dir.file("run_b/model.ckpt"));
    // Load, save again and compare bytes for the toy model.
    const Checkpoint c = load_checkpoint(dir.file("toy/model.ckpt"));
    save_checkpoint(c, dir.file("resaved.ckpt"));
    const Checkpoint back = load_checkpoint(dir.file("resaved.ckpt"));
    const bool round_trip = slurp(dir.file("resaved.ckpt")) == slurp(dir.file("toy/model.ckpt")) &&
                            back.params == c.params && back.v_mean == c.v_mean;
    report(8, same_loss && same_ckpt && round_trip,
           std::string("loss.csv ") + (same_loss ? "identical" : "differs") + ", model.ckpt " +
               (same_ckpt ? "identical" : "differs") + ", round trip " +
               (round_trip ? "bit-exact" : "differs"));
  });
}

void bleu() {
  const std::vector<Sentence> cands = {{"the", "cat", "sat", "on", "the", "mat"},
                                       {"a", "dog", "runs"}};
  const std::vector<Sentence> refs = {{"the", "cat", "is", "on", "the", "mat"},
                                      {"a", "dog", "runs", "fast"}};
  double self = 0;
  for (double s : bleu_n(std::span<const Sentence>(refs), std::span<const Sentence>(refs)))
    self = std::max(self, std::abs(s - 1.0));
  // Hand counts: clipped precisions 8/9, 5/7, 2/5, 0/3; c = 9, r = 10.
  const double bp = std::exp(1.0 - 10.0 / 9.0);
  const double p1 = 8.0 / 9.0, p2 = 5.0 / 7.0, p3 = 2.0 / 5.0;
  const double expect[4] = {bp * p1, bp * std::sqrt(p1 * p2), bp * std::cbrt(p1 * p2 * p3), 0.0};
  const std::vector<double> got =
      bleu_n(std::span<const Sentence>(cands), std::span<const Sentence>(refs));
  double hand = 0;
  for (int n = 0; n < 4; ++n) hand = std::max(hand, std::abs(got[std::size_t(n)] - expect[n]));
  report(9, self < kBleuTol && hand < kBleuTol,
         "self-BLEU max |1 - s| " + fmt("%.1e", self) + ", hand fixture max err " +
             fmt("%.1e", hand));
}

}  // namespace

int main() {
  tpgn::testing::TempDir dir("acceptance");
  criterion(1, tpr_oracle);
  criterion(2, jay_saw_kay);
  criterion(3, witness);
  criterion(4, gradients);
  criterion(5, block_diagonal);
  criterion(6, [&] { toy_training_and_analysis(dir); });
  criterion(9, bleu);
  std::printf("%d criterion(s) failed\n", failures);
  return failures ? 1 : 0;
}
