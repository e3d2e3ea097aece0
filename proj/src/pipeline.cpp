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

#include "tpgn/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "tpgn/tpr.hpp"

namespace tpgn {

namespace {

std::string format(const char* fmt, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  std::string s = buf;
  // Avoid printing "-0.0000".
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

std::string vec_text(std::span<const double> v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format("%.4f", v[i]);
  return s + ")";
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    fail(ErrorCode::kIo, "cannot create directory " + dir);
}

std::string join(const std::string& dir, const char* name) {
  return (std::filesystem::path(dir) / name).string();
}

Sentence caption_words(std::span<const std::size_t> ids, const Vocabulary& vocab,
                       std::size_t end_id) {
  Sentence out;
  for (std::size_t id : ids) {
    if (id == end_id) break;
    out.push_back(vocab.word(id));
  }
  return out;
}

constexpr std::array<std::string_view, 2> kGenDataKeys = {"samples", "seed"};
constexpr std::array<std::string_view, 4> kTrainKeys = {"dataset", "d", "epochs", "seed"};

}  // namespace

std::size_t gen_data(const RunConfig& config, const std::string& out_path) {
  require_keys(config, kGenDataKeys, "gen-data");
  const SceneGrammar grammar = SceneGrammar::default_toy();
  const std::vector<Sample> samples =
      sample_dataset(grammar, config.samples, config.noise, config.seed, config.t_max);
  write_dataset(samples, grammar.vocab(), out_path);
  return samples.size();
}

TrainOutcome train_run(const RunConfig& config, const std::string& out_dir) {
  require_keys(config, kTrainKeys, "train");
  Vocabulary vocab = SceneGrammar::default_toy().vocab();
  const std::vector<Sample> samples = read_dataset(config.dataset, vocab, true);
  if (samples.empty()) fail(ErrorCode::kConfig, "train: dataset " + config.dataset + " is empty");

  HyperParams hyper;
  hyper.d = config.d;
  hyper.vocab_size = vocab.size();
  hyper.feature_dim = samples.front().features.size();
  hyper.max_len = config.t_max;
  hyper.wx_mode = config.wx_mode;
  hyper.validate();
  for (const Sample& s : samples)
    if (s.caption.size() > hyper.max_len)
      fail(ErrorCode::kConfig, "train: a caption has " + std::to_string(s.caption.size()) +
                                   " tokens but t_max is " + std::to_string(hyper.max_len));
  TrainConfig tc = config.train;
  tc.seed = config.seed;
  tc.validate();

  const EmbeddingTable emb = config.embeddings == "synthetic"
                                 ? make_embeddings(vocab.size(), hyper.d, config.seed)
                                 : load_embeddings_text(config.embeddings, vocab);
  if (emb.We.dim(0) != hyper.d)
    fail(ErrorCode::kConfig, "train: embedding dimension " + std::to_string(emb.We.dim(0)) +
                                 " differs from d = " + std::to_string(hyper.d));

  ensure_dir(out_dir);
  std::ofstream csv(join(out_dir, "loss.csv"), std::ios::binary | std::ios::trunc);
  std::ofstream log(join(out_dir, "train.log"), std::ios::binary | std::ios::trunc);
  if (!csv || !log) fail(ErrorCode::kIo, "cannot write into " + out_dir);
  csv << "epoch,mean_loss,token_accuracy\n";
  log << timestamp() << " start samples=" << samples.size() << " d=" << hyper.d
      << " V=" << hyper.vocab_size << " d_v=" << hyper.feature_dim
      << " wx_mode=" << to_string(hyper.wx_mode) << " seed=" << config.seed << '\n';
  if (emb.missing > 0)
    log << timestamp() << " warning: " << emb.missing << " words missing from "
        << config.embeddings << '\n';

  auto on_epoch = [&](const EpochStats& s) {
    csv << s.epoch << ',' << format("%.10f", s.mean_loss) << ','
        << format("%.6f", s.token_accuracy) << '\n';
    log << timestamp() << " epoch " << s.epoch << " loss " << format("%.6f", s.mean_loss)
        << " acc " << format("%.4f", s.token_accuracy) << '\n';
  };

  Checkpoint ckpt;
  ckpt.hyper = hyper;
  ckpt.vocab = vocab;
  ckpt.seed = config.seed;
  ckpt.v_mean = feature_mean(samples);
  TrainResult result;
  try {
    result = train(samples, tc, hyper, emb.We, on_epoch);
  } catch (const TrainingDiverged& e) {
    ckpt.params = e.last_good();
    save_checkpoint(ckpt, join(out_dir, "last_good.ckpt"));
    log << timestamp() << " diverged: " << e.what() << "; wrote last_good.ckpt\n";
    throw;
  }
  ckpt.params = result.params;
  ckpt.v_mean = result.v_mean;
  save_checkpoint(ckpt, join(out_dir, "model.ckpt"));

  TrainOutcome out;
  out.epochs = result.curve.size();
  out.final_loss = result.curve.empty() ? 0.0 : result.curve.back().mean_loss;
  out.accuracy = evaluate(samples, result.params, result.v_mean, hyper);
  log << timestamp() << " done teacher_forced_accuracy "
      << format("%.4f", out.accuracy.token_accuracy) << " exact_match "
      << format("%.4f", out.accuracy.exact_match) << '\n';
  if (!csv || !log) fail(ErrorCode::kIo, "error writing into " + out_dir);
  return out;
}

std::vector<std::optional<PosTag>> word_tags(const Vocabulary& vocab,
                                             std::span<const Sample> samples,
                                             const std::string* tags_path) {
  std::vector<std::optional<PosTag>> tags(vocab.size());
  for (const Sample& s : samples)
    for (std::size_t i = 0; i < s.caption.size() && i < s.pos_tags.size(); ++i)
      if (s.caption[i] < tags.size() && !tags[s.caption[i]]) tags[s.caption[i]] = s.pos_tags[i];
  const SceneGrammar grammar = SceneGrammar::default_toy();
  for (std::size_t id = 0; id < vocab.size(); ++id)
    if (!tags[id])
      if (const auto g = grammar.vocab().find(vocab.word(id))) tags[id] = grammar.tag(*g);
  if (tags_path) {
    std::ifstream in(*tags_path);
    if (!in) fail(ErrorCode::kIo, "cannot read tag file " + *tags_path);
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
      if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      std::istringstream fields(line);
      std::string word, tag, extra;
      if (!(fields >> word)) continue;
      if (!(fields >> tag) || (fields >> extra))
        fail(ErrorCode::kFormat, *tags_path + ":" + std::to_string(n) + ": expected 'word TAG'");
      const auto parsed = parse_pos_tag(tag);
      if (!parsed)
        fail(ErrorCode::kFormat, *tags_path + ":" + std::to_string(n) + ": unknown tag " + tag);
      if (const auto id = vocab.find(word)) tags[*id] = *parsed;
    }
  }
  return tags;
}

std::vector<Sample> read_dataset_for(const Checkpoint& ckpt, const std::string& path) {
  Vocabulary vocab = ckpt.vocab;
  std::vector<Sample> samples = read_dataset(path, vocab, false);
  for (const Sample& s : samples)
    if (s.features.size() != ckpt.hyper.feature_dim)
      fail(ErrorCode::kFormat, path + ": feature length " + std::to_string(s.features.size()) +
                                   " differs from the model's " +
                                   std::to_string(ckpt.hyper.feature_dim));
  return samples;
}

void generate_captions(const Checkpoint& ckpt, const std::string& data_path,
                       DecodeStrategy strategy, std::uint64_t seed, const LineSink& sink) {
  const std::vector<Sample> samples = read_dataset_for(ckpt, data_path);
  std::mt19937_64 rng(seed);
  DecodeOptions options{strategy, &rng};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const CaptionResult r =
        forward_caption(samples[i].features, ckpt.v_mean, ckpt.params, ckpt.hyper, {}, options);
    std::string line = std::to_string(i) + '\t';
    const Sentence words = caption_words(r.word_ids, ckpt.vocab, ckpt.hyper.end_id);
    for (std::size_t w = 0; w < words.size(); ++w) line += (w ? " " : "") + words[w];
    sink(line);
  }
}

AnalyzeResult analyze(const Checkpoint& ckpt, const std::string& data_path,
                      const std::string* tags_path, std::size_t n_clusters,
                      std::uint64_t seed, const std::string& out_dir) {
  const std::vector<Sample> samples = read_dataset_for(ckpt, data_path);
  const auto tags = word_tags(ckpt.vocab, samples, tags_path);
  const std::vector<UnbindingRecord> records =
      collect_unbinding(ckpt.params, ckpt.v_mean, ckpt.hyper, samples, tags);
  std::vector<Vec> us;
  us.reserve(records.size());
  for (const UnbindingRecord& r : records) us.push_back(r.u);

  const ClusterModel model = kmeans(us, n_clusters, seed);
  const ClusterModel pair = n_clusters == 2 ? model : kmeans(us, 2, seed);

  AnalyzeResult out;
  out.records = records.size();
  out.separation = nv_separation(records, pair.assignments);
  out.conformity = conformity_table(records, pair.assignments, ckpt.vocab);
  out.clusters = cluster_report(records, model.assignments, n_clusters);
  const Projection proj = pca_project(us);
  out.degenerate_projection = proj.degenerate;

  ensure_dir(out_dir);
  write_conformity_csv(out.conformity, join(out_dir, "conformity.csv"));
  write_cluster_report_csv(out.clusters, join(out_dir, "clusters.csv"));
  write_projection_csv(proj, records, model.assignments, ckpt.vocab,
                       join(out_dir, "projection.csv"));

  std::ostringstream s;
  s << "records " << records.size() << '\n'
    << "clusters " << n_clusters << " inertia " << format("%.6f", model.inertia)
    << " iterations " << model.iterations << '\n';
  for (const ClusterSummary& c : out.clusters)
    s << "cluster " << c.cluster << " size " << c.size << ": " << c.interpretation << '\n';
  s << "mean dominant POS share " << format("%.4f", mean_dominant_pos_share(out.clusters))
    << '\n';
  const NvSeparation& nv = out.separation;
  s << "N/V split (2 clusters): noun cluster " << nv.noun_cluster << ", nouns "
    << nv.nouns_in_noun_cluster << "/" << nv.nouns << ", verbs+prepositions in other cluster "
    << nv.verbal_in_other_cluster << "/" << nv.verbal << " -> "
    << (nv.holds() ? "separated" : "not separated") << '\n';
  for (const ConformityRow& row : out.conformity.rows) {
    s << "conformity " << to_string(row.category) << ' ' << row.n_words << ' '
      << row.n_conforming;
    if (const auto p = row.proportion()) s << ' ' << format("%.3f", *p);
    s << '\n';
  }
  s << "projection variances " << format("%.6f", proj.variances[0]) << ' '
    << format("%.6f", proj.variances[1]) << '\n';
  if (proj.degenerate) s << "warning: all unbinding vectors are identical\n";
  out.summary = s.str();
  std::ofstream summary(join(out_dir, "summary.txt"), std::ios::binary | std::ios::trunc);
  summary << out.summary;
  if (!summary) fail(ErrorCode::kIo, "cannot write summary.txt into " + out_dir);
  return out;
}

std::array<double, 4> eval_bleu(const Checkpoint& ckpt, const std::string& data_path) {
  const std::vector<Sample> samples = read_dataset_for(ckpt, data_path);
  std::vector<Sentence> candidates, references;
  for (const Sample& s : samples) {
    const CaptionResult r = forward_caption(s.features, ckpt.v_mean, ckpt.params, ckpt.hyper);
    candidates.push_back(caption_words(r.word_ids, ckpt.vocab, ckpt.hyper.end_id));
    references.push_back(caption_words(s.caption, ckpt.vocab, ckpt.hyper.end_id));
  }
  const std::vector<double> scores =
      bleu_n(std::span<const Sentence>(candidates), std::span<const Sentence>(references), 4);
  return {scores[0], scores[1], scores[2], scores[3]};
}

GradCheckReport grad_check(std::size_t d, std::uint64_t seed) {
  GradCheckReport worst;
  for (WxMode mode : {WxMode::kTiedAverage, WxMode::kFree}) {
    HyperParams hyper;
    hyper.d = d;
    hyper.vocab_size = 5;
    hyper.feature_dim = 3;
    hyper.max_len = 4;
    hyper.wx_mode = mode;
    const GradCheckReport r = gradient_check(hyper, 4, seed);
    if (r.max_relative_error >= worst.max_relative_error) {
      const std::size_t checked = worst.checked + r.checked, total = worst.total + r.total;
      worst = r;
      worst.worst_tensor = std::string(to_string(mode)) + ":" + r.worst_tensor;
      worst.checked = checked;
      worst.total = total;
    } else {
      worst.checked += r.checked;
      worst.total += r.total;
    }
  }
  return worst;
}

void tpr_demo(const LineSink& sink) {
  const std::array<std::string, 3> names = {"Jay", "saw", "Kay"};
  const std::array<std::string, 3> role_names = {"subj", "verb", "obj"};
  const std::vector<Vec> fillers = {make_vec({1, 0, 0}), make_vec({0, 1, 0}),
                                    make_vec({0, 0, 1})};
  // Linearly independent but not orthogonal, so the duals differ from the roles.
  const RoleBasis basis =
      make_role_basis({make_vec({1, 1, 0}), make_vec({0, 1, 1}), make_vec({1, 0, 1})});

  sink("Fillers:");
  for (std::size_t i = 0; i < 3; ++i) sink("  " + names[i] + " = " + vec_text(fillers[i].data()));
  sink("Roles (r) and their duals (u), with r_i . u_j = delta_ij:");
  for (std::size_t i = 0; i < 3; ++i)
    sink("  " + role_names[i] + ": r = " + vec_text(basis.roles()[i].data()) +
         "  u = " + vec_text(basis.duals()[i].data()));
  sink("  residual max|r_i . u_j - delta_ij| = " + format("%.3e", basis.residual()));

  const std::array<Binding, 3> jay_saw_kay = {Binding{fillers[0], 0}, Binding{fillers[1], 1},
                                              Binding{fillers[2], 2}};
  const std::array<Binding, 3> kay_saw_jay = {Binding{fillers[2], 0}, Binding{fillers[1], 1},
                                              Binding{fillers[0], 2}};
  const Tpr s1 = bind_and_superpose(jay_saw_kay, basis);
  const Tpr s2 = bind_and_superpose(kay_saw_jay, basis);
  sink("S = Jay (x) r_subj + saw (x) r_verb + Kay (x) r_obj:");
  for (std::size_t r = 0; r < s1.matrix.dim(0); ++r) {
    std::vector<double> row;
    for (std::size_t c = 0; c < s1.matrix.dim(1); ++c) row.push_back(s1.matrix(r, c));
    sink("  " + vec_text(row));
  }
  sink("Word-by-word generation with order (subj, verb, obj):");
  const std::array<std::size_t, 3> order = {0, 1, 2};
  const std::vector<Vec> words = generate_sequence(s1, basis, order);
  std::string sentence;
  for (std::size_t k = 0; k < words.size(); ++k) {
    const std::size_t best = argmax(words[k].data());
    sink("  S u_" + role_names[k] + " = " + vec_text(words[k].data()) + " -> " + names[best]);
    sentence += (k ? " " : "") + names[best];
  }
  sink("Generated: " + sentence);
  sink("Kay saw Jay differs from Jay saw Kay: max |S1 - S2| = " +
       format("%.4f", max_abs_diff(s1.matrix.data(), s2.matrix.data())));
}

}  // namespace tpgn
