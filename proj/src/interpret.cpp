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

#include "tpgn/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>

#include <Eigen/Dense>

namespace tpgn {

namespace {

double squared_distance(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  return out;
}

void check_dims(std::span<const Vec> vectors) {
  require(!vectors.empty(), "no vectors");
  for (const Vec& v : vectors)
    require(v.size() == vectors.front().size(), "vectors differ in dimension");
}

// Centroid index per vector.
std::vector<std::size_t> nearest(std::span<const Vec> centroids,
                                 std::span<const Vec> vectors) {
  std::vector<std::size_t> out(vectors.size());
  for (std::size_t p = 0; p < vectors.size(); ++p) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double dist = squared_distance(vectors[p], centroids[c]);
      if (dist < best) {
        best = dist;
        out[p] = c;
      }
    }
  }
  return out;
}

double total_inertia(std::span<const Vec> centroids, std::span<const Vec> vectors,
                     std::span<const std::size_t> assign) {
  double s = 0.0;
  for (std::size_t p = 0; p < vectors.size(); ++p)
    s += squared_distance(vectors[p], centroids[assign[p]]);
  return s;
}

}  // namespace

std::vector<UnbindingRecord> collect_unbinding(
    const ModelParams& params, const Vec& v_mean, const HyperParams& hyper,
    std::span<const Sample> samples,
    std::span<const std::optional<PosTag>> word_tags) {
  std::vector<UnbindingRecord> records;
  for (std::size_t id = 0; id < samples.size(); ++id) {
    const CaptionResult result =
        forward_caption(samples[id].features, v_mean, params, hyper);
    for (std::size_t t = 0; t < result.steps.size(); ++t) {
      UnbindingRecord r;
      r.u = result.steps[t].u;
      r.word_id = result.steps[t].word_id;
      if (r.word_id < word_tags.size()) r.pos = word_tags[r.word_id];
      r.position = t + 1;
      r.caption_id = id;
      records.push_back(std::move(r));
    }
  }
  return records;
}

ClusterModel kmeans(std::span<const Vec> vectors, std::size_t k, std::uint64_t seed,
                    std::size_t max_iter) {
  check_dims(vectors);
  if (k < 1 || k > vectors.size())
    fail(ErrorCode::kInvalidArgument,
         "kmeans: need 1 <= clusters <= number of vectors (" +
             std::to_string(vectors.size()) + "), got " + std::to_string(k));
  const std::size_t n = vectors.size(), dim = vectors.front().size();
  std::mt19937_64 rng(seed);

  // k-means++ seeding.
  ClusterModel model;
  model.seed = seed;
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  model.centroids.push_back(vectors[first(rng)]);
  std::vector<double> d2(n);
  for (std::size_t p = 0; p < n; ++p) d2[p] = squared_distance(vectors[p], model.centroids[0]);
  while (model.centroids.size() < k) {
    double total = 0.0;
    for (double x : d2) total += x;
    std::size_t pick = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> unif(0.0, total);
      const double r = unif(rng);
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t p = 0; p < n; ++p) {
        acc += d2[p];
        if (r < acc && d2[p] > 0.0) {
          pick = p;
          break;
        }
      }
    } else {
      pick = first(rng);
    }
    model.centroids.push_back(vectors[pick]);
    for (std::size_t p = 0; p < n; ++p)
      d2[p] = std::min(d2[p], squared_distance(vectors[p], model.centroids.back()));
  }

  std::vector<std::size_t> assign = nearest(model.centroids, vectors);
  model.inertia_trace.push_back(total_inertia(model.centroids, vectors, assign));
  for (std::size_t iter = 1; iter <= max_iter; ++iter) {
    std::vector<Vec> sums(k, Vec({dim}));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t p = 0; p < n; ++p) {
      ++counts[assign[p]];
      for (std::size_t i = 0; i < dim; ++i) sums[assign[p]][i] += vectors[p][i];
    }
    for (std::size_t c = 0; c < k; ++c)
      if (counts[c] > 0)
        for (std::size_t i = 0; i < dim; ++i)
          model.centroids[c][i] = sums[c][i] / double(counts[c]);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t p = 0; p < n; ++p) {
        if (counts[assign[p]] <= 1) continue;
        const double dist = squared_distance(vectors[p], model.centroids[assign[p]]);
        if (dist > far_d) {
          far_d = dist;
          far = p;
        }
      }
      if (far_d < 0.0) continue;
      --counts[assign[far]];
      assign[far] = c;
      counts[c] = 1;
      model.centroids[c] = vectors[far];
    }
    std::vector<std::size_t> next = nearest(model.centroids, vectors);
    model.inertia_trace.push_back(total_inertia(model.centroids, vectors, next));
    model.iterations = iter;
    const bool converged = next == assign;
    assign = std::move(next);
    if (converged) break;
  }
  model.inertia = model.inertia_trace.back();
  model.assignments = std::move(assign);
  return model;
}

std::vector<std::size_t> assign_nearest(const ClusterModel& model,
                                        std::span<const Vec> vectors) {
  require(!model.centroids.empty(), "assign_nearest: model has no centroids");
  for (const Vec& v : vectors)
    if (v.size() != model.centroids.front().size())
      fail(ErrorCode::kInvalidArgument, "assign_nearest: dimension mismatch");
  return nearest(model.centroids, vectors);
}

std::string_view to_string(ConformityCategory c) {
  switch (c) {
    case ConformityCategory::kNouns: return "Nouns";
    case ConformityCategory::kPronouns: return "Pronouns";
    case ConformityCategory::kIndefiniteArticles: return "Indefinite articles";
    case ConformityCategory::kDefiniteArticles: return "Definite articles";
    case ConformityCategory::kAdjectives: return "Adjectives";
    case ConformityCategory::kVerbs: return "Verbs";
    case ConformityCategory::kPrepositionsConjunctions: return "Prepositions & conjunctions";
    case ConformityCategory::kAdverbs: return "Adverbs";
  }
  return "?";
}

bool is_nominal(ConformityCategory c) {
  return c == ConformityCategory::kNouns || c == ConformityCategory::kPronouns ||
         c == ConformityCategory::kIndefiniteArticles ||
         c == ConformityCategory::kDefiniteArticles ||
         c == ConformityCategory::kAdjectives;
}

std::optional<ConformityCategory> categorize(PosTag tag, std::string_view word) {
  switch (tag) {
    case PosTag::kNoun: return ConformityCategory::kNouns;
    case PosTag::kPron: return ConformityCategory::kPronouns;
    case PosTag::kAdj: return ConformityCategory::kAdjectives;
    case PosTag::kVerb: return ConformityCategory::kVerbs;
    case PosTag::kPrepSpatial:
    case PosTag::kPrepOther:
    case PosTag::kConj: return ConformityCategory::kPrepositionsConjunctions;
    case PosTag::kAdv: return ConformityCategory::kAdverbs;
    case PosTag::kDet:
      if (word == "a" || word == "an") return ConformityCategory::kIndefiniteArticles;
      if (word == "the") return ConformityCategory::kDefiniteArticles;
      return std::nullopt;
    default: return std::nullopt;
  }
}

std::optional<double> ConformityRow::proportion() const {
  if (n_words == 0) return std::nullopt;
  return double(n_conforming) / double(n_words);
}

ConformityTable conformity_table(std::span<const UnbindingRecord> records,
                                 std::span<const std::size_t> assignments,
                                 const Vocabulary& vocab,
                                 const ConformityOptions& options) {
  require(records.size() == assignments.size(),
          "conformity_table: records and assignments differ in length");
  for (std::size_t a : assignments)
    require(a < 2, "conformity_table: needs a two-cluster assignment");

  std::vector<std::optional<ConformityCategory>> cats(records.size());
  std::array<std::size_t, 2> nouns{};
  for (std::size_t r = 0; r < records.size(); ++r) {
    const UnbindingRecord& rec = records[r];
    if (!rec.pos) continue;
    if (options.exclude_caption_initial && rec.position == 1) continue;
    cats[r] = categorize(*rec.pos, vocab.word(rec.word_id));
    if (cats[r] == ConformityCategory::kNouns) ++nouns[assignments[r]];
  }

  ConformityTable table;
  table.noun_cluster = nouns[1] > nouns[0] ? 1 : 0;
  for (std::size_t c = 0; c < kNumConformityCategories; ++c)
    table.rows.push_back(ConformityRow{static_cast<ConformityCategory>(c), 0, 0});
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (!cats[r]) continue;
    ConformityRow& row = table.rows[static_cast<std::size_t>(*cats[r])];
    ++row.n_words;
    const bool in_noun_cluster = assignments[r] == table.noun_cluster;
    if (in_noun_cluster == is_nominal(*cats[r])) ++row.n_conforming;
  }
  return table;
}

NvSeparation nv_separation(std::span<const UnbindingRecord> records,
                           std::span<const std::size_t> assignments) {
  require(records.size() == assignments.size(),
          "nv_separation: records and assignments differ in length");
  std::array<std::size_t, 2> nouns{}, verbal{};
  for (std::size_t r = 0; r < records.size(); ++r) {
    require(assignments[r] < 2, "nv_separation: needs a two-cluster assignment");
    if (!records[r].pos) continue;
    switch (*records[r].pos) {
      case PosTag::kNoun: ++nouns[assignments[r]]; break;
      case PosTag::kVerb:
      case PosTag::kPrepSpatial:
      case PosTag::kPrepOther: ++verbal[assignments[r]]; break;
      default: break;
    }
  }
  NvSeparation out;
  out.noun_cluster = nouns[1] > nouns[0] ? 1 : 0;
  out.nouns = nouns[0] + nouns[1];
  out.nouns_in_noun_cluster = nouns[out.noun_cluster];
  out.verbal = verbal[0] + verbal[1];
  out.verbal_in_other_cluster = verbal[1 - out.noun_cluster];
  return out;
}

std::vector<ClusterSummary> cluster_report(std::span<const UnbindingRecord> records,
                                           std::span<const std::size_t> assignments,
                                           std::size_t num_clusters) {
  require(records.size() == assignments.size(),
          "cluster_report: records and assignments differ in length");
  require(num_clusters >= 1, "cluster_report: need at least one cluster");
  std::vector<ClusterSummary> report(num_clusters);
  std::vector<std::map<std::string, std::size_t>> pos_counts(num_clusters);
  std::vector<std::array<std::size_t, 2>> pos12(num_clusters);
  for (std::size_t r = 0; r < records.size(); ++r) {
    const std::size_t c = assignments[r];
    require(c < num_clusters, "cluster_report: assignment out of range");
    ++report[c].size;
    const std::string tag = records[r].pos ? std::string(to_string(*records[r].pos)) : "UNK";
    ++pos_counts[c][tag];
    if (records[r].position == 1) ++pos12[c][0];
    if (records[r].position == 2) ++pos12[c][1];
  }
  for (std::size_t c = 0; c < num_clusters; ++c) {
    ClusterSummary& s = report[c];
    s.cluster = c;
    if (s.size == 0) {
      s.interpretation = "empty";
      continue;
    }
    const double n = double(s.size);
    for (const auto& [tag, count] : pos_counts[c]) s.pos_share[tag] = double(count) / n;
    s.position1_share = double(pos12[c][0]) / n;
    s.position2_share = double(pos12[c][1]) / n;
    if (pos12[c][0] == s.size) {
      s.interpretation = "Position 1 (1.00)";
    } else if (pos12[c][1] == s.size) {
      s.interpretation = "Position 2 (1.00)";
    } else {
      std::vector<std::pair<double, std::string>> ranked;
      for (const auto& [tag, share] : s.pos_share) ranked.emplace_back(share, tag);
      std::stable_sort(ranked.begin(), ranked.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      for (std::size_t i = 0; i < ranked.size() && i < 3; ++i) {
        if (i > 0 && ranked[i].first < 0.05) break;
        if (i) s.interpretation += ", ";
        s.interpretation += ranked[i].second + " (" + fixed(ranked[i].first, 2) + ")";
      }
    }
  }
  return report;
}

double mean_dominant_pos_share(std::span<const ClusterSummary> report) {
  double weighted = 0.0;
  std::size_t total = 0;
  for (const ClusterSummary& s : report) {
    if (s.size == 0) continue;
    double top = 0.0;
    for (const auto& [tag, share] : s.pos_share) top = std::max(top, share);
    weighted += top * double(s.size);
    total += s.size;
  }
  return total ? weighted / double(total) : 0.0;
}

Projection pca_project(std::span<const Vec> vectors) {
  require(vectors.size() >= 2, "pca_project: need at least two vectors");
  check_dims(vectors);
  const auto n = static_cast<Eigen::Index>(vectors.size());
  const auto dim = static_cast<Eigen::Index>(vectors.front().size());
  Eigen::MatrixXd x(n, dim);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < dim; ++c) x(r, c) = vectors[r][c];
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;

  Projection proj;
  proj.points.assign(vectors.size(), {0.0, 0.0});
  if (x.cwiseAbs().maxCoeff() == 0.0) {
    proj.degenerate = true;
    return proj;
  }
  const Eigen::MatrixXd cov = (x.transpose() * x) / double(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // Eigenvalues come back in increasing order.
  const Eigen::Index axes = std::min<Eigen::Index>(2, dim);
  for (Eigen::Index a = 0; a < axes; ++a) {
    Eigen::VectorXd axis = eig.eigenvectors().col(dim - 1 - a);
    Eigen::Index big = 0;
    axis.cwiseAbs().maxCoeff(&big);
    if (axis(big) < 0) axis = -axis;
    proj.variances[a] = std::max(0.0, eig.eigenvalues()(dim - 1 - a));
    const Eigen::VectorXd coords = x * axis;
    for (Eigen::Index r = 0; r < n; ++r) proj.points[r][a] = coords(r);
  }
  return proj;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(const Sentence& s, std::size_t order) {
  NgramCounts counts;
  if (s.size() < order) return counts;
  for (std::size_t i = 0; i + order <= s.size(); ++i)
    ++counts[std::vector<std::string>(s.begin() + i, s.begin() + i + order)];
  return counts;
}

}  // namespace

std::vector<double> bleu_n(std::span<const Sentence> candidates,
                           std::span<const std::vector<Sentence>> references,
                           std::size_t n_max) {
  require(!candidates.empty(), "bleu: empty corpus");
  require(candidates.size() == references.size(),
          "bleu: candidates and references differ in count");
  require(n_max >= 1, "bleu: n_max must be >= 1");

  std::vector<std::size_t> matched(n_max, 0), possible(n_max, 0);
  std::size_t cand_len = 0, ref_len = 0;
  for (std::size_t s = 0; s < candidates.size(); ++s) {
    const Sentence& cand = candidates[s];
    const auto& refs = references[s];
    require(!refs.empty(), "bleu: candidate without a reference");
    cand_len += cand.size();
    // Closest reference length; ties prefer the shorter reference.
    std::size_t best = refs.front().size();
    for (const Sentence& r : refs) {
      const auto dr = std::abs(double(r.size()) - double(cand.size()));
      const auto db = std::abs(double(best) - double(cand.size()));
      if (dr < db || (dr == db && r.size() < best)) best = r.size();
    }
    ref_len += best;
    for (std::size_t order = 1; order <= n_max; ++order) {
      const NgramCounts cand_counts = count_ngrams(cand, order);
      NgramCounts max_ref;
      for (const Sentence& r : refs)
        for (const auto& [gram, count] : count_ngrams(r, order))
          max_ref[gram] = std::max(max_ref[gram], count);
      for (const auto& [gram, count] : cand_counts) {
        possible[order - 1] += count;
        const auto it = max_ref.find(gram);
        if (it != max_ref.end()) matched[order - 1] += std::min(count, it->second);
      }
    }
  }

  const double bp = cand_len == 0 ? 0.0
                    : cand_len > ref_len
                        ? 1.0
                        : std::exp(1.0 - double(ref_len) / double(cand_len));
  std::vector<double> scores(n_max, 0.0);
  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t order = 1; order <= n_max; ++order) {
    if (matched[order - 1] == 0 || possible[order - 1] == 0) zero = true;
    if (!zero) log_sum += std::log(double(matched[order - 1]) / double(possible[order - 1]));
    scores[order - 1] = zero ? 0.0 : bp * std::exp(log_sum / double(order));
  }
  return scores;
}

std::vector<double> bleu_n(std::span<const Sentence> candidates,
                           std::span<const Sentence> references, std::size_t n_max) {
  std::vector<std::vector<Sentence>> refs;
  refs.reserve(references.size());
  for (const Sentence& r : references) refs.push_back({r});
  return bleu_n(candidates, std::span<const std::vector<Sentence>>(refs), n_max);
}

void write_conformity_csv(const ConformityTable& table, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "category,N_w,N_r,P_c\n";
  for (const ConformityRow& row : table.rows) {
    out << csv_field(to_string(row.category)) << ',' << row.n_words << ','
        << row.n_conforming << ',';
    if (const auto p = row.proportion()) out << fixed(*p, 3);
    out << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "error writing " + path);
}

void write_cluster_report_csv(std::span<const ClusterSummary> report,
                              const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "cluster,label,proportion\n";
  for (const ClusterSummary& s : report) {
    out << s.cluster << ",Position 1," << fixed(s.position1_share, 6) << '\n';
    out << s.cluster << ",Position 2," << fixed(s.position2_share, 6) << '\n';
    for (const auto& [tag, share] : s.pos_share)
      out << s.cluster << ',' << csv_field(tag) << ',' << fixed(share, 6) << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "error writing " + path);
}

void write_projection_csv(const Projection& projection,
                          std::span<const UnbindingRecord> records,
                          std::span<const std::size_t> assignments,
                          const Vocabulary& vocab, const std::string& path) {
  require(projection.points.size() == records.size() &&
              records.size() == assignments.size(),
          "write_projection_csv: inputs differ in length");
  std::ofstream out = open_csv(path);
  out << "x,y,word,pos,cluster\n";
  for (std::size_t r = 0; r < records.size(); ++r) {
    out << fixed(projection.points[r][0], 9) << ',' << fixed(projection.points[r][1], 9)
        << ',' << csv_field(vocab.word(records[r].word_id)) << ','
        << (records[r].pos ? to_string(*records[r].pos) : std::string_view("UNK")) << ','
        << assignments[r] << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "error writing " + path);
}

}  // namespace tpgn
