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

#include "tpgn/tpgn.h"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tpgn/pipeline.hpp"

struct tpgn_config {
  std::vector<std::pair<std::string, std::string>> entries;
  std::string base_dir;  // relative paths resolve against this
  tpgn::RunConfig resolved;
};

struct tpgn_model {
  tpgn::Checkpoint ckpt;
};

namespace {

thread_local std::string g_last_error;

tpgn_status to_status(tpgn::ErrorCode code) {
  switch (code) {
    case tpgn::ErrorCode::kInvalidArgument: return TPGN_ERR_INVALID_ARGUMENT;
    case tpgn::ErrorCode::kNotFinite: return TPGN_ERR_NOT_FINITE;
    case tpgn::ErrorCode::kIo: return TPGN_ERR_IO;
    case tpgn::ErrorCode::kFormat: return TPGN_ERR_FORMAT;
    case tpgn::ErrorCode::kConfig: return TPGN_ERR_CONFIG;
    case tpgn::ErrorCode::kNumeric: return TPGN_ERR_NUMERIC;
  }
  return TPGN_ERR_INTERNAL;
}

template <typename Fn>
tpgn_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return TPGN_OK;
  } catch (const tpgn::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return TPGN_ERR_INTERNAL;
}

void require_arg(const void* p, const char* name) {
  if (!p) tpgn::fail(tpgn::ErrorCode::kInvalidArgument, std::string(name) + " is NULL");
}

// Re-parses the stored entries and resolves relative paths.
void rebuild(tpgn_config& c) {
  std::string text;
  for (const auto& [k, v] : c.entries) text += k + "=" + v + "\n";
  tpgn::RunConfig r = tpgn::parse_config(text);
  const std::filesystem::path base(c.base_dir);
  auto resolve = [&](std::string& p) {
    if (!p.empty() && !c.base_dir.empty() && std::filesystem::path(p).is_relative())
      p = (base / p).string();
  };
  resolve(r.dataset);
  if (r.embeddings != "synthetic") resolve(r.embeddings);
  c.resolved = std::move(r);
}

tpgn_status make_config(std::string_view text, std::string origin, std::string base_dir,
                        tpgn_config** out) {
  return guarded([&] {
    require_arg(out, "out");
    *out = nullptr;
    tpgn::parse_config(text, origin);  // reports line numbers against the source
    auto c = std::make_unique<tpgn_config>();
    c->base_dir = std::move(base_dir);
    std::istringstream lines{std::string(text)};
    std::string line;
    while (std::getline(lines, line)) {
      if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string();
        return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
      };
      c->entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    rebuild(*c);
    *out = c.release();
  });
}

struct SinkAdapter {
  tpgn_line_fn fn;
  void* user;
  void operator()(std::string_view line) const {
    if (!fn) return;
    const std::string copy(line);
    fn(copy.c_str(), user);
  }
};

}  // namespace

extern "C" {

const char* tpgn_last_error(void) { return g_last_error.c_str(); }

const char* tpgn_version(void) { return "1.0.0"; }

const char* tpgn_status_name(tpgn_status status) {
  switch (status) {
    case TPGN_OK: return "ok";
    case TPGN_ERR_INVALID_ARGUMENT: return "invalid argument";
    case TPGN_ERR_NOT_FINITE: return "non-finite value";
    case TPGN_ERR_IO: return "i/o error";
    case TPGN_ERR_FORMAT: return "format error";
    case TPGN_ERR_CONFIG: return "config error";
    case TPGN_ERR_NUMERIC: return "numeric error";
    case TPGN_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

tpgn_status tpgn_config_load(const char* path, tpgn_config** out) {
  if (!path || !out) {
    g_last_error = "path or out is NULL";
    return TPGN_ERR_INVALID_ARGUMENT;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    g_last_error = std::string("cannot read config ") + path;
    return TPGN_ERR_IO;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return make_config(buf.str(), path, std::filesystem::path(path).parent_path().string(), out);
}

tpgn_status tpgn_config_parse(const char* text, tpgn_config** out) {
  if (!text) {
    g_last_error = "text is NULL";
    return TPGN_ERR_INVALID_ARGUMENT;
  }
  return make_config(text, "config", "", out);
}

tpgn_status tpgn_config_set(tpgn_config* config, const char* key, const char* value) {
  return guarded([&] {
    require_arg(config, "config");
    require_arg(key, "key");
    require_arg(value, "value");
    tpgn_config next = *config;
    auto it = std::find_if(next.entries.begin(), next.entries.end(),
                           [&](const auto& e) { return e.first == key; });
    if (it != next.entries.end()) it->second = value;
    else next.entries.emplace_back(key, value);
    rebuild(next);
    *config = std::move(next);
  });
}

void tpgn_config_free(tpgn_config* config) { delete config; }

tpgn_status tpgn_gen_data(const tpgn_config* config, const char* out_path,
                          size_t* n_samples) {
  return guarded([&] {
    require_arg(config, "config");
    require_arg(out_path, "out_path");
    const std::size_t n = tpgn::gen_data(config->resolved, out_path);
    if (n_samples) *n_samples = n;
  });
}

tpgn_status tpgn_train(const tpgn_config* config, const char* out_dir,
                       tpgn_train_summary* summary) {
  return guarded([&] {
    require_arg(config, "config");
    require_arg(out_dir, "out_dir");
    const tpgn::TrainOutcome r = tpgn::train_run(config->resolved, out_dir);
    if (summary) {
      summary->final_loss = r.final_loss;
      summary->epochs = r.epochs;
      summary->token_accuracy = r.accuracy.token_accuracy;
      summary->exact_match = r.accuracy.exact_match;
    }
  });
}

tpgn_status tpgn_model_load(const char* path, tpgn_model** out) {
  return guarded([&] {
    require_arg(path, "path");
    require_arg(out, "out");
    *out = nullptr;
    auto m = std::make_unique<tpgn_model>();
    m->ckpt = tpgn::load_checkpoint(path);
    *out = m.release();
  });
}

tpgn_status tpgn_model_save(const tpgn_model* model, const char* path) {
  return guarded([&] {
    require_arg(model, "model");
    require_arg(path, "path");
    tpgn::save_checkpoint(model->ckpt, path);
  });
}

void tpgn_model_free(tpgn_model* model) { delete model; }

tpgn_status tpgn_model_get_info(const tpgn_model* model, tpgn_model_info* info) {
  return guarded([&] {
    require_arg(model, "model");
    require_arg(info, "info");
    const tpgn::HyperParams& h = model->ckpt.hyper;
    info->d = h.d;
    info->vocab_size = h.vocab_size;
    info->feature_dim = h.feature_dim;
    info->max_len = h.max_len;
    info->wx_free = h.wx_mode == tpgn::WxMode::kFree ? 1 : 0;
    info->seed = model->ckpt.seed;
  });
}

tpgn_status tpgn_generate(const tpgn_model* model, const char* data_path, int sample,
                          uint64_t seed, tpgn_line_fn sink, void* user) {
  return guarded([&] {
    require_arg(model, "model");
    require_arg(data_path, "data_path");
    tpgn::generate_captions(model->ckpt, data_path,
                            sample ? tpgn::DecodeStrategy::kSample
                                   : tpgn::DecodeStrategy::kGreedy,
                            seed, SinkAdapter{sink, user});
  });
}

tpgn_status tpgn_analyze(const tpgn_model* model, const char* data_path,
                         const char* tags_path, size_t n_clusters, uint64_t seed,
                         const char* out_dir, tpgn_line_fn sink, void* user) {
  return guarded([&] {
    require_arg(model, "model");
    require_arg(data_path, "data_path");
    require_arg(out_dir, "out_dir");
    const std::string tags = tags_path ? tags_path : "";
    const tpgn::AnalyzeResult r = tpgn::analyze(model->ckpt, data_path,
                                                tags_path ? &tags : nullptr, n_clusters,
                                                seed, out_dir);
    const SinkAdapter out{sink, user};
    std::istringstream lines(r.summary);
    std::string line;
    while (std::getline(lines, line)) out(line);
  });
}

tpgn_status tpgn_eval_bleu(const tpgn_model* model, const char* data_path,
                           double scores[4]) {
  return guarded([&] {
    require_arg(model, "model");
    require_arg(data_path, "data_path");
    require_arg(scores, "scores");
    const auto s = tpgn::eval_bleu(model->ckpt, data_path);
    std::copy(s.begin(), s.end(), scores);
  });
}

tpgn_status tpgn_grad_check(size_t d, uint64_t seed, tpgn_grad_report* report) {
  return guarded([&] {
    require_arg(report, "report");
    const tpgn::GradCheckReport r = tpgn::grad_check(d, seed);
    report->max_relative_error = r.max_relative_error;
    report->checked = r.checked;
    report->total = r.total;
    std::memset(report->worst_tensor, 0, sizeof report->worst_tensor);
    std::strncpy(report->worst_tensor, r.worst_tensor.c_str(),
                 sizeof report->worst_tensor - 1);
  });
}

tpgn_status tpgn_tpr_demo(tpgn_line_fn sink, void* user) {
  return guarded([&] { tpgn::tpr_demo(SinkAdapter{sink, user}); });
}

}  // extern "C"
