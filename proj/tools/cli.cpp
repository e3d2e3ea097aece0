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

#include "cli.hpp"

#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tpgn/tpgn.h"

namespace tpgn_cli {

namespace {

struct ConfigDeleter {
  void operator()(tpgn_config* c) const { tpgn_config_free(c); }
};
struct ModelDeleter {
  void operator()(tpgn_model* m) const { tpgn_model_free(m); }
};
using ConfigPtr = std::unique_ptr<tpgn_config, ConfigDeleter>;
using ModelPtr = std::unique_ptr<tpgn_model, ModelDeleter>;

// Thrown after a failed C call; carries the message already formatted.
struct Failure {
  std::string message;
};

void check(tpgn_status status, const std::string& context) {
  if (status == TPGN_OK) return;
  throw Failure{context + ": " + tpgn_status_name(status) + ": " + tpgn_last_error()};
}

void write_line(const char* line, void* user) { *static_cast<std::ostream*>(user) << line << '\n'; }

std::string fixed(double x, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

ConfigPtr load_config(const std::string& path) {
  tpgn_config* raw = nullptr;
  check(tpgn_config_load(path.c_str(), &raw), "config");
  return ConfigPtr(raw);
}

ModelPtr load_model(const std::string& path) {
  tpgn_model* raw = nullptr;
  check(tpgn_model_load(path.c_str(), &raw), "checkpoint");
  return ModelPtr(raw);
}

}  // namespace

int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tensor Product Generation Network: TPR algebra, caption model, analysis",
               "tpgn"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tpgn_version()));

  auto* demo = app.add_subcommand("tpr-demo", "Walk through binding and unbinding of 'Jay saw Kay'");

  std::string config_path, out_path;
  auto* gen = app.add_subcommand("gen-data", "Sample a synthetic scene/caption dataset");
  gen->add_option("--config", config_path, "Config file (needs samples, seed)")->required();
  gen->add_option("--out", out_path, "Dataset file to write")->required();

  auto* train = app.add_subcommand("train", "Train a model on a dataset");
  train->add_option("--config", config_path, "Config file (needs dataset, d, epochs, seed)")
      ->required();
  train->add_option("--out", out_path, "Output directory")->required();

  std::string ckpt_path, data_path;
  std::optional<std::uint64_t> sample_seed;
  auto* generate = app.add_subcommand("generate", "Caption every sample of a dataset");
  generate->add_option("--ckpt", ckpt_path, "Checkpoint")->required();
  generate->add_option("--data", data_path, "Dataset file")->required();
  auto* greedy_flag = generate->add_flag("--greedy", "Greedy decoding (default)");
  auto* sample_opt =
      generate->add_option("--sample", sample_seed, "Sample words with this seed");
  greedy_flag->excludes(sample_opt);

  std::size_t clusters = 0;
  std::uint64_t analyze_seed = 1;
  std::string tags_path;
  auto* analyze = app.add_subcommand("analyze", "Cluster and interpret unbinding vectors");
  analyze->add_option("--ckpt", ckpt_path, "Checkpoint")->required();
  analyze->add_option("--data", data_path, "Dataset file")->required();
  analyze->add_option("--clusters", clusters, "Number of K-means clusters")
      ->required()
      ->check(CLI::PositiveNumber);
  analyze->add_option("--out", out_path, "Output directory")->required();
  analyze->add_option("--tags", tags_path, "Optional 'word TAG' file overriding POS tags");
  analyze->add_option("--seed", analyze_seed, "K-means seed")->capture_default_str();

  auto* bleu = app.add_subcommand("eval-bleu", "BLEU-1..4 of greedy captions");
  bleu->add_option("--ckpt", ckpt_path, "Checkpoint")->required();
  bleu->add_option("--data", data_path, "Dataset file")->required();

  std::size_t grad_d = 3;
  std::uint64_t grad_seed = 1;
  auto* grad = app.add_subcommand("grad-check", "Finite-difference gradient check");
  grad->add_option("--d", grad_d, "Model dimension d")->capture_default_str()->check(
      CLI::Range(std::size_t{1}, std::size_t{16}));
  grad->add_option("--seed", grad_seed, "Seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << tpgn_version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (demo->parsed()) {
      check(tpgn_tpr_demo(write_line, &out), "tpr-demo");
    } else if (gen->parsed()) {
      ConfigPtr cfg = load_config(config_path);
      std::size_t n = 0;
      check(tpgn_gen_data(cfg.get(), out_path.c_str(), &n), "gen-data");
      out << "wrote " << n << " samples to " << out_path << '\n';
    } else if (train->parsed()) {
      ConfigPtr cfg = load_config(config_path);
      tpgn_train_summary s{};
      check(tpgn_train(cfg.get(), out_path.c_str(), &s), "train");
      out << "epochs " << s.epochs << " final loss " << fixed(s.final_loss, "%.6f")
          << " token accuracy " << fixed(s.token_accuracy, "%.4f") << " exact match "
          << fixed(s.exact_match, "%.4f") << '\n'
          << "wrote " << out_path << "/model.ckpt\n";
    } else if (generate->parsed()) {
      ModelPtr model = load_model(ckpt_path);
      check(tpgn_generate(model.get(), data_path.c_str(), sample_seed ? 1 : 0,
                          sample_seed.value_or(0), write_line, &out),
            "generate");
    } else if (analyze->parsed()) {
      ModelPtr model = load_model(ckpt_path);
      check(tpgn_analyze(model.get(), data_path.c_str(),
                         tags_path.empty() ? nullptr : tags_path.c_str(), clusters,
                         analyze_seed, out_path.c_str(), write_line, &out),
            "analyze");
    } else if (bleu->parsed()) {
      ModelPtr model = load_model(ckpt_path);
      double scores[4] = {};
      check(tpgn_eval_bleu(model.get(), data_path.c_str(), scores), "eval-bleu");
      for (int n = 0; n < 4; ++n)
        out << "BLEU-" << n + 1 << ' ' << fixed(scores[n], "%.4f") << '\n';
    } else if (grad->parsed()) {
      tpgn_grad_report r{};
      check(tpgn_grad_check(grad_d, grad_seed, &r), "grad-check");
      const bool pass = r.max_relative_error < kGradCheckTolerance;
      out << "max relative error " << fixed(r.max_relative_error, "%.3e") << " (" << r.worst_tensor
          << "), " << r.checked << "/" << r.total << " entries checked, threshold "
          << fixed(kGradCheckTolerance, "%.0e") << ": " << (pass ? "PASS" : "FAIL") << '\n';
      if (!pass) return kExitRuntime;
    }
  } catch (const Failure& f) {
    err << "error: " << f.message << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace tpgn_cli
