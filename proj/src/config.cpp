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

#include "tpgn/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace tpgn {

namespace {

constexpr std::array<std::string_view, 18> kKeys = {
    "seed",         "samples",    "noise",      "d",
    "t_max",        "wx_mode",    "optimizer",  "learning_rate",
    "adam_beta1",   "adam_beta2", "adam_epsilon", "epochs",
    "batch_size",   "grad_clip",  "train_embeddings", "dataset",
    "embeddings",   "output_dir",
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

class LineError {
 public:
  LineError(std::string_view origin, std::size_t line) : origin_(origin), line_(line) {}
  [[noreturn]] void operator()(const std::string& what) const {
    fail(ErrorCode::kConfig, origin_ + ":" + std::to_string(line_) + ": " + what);
  }

 private:
  std::string origin_;
  std::size_t line_;
};

template <typename T>
T parse_number(std::string_view key, std::string_view value, const LineError& err) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    err("bad value for " + std::string(key) + ": '" + std::string(value) + "'");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(out)) err(std::string(key) + " must be finite");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value, const LineError& err) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  err("bad value for " + std::string(key) + ": expected true or false");
}

void apply(RunConfig& c, std::string_view key, std::string_view value,
           const LineError& err) {
  if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value, err);
    c.train.seed = c.seed;
  } else if (key == "samples") {
    c.samples = parse_number<std::size_t>(key, value, err);
  } else if (key == "noise") {
    c.noise = parse_number<double>(key, value, err);
    if (c.noise < 0) err("noise must be >= 0");
  } else if (key == "d") {
    c.d = parse_number<std::size_t>(key, value, err);
  } else if (key == "t_max") {
    c.t_max = parse_number<std::size_t>(key, value, err);
  } else if (key == "wx_mode") {
    const auto mode = parse_wx_mode(value);
    if (!mode) err("wx_mode must be 'tied' or 'free'");
    c.wx_mode = *mode;
  } else if (key == "optimizer") {
    if (value == "adam") c.train.optimizer = OptimizerKind::kAdam;
    else if (value == "sgd") c.train.optimizer = OptimizerKind::kSgd;
    else err("optimizer must be 'adam' or 'sgd'");
  } else if (key == "learning_rate") {
    c.train.learning_rate = parse_number<double>(key, value, err);
  } else if (key == "adam_beta1") {
    c.train.adam_beta1 = parse_number<double>(key, value, err);
  } else if (key == "adam_beta2") {
    c.train.adam_beta2 = parse_number<double>(key, value, err);
  } else if (key == "adam_epsilon") {
    c.train.adam_epsilon = parse_number<double>(key, value, err);
  } else if (key == "epochs") {
    c.train.epochs = parse_number<std::size_t>(key, value, err);
  } else if (key == "batch_size") {
    c.train.batch_size = parse_number<std::size_t>(key, value, err);
  } else if (key == "grad_clip") {
    if (value == "none") {
      c.train.grad_clip.reset();
    } else {
      const double clip = parse_number<double>(key, value, err);
      if (clip < 0) err("grad_clip must be >= 0 or 'none'");
      c.train.grad_clip = clip == 0.0 ? std::nullopt : std::optional<double>(clip);
    }
  } else if (key == "train_embeddings") {
    c.train.train_embeddings = parse_bool(key, value, err);
  } else if (key == "dataset") {
    c.dataset = std::string(value);
  } else if (key == "embeddings") {
    c.embeddings = std::string(value);
  } else if (key == "output_dir") {
    c.output_dir = std::string(value);
  }
}

}  // namespace

std::span<const std::string_view> config_keys() { return kKeys; }

RunConfig parse_config(std::string_view text, std::string_view origin) {
  RunConfig c;
  c.train.seed = c.seed;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const LineError err(origin, line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) err("expected key=value");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end())
      err("unknown key '" + std::string(key) + "'");
    if (value.empty()) err("empty value for " + std::string(key));
    if (!c.present.insert(std::string(key)).second)
      err("duplicate key '" + std::string(key) + "'");
    apply(c, key, value, err);
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot read config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  RunConfig c = parse_config(buf.str(), path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).string();
  };
  resolve(c.dataset);
  if (c.embeddings != "synthetic") resolve(c.embeddings);
  return c;
}

void require_keys(const RunConfig& config, std::span<const std::string_view> keys,
                  std::string_view command) {
  for (std::string_view key : keys)
    if (!config.present.contains(key))
      fail(ErrorCode::kConfig, std::string(command) + ": config is missing required key '" +
                                   std::string(key) + "'");
}

}  // namespace tpgn
