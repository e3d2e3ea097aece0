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

// Flat key=value run configuration. '#' starts a comment; blank lines are
// ignored; unknown keys and repeated keys are errors.

#ifndef TPGN_CONFIG_HPP_
#define TPGN_CONFIG_HPP_

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include "tpgn/model.hpp"
#include "tpgn/train.hpp"

namespace tpgn {

struct RunConfig {
  std::uint64_t seed = 1;
  std::size_t samples = 500;      // gen-data
  double noise = 0.0;             // gen-data feature noise sigma
  std::size_t d = 8;
  std::size_t t_max = 8;
  WxMode wx_mode = WxMode::kTiedAverage;
  TrainConfig train;              // train.seed mirrors `seed`
  std::string dataset;
  std::string embeddings = "synthetic";  // or a path to a text table
  std::string output_dir;

  std::set<std::string, std::less<>> present;  // keys given explicitly
};

// Every key accepted by parse_config.
std::span<const std::string_view> config_keys();

RunConfig parse_config(std::string_view text, std::string_view origin = "config");
// Relative `dataset` and `embeddings` paths are resolved against the
// directory holding the config file.
RunConfig load_config(const std::string& path);

// Throws ErrorCode::kConfig naming the first missing key.
void require_keys(const RunConfig& config, std::span<const std::string_view> keys,
                  std::string_view command);

}  // namespace tpgn

#endif  // TPGN_CONFIG_HPP_
