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

// Binary model container.
//
//   "TPGN" | u32 version | u32 d, V, d_v, T_max | u8 wx_mode |
//   u32 start_id, end_id | u64 seed | u32 n_words, (u32 len, bytes)* |
//   u32 n_tensors, (u32 len, name, u32 ndims, u64 dims..., f64 payload)*
//
// All integers and doubles are little-endian. The tensor table holds every
// ModelParams entry plus the feature mean "v_mean".

#ifndef TPGN_CHECKPOINT_HPP_
#define TPGN_CHECKPOINT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "tpgn/data.hpp"
#include "tpgn/model.hpp"

namespace tpgn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  HyperParams hyper;
  ModelParams params;
  Vec v_mean;
  Vocabulary vocab;
  std::uint64_t seed = 0;
};

std::vector<unsigned char> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::vector<unsigned char>& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
// Errors (ErrorCode::kFormat): "not a TPGN checkpoint", "truncated payload",
// "unsupported checkpoint version N".
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tpgn

#endif  // TPGN_CHECKPOINT_HPP_
