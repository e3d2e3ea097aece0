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

#include "tpgn/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <map>

namespace tpgn {

namespace {

constexpr char kMagic[4] = {'T', 'P', 'G', 'N'};

class Writer {
 public:
  void u8(std::uint8_t x) { buf_.push_back(x); }
  void u32(std::uint32_t x) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<unsigned char>(x >> (8 * i)));
  }
  void u64(std::uint64_t x) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<unsigned char>(x >> (8 * i)));
  }
  void f64(double x) { u64(std::bit_cast<std::uint64_t>(x)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void raw(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  std::vector<unsigned char> take() { return std::move(buf_); }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& b) : b_(b) {}
  std::uint8_t u8() {
    need(1);
    return b_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= std::uint32_t(b_[pos_++]) << (8 * i);
    return x;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= std::uint64_t(b_[pos_++]) << (8 * i);
    return x;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(b_.begin() + pos_, b_.begin() + pos_ + n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) fail(ErrorCode::kFormat, "truncated payload");
  }
  const std::vector<unsigned char>& b_;
  std::size_t pos_ = 0;
};

struct RawTensor {
  std::vector<std::size_t> dims;
  std::vector<double> values;
};

void write_tensor(Writer& w, std::string_view name, std::span<const double> data,
                  const std::vector<std::size_t>& dims) {
  w.str(name);
  w.u32(static_cast<std::uint32_t>(dims.size()));
  for (std::size_t n : dims) w.u64(n);
  for (double x : data) w.f64(x);
}

}  // namespace

std::vector<unsigned char> serialize_checkpoint(const Checkpoint& ckpt) {
  ckpt.hyper.validate();
  ckpt.params.validate(ckpt.hyper);
  require(ckpt.v_mean.size() == ckpt.hyper.feature_dim,
          "checkpoint: v_mean length differs from feature_dim");
  require(ckpt.vocab.size() == ckpt.hyper.vocab_size,
          "checkpoint: vocabulary size differs from hyper.vocab_size");
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(ckpt.hyper.d));
  w.u32(static_cast<std::uint32_t>(ckpt.hyper.vocab_size));
  w.u32(static_cast<std::uint32_t>(ckpt.hyper.feature_dim));
  w.u32(static_cast<std::uint32_t>(ckpt.hyper.max_len));
  w.u8(static_cast<std::uint8_t>(ckpt.hyper.wx_mode));
  w.u32(static_cast<std::uint32_t>(ckpt.hyper.start_id));
  w.u32(static_cast<std::uint32_t>(ckpt.hyper.end_id));
  w.u64(ckpt.seed);
  w.u32(static_cast<std::uint32_t>(ckpt.vocab.size()));
  for (const std::string& word : ckpt.vocab.words()) w.str(word);

  const std::size_t n_tensors = parameter_names().size() + 1;
  w.u32(static_cast<std::uint32_t>(n_tensors));
  for_each_tensor(ckpt.params, [&](std::string_view name, std::span<const double> data,
                                   const std::vector<std::size_t>& dims) {
    write_tensor(w, name, data, dims);
  });
  write_tensor(w, "v_mean", ckpt.v_mean.data(), {ckpt.v_mean.size()});
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 4 || !std::equal(kMagic, kMagic + 4, bytes.begin()))
    fail(ErrorCode::kFormat, "not a TPGN checkpoint");
  Reader r(bytes);
  for (int i = 0; i < 4; ++i) r.u8();
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    fail(ErrorCode::kFormat, "unsupported checkpoint version " + std::to_string(version) +
                                 " (expected " + std::to_string(kCheckpointVersion) + ")");
  Checkpoint ckpt;
  ckpt.hyper.d = r.u32();
  ckpt.hyper.vocab_size = r.u32();
  ckpt.hyper.feature_dim = r.u32();
  ckpt.hyper.max_len = r.u32();
  const std::uint8_t mode = r.u8();
  if (mode > 1) fail(ErrorCode::kFormat, "checkpoint: unknown Wx mode " + std::to_string(mode));
  ckpt.hyper.wx_mode = static_cast<WxMode>(mode);
  ckpt.hyper.start_id = r.u32();
  ckpt.hyper.end_id = r.u32();
  ckpt.seed = r.u64();
  try {
    ckpt.hyper.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kFormat, std::string("checkpoint: bad header: ") + e.what());
  }

  const std::uint32_t n_words = r.u32();
  std::vector<std::string> words;
  for (std::uint32_t i = 0; i < n_words; ++i) words.push_back(r.str());
  try {
    ckpt.vocab = Vocabulary(words);
  } catch (const Error& e) {
    fail(ErrorCode::kFormat, std::string("checkpoint: bad vocabulary: ") + e.what());
  }
  if (ckpt.vocab.size() != ckpt.hyper.vocab_size)
    fail(ErrorCode::kFormat, "checkpoint: vocabulary size differs from header");

  std::map<std::string, RawTensor> table;
  const std::uint32_t n_tensors = r.u32();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = r.str();
    RawTensor t;
    const std::uint32_t ndims = r.u32();
    if (ndims == 0 || ndims > 4) fail(ErrorCode::kFormat, "checkpoint: bad rank for " + name);
    std::size_t count = 1;
    for (std::uint32_t k = 0; k < ndims; ++k) {
      t.dims.push_back(r.u64());
      count *= t.dims.back();
    }
    if (count > bytes.size() / 8) fail(ErrorCode::kFormat, "truncated payload");
    t.values.resize(count);
    for (double& x : t.values) x = r.f64();
    if (!table.emplace(name, std::move(t)).second)
      fail(ErrorCode::kFormat, "checkpoint: duplicate tensor " + name);
  }
  if (!r.done()) fail(ErrorCode::kFormat, "checkpoint: trailing bytes after tensor table");

  auto take = [&](std::string_view name, std::span<double> dst,
                  const std::vector<std::size_t>& dims) {
    const auto it = table.find(std::string(name));
    if (it == table.end())
      fail(ErrorCode::kFormat, "checkpoint: missing tensor " + std::string(name));
    if (it->second.dims != dims)
      fail(ErrorCode::kFormat, "checkpoint: tensor " + std::string(name) +
                                   " has the wrong shape");
    std::copy(it->second.values.begin(), it->second.values.end(), dst.begin());
    table.erase(it);
  };
  ckpt.params = ModelParams::zeros(ckpt.hyper);
  for_each_tensor(ckpt.params, take);
  ckpt.v_mean = Vec({ckpt.hyper.feature_dim});
  take("v_mean", ckpt.v_mean.data(), {ckpt.hyper.feature_dim});
  if (!table.empty())
    fail(ErrorCode::kFormat, "checkpoint: unknown tensor " + table.begin()->first);
  try {
    ckpt.params.validate(ckpt.hyper);
  } catch (const Error& e) {
    fail(ErrorCode::kFormat, std::string("checkpoint: ") + e.what());
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::vector<unsigned char> bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "error writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot read " + path);
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace tpgn
