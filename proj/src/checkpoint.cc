// Copyright 2026 The altdistill Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "altdistill/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "altdistill/errors.h"

namespace altdistill {

namespace {

constexpr char kMagic[8] = {'A', 'L', 'T', 'D', 'L', 'M', 'C', 'K'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void u32(std::uint32_t v) { le(v); }
  void u64(std::uint64_t v) { le(v); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  std::string take() { return std::move(out_); }

 private:
  template <typename T>
  void le(T v) {
    for (std::size_t k = 0; k < sizeof(T); ++k) out_.push_back(char((v >> (8 * k)) & 0xff));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  void bytes(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() { return le<std::uint32_t>(); }
  std::uint64_t u64() { return le<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw DataError("truncated checkpoint");
  }
  template <typename T>
  T le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k)
      v |= T(static_cast<unsigned char>(in_[pos_ + k])) << (8 * k);
    pos_ += sizeof(T);
    return v;
  }
  const std::string& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const LmParams& params, std::uint64_t vocab_fingerprint) {
  const LmConfig& c = params.config();
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kCheckpointFormatVersion);
  w.u64(c.vocab_size);
  w.u64(c.embed_dim);
  w.u64(c.hidden_dim);
  w.u64(c.num_layers);
  w.f64(c.lr);
  w.f64(c.clip_norm);
  w.u64(c.batch_size);
  w.u64(c.max_epochs);
  w.u64(c.patience);
  w.u64(c.seed);
  w.u64(vocab_fingerprint);
  w.u64(params.parameters().size());
  for (const auto& p : params.parameters()) {
    w.u32(std::uint32_t(p.name.size()));
    w.bytes(p.name.data(), p.name.size());
    w.u32(std::uint32_t(p.value.rank()));
    for (auto d : p.value.shape()) w.u64(d);
    for (double x : p.value.values()) w.f64(x);
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  char magic[sizeof(kMagic)];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw DataError("not a checkpoint file");
  const auto version = r.u32();
  if (version != kCheckpointFormatVersion) {
    throw DataError("unsupported checkpoint format_version " + std::to_string(version));
  }
  LmConfig c;
  c.vocab_size = r.u64();
  c.embed_dim = r.u64();
  c.hidden_dim = r.u64();
  c.num_layers = r.u64();
  c.lr = r.f64();
  c.clip_norm = r.f64();
  c.batch_size = r.u64();
  c.max_epochs = r.u64();
  c.patience = r.u64();
  c.seed = r.u64();
  const auto fingerprint = r.u64();
  const auto blocks = r.u64();
  if (blocks > 4096) throw DataError("corrupt checkpoint block count");

  std::vector<nn::Parameter> params;
  for (std::uint64_t b = 0; b < blocks; ++b) {
    std::string name(r.u32(), '\0');
    r.bytes(name.data(), name.size());
    const auto rank = r.u32();
    if (rank > 8) throw DataError("corrupt checkpoint tensor rank");
    nn::Shape shape(rank);
    for (auto& d : shape) d = r.u64();
    const std::size_t n = nn::shape_size(shape);
    if (n > bytes.size()) throw DataError("truncated checkpoint");
    std::vector<double> values(n);
    for (auto& x : values) x = r.f64();
    params.emplace_back(std::move(name), nn::Tensor(std::move(shape), std::move(values)));
  }
  if (!r.done()) throw DataError("trailing bytes in checkpoint");
  try {
    return {LmParams(c, std::move(params)), fingerprint};
  } catch (const UsageError& e) {
    throw DataError(std::string("invalid checkpoint config: ") + e.what());
  }
}

void write_checkpoint(const LmParams& params, std::uint64_t vocab_fingerprint,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  const std::string bytes = serialize_checkpoint(params, vocab_fingerprint);
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return deserialize_checkpoint(ss.str());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

LmParams read_checkpoint_for(const std::filesystem::path& path, const Vocabulary& vocab) {
  Checkpoint ck = read_checkpoint(path);
  if (ck.vocab_fingerprint != vocab.fingerprint() ||
      ck.params.config().vocab_size != vocab.size()) {
    throw DataError("vocabulary mismatch: " + path.string() +
                    " was trained with a different vocabulary");
  }
  return std::move(ck.params);
}

}  // namespace altdistill
