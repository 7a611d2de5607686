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

#pragma once

// Binary LM checkpoints. Layout (all integers and floats little-endian):
//   magic "ALTDLMCK", u32 format_version
//   LmConfig fields, u64 vocabulary fingerprint
//   u64 block count, then per block: u32 name length, name bytes,
//   u32 rank, u64 dims[rank], f64 values[prod(dims)]

#include <cstdint>
#include <filesystem>
#include <string>

#include "altdistill/lm.h"

namespace altdistill {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

struct Checkpoint {
  LmParams params;
  std::uint64_t vocab_fingerprint = 0;
};

std::string serialize_checkpoint(const LmParams& params, std::uint64_t vocab_fingerprint);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void write_checkpoint(const LmParams& params, std::uint64_t vocab_fingerprint,
                      const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Throws DataError if the checkpoint was trained against a different vocabulary.
LmParams read_checkpoint_for(const std::filesystem::path& path, const Vocabulary& vocab);

}  // namespace altdistill
