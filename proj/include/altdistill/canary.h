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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "altdistill/textcore.h"

namespace altdistill {

// Repeating frequencies p_u of the four canary groups. The first two form the
// "low" set, the last two the "high" set.
inline constexpr std::array<double, 4> kCanaryGroupFrequencies = {0.05, 0.10, 0.50, 1.00};

bool is_low_frequency(double group_freq);

struct CanarySpec {
  std::vector<TokenId> tokens;  // content-word body, no specials
  std::string owner;
  double group_freq = 0.0;
  std::size_t insert_count = 0;  // max(1, round(p_u * n_u))

  TokenSequence as_sequence() const;
  bool operator==(const CanarySpec&) const = default;
};

// Canaries ordered by owner key. Canary ids are positions in that order.
class CanaryLedger {
 public:
  CanaryLedger() = default;
  explicit CanaryLedger(std::vector<CanarySpec> canaries);

  const std::vector<CanarySpec>& canaries() const { return canaries_; }
  std::size_t size() const { return canaries_.size(); }
  bool empty() const { return canaries_.empty(); }

  const std::map<double, std::vector<std::size_t>>& groups() const { return groups_; }
  const std::vector<std::size_t>& low_set() const { return low_; }
  const std::vector<std::size_t>& high_set() const { return high_; }

  bool operator==(const CanaryLedger& other) const { return canaries_ == other.canaries_; }

 private:
  std::vector<CanarySpec> canaries_;
  std::map<double, std::vector<std::size_t>> groups_;
  std::vector<std::size_t> low_;
  std::vector<std::size_t> high_;
};

// Sequential synthetic user keys, e.g. "user000003".
std::string synthetic_user_key(std::size_t index);

// Shuffles records with `seed` and hands out consecutive blocks of
// records_per_user; a trailing partial block becomes the last user.
UserCorpus assign_synthetic_users(std::vector<TokenSequence> records,
                                  std::size_t records_per_user, std::uint64_t seed);

CanaryLedger generate_canaries(const Vocabulary& vocab, const UserCorpus& corpus,
                               std::size_t num_canaries, std::size_t length,
                               std::uint64_t seed);

// Appends insert_count standalone canary records per canary.
UserCorpus insert_canaries(const UserCorpus& corpus, const CanaryLedger& ledger);

void write_ledger(const CanaryLedger& ledger, const Vocabulary& vocab,
                  const std::filesystem::path& path);
CanaryLedger read_ledger(const std::filesystem::path& path, const Vocabulary& vocab);

std::string ledger_to_json(const CanaryLedger& ledger, const Vocabulary& vocab);
CanaryLedger ledger_from_json(const std::string& text, const Vocabulary& vocab);

}  // namespace altdistill
