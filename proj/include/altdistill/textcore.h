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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace altdistill {

using TokenId = std::int32_t;

// Bidirectional word <-> id map. Ids 0..2 are reserved for the special
// tokens; content words occupy [kNumSpecials, size()).
class Vocabulary {
 public:
  static constexpr TokenId kUnk = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr std::size_t kNumSpecials = 3;

  static constexpr std::string_view kUnkWord = "<unk>";
  static constexpr std::string_view kBosWord = "<s>";
  static constexpr std::string_view kEosWord = "</s>";

  Vocabulary() = default;

  // Content words in id order. Must be non-empty, unique, and disjoint from
  // the special spellings.
  static Vocabulary FromContentWords(std::vector<std::string> content_words);

  std::size_t size() const { return words_.size(); }
  std::size_t num_content() const { return words_.size() - kNumSpecials; }

  // UNK for out-of-vocabulary words.
  TokenId id(std::string_view word) const;
  std::optional<TokenId> find(std::string_view word) const;
  const std::string& word(TokenId id) const;

  static bool is_special(TokenId id) { return id >= 0 && id < TokenId(kNumSpecials); }
  bool is_content(TokenId id) const {
    return id >= TokenId(kNumSpecials) && std::size_t(id) < words_.size();
  }

  const std::vector<std::string>& words() const { return words_; }

  // FNV-1a over the word list; stored in checkpoints to catch mismatches.
  std::uint64_t fingerprint() const;

  bool operator==(const Vocabulary& other) const { return words_ == other.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> index_;
};

// [BOS, w_1, ..., w_T] where w_T is EOS. length() is T.
struct TokenSequence {
  std::vector<TokenId> ids;

  std::size_t length() const { return ids.empty() ? 0 : ids.size() - 1; }
  bool operator==(const TokenSequence&) const = default;
};

// Throws DataError unless seq is BOS ... EOS with every id below vocab_size.
void validate_sequence(const TokenSequence& seq, std::size_t vocab_size);

struct Record {
  TokenSequence tokens;
  std::string user_id;
  bool is_canary = false;

  bool operator==(const Record&) const = default;
};

// Records tagged by owner. per_user_counts is kept consistent with records.
class UserCorpus {
 public:
  UserCorpus() = default;
  explicit UserCorpus(std::vector<Record> records);

  void add(Record record);

  const std::vector<Record>& records() const { return records_; }
  const std::set<std::string>& users() const { return users_; }
  const std::map<std::string, std::size_t>& per_user_counts() const { return counts_; }
  std::size_t count(const std::string& user) const;
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

 private:
  std::vector<Record> records_;
  std::set<std::string> users_;
  std::map<std::string, std::size_t> counts_;
};

struct ShardPartition {
  std::vector<UserCorpus> shards;
  std::size_t users_per_shard = 0;  // d = floor(K / M)

  std::size_t num_shards() const { return shards.size(); }
};

// Lowercased whitespace tokens.
std::vector<std::string> tokenize(std::string_view line);

Vocabulary build_vocabulary(std::span<const std::string> lines, std::size_t max_size,
                            std::size_t min_count);

TokenSequence encode(const Vocabulary& vocab, std::string_view line);
std::string decode(const Vocabulary& vocab, const TokenSequence& seq);

// Users are shuffled with `seed` and dealt floor(K/M) per shard; the K mod M
// leftover users go round-robin starting at shard 0.
ShardPartition partition_by_user(const UserCorpus& corpus, std::size_t num_shards,
                                 std::uint64_t seed);

// ---- File formats ----------------------------------------------------------

struct RawLine {
  std::optional<std::string> user_id;
  std::string text;
};

// Either every line is `user<TAB>sentence` or no line has a tab.
std::vector<RawLine> read_raw_corpus(const std::filesystem::path& path);

void write_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary read_vocabulary(const std::filesystem::path& path);

// `user<TAB>is_canary<TAB>id id id ...`, one record per line.
void write_tokenized_corpus(std::span<const Record> records, const std::filesystem::path& path);
std::vector<Record> read_tokenized_corpus(const std::filesystem::path& path,
                                          std::size_t vocab_size);

std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace altdistill
