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

#include "altdistill/textcore.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "altdistill/errors.h"

namespace altdistill {

namespace {

bool is_special_spelling(std::string_view w) {
  return w == Vocabulary::kUnkWord || w == Vocabulary::kBosWord || w == Vocabulary::kEosWord;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

Vocabulary Vocabulary::FromContentWords(std::vector<std::string> content_words) {
  if (content_words.empty()) throw DataError("vocabulary needs at least one content word");
  Vocabulary v;
  v.words_.reserve(content_words.size() + kNumSpecials);
  v.words_.emplace_back(kUnkWord);
  v.words_.emplace_back(kBosWord);
  v.words_.emplace_back(kEosWord);
  for (auto& w : content_words) {
    if (w.empty() || is_special_spelling(w)) {
      throw DataError("invalid vocabulary word '" + w + "'");
    }
    v.words_.push_back(std::move(w));
  }
  for (std::size_t i = 0; i < v.words_.size(); ++i) {
    if (!v.index_.emplace(v.words_[i], TokenId(i)).second) {
      throw DataError("duplicate vocabulary word '" + v.words_[i] + "'");
    }
  }
  return v;
}

TokenId Vocabulary::id(std::string_view word) const {
  return find(word).value_or(kUnk);
}

std::optional<TokenId> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::word(TokenId id) const {
  if (id < 0 || std::size_t(id) >= words_.size()) {
    throw DataError("invalid token id " + std::to_string(id));
  }
  return words_[std::size_t(id)];
}

std::uint64_t Vocabulary::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& w : words_) {
    for (unsigned char c : w) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;  // word separator, never a valid UTF-8 byte
    h *= 1099511628211ULL;
  }
  return h;
}

void validate_sequence(const TokenSequence& seq, std::size_t vocab_size) {
  if (seq.ids.size() < 2 || seq.ids.front() != Vocabulary::kBos ||
      seq.ids.back() != Vocabulary::kEos) {
    throw DataError("token sequence must start with BOS and end with EOS");
  }
  for (TokenId id : seq.ids) {
    if (id < 0 || std::size_t(id) >= vocab_size) {
      throw DataError("invalid token id " + std::to_string(id));
    }
  }
}

UserCorpus::UserCorpus(std::vector<Record> records) {
  records_.reserve(records.size());
  for (auto& r : records) add(std::move(r));
}

void UserCorpus::add(Record record) {
  if (record.user_id.empty()) throw DataError("record has an empty user id");
  users_.insert(record.user_id);
  ++counts_[record.user_id];
  records_.push_back(std::move(record));
}

std::size_t UserCorpus::count(const std::string& user) const {
  auto it = counts_.find(user);
  return it == counts_.end() ? 0 : it->second;
}

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : line) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(char(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

Vocabulary build_vocabulary(std::span<const std::string> lines, std::size_t max_size,
                            std::size_t min_count) {
  if (max_size < Vocabulary::kNumSpecials + 1) throw UsageError("max_size must be >= 4");
  if (min_count < 1) throw UsageError("min_count must be >= 1");

  std::unordered_map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& line : lines) {
    for (auto& w : tokenize(line)) {
      if (is_special_spelling(w)) continue;
      ++counts[std::move(w)];
      ++total;
    }
  }
  if (total == 0) throw DataError("empty corpus");

  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [w, c] : counts) {
    if (c >= min_count) ranked.emplace_back(w, c);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const std::size_t slots = max_size - Vocabulary::kNumSpecials;
  if (ranked.size() > slots) ranked.resize(slots);
  if (ranked.empty()) throw DataError("no word reaches min_count " + std::to_string(min_count));

  std::vector<std::string> words;
  words.reserve(ranked.size());
  for (auto& [w, c] : ranked) words.push_back(std::move(w));
  return Vocabulary::FromContentWords(std::move(words));
}

TokenSequence encode(const Vocabulary& vocab, std::string_view line) {
  TokenSequence seq;
  seq.ids.push_back(Vocabulary::kBos);
  for (const auto& w : tokenize(line)) seq.ids.push_back(vocab.id(w));
  seq.ids.push_back(Vocabulary::kEos);
  return seq;
}

std::string decode(const Vocabulary& vocab, const TokenSequence& seq) {
  std::string out;
  for (TokenId id : seq.ids) {
    const std::string& w = vocab.word(id);  // throws on invalid ids
    if (id == Vocabulary::kBos || id == Vocabulary::kEos) continue;
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

ShardPartition partition_by_user(const UserCorpus& corpus, std::size_t num_shards,
                                 std::uint64_t seed) {
  if (num_shards < 1) throw UsageError("shard count must be >= 1");
  const std::size_t num_users = corpus.users().size();
  if (num_shards > num_users) throw DataError("more shards than users");

  std::vector<std::string> users(corpus.users().begin(), corpus.users().end());
  std::mt19937_64 rng(seed);
  std::shuffle(users.begin(), users.end(), rng);

  const std::size_t d = num_users / num_shards;
  std::map<std::string, std::size_t> shard_of;
  for (std::size_t i = 0; i < d * num_shards; ++i) shard_of[users[i]] = i / d;
  for (std::size_t i = d * num_shards; i < num_users; ++i) {
    shard_of[users[i]] = (i - d * num_shards) % num_shards;
  }

  ShardPartition part;
  part.users_per_shard = d;
  part.shards.resize(num_shards);
  for (const auto& r : corpus.records()) part.shards[shard_of.at(r.user_id)].add(r);
  return part;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<RawLine> read_raw_corpus(const std::filesystem::path& path) {
  std::vector<RawLine> out;
  std::size_t with_user = 0;
  std::size_t lineno = 0;
  for (auto& line : read_lines(path)) {
    ++lineno;
    if (tokenize(line).empty() && line.find('\t') == std::string::npos) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      out.push_back({std::nullopt, std::move(line)});
      continue;
    }
    std::string user = line.substr(0, tab);
    if (user.empty()) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": empty user id");
    }
    out.push_back({std::move(user), line.substr(tab + 1)});
    ++with_user;
  }
  if (with_user != 0 && with_user != out.size()) {
    throw DataError(path.string() + ": mixes lines with and without a user column");
  }
  return out;
}

void write_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& w : vocab.words()) out << w << '\n';
}

Vocabulary read_vocabulary(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  if (lines.size() < Vocabulary::kNumSpecials + 1 || lines[0] != Vocabulary::kUnkWord ||
      lines[1] != Vocabulary::kBosWord || lines[2] != Vocabulary::kEosWord) {
    throw DataError(path.string() + ": not a vocabulary file");
  }
  lines.erase(lines.begin(), lines.begin() + Vocabulary::kNumSpecials);
  return Vocabulary::FromContentWords(std::move(lines));
}

void write_tokenized_corpus(std::span<const Record> records, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& r : records) {
    out << r.user_id << '\t' << (r.is_canary ? 1 : 0) << '\t';
    for (std::size_t i = 0; i < r.tokens.ids.size(); ++i) {
      if (i) out << ' ';
      out << r.tokens.ids[i];
    }
    out << '\n';
  }
}

std::vector<Record> read_tokenized_corpus(const std::filesystem::path& path,
                                          std::size_t vocab_size) {
  std::vector<Record> records;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed record");
    }
    Record r;
    r.user_id = line.substr(0, t1);
    r.is_canary = line.substr(t1 + 1, t2 - t1 - 1) == "1";
    std::istringstream ids(line.substr(t2 + 1));
    long long id = 0;
    while (ids >> id) r.tokens.ids.push_back(TokenId(id));
    try {
      validate_sequence(r.tokens, vocab_size);
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (r.user_id.empty()) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": empty user id");
    }
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace altdistill
