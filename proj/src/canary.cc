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

#include "altdistill/canary.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "altdistill/errors.h"

namespace altdistill {

namespace {

constexpr std::size_t kMaxCanaryRetries = 1000;

}  // namespace

bool is_low_frequency(double group_freq) { return group_freq < 0.25; }

TokenSequence CanarySpec::as_sequence() const {
  TokenSequence seq;
  seq.ids.reserve(tokens.size() + 2);
  seq.ids.push_back(Vocabulary::kBos);
  seq.ids.insert(seq.ids.end(), tokens.begin(), tokens.end());
  seq.ids.push_back(Vocabulary::kEos);
  return seq;
}

CanaryLedger::CanaryLedger(std::vector<CanarySpec> canaries) : canaries_(std::move(canaries)) {
  std::stable_sort(canaries_.begin(), canaries_.end(),
                   [](const CanarySpec& a, const CanarySpec& b) { return a.owner < b.owner; });
  std::set<std::string> owners;
  for (std::size_t i = 0; i < canaries_.size(); ++i) {
    const auto& c = canaries_[i];
    if (!owners.insert(c.owner).second) {
      throw DataError("canary owner '" + c.owner + "' appears twice");
    }
    if (c.insert_count < 1) throw DataError("canary insert_count must be >= 1");
    if (c.tokens.empty()) throw DataError("empty canary");
    for (TokenId t : c.tokens) {
      if (Vocabulary::is_special(t)) throw DataError("canary contains a special token");
    }
    groups_[c.group_freq].push_back(i);
    (is_low_frequency(c.group_freq) ? low_ : high_).push_back(i);
  }
}

std::string synthetic_user_key(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "user%06zu", index);
  return buf;
}

UserCorpus assign_synthetic_users(std::vector<TokenSequence> records,
                                  std::size_t records_per_user, std::uint64_t seed) {
  if (records_per_user < 1) throw UsageError("records_per_user must be >= 1");
  if (records.empty()) throw DataError("empty corpus");
  std::mt19937_64 rng(seed);
  std::shuffle(records.begin(), records.end(), rng);
  UserCorpus corpus;
  for (std::size_t i = 0; i < records.size(); ++i) {
    corpus.add(Record{std::move(records[i]), synthetic_user_key(i / records_per_user), false});
  }
  return corpus;
}

CanaryLedger generate_canaries(const Vocabulary& vocab, const UserCorpus& corpus,
                               std::size_t num_canaries, std::size_t length,
                               std::uint64_t seed) {
  if (length < 2) throw UsageError("canary length must be >= 2");
  if (num_canaries > corpus.users().size()) {
    throw DataError("more canaries (" + std::to_string(num_canaries) + ") than users (" +
                    std::to_string(corpus.users().size()) + ")");
  }
  if (vocab.num_content() < length) {
    throw DataError("vocabulary has fewer content words than the canary length");
  }

  std::mt19937_64 rng(seed);
  std::vector<std::string> users(corpus.users().begin(), corpus.users().end());
  std::shuffle(users.begin(), users.end(), rng);
  users.resize(num_canaries);

  std::uniform_int_distribution<TokenId> word(TokenId(Vocabulary::kNumSpecials),
                                              TokenId(vocab.size() - 1));
  std::set<std::vector<TokenId>> seen;
  std::vector<CanarySpec> out;
  out.reserve(num_canaries);
  for (std::size_t k = 0; k < num_canaries; ++k) {
    CanarySpec c;
    c.owner = users[k];
    c.group_freq = kCanaryGroupFrequencies[k % kCanaryGroupFrequencies.size()];
    std::size_t attempt = 0;
    do {
      if (attempt++ == kMaxCanaryRetries) {
        throw DataError("could not draw a distinct canary after " +
                        std::to_string(kMaxCanaryRetries) + " attempts");
      }
      c.tokens.assign(length, 0);
      for (auto& t : c.tokens) t = word(rng);
    } while (seen.contains(c.tokens));
    seen.insert(c.tokens);
    const double n_u = double(corpus.count(c.owner));
    c.insert_count = std::max<std::size_t>(1, std::size_t(std::llround(c.group_freq * n_u)));
    out.push_back(std::move(c));
  }
  return CanaryLedger(std::move(out));
}

UserCorpus insert_canaries(const UserCorpus& corpus, const CanaryLedger& ledger) {
  UserCorpus out = corpus;
  for (const auto& c : ledger.canaries()) {
    if (!corpus.users().contains(c.owner)) {
      throw DataError("canary owner '" + c.owner + "' is not a corpus user");
    }
    const TokenSequence seq = c.as_sequence();
    for (std::size_t i = 0; i < c.insert_count; ++i) out.add(Record{seq, c.owner, true});
  }
  return out;
}

std::string ledger_to_json(const CanaryLedger& ledger, const Vocabulary& vocab) {
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& c : ledger.canaries()) {
    nlohmann::ordered_json words = nlohmann::ordered_json::array();
    for (TokenId t : c.tokens) words.push_back(vocab.word(t));
    entries.push_back({{"canary_words", words},
                       {"owner", c.owner},
                       {"group_freq", c.group_freq},
                       {"insert_count", c.insert_count}});
  }
  return entries.dump(2) + "\n";
}

CanaryLedger ledger_from_json(const std::string& text, const Vocabulary& vocab) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed ledger: ") + e.what());
  }
  if (!doc.is_array()) throw DataError("ledger must be a JSON array");
  std::vector<CanarySpec> canaries;
  try {
    for (const auto& e : doc) {
      CanarySpec c;
      for (const auto& w : e.at("canary_words")) {
        auto id = vocab.find(w.get<std::string>());
        if (!id || !vocab.is_content(*id)) {
          throw DataError("ledger word '" + w.get<std::string>() + "' is not in the vocabulary");
        }
        c.tokens.push_back(*id);
      }
      c.owner = e.at("owner").get<std::string>();
      c.group_freq = e.at("group_freq").get<double>();
      c.insert_count = e.at("insert_count").get<std::size_t>();
      canaries.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed ledger entry: ") + e.what());
  }
  return CanaryLedger(std::move(canaries));
}

void write_ledger(const CanaryLedger& ledger, const Vocabulary& vocab,
                  const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << ledger_to_json(ledger, vocab);
}

CanaryLedger read_ledger(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open ledger " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return ledger_from_json(buf.str(), vocab);
}

}  // namespace altdistill
