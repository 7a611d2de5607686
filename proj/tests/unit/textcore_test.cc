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

#include <algorithm>
#include <fstream>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "altdistill/errors.h"
#include "altdistill/textcore.h"
#include "test_util.h"

namespace altdistill {
namespace {

using testing::scratch_dir;

TEST(Vocabulary, CountsAllWords) {
  const std::vector<std::string> lines = {"a b a"};
  const Vocabulary v = build_vocabulary(lines, 10, 1);
  EXPECT_EQ(v.size(), 5u);
  EXPECT_EQ(v.word(Vocabulary::kUnk), "<unk>");
  EXPECT_EQ(v.word(Vocabulary::kBos), "<s>");
  EXPECT_EQ(v.word(Vocabulary::kEos), "</s>");
  EXPECT_EQ(v.id("a"), 3);
  EXPECT_EQ(v.id("b"), 4);
}

TEST(Vocabulary, CapacityKeepsMostFrequent) {
  const std::vector<std::string> lines = {"a b a"};
  const Vocabulary v = build_vocabulary(lines, 4, 1);
  ASSERT_EQ(v.size(), 4u);
  EXPECT_EQ(v.word(3), "a");
  EXPECT_EQ(v.id("b"), Vocabulary::kUnk);
}

TEST(Vocabulary, MinCountThreshold) {
  const std::vector<std::string> lines = {"x y", "y z"};
  const Vocabulary v = build_vocabulary(lines, 100, 2);
  ASSERT_EQ(v.num_content(), 1u);
  EXPECT_EQ(v.word(3), "y");
}

TEST(Vocabulary, TiesBrokenLexicographically) {
  const std::vector<std::string> lines = {"c a b", "b c a"};
  const Vocabulary v = build_vocabulary(lines, 100, 1);
  EXPECT_EQ(v.words(), (std::vector<std::string>{"<unk>", "<s>", "</s>", "a", "b", "c"}));
}

TEST(Vocabulary, EmptyCorpusIsAnError) {
  const std::vector<std::string> none;
  const std::vector<std::string> blank = {"", "   "};
  EXPECT_THROW(build_vocabulary(none, 10, 1), DataError);
  try {
    build_vocabulary(blank, 10, 1);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "empty corpus");
  }
}

TEST(Vocabulary, FingerprintTracksWords) {
  const auto a = Vocabulary::FromContentWords({"a", "b"});
  const auto b = Vocabulary::FromContentWords({"a", "b"});
  const auto c = Vocabulary::FromContentWords({"b", "a"});
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_NE(a.fingerprint(), c.fingerprint());
}

TEST(Vocabulary, RejectsDuplicatesAndSpecials) {
  EXPECT_THROW(Vocabulary::FromContentWords({"a", "a"}), DataError);
  EXPECT_THROW(Vocabulary::FromContentWords({"<s>"}), DataError);
  EXPECT_THROW(Vocabulary::FromContentWords({}), DataError);
}

TEST(Encode, LowercasesAndWrapsWithSpecials) {
  const auto v = Vocabulary::FromContentWords({"a", "b"});
  EXPECT_EQ(encode(v, "A b").ids, (std::vector<TokenId>{1, 3, 4, 2}));
  EXPECT_EQ(encode(v, "q").ids, (std::vector<TokenId>{1, 0, 2}));
  const TokenSequence empty = encode(v, "");
  EXPECT_EQ(empty.ids, (std::vector<TokenId>{1, 2}));
  EXPECT_EQ(empty.length(), 1u);
}

TEST(Decode, RendersContentAndUnk) {
  const auto v = Vocabulary::FromContentWords({"a", "b"});
  EXPECT_EQ(decode(v, {{1, 3, 2}}), "a");
  EXPECT_EQ(decode(v, {{1, 2}}), "");
  EXPECT_EQ(decode(v, {{1, 0, 2}}), "<unk>");
  try {
    decode(v, {{1, 9, 2}});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("invalid token id"), std::string::npos);
  }
}

TEST(Encode, RoundTripsInVocabularyText) {
  std::mt19937_64 rng(1);
  std::vector<std::string> words;
  for (int i = 0; i < 30; ++i) words.push_back("w" + std::to_string(i));
  const auto v = Vocabulary::FromContentWords(words);
  for (int trial = 0; trial < 200; ++trial) {
    std::string line;
    const std::size_t n = rng() % 8;
    for (std::size_t k = 0; k < n; ++k) line += (k ? " " : "") + words[rng() % words.size()];
    EXPECT_EQ(decode(v, encode(v, line)), line);
  }
}

TEST(Sequence, Validation) {
  EXPECT_NO_THROW(validate_sequence({{1, 3, 2}}, 4));
  EXPECT_THROW(validate_sequence({{3, 2}}, 4), DataError);
  EXPECT_THROW(validate_sequence({{1, 3}}, 4), DataError);
  EXPECT_THROW(validate_sequence({{1, 4, 2}}, 4), DataError);
}

UserCorpus corpus_with_users(std::size_t users, std::size_t per_user) {
  UserCorpus c;
  TokenId w = 3;
  for (std::size_t u = 0; u < users; ++u)
    for (std::size_t r = 0; r < per_user; ++r)
      c.add({testing::seq({w++}), "user" + std::to_string(u)});
  return c;
}

TEST(UserCorpus, CountsStayConsistent) {
  const UserCorpus c = corpus_with_users(3, 4);
  EXPECT_EQ(c.size(), 12u);
  EXPECT_EQ(c.users().size(), 3u);
  for (const auto& [u, n] : c.per_user_counts()) EXPECT_EQ(n, 4u) << u;
  EXPECT_THROW(UserCorpus({Record{testing::seq({3}), ""}}), DataError);
}

TEST(Partition, SingleShardIsIdentity) {
  const UserCorpus c = corpus_with_users(10, 3);
  const auto p = partition_by_user(c, 1, 7);
  ASSERT_EQ(p.num_shards(), 1u);
  EXPECT_EQ(p.shards[0].records(), c.records());
}

TEST(Partition, EvenSplit) {
  const auto p = partition_by_user(corpus_with_users(10, 3), 5, 7);
  EXPECT_EQ(p.users_per_shard, 2u);
  for (const auto& s : p.shards) EXPECT_EQ(s.users().size(), 2u);
}

TEST(Partition, RemainderGoesRoundRobin) {
  const auto p = partition_by_user(corpus_with_users(11, 3), 5, 7);
  std::vector<std::size_t> sizes;
  for (const auto& s : p.shards) sizes.push_back(s.users().size());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{3, 2, 2, 2, 2}));
}

TEST(Partition, MoreShardsThanUsers) {
  try {
    partition_by_user(corpus_with_users(3, 1), 4, 1);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "more shards than users");
  }
}

// Shards cover the corpus as a multiset, user sets are disjoint, and the
// split depends only on the seed.
TEST(Partition, PropertyOverRandomCorpora) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    UserCorpus c;
    const std::size_t users = 1 + rng() % 20;
    for (std::size_t r = 0; r < 5 * users; ++r)
      c.add({testing::seq({TokenId(3 + rng() % 5)}), "u" + std::to_string(rng() % users)});
    const std::size_t M = 1 + rng() % c.users().size();
    const auto p = partition_by_user(c, M, trial);
    const auto q = partition_by_user(c, M, trial);

    std::map<std::pair<std::string, std::vector<TokenId>>, int> balance;
    for (const auto& r : c.records()) ++balance[{r.user_id, r.tokens.ids}];
    std::set<std::string> seen;
    for (std::size_t m = 0; m < M; ++m) {
      EXPECT_EQ(p.shards[m].records(), q.shards[m].records());
      for (const auto& u : p.shards[m].users()) EXPECT_TRUE(seen.insert(u).second);
      for (const auto& r : p.shards[m].records()) --balance[{r.user_id, r.tokens.ids}];
    }
    for (const auto& [k, n] : balance) EXPECT_EQ(n, 0);
    EXPECT_EQ(seen, c.users());
  }
}

TEST(Files, RawCorpusWithAndWithoutUsers) {
  const auto dir = scratch_dir("raw_corpus");
  std::ofstream(dir / "users.txt") << "alice\tHello there\nbob\tgood day\n";
  std::ofstream(dir / "plain.txt") << "hello there\n\ngood day\n";
  std::ofstream(dir / "mixed.txt") << "alice\thello\nplain line\n";
  const auto with = read_raw_corpus(dir / "users.txt");
  ASSERT_EQ(with.size(), 2u);
  EXPECT_EQ(*with[0].user_id, "alice");
  EXPECT_EQ(with[1].text, "good day");
  const auto without = read_raw_corpus(dir / "plain.txt");
  for (const auto& l : without) EXPECT_FALSE(l.user_id.has_value());
  EXPECT_THROW(read_raw_corpus(dir / "mixed.txt"), DataError);
  EXPECT_THROW(read_raw_corpus(dir / "absent.txt"), DataError);
}

TEST(Files, VocabularyAndTokenizedCorpusRoundTrip) {
  const auto dir = scratch_dir("tok_files");
  const auto v = Vocabulary::FromContentWords({"a", "b", "c"});
  write_vocabulary(v, dir / "vocab.txt");
  EXPECT_EQ(read_vocabulary(dir / "vocab.txt"), v);

  std::vector<Record> recs = {{testing::seq({3, 4}), "u1"}, {testing::seq({5}), "u2", true},
                              {testing::seq({}), "u1"}};
  write_tokenized_corpus(recs, dir / "c.tok");
  EXPECT_EQ(read_tokenized_corpus(dir / "c.tok", v.size()), recs);
  EXPECT_THROW(read_tokenized_corpus(dir / "c.tok", 5), DataError);
}

}  // namespace
}  // namespace altdistill
