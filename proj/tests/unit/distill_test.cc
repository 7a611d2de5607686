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
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "altdistill/canary.h"
#include "altdistill/distill.h"
#include "altdistill/errors.h"
#include "altdistill/lm_kernels.h"
#include "altdistill/nn/losses.h"
#include "altdistill/synthetic.h"
#include "test_util.h"

namespace altdistill {
namespace {

using testing::random_seq;
using testing::spread_model;
using testing::tiny_config;

std::vector<double> random_dist(std::size_t V, std::mt19937_64& rng, double spread = 2.0) {
  std::normal_distribution<double> n(0.0, spread);
  std::vector<double> x(V), lp(V);
  for (auto& v : x) v = n(rng);
  nn::log_softmax(x, lp);
  for (std::size_t i = 0; i < V; ++i) x[i] = std::exp(lp[i]);
  return x;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

TEST(Aggregate, Examples) {
  std::mt19937_64 rng(1);
  const auto p = random_dist(9, rng);
  EXPECT_EQ(aggregate_distribution(std::vector<std::vector<double>>{p}, 1), p);
  const auto m = aggregate_distribution(
      std::vector<std::vector<double>>{{0.2, 0.8}, {0.6, 0.4}}, 2);
  EXPECT_NEAR(m[0], 0.4, 1e-15);
  EXPECT_NEAR(m[1], 0.6, 1e-15);
  EXPECT_THROW(aggregate_distribution(std::vector<std::vector<double>>{p}, 2), UsageError);
}

// One teacher spiking on the canary word still lifts the mean above every
// minority value.
TEST(Aggregate, SingleTeacherSpikeSurvivesAveraging) {
  std::vector<std::vector<double>> d(5, {0.01, 0.99});
  d[2] = {0.9, 0.1};
  const auto m = aggregate_distribution(d, 5);
  EXPECT_NEAR(m[0], 0.188, 1e-12);
  EXPECT_GT(m[0], 0.01);
}

TEST(Aggregate, InvariantToTeacherOrder) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<double>> d;
    for (int m = 0; m < 5; ++m) d.push_back(random_dist(20, rng));
    const auto a = aggregate_distribution(d, 5);
    std::shuffle(d.begin(), d.end(), rng);
    const auto b = aggregate_distribution(d, 5);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
  }
}

TEST(Selection, PermutationRule) {
  std::mt19937_64 rng(0);
  const auto p = SelectionPolicy::alt_perm_explicit({2, 3, 1});
  const std::size_t expected[] = {2, 3, 1, 2};
  for (std::size_t t = 1; t <= 4; ++t) EXPECT_EQ(select_teacher(p, t, 3, rng), expected[t - 1]);
  const auto one = SelectionPolicy::alt_perm(1, 9);
  for (std::size_t t = 1; t <= 10; ++t) EXPECT_EQ(select_teacher(one, t, 1, rng), 1u);
  EXPECT_THROW(SelectionPolicy::alt_perm_explicit({1, 1, 3}).validate(3), UsageError);
  EXPECT_THROW(p.validate(4), UsageError);
}

TEST(Selection, AggregationHasNoSingleTeacher) {
  std::mt19937_64 rng(0);
  try {
    select_teacher(SelectionPolicy::aggregate(), 1, 3, rng);
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_STREQ(e.what(), "no single teacher under aggregation");
  }
}

TEST(Selection, AltRandomIsUniform) {
  std::mt19937_64 rng(17);
  const auto p = SelectionPolicy::alt_random(1);
  std::vector<double> freq(6, 0.0);
  for (int k = 0; k < 10000; ++k) freq[select_teacher(p, 1 + k % 7, 5, rng)] += 1e-4;
  EXPECT_EQ(freq[0], 0.0);
  for (std::size_t m = 1; m <= 5; ++m) {
    EXPECT_GE(freq[m], 0.17);
    EXPECT_LE(freq[m], 0.23);
  }
}

TEST(Selection, PermutationFromSeed) {
  const auto a = SelectionPolicy::alt_perm(5, 3), b = SelectionPolicy::alt_perm(5, 3);
  EXPECT_EQ(a.perm, b.perm);
  auto sorted = a.perm;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<std::size_t>{1, 2, 3, 4, 5}));
}

TEST(Selection, PolicySpecStrings) {
  EXPECT_EQ(SelectionPolicy::parse("agg", 3).kind, PolicyKind::kAggregate);
  const auto r = SelectionPolicy::parse("alt-random:7", 3);
  EXPECT_EQ(r.kind, PolicyKind::kAltRandom);
  EXPECT_EQ(r.seed, 7u);
  const auto p = SelectionPolicy::parse("alt-perm:4", 5);
  EXPECT_EQ(p.kind, PolicyKind::kAltPerm);
  EXPECT_EQ(p.perm, SelectionPolicy::alt_perm(5, 4).perm);
  EXPECT_EQ(SelectionPolicy::parse(p.spec(), 5).perm, p.perm);
  EXPECT_THROW(SelectionPolicy::parse("alt-perm", 5), UsageError);
  EXPECT_THROW(SelectionPolicy::parse("alt-perm:x", 5), UsageError);
  EXPECT_THROW(SelectionPolicy::parse("vote", 5), UsageError);
}

TEST(Noise, ZeroSigmaIsExactIdentity) {
  std::mt19937_64 rng(3);
  const auto p = random_dist(30, rng);
  const auto state = rng;
  EXPECT_EQ(apply_gaussian_noise(p, 0.0, rng), p);
  EXPECT_EQ(rng, state);
}

TEST(Noise, OutputIsADistribution) {
  std::mt19937_64 rng(4);
  for (double sigma : {1e-6, 1e-4, 1e-2, 1.0, 10.0, 1e6}) {
    for (int trial = 0; trial < 50; ++trial) {
      const auto g = apply_gaussian_noise(random_dist(2 + trial, rng), sigma, rng);
      EXPECT_NEAR(sum(g), 1.0, 1e-9);
      for (double x : g) EXPECT_GE(x, 0.0);
    }
  }
  EXPECT_THROW(apply_gaussian_noise(random_dist(4, rng), -1.0, rng), UsageError);
}

TEST(Noise, AllClampedGivesUniform) {
  // With |V| = 2 and huge sigma both coordinates clamp about a quarter of the time.
  std::mt19937_64 rng(8);
  bool saw_uniform = false;
  for (int trial = 0; trial < 2000 && !saw_uniform; ++trial) {
    const auto g = apply_gaussian_noise(std::vector<double>{0.5, 0.5}, 100.0, rng);
    saw_uniform = g[0] == 0.5 && g[1] == 0.5;
    EXPECT_NEAR(sum(g), 1.0, 1e-12);
  }
  EXPECT_TRUE(saw_uniform);
}

TEST(Noise, LargeSigmaWashesOutTheInput) {
  std::mt19937_64 rng(6);
  std::vector<double> spike(100, 0.0);
  spike[7] = 1.0;
  double tv = 0.0, mass_on_spike = 0.0;
  const int trials = 400;
  for (int k = 0; k < trials; ++k) {
    const auto g = apply_gaussian_noise(spike, 10.0, rng);
    double d = 0.0;
    for (std::size_t i = 0; i < 100; ++i) d += std::abs(g[i] - spike[i]);
    tv += 0.5 * d / trials;
    mass_on_spike += g[7] / trials;
    // Survivors (positive after noise) share mass roughly evenly: no
    // coordinate holds a large fraction.
    EXPECT_LT(*std::max_element(g.begin(), g.end()), 0.2);
  }
  EXPECT_GT(tv, 0.95);
  EXPECT_LT(mass_on_spike, 0.03);
}

TeacherEnsemble identical_ensemble(std::size_t M, std::size_t V, std::uint64_t seed) {
  TeacherEnsemble e;
  const LmParams t = spread_model(tiny_config(V), seed, 1.0);
  for (std::size_t m = 0; m < M; ++m) {
    e.teachers.push_back(t);
    e.shard_users.push_back({"user" + std::to_string(m)});
  }
  return e;
}

TeacherEnsemble distinct_ensemble(std::size_t M, std::size_t V, std::uint64_t seed) {
  TeacherEnsemble e;
  for (std::size_t m = 0; m < M; ++m) {
    e.teachers.push_back(spread_model(tiny_config(V), seed + m, 1.0));
    e.shard_users.push_back({"user" + std::to_string(m)});
  }
  return e;
}

TEST(Supervision, IdenticalTeachersAgreeAcrossPolicies) {
  const auto e = identical_ensemble(4, 10, 2);
  EnsembleCursor cursor(e);
  std::mt19937_64 rng(1);
  const auto s = random_seq(10, 6, rng);
  for (std::size_t t = 1; t < s.ids.size(); ++t) {
    cursor.advance(s.ids[t - 1]);
    const auto agg = supervision_at_step(SelectionPolicy::aggregate(), cursor, t, 0.0, rng);
    const auto rnd = supervision_at_step(SelectionPolicy::alt_random(1), cursor, t, 0.0, rng);
    const auto perm = supervision_at_step(SelectionPolicy::alt_perm(4, 3), cursor, t, 0.0, rng);
    EXPECT_EQ(rnd, perm);
    for (std::size_t v = 0; v < agg.size(); ++v) EXPECT_NEAR(agg[v], perm[v], 1e-15);
  }
}

TEST(Supervision, AltIsExactlyOneTeacherNeverABlend) {
  const auto e = distinct_ensemble(5, 12, 7);
  EnsembleCursor cursor(e);
  std::mt19937_64 rng(1), probe(1);
  const auto s = random_seq(12, 8, rng);
  const auto perm = SelectionPolicy::alt_perm(5, 2);
  for (std::size_t t = 1; t < s.ids.size(); ++t) {
    cursor.advance(s.ids[t - 1]);
    for (const auto& policy : {perm, SelectionPolicy::alt_random(5)}) {
      const auto g = supervision_at_step(policy, cursor, t, 0.0, rng);
      std::size_t matches = 0;
      for (std::size_t m = 0; m < 5; ++m) matches += g == cursor.distribution(m);
      EXPECT_EQ(matches, 1u);
    }
    EXPECT_EQ(supervision_at_step(perm, cursor, t, 0.0, rng),
              cursor.distribution(select_teacher(perm, t, 5, probe) - 1));
  }
}

TEST(Supervision, AggregateIsTheTeacherMean) {
  const auto e = distinct_ensemble(3, 9, 1);
  EnsembleCursor cursor(e);
  std::mt19937_64 rng(0);
  cursor.advance(Vocabulary::kBos);
  cursor.advance(5);
  std::vector<std::vector<double>> d;
  for (std::size_t m = 0; m < 3; ++m) d.push_back(cursor.distribution(m));
  EXPECT_EQ(supervision_at_step(SelectionPolicy::aggregate(), cursor, 2, 0.0, rng),
            aggregate_distribution(d, 3));
}

TEST(Supervision, DesyncedPrefixIsAnError) {
  const auto e = distinct_ensemble(2, 9, 1);
  EnsembleCursor cursor(e);
  std::mt19937_64 rng(0);
  cursor.advance(Vocabulary::kBos);
  cursor.advance_teacher(0, 4);
  EXPECT_FALSE(cursor.in_sync());
  EXPECT_THROW(supervision_at_step(SelectionPolicy::aggregate(), cursor, 2, 0.0, rng), UsageError);
  cursor.advance_teacher(1, 4);
  EXPECT_TRUE(cursor.in_sync());
  EXPECT_THROW(supervision_at_step(SelectionPolicy::aggregate(), cursor, 1, 0.0, rng), UsageError);
  EXPECT_NO_THROW(supervision_at_step(SelectionPolicy::aggregate(), cursor, 2, 0.0, rng));
}

TEST(StudentLoss, Examples) {
  std::mt19937_64 rng(2);
  const auto p = random_dist(8, rng);
  std::vector<double> lp(8);
  for (std::size_t i = 0; i < 8; ++i) lp[i] = std::log(p[i]);
  const auto g = random_dist(8, rng);
  std::vector<double> onehot(8, 0.0);
  onehot[3] = 1.0;
  EXPECT_EQ(student_step_loss(lp, 3, onehot, 1.0), nn::cross_entropy_step(lp, 3));
  EXPECT_EQ(student_step_loss(lp, 3, g, 0.0), nn::cross_entropy_step(lp, 3));
  EXPECT_NEAR(student_step_loss(lp, 3, g, 0.5),
              0.5 * nn::cross_entropy_step(lp, 3) + 0.5 * nn::kl_divergence_step(g, lp), 1e-15);
  std::vector<double> bad = g;
  bad[0] += 0.1;
  EXPECT_THROW(student_step_loss(lp, 3, bad, 0.5), UsageError);
}

TEST(DistillConfig, Validation) {
  DistillConfig c;
  c.student = tiny_config();
  EXPECT_EQ(c.teacher_weight(), 1.0);
  c.mode = DistillMode::kMixed;
  c.lambda = 0.25;
  EXPECT_EQ(c.teacher_weight(), 0.25);
  c.lambda = 1.5;
  EXPECT_THROW(c.validate(), UsageError);
  c.lambda = 0.5;
  c.sigma = -1.0;
  EXPECT_THROW(c.validate(), UsageError);
}

// ---- Training ------------------------------------------------------------------

struct SmallWorld {
  Vocabulary vocab;
  UserCorpus corpus;
  std::vector<Record> validation;
};

SmallWorld small_world(std::size_t sentences, std::uint64_t seed) {
  SyntheticLanguageConfig lc;
  lc.num_words = 30;
  lc.num_classes = 5;
  lc.successors_per_class = 2;
  lc.max_length = 6;
  const SyntheticLanguage lang(lc);
  SmallWorld w;
  w.vocab = Vocabulary::FromContentWords(lang.words());
  std::vector<TokenSequence> seqs;
  for (const auto& line : lang.sample_corpus(sentences, seed)) seqs.push_back(encode(w.vocab, line));
  w.corpus = assign_synthetic_users(seqs, 20, seed);
  for (const auto& line : lang.sample_corpus(60, seed + 1000))
    w.validation.push_back({encode(w.vocab, line), "heldout"});
  return w;
}

LmConfig world_config(const SmallWorld& w) {
  LmConfig c;
  c.vocab_size = w.vocab.size();
  c.embed_dim = 8;
  c.hidden_dim = 16;
  c.batch_size = 16;
  c.lr = 1e-2;
  c.max_epochs = 6;
  c.patience = 2;
  c.seed = 5;
  return c;
}

TEST(Teachers, ShardErrorsAndSingleTeacher) {
  const SmallWorld w = small_world(200, 1);
  const LmConfig c = world_config(w);
  const auto one = partition_by_user(w.corpus, 1, 3);
  const TeacherEnsemble e = train_teachers(one, c, w.validation);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e.shard_users[0], w.corpus.users());
  // Teacher 1 is the baseline LM on the full corpus under seed config.seed.
  const TrainResult base = train_lm(w.corpus.records(), w.validation, c);
  EXPECT_EQ(e.teachers[0].parameters()[0].value, base.params.parameters()[0].value);

  ShardPartition empty = one;
  empty.shards.push_back(UserCorpus());
  EXPECT_THROW(train_teachers(empty, c, w.validation), DataError);
}

TEST(Teachers, IndependentOfSchedulingAndOrder) {
  const SmallWorld w = small_world(300, 2);
  const LmConfig c = world_config(w);
  const auto part = partition_by_user(w.corpus, 3, 4);
  const TeacherEnsemble serial = train_teachers(part, c, w.validation, 1);
  const TeacherEnsemble parallel = train_teachers(part, c, w.validation, 3);
  for (std::size_t m = 0; m < 3; ++m)
    for (std::size_t k = 0; k < serial.teachers[m].parameters().size(); ++k)
      EXPECT_EQ(serial.teachers[m].parameters()[k].value,
                parallel.teachers[m].parameters()[k].value);
  // Teacher 2 trained alone (as shard 0 with seed shifted) matches.
  ShardPartition only;
  only.shards = {part.shards[2]};
  LmConfig shifted = c;
  shifted.seed = c.seed + 2;
  const TeacherEnsemble alone = train_teachers(only, shifted, w.validation);
  EXPECT_EQ(alone.teachers[0].parameters()[1].value, serial.teachers[2].parameters()[1].value);
  EXPECT_NO_THROW(serial.validate());
}

DistillConfig distill_config(const SmallWorld& w, double sigma = 0.0) {
  DistillConfig d;
  d.student = world_config(w);
  d.student.seed = 77;
  d.sigma = sigma;
  d.noise_seed = 13;
  return d;
}

TEST(Student, SelfDistillationMatchesTeacher) {
  const SmallWorld w = small_world(400, 3);
  LmConfig c = world_config(w);
  c.max_epochs = 10;
  const TeacherEnsemble e = train_teachers(partition_by_user(w.corpus, 1, 1), c, w.validation);
  DistillConfig d = distill_config(w);
  d.student.max_epochs = 10;
  const StudentResult s = train_student(w.corpus.records(), e, SelectionPolicy::aggregate(), d,
                                        w.validation);
  const double teacher = perplexity(e.teachers[0], w.validation);
  const double student = perplexity(s.result.params, w.validation);
  EXPECT_NEAR(student / teacher, 1.0, 0.10) << teacher << " vs " << student;
}

TEST(Student, SingleTeacherPoliciesShareOneTrajectory) {
  const SmallWorld w = small_world(200, 4);
  const TeacherEnsemble e = train_teachers(partition_by_user(w.corpus, 1, 1), world_config(w),
                                           w.validation);
  const DistillConfig d = distill_config(w);
  const auto a = train_student(w.corpus.records(), e, SelectionPolicy::aggregate(), d, w.validation);
  const auto r = train_student(w.corpus.records(), e, SelectionPolicy::alt_random(3), d, w.validation);
  const auto p = train_student(w.corpus.records(), e, SelectionPolicy::alt_perm(1, 9), d, w.validation);
  EXPECT_EQ(a.result.trace.validation_ppl, r.result.trace.validation_ppl);
  EXPECT_EQ(a.result.trace.validation_ppl, p.result.trace.validation_ppl);
  EXPECT_EQ(a.result.trace.train_loss, p.result.trace.train_loss);
}

TEST(Student, IdenticalTeachersMakePoliciesEquivalent) {
  const SmallWorld w = small_world(300, 5);
  const TeacherEnsemble one = train_teachers(partition_by_user(w.corpus, 1, 1), world_config(w),
                                             w.validation);
  TeacherEnsemble e;
  for (int m = 0; m < 3; ++m) {
    e.teachers.push_back(one.teachers[0]);
    e.shard_users.push_back({"x" + std::to_string(m)});
  }
  const DistillConfig d = distill_config(w);
  const double agg = perplexity(
      train_student(w.corpus.records(), e, SelectionPolicy::aggregate(), d, w.validation)
          .result.params,
      w.validation);
  const double perm = perplexity(
      train_student(w.corpus.records(), e, SelectionPolicy::alt_perm(3, 1), d, w.validation)
          .result.params,
      w.validation);
  EXPECT_NEAR(agg / perm, 1.0, 0.05);
}

TEST(Student, VocabularyMismatch) {
  const SmallWorld w = small_world(100, 6);
  const TeacherEnsemble e = distinct_ensemble(2, 10, 1);
  EXPECT_THROW(train_student(w.corpus.records(), e, SelectionPolicy::aggregate(),
                             distill_config(w), w.validation),
               DataError);
}

// Logged (step, teacher, target) triples: AltPerm routes by position only, and
// in pure distillation no raw target carries weight.
TEST(Student, SupervisionLogInvariants) {
  SmallWorld w = small_world(200, 7);
  const auto part = partition_by_user(w.corpus, 4, 2);
  const TeacherEnsemble e = train_teachers(part, world_config(w), w.validation);
  const auto policy = SelectionPolicy::alt_perm(4, 6);
  DistillConfig d = distill_config(w);
  d.student.max_epochs = 2;
  d.student.patience = 5;

  std::map<std::size_t, std::set<std::size_t>> teachers_at_t;
  std::size_t events = 0;
  StudentHooks hooks;
  hooks.on_supervision = [&](const SupervisionEvent& ev) {
    ++events;
    teachers_at_t[ev.t].insert(ev.teacher);
    EXPECT_EQ(ev.ce_weight, 0.0);
    EXPECT_EQ(ev.target, ev.record->tokens.ids[ev.t]);
  };
  const auto r = train_student(w.corpus.records(), e, policy, d, w.validation, &hooks);
  std::size_t tokens = 0;
  for (const auto& rec : w.corpus.records()) tokens += rec.tokens.length();
  EXPECT_EQ(events, 2 * tokens);
  std::mt19937_64 unused(0);
  for (const auto& [t, set] : teachers_at_t) {
    ASSERT_EQ(set.size(), 1u) << "position " << t;
    EXPECT_EQ(*set.begin(), select_teacher(policy, t, 4, unused));
  }
  EXPECT_EQ(r.canary_records_seen, 0u);
}

TEST(Student, NoiseChangesTrainingOnlyWhenEnabled) {
  const SmallWorld w = small_world(150, 8);
  const TeacherEnsemble e = train_teachers(partition_by_user(w.corpus, 2, 1), world_config(w),
                                           w.validation);
  const auto p = SelectionPolicy::alt_perm(2, 1);
  const auto base = train_student(w.corpus.records(), e, p, distill_config(w, 0.0), w.validation);
  const auto again = train_student(w.corpus.records(), e, p, distill_config(w, 0.0), w.validation);
  const auto noisy = train_student(w.corpus.records(), e, p, distill_config(w, 1e-2), w.validation);
  EXPECT_EQ(base.result.trace.train_loss, again.result.trace.train_loss);
  EXPECT_NE(base.result.trace.train_loss, noisy.result.trace.train_loss);
}

}  // namespace
}  // namespace altdistill
