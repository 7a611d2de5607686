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

// Teacher ensembles and the supervision policies used to train a student:
// aggregation (mean of all teachers), alternating-random and
// alternating-permutation selection, plus the clamp-and-renormalize Gaussian
// noise mechanism.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "altdistill/lm.h"
#include "altdistill/textcore.h"

namespace altdistill {

struct TeacherEnsemble {
  std::vector<LmParams> teachers;
  std::vector<std::set<std::string>> shard_users;  // teacher m -> users it saw

  std::size_t size() const { return teachers.size(); }
  std::size_t vocab_size() const;
  // M >= 1, one vocabulary size, pairwise-disjoint shard users.
  void validate() const;
};

// Teacher m trains on shard m with seed config.seed + m. Up to `jobs` teachers
// train concurrently; the result does not depend on `jobs`.
TeacherEnsemble train_teachers(const ShardPartition& partition, const LmConfig& config,
                               std::span<const Record> validation, std::size_t jobs = 1,
                               std::vector<TrainingTrace>* traces = nullptr);

enum class PolicyKind { kAggregate, kAltRandom, kAltPerm };

struct SelectionPolicy {
  PolicyKind kind = PolicyKind::kAggregate;
  std::vector<std::size_t> perm;  // AltPerm: permutation of 1..M
  std::uint64_t seed = 0;         // AltRandom draws; AltPerm permutation source

  static SelectionPolicy aggregate();
  static SelectionPolicy alt_random(std::uint64_t seed);
  // Permutation of 1..M shuffled by seed.
  static SelectionPolicy alt_perm(std::size_t num_teachers, std::uint64_t seed);
  static SelectionPolicy alt_perm_explicit(std::vector<std::size_t> perm);

  // `agg`, `alt-random:<seed>`, `alt-perm:<seed>`.
  static SelectionPolicy parse(const std::string& spec, std::size_t num_teachers);
  std::string spec() const;

  void validate(std::size_t num_teachers) const;
};

// r(t) in 1..M for word position t >= 1. AltRandom draws uniformly from rng;
// AltPerm returns perm[j] with j = t mod M, or M when that is zero.
std::size_t select_teacher(const SelectionPolicy& policy, std::size_t t, std::size_t num_teachers,
                           std::mt19937_64& rng);

// Coordinate-wise mean of M probability vectors.
std::vector<double> aggregate_distribution(std::span<const std::vector<double>> dists,
                                           std::size_t num_teachers);

// Adds N(0, sigma^2) per coordinate, clamps at zero and renormalizes; uniform
// if everything clamps. sigma == 0 returns the input unchanged and draws
// nothing from rng.
std::vector<double> apply_gaussian_noise(std::span<const double> dist, double sigma,
                                         std::mt19937_64& rng);
void apply_gaussian_noise_inplace(std::span<double> dist, double sigma, std::mt19937_64& rng);

// All teachers advanced in lockstep over one shared prefix.
class EnsembleCursor {
 public:
  explicit EnsembleCursor(const TeacherEnsemble& ensemble);

  void advance(TokenId token);                          // every teacher
  void advance_teacher(std::size_t m, TokenId token);   // one teacher (0-based)

  std::size_t size() const { return states_.size(); }
  std::size_t position(std::size_t m) const { return positions_[m]; }
  bool in_sync() const;
  // Teacher m's predictive distribution (probabilities) after its prefix.
  std::vector<double> distribution(std::size_t m) const;

 private:
  const TeacherEnsemble* ensemble_;
  std::vector<HiddenState> states_;
  std::vector<std::vector<double>> log_probs_;
  std::vector<std::size_t> positions_;
};

// g(. | w_{1:t-1}) for word position t: the teacher mean under Aggregate or
// teacher r(t) under Alt policies, then the noise mechanism. The cursor must
// hold exactly t tokens (BOS through w_{t-1}) for every teacher.
std::vector<double> supervision_at_step(const SelectionPolicy& policy, const EnsembleCursor& cursor,
                                        std::size_t t, double sigma, std::mt19937_64& rng);

enum class DistillMode {
  kPureDistill,  // loss = KL(g || p) only
  kMixed,        // loss = (1 - lambda) CE + lambda KL
};

struct DistillConfig {
  DistillMode mode = DistillMode::kPureDistill;
  double lambda = 1.0;
  double sigma = 0.0;
  std::uint64_t noise_seed = 0;
  LmConfig student;

  double teacher_weight() const { return mode == DistillMode::kPureDistill ? 1.0 : lambda; }
  void validate() const;
};

// (1 - lambda) CE(target) + lambda KL(g || p).
double student_step_loss(std::span<const double> log_probs, std::size_t target,
                         std::span<const double> g, double lambda);

// One supervised word position seen during student training.
struct SupervisionEvent {
  std::size_t epoch_batch = 0;  // running batch counter
  std::size_t t = 0;            // word position, 1-based
  std::size_t teacher = 0;      // 1-based; 0 under aggregation
  TokenId target = 0;
  const Record* record = nullptr;
  double ce_weight = 0.0;  // weight on the raw target's CE term
};

struct StudentHooks {
  std::function<void(const SupervisionEvent&)> on_supervision;
};

struct StudentResult {
  TrainResult result;
  std::size_t canary_records_seen = 0;
};

// Teacher-forced distillation on `corpus`: per batch, teachers run over the
// batch's sequences and supervise each word position through the policy.
StudentResult train_student(std::span<const Record> corpus, const TeacherEnsemble& ensemble,
                            const SelectionPolicy& policy, const DistillConfig& config,
                            std::span<const Record> validation, const StudentHooks* hooks = nullptr);

}  // namespace altdistill
