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

#include "altdistill/distill.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "altdistill/errors.h"
#include "altdistill/lm_kernels.h"
#include "altdistill/nn/losses.h"

namespace altdistill {

// ---- Ensemble ---------------------------------------------------------------

std::size_t TeacherEnsemble::vocab_size() const {
  return teachers.empty() ? 0 : teachers.front().config().vocab_size;
}

void TeacherEnsemble::validate() const {
  if (teachers.empty()) throw UsageError("ensemble needs at least one teacher");
  for (const auto& t : teachers) {
    if (t.config().vocab_size != vocab_size()) {
      throw DataError("teachers disagree on vocabulary size");
    }
  }
  if (!shard_users.empty()) {
    if (shard_users.size() != teachers.size()) {
      throw UsageError("shard map size differs from teacher count");
    }
    std::set<std::string> seen;
    for (const auto& users : shard_users)
      for (const auto& u : users)
        if (!seen.insert(u).second) throw DataError("user " + u + " appears in two shards");
  }
}

TeacherEnsemble train_teachers(const ShardPartition& partition, const LmConfig& config,
                               std::span<const Record> validation, std::size_t jobs,
                               std::vector<TrainingTrace>* traces) {
  const std::size_t M = partition.num_shards();
  if (M == 0) throw UsageError("no shards to train teachers on");
  for (std::size_t m = 0; m < M; ++m) {
    if (partition.shards[m].empty()) throw DataError("shard " + std::to_string(m) + " is empty");
  }

  std::vector<TrainResult> results(M);
  std::vector<std::exception_ptr> errors(M);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t m = next++; m < M; m = next++) {
      try {
        LmConfig c = config;
        c.seed = config.seed + m;
        results[m] = train_lm(partition.shards[m].records(), validation, c);
      } catch (...) {
        errors[m] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, M);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  TeacherEnsemble out;
  for (std::size_t m = 0; m < M; ++m) {
    out.teachers.push_back(std::move(results[m].params));
    out.shard_users.push_back(partition.shards[m].users());
    if (traces) traces->push_back(std::move(results[m].trace));
  }
  return out;
}

// ---- Policies ---------------------------------------------------------------

SelectionPolicy SelectionPolicy::aggregate() { return {}; }

SelectionPolicy SelectionPolicy::alt_random(std::uint64_t seed) {
  return {PolicyKind::kAltRandom, {}, seed};
}

SelectionPolicy SelectionPolicy::alt_perm(std::size_t num_teachers, std::uint64_t seed) {
  if (num_teachers < 1) throw UsageError("alt-perm needs at least one teacher");
  std::vector<std::size_t> perm(num_teachers);
  std::iota(perm.begin(), perm.end(), 1);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  return {PolicyKind::kAltPerm, std::move(perm), seed};
}

SelectionPolicy SelectionPolicy::alt_perm_explicit(std::vector<std::size_t> perm) {
  SelectionPolicy p{PolicyKind::kAltPerm, std::move(perm), 0};
  p.validate(p.perm.size());
  return p;
}

SelectionPolicy SelectionPolicy::parse(const std::string& spec, std::size_t num_teachers) {
  if (spec == "agg") return aggregate();
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  if (colon == std::string::npos || (head != "alt-random" && head != "alt-perm")) {
    throw UsageError("bad policy '" + spec + "' (expected agg, alt-random:<seed>, alt-perm:<seed>)");
  }
  const std::string tail = spec.substr(colon + 1);
  std::uint64_t seed = 0;
  std::size_t used = 0;
  try {
    seed = std::stoull(tail, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (tail.empty() || used != tail.size()) throw UsageError("bad policy seed in '" + spec + "'");
  return head == "alt-random" ? alt_random(seed) : alt_perm(num_teachers, seed);
}

std::string SelectionPolicy::spec() const {
  switch (kind) {
    case PolicyKind::kAggregate: return "agg";
    case PolicyKind::kAltRandom: return "alt-random:" + std::to_string(seed);
    case PolicyKind::kAltPerm: return "alt-perm:" + std::to_string(seed);
  }
  return {};
}

void SelectionPolicy::validate(std::size_t num_teachers) const {
  if (num_teachers < 1) throw UsageError("policy needs at least one teacher");
  if (kind != PolicyKind::kAltPerm) return;
  if (perm.size() != num_teachers) {
    throw UsageError("permutation has " + std::to_string(perm.size()) + " entries for " +
                     std::to_string(num_teachers) + " teachers");
  }
  std::vector<bool> seen(num_teachers + 1, false);
  for (auto p : perm) {
    if (p < 1 || p > num_teachers || seen[p]) throw UsageError("invalid teacher permutation");
    seen[p] = true;
  }
}

std::size_t select_teacher(const SelectionPolicy& policy, std::size_t t, std::size_t num_teachers,
                           std::mt19937_64& rng) {
  if (t < 1) throw UsageError("step index must be >= 1");
  switch (policy.kind) {
    case PolicyKind::kAggregate:
      throw UsageError("no single teacher under aggregation");
    case PolicyKind::kAltRandom:
      if (num_teachers < 1) throw UsageError("policy needs at least one teacher");
      return std::uniform_int_distribution<std::size_t>(1, num_teachers)(rng);
    case PolicyKind::kAltPerm: {
      policy.validate(num_teachers);
      const std::size_t j = t % num_teachers;
      return policy.perm[(j == 0 ? num_teachers : j) - 1];
    }
  }
  return 0;
}

// ---- Mechanisms -------------------------------------------------------------

std::vector<double> aggregate_distribution(std::span<const std::vector<double>> dists,
                                           std::size_t num_teachers) {
  if (dists.size() != num_teachers || num_teachers == 0) {
    throw UsageError("aggregation expects " + std::to_string(num_teachers) +
                     " distributions, got " + std::to_string(dists.size()));
  }
  const std::size_t V = dists.front().size();
  std::vector<double> out(V, 0.0);
  for (const auto& d : dists) {
    if (d.size() != V) throw UsageError("teacher distributions differ in size");
    nn::check_distribution(d);
    for (std::size_t v = 0; v < V; ++v) out[v] += d[v];
  }
  const double inv = 1.0 / double(num_teachers);
  for (auto& x : out) x *= inv;
  return out;
}

void apply_gaussian_noise_inplace(std::span<double> dist, double sigma, std::mt19937_64& rng) {
  if (!(sigma >= 0.0)) throw UsageError("sigma must be >= 0");
  if (sigma == 0.0) return;
  std::normal_distribution<double> noise(0.0, sigma);
  double total = 0.0;
  for (auto& x : dist) {
    x = std::max(0.0, x + noise(rng));
    total += x;
  }
  if (total > 0.0) {
    for (auto& x : dist) x /= total;
  } else {
    std::fill(dist.begin(), dist.end(), 1.0 / double(dist.size()));
  }
}

std::vector<double> apply_gaussian_noise(std::span<const double> dist, double sigma,
                                         std::mt19937_64& rng) {
  std::vector<double> out(dist.begin(), dist.end());
  apply_gaussian_noise_inplace(out, sigma, rng);
  return out;
}

// ---- Cursor -----------------------------------------------------------------

EnsembleCursor::EnsembleCursor(const TeacherEnsemble& ensemble) : ensemble_(&ensemble) {
  ensemble.validate();
  for (const auto& t : ensemble.teachers) states_.push_back(HiddenState::zeros(t.config()));
  log_probs_.resize(ensemble.size());
  positions_.assign(ensemble.size(), 0);
}

void EnsembleCursor::advance_teacher(std::size_t m, TokenId token) {
  StepOutput out = step_distribution(ensemble_->teachers.at(m), states_[m], token);
  states_[m] = std::move(out.state);
  log_probs_[m] = std::move(out.log_probs);
  ++positions_[m];
}

void EnsembleCursor::advance(TokenId token) {
  for (std::size_t m = 0; m < size(); ++m) advance_teacher(m, token);
}

bool EnsembleCursor::in_sync() const {
  return std::adjacent_find(positions_.begin(), positions_.end(), std::not_equal_to<>()) ==
         positions_.end();
}

std::vector<double> EnsembleCursor::distribution(std::size_t m) const {
  if (positions_.at(m) == 0) throw UsageError("teacher has not consumed any prefix");
  std::vector<double> p(log_probs_[m].size());
  for (std::size_t v = 0; v < p.size(); ++v) p[v] = std::exp(log_probs_[m][v]);
  return p;
}

std::vector<double> supervision_at_step(const SelectionPolicy& policy, const EnsembleCursor& cursor,
                                        std::size_t t, double sigma, std::mt19937_64& rng) {
  const std::size_t M = cursor.size();
  if (t < 1) throw UsageError("step index must be >= 1");
  if (!cursor.in_sync() || cursor.position(0) != t) {
    throw UsageError("teacher prefix states out of sync at step " + std::to_string(t));
  }
  std::vector<double> g;
  if (policy.kind == PolicyKind::kAggregate) {
    std::vector<std::vector<double>> dists;
    for (std::size_t m = 0; m < M; ++m) dists.push_back(cursor.distribution(m));
    g = aggregate_distribution(dists, M);
  } else {
    g = cursor.distribution(select_teacher(policy, t, M, rng) - 1);
  }
  apply_gaussian_noise_inplace(g, sigma, rng);
  return g;
}

// ---- Student ----------------------------------------------------------------

void DistillConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw UsageError("lambda must be in [0, 1]");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw UsageError("sigma must be >= 0");
  student.validate();
}

double student_step_loss(std::span<const double> log_probs, std::size_t target,
                         std::span<const double> g, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw UsageError("lambda must be in [0, 1]");
  if (g.size() != log_probs.size()) throw UsageError("supervision size differs from |V|");
  nn::check_distribution(g);
  const double ce = nn::cross_entropy_step(log_probs, target);
  const double kl = nn::kl_divergence_step(g, log_probs);
  return (1.0 - lambda) * ce + lambda * kl;
}

StudentResult train_student(std::span<const Record> corpus, const TeacherEnsemble& ensemble,
                            const SelectionPolicy& policy, const DistillConfig& config,
                            std::span<const Record> validation, const StudentHooks* hooks) {
  config.validate();
  ensemble.validate();
  const std::size_t M = ensemble.size();
  policy.validate(M);
  const std::size_t V = config.student.vocab_size;
  if (ensemble.vocab_size() != V) {
    throw DataError("vocabulary mismatch: teachers use |V|=" +
                    std::to_string(ensemble.vocab_size()) + ", student |V|=" + std::to_string(V));
  }

  std::mt19937_64 select_rng(policy.seed);
  std::mt19937_64 noise_rng(config.noise_seed);
  std::vector<ForwardCache> caches(M);
  RowMatrix lp;
  std::vector<const Record*> current;
  std::size_t batch_counter = 0;
  std::size_t canaries_seen = 0;
  const double w = config.teacher_weight();

  BatchObserver observer = [&](std::span<const Record* const> batch) {
    current.assign(batch.begin(), batch.end());
    ++batch_counter;
    for (const Record* r : batch) canaries_seen += r->is_canary ? 1 : 0;
  };

  Supervision supervision;
  supervision.teacher_weight = w;
  supervision.fill = [&](const TokenBatch& batch, SoftTargets& soft) {
    const std::size_t B = batch.batch_size;
    for (std::size_t m = 0; m < M; ++m) {
      lm_forward(ensemble.teachers[m], batch, caches[m], /*with_outputs=*/false);
    }
    for (std::size_t t = 0; t < batch.steps; ++t) {
      MatrixMap g(soft[t].data(), Eigen::Index(B), Eigen::Index(V));
      std::size_t chosen = 0;
      if (policy.kind == PolicyKind::kAggregate) {
        g.setZero();
        for (std::size_t m = 0; m < M; ++m) {
          lm_project(ensemble.teachers[m], caches[m].top_hidden(t, B), lp);
          g.array() += lp.array().exp();
        }
        g *= 1.0 / double(M);
      } else {
        chosen = select_teacher(policy, t + 1, M, select_rng);
        lm_project(ensemble.teachers[chosen - 1], caches[chosen - 1].top_hidden(t, B), lp);
        g = lp.array().exp().matrix();
      }
      for (std::size_t b = 0; b < B; ++b) {
        if (!batch.valid(t, b)) continue;
        apply_gaussian_noise_inplace(std::span<double>(soft[t].data() + b * V, V), config.sigma,
                                     noise_rng);
        if (hooks && hooks->on_supervision) {
          hooks->on_supervision(
              {batch_counter, t + 1, chosen, batch.target(t, b), current[b], 1.0 - w});
        }
      }
    }
  };

  StudentResult out;
  out.result = train_supervised(corpus, validation, config.student,
                                w > 0.0 ? &supervision : nullptr, observer);
  out.canary_records_seen = canaries_seen;
  return out;
}

}  // namespace altdistill
