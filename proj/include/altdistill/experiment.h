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

// Experiment configuration and the on-disk pipeline behind the CLI:
// prepare -> insert-canaries -> train (baseline | teachers | student) ->
// audit -> compare. Every stage reads only files written by earlier stages
// under `workdir`.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "altdistill/audit.h"
#include "altdistill/canary.h"
#include "altdistill/distill.h"
#include "altdistill/lm.h"
#include "altdistill/synthetic.h"
#include "altdistill/textcore.h"

namespace altdistill {

enum class StudentCorpus { kCanary, kPublic };

struct ExperimentConfig {
  std::filesystem::path workdir = "run";

  // Raw corpora. With `synthetic` set, splits that have no path are sampled
  // from the synthetic language.
  std::filesystem::path train_path;
  std::filesystem::path validation_path;
  std::filesystem::path test_path;
  std::filesystem::path public_path;  // optional auxiliary corpus
  std::optional<SyntheticLanguageConfig> synthetic;
  std::size_t synthetic_train = 5000;
  std::size_t synthetic_validation = 500;
  std::size_t synthetic_test = 500;
  std::size_t synthetic_public = 0;

  std::size_t vocab_max_size = 2000;
  std::size_t vocab_min_count = 1;

  std::size_t records_per_user = 100;
  std::size_t num_canaries = 16;
  std::size_t canary_length = 5;

  std::size_t num_teachers = 5;
  std::string policy = "alt-perm:1";
  bool pure_distill = true;
  double lambda = 1.0;
  double sigma = 0.0;
  StudentCorpus student_corpus = StudentCorpus::kCanary;

  LmConfig baseline_lm;
  LmConfig teacher_lm;
  LmConfig student_lm;
  AuditConfig audit;

  std::vector<std::string> compare_methods;

  std::uint64_t seed = 1;
  std::size_t jobs = 1;

  // Per-stage seeds derived from `seed`.
  std::uint64_t synthetic_seed() const { return seed; }
  std::uint64_t user_seed() const { return seed + 1; }
  std::uint64_t canary_seed() const { return seed + 2; }
  std::uint64_t partition_seed() const { return seed + 3; }
  std::uint64_t noise_seed() const { return seed + 7; }

  // Training configs with vocab size and derived seeds filled in.
  LmConfig baseline_config(std::size_t vocab_size) const;
  LmConfig teacher_config(std::size_t vocab_size) const;
  LmConfig student_config(std::size_t vocab_size) const;
  DistillConfig distill_config(std::size_t vocab_size) const;
  SelectionPolicy selection_policy() const;

  void validate() const;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
// Relative paths in the document resolve against base_dir.
ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Display and file-safe method labels.
std::string method_label(const SelectionPolicy& policy, std::size_t num_teachers, double sigma);
std::string method_file_label(const SelectionPolicy& policy, std::size_t num_teachers,
                              double sigma);
inline const char* kBaselineLabel = "Baseline";

// ---- In-memory pipeline ------------------------------------------------------

struct PreparedData {
  Vocabulary vocab;
  UserCorpus train;
  std::vector<Record> validation;
  std::vector<Record> test;
  std::vector<Record> public_corpus;
};

struct CanaryData {
  CanaryLedger ledger;
  UserCorpus train;  // with canaries
};

// Generates synthetic splits when configured; raw lines per split.
struct RawSplits {
  std::vector<RawLine> train, validation, test, public_corpus;
};
RawSplits load_raw_splits(const ExperimentConfig& cfg);
PreparedData prepare_data(const ExperimentConfig& cfg, const RawSplits& raw);
CanaryData add_canaries(const ExperimentConfig& cfg, const PreparedData& data);

// ---- On-disk stages --------------------------------------------------------------

struct WorkdirLayout {
  std::filesystem::path root;

  std::filesystem::path vocab() const { return root / "vocab.txt"; }
  std::filesystem::path train() const { return root / "train.tok"; }
  std::filesystem::path validation() const { return root / "validation.tok"; }
  std::filesystem::path test() const { return root / "test.tok"; }
  std::filesystem::path public_corpus() const { return root / "public.tok"; }
  std::filesystem::path ledger() const { return root / "ledger.json"; }
  std::filesystem::path train_with_canaries() const { return root / "train_canaries.tok"; }
  std::filesystem::path baseline_checkpoint() const { return root / "baseline.ckpt"; }
  std::filesystem::path teacher_checkpoint(std::size_t m) const {
    return root / ("teacher_" + std::to_string(m) + ".ckpt");
  }
  std::filesystem::path teacher_manifest() const { return root / "teachers.json"; }
  std::filesystem::path student_checkpoint(const std::string& file_label) const {
    return root / ("student_" + file_label + ".ckpt");
  }
  std::filesystem::path report(const std::string& file_label) const {
    return root / "reports" / (file_label + ".json");
  }
  std::filesystem::path report_table(const std::string& file_label) const {
    return root / "reports" / (file_label + ".txt");
  }
  std::filesystem::path training_log(const std::string& file_label) const {
    return root / "logs" / (file_label + ".json");
  }
};

// Each stage returns a short human-readable summary.
std::string run_prepare(const ExperimentConfig& cfg);
std::string run_insert_canaries(const ExperimentConfig& cfg);

enum class TrainRole { kBaseline, kTeachers, kStudent };
TrainRole parse_train_role(const std::string& role);
std::string run_train(const ExperimentConfig& cfg, TrainRole role);

// `target` is "baseline", a student file label, or a checkpoint path.
std::string run_audit(const ExperimentConfig& cfg, const std::string& target);
std::string run_compare(const ExperimentConfig& cfg, const std::vector<std::string>& methods);

}  // namespace altdistill
