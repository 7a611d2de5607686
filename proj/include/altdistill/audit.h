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

// Canary detection: beam-search (BS) and random-sampling (RS) detectors and
// Low/High group reporting.

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "altdistill/canary.h"
#include "altdistill/lm.h"

namespace altdistill {

struct AuditConfig {
  std::size_t bs_beam_width = 100;
  std::size_t bs_prefix_len = 1;
  std::size_t rs_prefix_len = 2;
  std::size_t rs_sample_count = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

// BOS followed by the first `prefix_len` canary words.
std::vector<TokenId> canary_prefix(const CanarySpec& canary, std::size_t prefix_len);

bool beam_search_detect(const LmParams& model, const CanarySpec& canary, const AuditConfig& cfg);

// `count` suffixes of `length` i.i.d. uniform content words, each distinct
// from `avoid`.
std::vector<std::vector<TokenId>> draw_random_suffixes(std::size_t vocab_size, std::size_t length,
                                                       std::size_t count,
                                                       std::span<const TokenId> avoid,
                                                       std::mt19937_64& rng);

struct RsScore {
  double true_log_prob = 0.0;
  double best_competitor_log_prob = 0.0;
  bool detected = false;  // strictly above every competitor
};

RsScore random_sampling_score(const LmParams& model, const CanarySpec& canary,
                              std::span<const std::vector<TokenId>> competitors,
                              std::size_t prefix_len);
bool random_sampling_detect(const LmParams& model, const CanarySpec& canary,
                            const AuditConfig& cfg, std::mt19937_64& rng);

struct CanaryOutcome {
  std::string owner;
  double group_freq = 0.0;
  bool bs_detected = false;
  bool rs_detected = false;
  double rs_true_log_prob = 0.0;
  double rs_best_competitor_log_prob = 0.0;

  bool operator==(const CanaryOutcome&) const = default;
};

struct GroupRates {
  double low = 0.0;   // percent
  double high = 0.0;  // percent
  bool operator==(const GroupRates&) const = default;
};

struct AuditReport {
  std::string method_name;
  double ppl = 0.0;
  GroupRates bs;
  GroupRates rs;
  std::size_t num_low = 0;
  std::size_t num_high = 0;
  std::vector<CanaryOutcome> per_canary;

  std::size_t rs_high_detections() const;
  bool operator==(const AuditReport&) const = default;
};

// Rates over the ledger's low/high sets from per-canary outcomes.
void compute_group_rates(const CanaryLedger& ledger, AuditReport& report);

// RS for canary k draws from an rng seeded by (cfg.seed, k).
AuditReport audit_model(const LmParams& model, const CanaryLedger& ledger, const AuditConfig& cfg,
                        std::span<const Record> test_records, const std::string& method_name);

std::string report_to_json(const AuditReport& report);
AuditReport report_from_json(const std::string& text);
void write_report(const AuditReport& report, const std::filesystem::path& path);
AuditReport read_report(const std::filesystem::path& path);

// Rows = reports in order; columns PPL, BS Low/High, RS Low/High.
std::string format_table(std::span<const AuditReport> reports);

}  // namespace altdistill
