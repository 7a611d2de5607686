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

#include "altdistill/audit.h"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "altdistill/errors.h"

namespace altdistill {

using nlohmann::ordered_json;

void AuditConfig::validate() const {
  if (bs_beam_width < 1 || bs_prefix_len < 1 || rs_prefix_len < 1 || rs_sample_count < 1) {
    throw UsageError("audit counts must be >= 1");
  }
}

std::vector<TokenId> canary_prefix(const CanarySpec& canary, std::size_t prefix_len) {
  if (prefix_len >= canary.tokens.size()) {
    throw UsageError("prefix length " + std::to_string(prefix_len) +
                     " must be shorter than the canary (" +
                     std::to_string(canary.tokens.size()) + " words)");
  }
  std::vector<TokenId> prefix{Vocabulary::kBos};
  prefix.insert(prefix.end(), canary.tokens.begin(),
                canary.tokens.begin() + std::ptrdiff_t(prefix_len));
  return prefix;
}

bool beam_search_detect(const LmParams& model, const CanarySpec& canary, const AuditConfig& cfg) {
  cfg.validate();
  const auto prefix = canary_prefix(canary, cfg.bs_prefix_len);
  const std::vector<TokenId> rest(canary.tokens.begin() + std::ptrdiff_t(cfg.bs_prefix_len),
                                  canary.tokens.end());
  const auto hyps = beam_search(model, prefix, rest.size(), cfg.bs_beam_width);
  return std::any_of(hyps.begin(), hyps.end(),
                     [&](const Hypothesis& h) { return h.tokens == rest; });
}

std::vector<std::vector<TokenId>> draw_random_suffixes(std::size_t vocab_size, std::size_t length,
                                                       std::size_t count,
                                                       std::span<const TokenId> avoid,
                                                       std::mt19937_64& rng) {
  if (vocab_size <= Vocabulary::kNumSpecials) throw UsageError("no content words to sample");
  if (length == 1 && vocab_size == Vocabulary::kNumSpecials + 1 && !avoid.empty()) {
    throw UsageError("cannot draw a suffix distinct from the only content word");
  }
  std::uniform_int_distribution<TokenId> word(TokenId(Vocabulary::kNumSpecials),
                                              TokenId(vocab_size - 1));
  std::vector<std::vector<TokenId>> out(count, std::vector<TokenId>(length));
  for (auto& s : out) {
    do {
      for (auto& w : s) w = word(rng);
    } while (std::equal(s.begin(), s.end(), avoid.begin(), avoid.end()));
  }
  return out;
}

RsScore random_sampling_score(const LmParams& model, const CanarySpec& canary,
                              std::span<const std::vector<TokenId>> competitors,
                              std::size_t prefix_len) {
  const auto prefix = canary_prefix(canary, prefix_len);
  std::vector<std::vector<TokenId>> all;
  all.reserve(competitors.size() + 1);
  all.emplace_back(canary.tokens.begin() + std::ptrdiff_t(prefix_len), canary.tokens.end());
  all.insert(all.end(), competitors.begin(), competitors.end());
  const auto scores = conditional_log_probs(model, prefix, all);

  RsScore r;
  r.true_log_prob = scores[0];
  r.best_competitor_log_prob = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < scores.size(); ++k)
    r.best_competitor_log_prob = std::max(r.best_competitor_log_prob, scores[k]);
  r.detected = r.true_log_prob > r.best_competitor_log_prob;
  return r;
}

bool random_sampling_detect(const LmParams& model, const CanarySpec& canary,
                            const AuditConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const std::span<const TokenId> truth =
      std::span<const TokenId>(canary.tokens).subspan(std::min(cfg.rs_prefix_len, canary.tokens.size()));
  const auto competitors = draw_random_suffixes(model.config().vocab_size, truth.size(),
                                                cfg.rs_sample_count, truth, rng);
  return random_sampling_score(model, canary, competitors, cfg.rs_prefix_len).detected;
}

std::size_t AuditReport::rs_high_detections() const {
  return std::size_t(std::count_if(per_canary.begin(), per_canary.end(), [](const auto& c) {
    return !is_low_frequency(c.group_freq) && c.rs_detected;
  }));
}

void compute_group_rates(const CanaryLedger& ledger, AuditReport& report) {
  if (report.per_canary.size() != ledger.size()) {
    throw UsageError("report and ledger disagree on canary count");
  }
  auto rate = [&](const std::vector<std::size_t>& ids, bool CanaryOutcome::*flag) {
    if (ids.empty()) return 0.0;
    std::size_t hits = 0;
    for (auto k : ids) hits += report.per_canary[k].*flag ? 1 : 0;
    return 100.0 * double(hits) / double(ids.size());
  };
  report.num_low = ledger.low_set().size();
  report.num_high = ledger.high_set().size();
  report.bs = {rate(ledger.low_set(), &CanaryOutcome::bs_detected),
               rate(ledger.high_set(), &CanaryOutcome::bs_detected)};
  report.rs = {rate(ledger.low_set(), &CanaryOutcome::rs_detected),
               rate(ledger.high_set(), &CanaryOutcome::rs_detected)};
}

AuditReport audit_model(const LmParams& model, const CanaryLedger& ledger, const AuditConfig& cfg,
                        std::span<const Record> test_records, const std::string& method_name) {
  cfg.validate();
  if (ledger.empty()) throw UsageError("audit needs a non-empty canary ledger");
  AuditReport report;
  report.method_name = method_name;
  report.ppl = perplexity(model, test_records);
  for (std::size_t k = 0; k < ledger.size(); ++k) {
    const CanarySpec& c = ledger.canaries()[k];
    for (TokenId id : c.tokens) {
      if (id < 0 || std::size_t(id) >= model.config().vocab_size) {
        throw DataError("canary token outside model vocabulary");
      }
    }
    CanaryOutcome o{c.owner, c.group_freq};
    o.bs_detected = beam_search_detect(model, c, cfg);
    std::seed_seq seq{std::uint64_t(cfg.seed), std::uint64_t(k)};
    std::mt19937_64 rng(seq);
    const auto truth = std::span<const TokenId>(c.tokens).subspan(cfg.rs_prefix_len);
    const auto competitors = draw_random_suffixes(model.config().vocab_size, truth.size(),
                                                  cfg.rs_sample_count, truth, rng);
    const RsScore rs = random_sampling_score(model, c, competitors, cfg.rs_prefix_len);
    o.rs_detected = rs.detected;
    o.rs_true_log_prob = rs.true_log_prob;
    o.rs_best_competitor_log_prob = rs.best_competitor_log_prob;
    report.per_canary.push_back(std::move(o));
  }
  compute_group_rates(ledger, report);
  return report;
}

std::string report_to_json(const AuditReport& r) {
  ordered_json j;
  j["method_name"] = r.method_name;
  j["ppl"] = r.ppl;
  j["wer"] = nullptr;
  j["bs"] = {{"low", r.bs.low}, {"high", r.bs.high}};
  j["rs"] = {{"low", r.rs.low}, {"high", r.rs.high}};
  j["num_low"] = r.num_low;
  j["num_high"] = r.num_high;
  j["per_canary"] = ordered_json::array();
  for (const auto& c : r.per_canary) {
    j["per_canary"].push_back({{"owner", c.owner},
                               {"group_freq", c.group_freq},
                               {"bs_detected", c.bs_detected},
                               {"rs_detected", c.rs_detected},
                               {"rs_true_log_prob", c.rs_true_log_prob},
                               {"rs_best_competitor_log_prob", c.rs_best_competitor_log_prob}});
  }
  return j.dump(2) + "\n";
}

AuditReport report_from_json(const std::string& text) {
  try {
    const auto j = ordered_json::parse(text);
    AuditReport r;
    r.method_name = j.at("method_name").get<std::string>();
    r.ppl = j.at("ppl").get<double>();
    r.bs = {j.at("bs").at("low").get<double>(), j.at("bs").at("high").get<double>()};
    r.rs = {j.at("rs").at("low").get<double>(), j.at("rs").at("high").get<double>()};
    r.num_low = j.value("num_low", std::size_t(0));
    r.num_high = j.value("num_high", std::size_t(0));
    for (const auto& c : j.at("per_canary")) {
      r.per_canary.push_back({c.at("owner").get<std::string>(), c.at("group_freq").get<double>(),
                              c.at("bs_detected").get<bool>(), c.at("rs_detected").get<bool>(),
                              c.value("rs_true_log_prob", 0.0),
                              c.value("rs_best_competitor_log_prob", 0.0)});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed audit report: ") + e.what());
  }
}

void write_report(const AuditReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << report_to_json(report);
}

AuditReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing report " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return report_from_json(ss.str());
}

std::string format_table(std::span<const AuditReport> reports) {
  std::size_t name_w = 6;
  for (const auto& r : reports) name_w = std::max(name_w, r.method_name.size());
  std::ostringstream out;
  out << std::left << std::setw(int(name_w) + 2) << "Method" << std::right << std::setw(9)
      << "PPL" << std::setw(9) << "BS Low" << std::setw(9) << "BS High" << std::setw(9)
      << "RS Low" << std::setw(9) << "RS High" << "\n";
  out << std::string(name_w + 2 + 45, '-') << "\n";
  auto pct = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(0) << v << "%";
    return s.str();
  };
  for (const auto& r : reports) {
    out << std::left << std::setw(int(name_w) + 2) << r.method_name << std::right << std::fixed
        << std::setprecision(1) << std::setw(9) << r.ppl << std::setw(9) << pct(r.bs.low)
        << std::setw(9) << pct(r.bs.high) << std::setw(9) << pct(r.rs.low) << std::setw(9)
        << pct(r.rs.high) << "\n";
  }
  return out.str();
}

}  // namespace altdistill
