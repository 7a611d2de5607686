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

#include "altdistill/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "altdistill/errors.h"

namespace altdistill {

std::string synthetic_word(std::size_t index) {
  static constexpr std::string_view kConsonants = "bdfgklmnprstvz";
  static constexpr std::string_view kVowels = "aeiou";
  const std::size_t base = kConsonants.size() * kVowels.size();
  std::vector<std::size_t> digits;
  do {
    digits.push_back(index % base);
    index /= base;
  } while (index > 0);
  while (digits.size() < 2) digits.push_back(0);
  std::string out;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    out.push_back(kConsonants[*it / kVowels.size()]);
    out.push_back(kVowels[*it % kVowels.size()]);
  }
  return out;
}

SyntheticLanguage::SyntheticLanguage(const SyntheticLanguageConfig& config) : config_(config) {
  if (config.num_words < config.num_classes || config.num_classes < 1) {
    throw UsageError("synthetic language needs num_words >= num_classes >= 1");
  }
  if (config.successors_per_class < 1 || config.successors_per_class > config.num_classes) {
    throw UsageError("successors_per_class must be in [1, num_classes]");
  }
  if (config.min_length < 1 || config.max_length < config.min_length) {
    throw UsageError("synthetic sentence lengths must satisfy 1 <= min <= max");
  }

  std::mt19937_64 rng(config.seed);
  words_.reserve(config.num_words);
  for (std::size_t i = 0; i < config.num_words; ++i) words_.push_back(synthetic_word(i));

  std::vector<std::size_t> order(config.num_words);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  class_members_.resize(config.num_classes);
  for (std::size_t i = 0; i < order.size(); ++i) {
    class_members_[i % config.num_classes].push_back(order[i]);
  }
  for (const auto& members : class_members_) {
    std::vector<double> w(members.size());
    for (std::size_t r = 0; r < w.size(); ++r) {
      w[r] = 1.0 / std::pow(double(r + 1), config.zipf_exponent);
    }
    emission_.emplace_back(w.begin(), w.end());
  }

  std::uniform_real_distribution<double> weight(0.2, 1.0);
  std::vector<std::size_t> classes(config.num_classes);
  std::iota(classes.begin(), classes.end(), 0);
  for (std::size_t c = 0; c < config.num_classes; ++c) {
    std::shuffle(classes.begin(), classes.end(), rng);
    successors_.emplace_back(classes.begin(), classes.begin() + config.successors_per_class);
    std::vector<double> w(config.successors_per_class);
    for (auto& x : w) x = weight(rng);
    transition_.emplace_back(w.begin(), w.end());
  }
}

std::string SyntheticLanguage::sample_sentence(std::mt19937_64& rng) const {
  std::uniform_int_distribution<std::size_t> length(config_.min_length, config_.max_length);
  std::uniform_int_distribution<std::size_t> start(0, config_.num_classes - 1);
  const std::size_t n = length(rng);
  std::size_t cls = start(rng);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    auto emission = emission_[cls];
    const std::size_t word = class_members_[cls][emission(rng)];
    if (i) out.push_back(' ');
    out += words_[word];
    auto transition = transition_[cls];
    cls = successors_[cls][transition(rng)];
  }
  return out;
}

std::vector<std::string> SyntheticLanguage::sample_corpus(std::size_t num_sentences,
                                                          std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::vector<std::string> out;
  out.reserve(num_sentences);
  for (std::size_t i = 0; i < num_sentences; ++i) out.push_back(sample_sentence(rng));
  return out;
}

}  // namespace altdistill
