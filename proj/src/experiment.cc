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

#include "altdistill/experiment.h"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "altdistill/checkpoint.h"
#include "altdistill/errors.h"

namespace altdistill {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void check_keys(const json& j, const std::string& where, std::set<std::string> allowed) {
  if (!j.is_object()) throw UsageError("config section '" + where + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw UsageError("unknown config key '" + where + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_lm(const json& j, const std::string& where, LmConfig& c) {
  check_keys(j, where, {"embed_dim", "hidden_dim", "num_layers", "lr", "clip_norm", "batch_size",
                        "max_epochs", "patience"});
  read(j, "embed_dim", c.embed_dim);
  read(j, "hidden_dim", c.hidden_dim);
  read(j, "num_layers", c.num_layers);
  read(j, "lr", c.lr);
  read(j, "clip_norm", c.clip_norm);
  read(j, "batch_size", c.batch_size);
  read(j, "max_epochs", c.max_epochs);
  read(j, "patience", c.patience);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string format_sigma(double sigma) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", sigma);
  return buf;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

void require(const fs::path& path, const std::string& stage) {
  if (!fs::exists(path)) {
    throw DataError("missing " + path.string() + " (run `altdistill " + stage + "` first)");
  }
}

std::vector<Record> heldout_records(const Vocabulary& vocab, const std::vector<RawLine>& lines,
                                    const std::string& user) {
  std::vector<Record> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back({encode(vocab, l.text), l.user_id.value_or(user)});
  return out;
}

ordered_json trace_json(const TrainingTrace& t) {
  return {{"train_loss", t.train_loss},
          {"validation_ppl", t.validation_ppl},
          {"best_epoch", t.best_epoch},
          {"best_validation_ppl", t.best_validation_ppl}};
}

std::string trace_summary(const TrainingTrace& t) {
  std::ostringstream out;
  for (std::size_t e = 0; e < t.validation_ppl.size(); ++e) {
    out << "  epoch " << (e + 1) << ": train loss " << t.train_loss[e] << ", validation PPL "
        << t.validation_ppl[e] << "\n";
  }
  out << "  best epoch " << t.best_epoch << " (validation PPL " << t.best_validation_ppl << ")\n";
  return out.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

// ---- Config -------------------------------------------------------------------

LmConfig ExperimentConfig::baseline_config(std::size_t vocab_size) const {
  LmConfig c = baseline_lm;
  c.vocab_size = vocab_size;
  c.seed = seed + 4;
  return c;
}

LmConfig ExperimentConfig::teacher_config(std::size_t vocab_size) const {
  LmConfig c = teacher_lm;
  c.vocab_size = vocab_size;
  c.seed = seed + 5;
  return c;
}

LmConfig ExperimentConfig::student_config(std::size_t vocab_size) const {
  LmConfig c = student_lm;
  c.vocab_size = vocab_size;
  c.seed = seed + 6;
  return c;
}

DistillConfig ExperimentConfig::distill_config(std::size_t vocab_size) const {
  DistillConfig d;
  d.mode = pure_distill ? DistillMode::kPureDistill : DistillMode::kMixed;
  d.lambda = lambda;
  d.sigma = sigma;
  d.noise_seed = noise_seed();
  d.student = student_config(vocab_size);
  return d;
}

SelectionPolicy ExperimentConfig::selection_policy() const {
  return SelectionPolicy::parse(policy, num_teachers);
}

void ExperimentConfig::validate() const {
  if (num_teachers < 1) throw UsageError("m must be >= 1");
  if (records_per_user < 1) throw UsageError("records_per_user must be >= 1");
  if (canary_length < 2) throw UsageError("canary length must be >= 2");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw UsageError("lambda must be in [0, 1]");
  if (!(sigma >= 0.0)) throw UsageError("sigma must be >= 0");
  if (vocab_max_size < 4 || vocab_min_count < 1) throw UsageError("bad vocabulary settings");
  if (jobs < 1) throw UsageError("jobs must be >= 1");
  selection_policy();
  audit.validate();
  if (num_canaries > 0 && (audit.bs_prefix_len >= canary_length ||
                           audit.rs_prefix_len >= canary_length)) {
    throw UsageError("audit prefix lengths must be shorter than the canary length");
  }
  if (!synthetic && (train_path.empty() || validation_path.empty() || test_path.empty())) {
    throw UsageError("config needs corpus.train/validation/test paths or corpus.synthetic");
  }
  if (student_corpus == StudentCorpus::kPublic && public_path.empty() &&
      !(synthetic && synthetic_public > 0)) {
    throw UsageError("student.corpus = public needs corpus.public or synthetic public sentences");
  }
}

ExperimentConfig parse_experiment_config(const std::string& text, const fs::path& base) {
  ExperimentConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    check_keys(j, "", {"workdir", "seed", "jobs", "corpus", "vocab", "canaries", "teachers",
                       "student", "baseline", "audit", "compare"});
    if (j.contains("workdir")) c.workdir = resolve(base, j["workdir"].get<std::string>());
    read(j, "seed", c.seed);
    read(j, "jobs", c.jobs);
    if (j.contains("corpus")) {
      const auto& s = j["corpus"];
      check_keys(s, "corpus.", {"train", "validation", "test", "public", "synthetic"});
      if (s.contains("train")) c.train_path = resolve(base, s["train"].get<std::string>());
      if (s.contains("validation"))
        c.validation_path = resolve(base, s["validation"].get<std::string>());
      if (s.contains("test")) c.test_path = resolve(base, s["test"].get<std::string>());
      if (s.contains("public") && !s["public"].is_null())
        c.public_path = resolve(base, s["public"].get<std::string>());
      if (s.contains("synthetic")) {
        const auto& y = s["synthetic"];
        check_keys(y, "corpus.synthetic.",
                   {"num_words", "num_classes", "successors_per_class", "zipf_exponent",
                    "min_length", "max_length", "language_seed", "train", "validation", "test",
                    "public"});
        SyntheticLanguageConfig lang;
        read(y, "num_words", lang.num_words);
        read(y, "num_classes", lang.num_classes);
        read(y, "successors_per_class", lang.successors_per_class);
        read(y, "zipf_exponent", lang.zipf_exponent);
        read(y, "min_length", lang.min_length);
        read(y, "max_length", lang.max_length);
        read(y, "language_seed", lang.seed);
        read(y, "train", c.synthetic_train);
        read(y, "validation", c.synthetic_validation);
        read(y, "test", c.synthetic_test);
        read(y, "public", c.synthetic_public);
        c.synthetic = lang;
      }
    }
    if (j.contains("vocab")) {
      check_keys(j["vocab"], "vocab.", {"max_size", "min_count"});
      read(j["vocab"], "max_size", c.vocab_max_size);
      read(j["vocab"], "min_count", c.vocab_min_count);
    }
    if (j.contains("canaries")) {
      const auto& s = j["canaries"];
      check_keys(s, "canaries.", {"count", "length", "records_per_user"});
      read(s, "count", c.num_canaries);
      read(s, "length", c.canary_length);
      read(s, "records_per_user", c.records_per_user);
    }
    if (j.contains("baseline")) {
      check_keys(j["baseline"], "baseline.", {"lm"});
      if (j["baseline"].contains("lm")) read_lm(j["baseline"]["lm"], "baseline.lm.", c.baseline_lm);
    }
    if (j.contains("teachers")) {
      const auto& s = j["teachers"];
      check_keys(s, "teachers.", {"m", "lm"});
      read(s, "m", c.num_teachers);
      if (s.contains("lm")) read_lm(s["lm"], "teachers.lm.", c.teacher_lm);
    }
    if (j.contains("student")) {
      const auto& s = j["student"];
      check_keys(s, "student.", {"policy", "pure_distill", "lambda", "sigma", "corpus", "lm"});
      read(s, "policy", c.policy);
      read(s, "pure_distill", c.pure_distill);
      read(s, "lambda", c.lambda);
      read(s, "sigma", c.sigma);
      if (s.contains("corpus")) {
        const auto corpus = s["corpus"].get<std::string>();
        if (corpus == "canary") c.student_corpus = StudentCorpus::kCanary;
        else if (corpus == "public") c.student_corpus = StudentCorpus::kPublic;
        else throw UsageError("student.corpus must be 'canary' or 'public'");
      }
      if (s.contains("lm")) read_lm(s["lm"], "student.lm.", c.student_lm);
    }
    if (j.contains("audit")) {
      const auto& s = j["audit"];
      check_keys(s, "audit.", {"beam_width", "bs_prefix_len", "rs_prefix_len", "rs_samples", "seed"});
      read(s, "beam_width", c.audit.bs_beam_width);
      read(s, "bs_prefix_len", c.audit.bs_prefix_len);
      read(s, "rs_prefix_len", c.audit.rs_prefix_len);
      read(s, "rs_samples", c.audit.rs_sample_count);
      read(s, "seed", c.audit.seed);
    }
    if (j.contains("compare")) {
      check_keys(j["compare"], "compare.", {"methods"});
      read(j["compare"], "methods", c.compare_methods);
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad config value: ") + e.what());
  }
  return c;
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  return parse_experiment_config(json_text, fs::path{});
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("config file not found: " + path.string());
  return parse_experiment_config(slurp(path), path.parent_path());
}

std::string method_label(const SelectionPolicy& policy, std::size_t num_teachers, double sigma) {
  std::string name;
  const std::string m = std::to_string(num_teachers) + "T";
  switch (policy.kind) {
    case PolicyKind::kAggregate: name = num_teachers == 1 ? "Baseline" : "Agg"; break;
    case PolicyKind::kAltRandom: name = "Alt-Random"; break;
    case PolicyKind::kAltPerm: name = "Alt-Perm"; break;
  }
  std::string out = name + "(" + m;
  if (sigma > 0.0) out += ",\xcf\x83=" + format_sigma(sigma);
  return out + ")";
}

std::string method_file_label(const SelectionPolicy& policy, std::size_t num_teachers,
                              double sigma) {
  std::string name;
  switch (policy.kind) {
    case PolicyKind::kAggregate: name = num_teachers == 1 ? "baseline" : "agg"; break;
    case PolicyKind::kAltRandom: name = "alt-random"; break;
    case PolicyKind::kAltPerm: name = "alt-perm"; break;
  }
  std::string out = name + "-" + std::to_string(num_teachers) + "t";
  if (sigma > 0.0) out += "-sigma" + format_sigma(sigma);
  return out;
}

// ---- In-memory pipeline ------------------------------------------------------

RawSplits load_raw_splits(const ExperimentConfig& cfg) {
  RawSplits raw;
  if (cfg.synthetic) {
    const SyntheticLanguage lang(*cfg.synthetic);
    const std::size_t total = cfg.synthetic_train + cfg.synthetic_validation + cfg.synthetic_test +
                              cfg.synthetic_public;
    const auto lines = lang.sample_corpus(total, cfg.synthetic_seed());
    std::size_t k = 0;
    auto take = [&](std::size_t n, std::vector<RawLine>& out) {
      for (std::size_t i = 0; i < n; ++i) out.push_back({std::nullopt, lines[k++]});
    };
    take(cfg.synthetic_train, raw.train);
    take(cfg.synthetic_validation, raw.validation);
    take(cfg.synthetic_test, raw.test);
    take(cfg.synthetic_public, raw.public_corpus);
  }
  if (!cfg.train_path.empty()) raw.train = read_raw_corpus(cfg.train_path);
  if (!cfg.validation_path.empty()) raw.validation = read_raw_corpus(cfg.validation_path);
  if (!cfg.test_path.empty()) raw.test = read_raw_corpus(cfg.test_path);
  if (!cfg.public_path.empty()) raw.public_corpus = read_raw_corpus(cfg.public_path);
  return raw;
}

PreparedData prepare_data(const ExperimentConfig& cfg, const RawSplits& raw) {
  if (raw.train.empty()) throw DataError("empty corpus");
  if (raw.validation.empty() || raw.test.empty()) {
    throw DataError("validation and test splits must be non-empty");
  }
  std::vector<std::string> lines;
  lines.reserve(raw.train.size());
  for (const auto& l : raw.train) lines.push_back(l.text);

  PreparedData out;
  out.vocab = build_vocabulary(lines, cfg.vocab_max_size, cfg.vocab_min_count);
  if (raw.train.front().user_id) {
    for (const auto& l : raw.train) out.train.add({encode(out.vocab, l.text), *l.user_id});
  } else {
    std::vector<TokenSequence> seqs;
    seqs.reserve(raw.train.size());
    for (const auto& l : raw.train) seqs.push_back(encode(out.vocab, l.text));
    out.train = assign_synthetic_users(std::move(seqs), cfg.records_per_user, cfg.user_seed());
  }
  out.validation = heldout_records(out.vocab, raw.validation, "heldout");
  out.test = heldout_records(out.vocab, raw.test, "heldout");
  out.public_corpus = heldout_records(out.vocab, raw.public_corpus, "public");
  return out;
}

CanaryData add_canaries(const ExperimentConfig& cfg, const PreparedData& data) {
  CanaryData out;
  if (cfg.num_canaries == 0) {
    out.train = data.train;
    return out;
  }
  out.ledger = generate_canaries(data.vocab, data.train, cfg.num_canaries, cfg.canary_length,
                                 cfg.canary_seed());
  out.train = insert_canaries(data.train, out.ledger);
  return out;
}

// ---- On-disk stages ----------------------------------------------------------

namespace {

struct Loaded {
  Vocabulary vocab;
  std::vector<Record> validation;
  std::vector<Record> test;
};

Loaded load_common(const WorkdirLayout& w) {
  for (const auto& p : {w.vocab(), w.validation(), w.test()}) require(p, "prepare");
  Loaded l;
  l.vocab = read_vocabulary(w.vocab());
  l.validation = read_tokenized_corpus(w.validation(), l.vocab.size());
  l.test = read_tokenized_corpus(w.test(), l.vocab.size());
  return l;
}

std::vector<Record> load_canary_corpus(const WorkdirLayout& w, const Vocabulary& vocab) {
  require(w.train_with_canaries(), "insert-canaries");
  return read_tokenized_corpus(w.train_with_canaries(), vocab.size());
}

}  // namespace

std::string run_prepare(const ExperimentConfig& cfg) {
  cfg.validate();
  const WorkdirLayout w{cfg.workdir};
  fs::create_directories(w.root);
  const RawSplits raw = load_raw_splits(cfg);
  const PreparedData data = prepare_data(cfg, raw);
  write_vocabulary(data.vocab, w.vocab());
  write_tokenized_corpus(data.train.records(), w.train());
  write_tokenized_corpus(data.validation, w.validation());
  write_tokenized_corpus(data.test, w.test());
  if (!data.public_corpus.empty()) write_tokenized_corpus(data.public_corpus, w.public_corpus());

  std::ostringstream out;
  out << "vocabulary: " << data.vocab.size() << " ids (" << data.vocab.num_content()
      << " content words)\n"
      << "train: " << data.train.size() << " records, " << data.train.users().size() << " users"
      << (raw.train.front().user_id ? "" : " (synthetic assignment)") << "\n"
      << "validation: " << data.validation.size() << " records\n"
      << "test: " << data.test.size() << " records\n";
  if (!data.public_corpus.empty()) out << "public: " << data.public_corpus.size() << " records\n";
  return out.str();
}

std::string run_insert_canaries(const ExperimentConfig& cfg) {
  cfg.validate();
  const WorkdirLayout w{cfg.workdir};
  require(w.train(), "prepare");
  require(w.vocab(), "prepare");
  PreparedData data;
  data.vocab = read_vocabulary(w.vocab());
  data.train = UserCorpus(read_tokenized_corpus(w.train(), data.vocab.size()));
  const CanaryData c = add_canaries(cfg, data);
  write_ledger(c.ledger, data.vocab, w.ledger());
  write_tokenized_corpus(c.train.records(), w.train_with_canaries());

  std::ostringstream out;
  out << "canaries: " << c.ledger.size() << "\n";
  for (const auto& [freq, ids] : c.ledger.groups()) {
    std::size_t inserted = 0;
    for (auto k : ids) inserted += c.ledger.canaries()[k].insert_count;
    out << "  group p=" << freq << ": " << ids.size() << " canaries, " << inserted
        << " inserted records\n";
  }
  out << "train with canaries: " << c.train.size() << " records\n";
  return out.str();
}

TrainRole parse_train_role(const std::string& role) {
  if (role == "baseline") return TrainRole::kBaseline;
  if (role == "teachers") return TrainRole::kTeachers;
  if (role == "student") return TrainRole::kStudent;
  throw UsageError("unknown role '" + role + "' (expected baseline, teachers, student)");
}

std::string run_train(const ExperimentConfig& cfg, TrainRole role) {
  cfg.validate();
  const WorkdirLayout w{cfg.workdir};
  const Loaded common = load_common(w);
  const auto start = std::chrono::steady_clock::now();
  std::ostringstream out;

  if (role == TrainRole::kBaseline) {
    const auto corpus = load_canary_corpus(w, common.vocab);
    const TrainResult r =
        train_lm(corpus, common.validation, cfg.baseline_config(common.vocab.size()));
    write_checkpoint(r.params, common.vocab.fingerprint(), w.baseline_checkpoint());
    ordered_json log = {{"method", kBaselineLabel}, {"role", "baseline"}};
    log["trace"] = trace_json(r.trace);
    write_text(w.training_log("baseline"), log.dump(2) + "\n");
    out << "baseline -> " << w.baseline_checkpoint().string() << "\n" << trace_summary(r.trace);
  } else if (role == TrainRole::kTeachers) {
    const UserCorpus corpus(load_canary_corpus(w, common.vocab));
    const ShardPartition part = partition_by_user(corpus, cfg.num_teachers, cfg.partition_seed());
    std::vector<TrainingTrace> traces;
    const TeacherEnsemble ens = train_teachers(
        part, cfg.teacher_config(common.vocab.size()), common.validation, cfg.jobs, &traces);
    ordered_json manifest = {{"m", ens.size()}, {"teachers", ordered_json::array()}};
    for (std::size_t m = 0; m < ens.size(); ++m) {
      write_checkpoint(ens.teachers[m], common.vocab.fingerprint(), w.teacher_checkpoint(m));
      manifest["teachers"].push_back({{"checkpoint", w.teacher_checkpoint(m).filename().string()},
                                      {"users", ens.shard_users[m]},
                                      {"records", part.shards[m].size()},
                                      {"trace", trace_json(traces[m])}});
      out << "teacher " << m << " (" << part.shards[m].users().size() << " users, "
          << part.shards[m].size() << " records) -> " << w.teacher_checkpoint(m).string() << "\n"
          << trace_summary(traces[m]);
    }
    write_text(w.teacher_manifest(), manifest.dump(2) + "\n");
  } else {
    require(w.teacher_manifest(), "train --role teachers");
    const auto manifest = ordered_json::parse(slurp(w.teacher_manifest()));
    const std::size_t M = manifest.at("m").get<std::size_t>();
    if (M != cfg.num_teachers) {
      throw UsageError("config asks for " + std::to_string(cfg.num_teachers) +
                       " teachers but " + std::to_string(M) + " were trained");
    }
    TeacherEnsemble ens;
    for (std::size_t m = 0; m < M; ++m) {
      require(w.teacher_checkpoint(m), "train --role teachers");
      ens.teachers.push_back(read_checkpoint_for(w.teacher_checkpoint(m), common.vocab));
      const auto& users = manifest.at("teachers").at(m).at("users");
      ens.shard_users.emplace_back(users.begin(), users.end());
    }
    std::vector<Record> corpus;
    if (cfg.student_corpus == StudentCorpus::kPublic) {
      require(w.public_corpus(), "prepare");
      corpus = read_tokenized_corpus(w.public_corpus(), common.vocab.size());
    } else {
      corpus = load_canary_corpus(w, common.vocab);
    }
    const SelectionPolicy policy = cfg.selection_policy();
    const std::string label = method_label(policy, M, cfg.sigma);
    const std::string file_label = method_file_label(policy, M, cfg.sigma);
    const StudentResult r = train_student(corpus, ens, policy,
                                          cfg.distill_config(common.vocab.size()),
                                          common.validation);
    write_checkpoint(r.result.params, common.vocab.fingerprint(), w.student_checkpoint(file_label));
    ordered_json log = {{"method", label},
                        {"role", "student"},
                        {"policy", policy.spec()},
                        {"sigma", cfg.sigma},
                        {"pure_distill", cfg.pure_distill},
                        {"lambda", cfg.lambda},
                        {"corpus", cfg.student_corpus == StudentCorpus::kPublic ? "public" : "canary"},
                        {"canary_records_seen", r.canary_records_seen}};
    log["trace"] = trace_json(r.result.trace);
    write_text(w.training_log(file_label), log.dump(2) + "\n");
    out << label << " -> " << w.student_checkpoint(file_label).string() << "\n"
        << trace_summary(r.result.trace);
  }
  out << "elapsed " << seconds_since(start) << " s\n";
  return out.str();
}

std::string run_audit(const ExperimentConfig& cfg, const std::string& target) {
  cfg.validate();
  const WorkdirLayout w{cfg.workdir};
  const Loaded common = load_common(w);
  require(w.ledger(), "insert-canaries");
  const CanaryLedger ledger = read_ledger(w.ledger(), common.vocab);

  fs::path checkpoint;
  std::string file_label = target;
  std::string label = target;
  if (target == "baseline") {
    checkpoint = w.baseline_checkpoint();
    label = kBaselineLabel;
  } else if (fs::exists(w.student_checkpoint(target))) {
    checkpoint = w.student_checkpoint(target);
  } else if (fs::exists(target)) {
    checkpoint = target;
    file_label = fs::path(target).stem().string();
  } else {
    throw DataError("no checkpoint for '" + target + "' in " + w.root.string());
  }
  if (fs::exists(w.training_log(file_label))) {
    label = ordered_json::parse(slurp(w.training_log(file_label))).value("method", label);
  }
  require(checkpoint, "train");
  const LmParams model = read_checkpoint_for(checkpoint, common.vocab);
  const AuditReport report = audit_model(model, ledger, cfg.audit, common.test, label);
  write_text(w.report(file_label), report_to_json(report));
  const std::string table = format_table(std::span<const AuditReport>(&report, 1));
  write_text(w.report_table(file_label), table);
  return table;
}

std::string run_compare(const ExperimentConfig& cfg, const std::vector<std::string>& methods) {
  const std::vector<std::string>& list = methods.empty() ? cfg.compare_methods : methods;
  if (list.empty()) throw UsageError("compare needs a method list");
  const WorkdirLayout w{cfg.workdir};
  std::vector<AuditReport> reports;
  for (const auto& m : list) {
    if (!fs::exists(w.report(m))) {
      throw DataError("missing report " + w.report(m).string() + " (run `altdistill audit " + m +
                      "` first)");
    }
    reports.push_back(read_report(w.report(m)));
  }
  const std::string table = format_table(reports);
  write_text(w.root / "reports" / "compare.txt", table);
  return table;
}

}  // namespace altdistill
