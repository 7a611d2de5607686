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

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "altdistill/errors.h"
#include "altdistill/experiment.h"
#include "test_util.h"

namespace altdistill {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig tiny_experiment(const fs::path& workdir) {
  ExperimentConfig cfg;
  cfg.workdir = workdir;
  SyntheticLanguageConfig lang;
  lang.num_words = 60;
  lang.num_classes = 6;
  cfg.synthetic = lang;
  cfg.synthetic_train = 300;
  cfg.synthetic_validation = 30;
  cfg.synthetic_test = 30;
  cfg.synthetic_public = 40;
  cfg.records_per_user = 30;
  cfg.num_canaries = 4;
  cfg.num_teachers = 2;
  LmConfig lm;
  lm.embed_dim = 6;
  lm.hidden_dim = 8;
  lm.max_epochs = 2;
  cfg.baseline_lm = cfg.teacher_lm = cfg.student_lm = lm;
  cfg.audit.bs_beam_width = 5;
  cfg.audit.rs_sample_count = 20;
  return cfg;
}

TEST(Config, ParsesSectionsAndResolvesPaths) {
  const ExperimentConfig c = parse_experiment_config(R"({
    "workdir": "out", "seed": 9, "jobs": 2,
    "corpus": {"train": "t.txt", "validation": "v.txt", "test": "x.txt"},
    "vocab": {"max_size": 100, "min_count": 2},
    "canaries": {"count": 8, "length": 6, "records_per_user": 50},
    "teachers": {"m": 3, "lm": {"hidden_dim": 10, "lr": 0.5}},
    "student": {"policy": "alt-random:4", "pure_distill": false, "lambda": 0.3, "sigma": 1e-4},
    "audit": {"beam_width": 7, "rs_samples": 11, "seed": 5},
    "compare": {"methods": ["baseline", "agg-3t"]}
  })", "/base");
  EXPECT_EQ(c.workdir, fs::path("/base/out"));
  EXPECT_EQ(c.train_path, fs::path("/base/t.txt"));
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.jobs, 2u);
  EXPECT_EQ(c.vocab_min_count, 2u);
  EXPECT_EQ(c.canary_length, 6u);
  EXPECT_EQ(c.num_teachers, 3u);
  EXPECT_EQ(c.teacher_lm.hidden_dim, 10u);
  EXPECT_EQ(c.teacher_lm.lr, 0.5);
  EXPECT_FALSE(c.pure_distill);
  EXPECT_EQ(c.lambda, 0.3);
  EXPECT_EQ(c.sigma, 1e-4);
  EXPECT_EQ(c.audit.bs_beam_width, 7u);
  EXPECT_EQ(c.audit.rs_sample_count, 11u);
  EXPECT_EQ(c.compare_methods, (std::vector<std::string>{"baseline", "agg-3t"}));
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.distill_config(20).mode, DistillMode::kMixed);
  EXPECT_EQ(c.teacher_config(20).vocab_size, 20u);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_experiment_config("{"), UsageError);
  EXPECT_THROW(parse_experiment_config(R"({"sede": 1})"), UsageError);
  EXPECT_THROW(parse_experiment_config(R"({"teachers": {"m": "five"}})"), UsageError);
  EXPECT_THROW(parse_experiment_config(R"({"student": {"corpus": "web"}})"), UsageError);
  ExperimentConfig no_corpus;
  EXPECT_THROW(no_corpus.validate(), UsageError);
  ExperimentConfig bad_policy = tiny_experiment("x");
  bad_policy.policy = "alt-perm";
  EXPECT_THROW(bad_policy.validate(), UsageError);
}

TEST(Labels, DisplayAndFileNames) {
  EXPECT_EQ(method_label(SelectionPolicy::aggregate(), 1, 0.0), "Baseline(1T)");
  EXPECT_EQ(method_label(SelectionPolicy::aggregate(), 2, 0.0), "Agg(2T)");
  EXPECT_EQ(method_label(SelectionPolicy::alt_random(1), 5, 0.0), "Alt-Random(5T)");
  EXPECT_EQ(method_label(SelectionPolicy::alt_perm(5, 1), 5, 1e-4), "Alt-Perm(5T,\xcf\x83=0.0001)");
  EXPECT_EQ(method_file_label(SelectionPolicy::aggregate(), 5, 0.0), "agg-5t");
  EXPECT_EQ(method_file_label(SelectionPolicy::alt_perm(5, 1), 5, 1e-4), "alt-perm-5t-sigma0.0001");
}

TEST(Pipeline, PrepareIsByteIdenticalOnRerun) {
  const auto dir = testing::scratch_dir("prepare");
  ExperimentConfig cfg = tiny_experiment(dir / "a");
  run_prepare(cfg);
  cfg.workdir = dir / "b";
  run_prepare(cfg);
  for (const char* f : {"vocab.txt", "train.tok", "validation.tok", "test.tok", "public.tok"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  const auto train = read_tokenized_corpus(dir / "a" / "train.tok",
                                           read_vocabulary(dir / "a" / "vocab.txt").size());
  EXPECT_EQ(UserCorpus(train).users().size(), 10u);
}

TEST(Pipeline, UserColumnIsPreserved) {
  const auto dir = testing::scratch_dir("users");
  std::ofstream(dir / "train.txt") << "ann\ta b c\nbob\tb c\nann\tc a\n";
  std::ofstream(dir / "valid.txt") << "a b\n";
  std::ofstream(dir / "test.txt") << "c b\n";
  ExperimentConfig cfg;
  cfg.workdir = dir / "work";
  cfg.train_path = dir / "train.txt";
  cfg.validation_path = dir / "valid.txt";
  cfg.test_path = dir / "test.txt";
  cfg.num_canaries = 0;
  run_prepare(cfg);
  const auto recs = read_tokenized_corpus(dir / "work" / "train.tok", 6);
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0].user_id, "ann");
  EXPECT_EQ(recs[1].user_id, "bob");

  cfg.train_path = dir / "nope.txt";
  EXPECT_THROW(run_prepare(cfg), DataError);
}

TEST(Pipeline, ZeroCanariesLeaveCorpusUnchanged) {
  const auto dir = testing::scratch_dir("zero_canaries");
  ExperimentConfig cfg = tiny_experiment(dir);
  cfg.num_canaries = 0;
  run_prepare(cfg);
  run_insert_canaries(cfg);
  EXPECT_EQ(slurp(dir / "train.tok"), slurp(dir / "train_canaries.tok"));
  const Vocabulary v = read_vocabulary(dir / "vocab.txt");
  EXPECT_TRUE(read_ledger(dir / "ledger.json", v).empty());
}

TEST(Pipeline, TooManyCanaries) {
  const auto dir = testing::scratch_dir("many_canaries");
  ExperimentConfig cfg = tiny_experiment(dir);
  cfg.num_canaries = 11;
  run_prepare(cfg);
  EXPECT_THROW(run_insert_canaries(cfg), DataError);
}

TEST(Pipeline, MissingUpstreamNamesTheFile) {
  const auto dir = testing::scratch_dir("missing");
  const ExperimentConfig cfg = tiny_experiment(dir);
  try {
    run_train(cfg, TrainRole::kBaseline);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("vocab.txt"), std::string::npos) << e.what();
  }
  run_prepare(cfg);
  try {
    run_train(cfg, TrainRole::kStudent);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("teachers.json"), std::string::npos) << e.what();
  }
  EXPECT_THROW(run_audit(cfg, "baseline"), DataError);
  EXPECT_THROW(run_compare(cfg, {"baseline"}), DataError);
}

TEST(Pipeline, EndToEndStagesAndCompare) {
  const auto dir = testing::scratch_dir("end_to_end");
  ExperimentConfig cfg = tiny_experiment(dir);
  cfg.num_teachers = 5;
  run_prepare(cfg);
  const std::string summary = run_insert_canaries(cfg);
  EXPECT_NE(summary.find("group p=0.05"), std::string::npos);
  const Vocabulary vocab = read_vocabulary(dir / "vocab.txt");
  EXPECT_EQ(read_ledger(dir / "ledger.json", vocab).size(), 4u);

  run_train(cfg, TrainRole::kBaseline);
  run_train(cfg, TrainRole::kTeachers);
  for (int m = 0; m < 5; ++m) EXPECT_TRUE(fs::exists(dir / ("teacher_" + std::to_string(m) + ".ckpt")));
  EXPECT_FALSE(fs::exists(dir / "teacher_5.ckpt"));

  cfg.policy = "agg";
  run_train(cfg, TrainRole::kStudent);
  cfg.policy = "alt-perm:2";
  cfg.student_corpus = StudentCorpus::kPublic;
  run_train(cfg, TrainRole::kStudent);
  EXPECT_NE(slurp(dir / "logs" / "alt-perm-5t.json").find("\"canary_records_seen\": 0"),
            std::string::npos);

  run_audit(cfg, "baseline");
  run_audit(cfg, "agg-5t");
  run_audit(cfg, "alt-perm-5t");
  EXPECT_EQ(read_report(dir / "reports" / "agg-5t.json").method_name, "Agg(5T)");
  const std::string one = run_compare(cfg, {"agg-5t"});
  EXPECT_EQ(std::count(one.begin(), one.end(), '\n'), 3);
  const std::string table = run_compare(cfg, {"alt-perm-5t", "baseline", "agg-5t"});
  EXPECT_LT(table.find("Alt-Perm(5T)"), table.find("Baseline"));
  EXPECT_LT(table.find("Baseline"), table.find("Agg(5T)"));
  EXPECT_EQ(slurp(dir / "reports" / "compare.txt"), table);

  // Teachers trained for M=5 cannot serve a config asking for 3.
  cfg.num_teachers = 3;
  cfg.policy = "agg";
  EXPECT_THROW(run_train(cfg, TrainRole::kStudent), UsageError);
}

// ---- Executable --------------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ALTDISTILL_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  const auto dir = testing::scratch_dir("cli");
  {
    std::ofstream cfg(dir / "c.json");
    cfg << R"({"workdir": "work",
      "corpus": {"synthetic": {"num_words": 60, "num_classes": 6, "train": 200, "validation": 20, "test": 20}},
      "canaries": {"count": 4, "records_per_user": 20},
      "baseline": {"lm": {"embed_dim": 4, "hidden_dim": 4, "max_epochs": 1}},
      "teachers": {"m": 2, "lm": {"embed_dim": 4, "hidden_dim": 4, "max_epochs": 1}},
      "student": {"lm": {"embed_dim": 4, "hidden_dim": 4, "max_epochs": 1}},
      "audit": {"beam_width": 3, "rs_samples": 10}})";
    std::ofstream(dir / "bad.json") << R"({"teachers": {"mm": 2}})";
    std::ofstream(dir / "diverge.json")
        << R"({"workdir": "work",
      "corpus": {"synthetic": {"num_words": 60, "num_classes": 6, "train": 200, "validation": 20, "test": 20}},
      "canaries": {"count": 4, "records_per_user": 20},
      "baseline": {"lm": {"embed_dim": 4, "hidden_dim": 4, "max_epochs": 2, "lr": 1e300, "clip_norm": 1e300}}})";
  }
  const std::string c = "--config " + (dir / "c.json").string();
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("prepare"), 1);
  EXPECT_EQ(run_cli("frobnicate " + c), 1);
  EXPECT_EQ(run_cli("prepare --config " + (dir / "bad.json").string()), 1);
  EXPECT_EQ(run_cli("prepare --config " + (dir / "absent.json").string()), 1);
  EXPECT_EQ(run_cli("train --role nobody " + c), 1);
  EXPECT_EQ(run_cli("train --role baseline " + c), 2);  // nothing prepared yet
  EXPECT_EQ(run_cli("prepare " + c), 0);
  EXPECT_EQ(run_cli("audit baseline " + c), 2);  // no ledger
  EXPECT_EQ(run_cli("insert-canaries " + c), 0);
  EXPECT_EQ(run_cli("train --role baseline " + c), 0);
  EXPECT_EQ(run_cli("train --role teachers --jobs 2 " + c), 0);
  EXPECT_EQ(run_cli("train --role student --policy alt-perm:3 --sigma 0.01 " + c), 0);
  EXPECT_EQ(run_cli("train --role student --lambda 0.5 --policy agg " + c), 0);
  EXPECT_EQ(run_cli("train --role student --lambda 2 " + c), 1);
  EXPECT_EQ(run_cli("train --role student --m 3 " + c), 1);
  EXPECT_EQ(run_cli("audit baseline " + c), 0);
  EXPECT_EQ(run_cli("audit alt-perm-2t-sigma0.01 " + c), 0);
  EXPECT_EQ(run_cli("audit nothing-here " + c), 2);
  EXPECT_EQ(run_cli("compare baseline alt-perm-2t-sigma0.01 " + c), 0);
  EXPECT_EQ(run_cli("compare baseline agg-9t " + c), 2);
  EXPECT_TRUE(fs::exists(dir / "work" / "reports" / "compare.txt"));
  EXPECT_TRUE(fs::exists(dir / "work" / "student_agg-2t.ckpt"));
  EXPECT_EQ(run_cli("train --role baseline --config " + (dir / "diverge.json").string()), 3);
}

}  // namespace
}  // namespace altdistill
