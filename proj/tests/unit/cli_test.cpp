// Copyright 2026 The sirenrec Authors
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


#include "test_support.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace siren;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SIREN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("siren_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    SyntheticSpec spec;
    spec.users = 30;
    spec.items = 40;
    spec.min_per_user = 8;
    spec.mean_extra_per_user = 4;
    std::ofstream out(dir_ / "ratings.tsv");
    write_tsv(out, synthetic_ratings(spec));
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string common() const {
    return "--dataset " + (dir_ / "ratings.tsv").string() + " --splits " + (dir_ / "splits").string() +
           " --out " + (dir_ / "runs").string() + " --folds 3 --seed 4";
  }
  std::string train_flags() const {
    return common() + " --dim 8 --layers 2 --attn-dim 8 --epochs 3 --n-neg 2 --batch-size 128 --k 5,10";
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SplitIsDeterministicAndRefusesToOverwrite) {
  ASSERT_EQ(run_cli("split " + common()), 0);
  const auto first = slurp(dir_ / "splits" / "fold_0.tsv");
  EXPECT_FALSE(first.empty());
  EXPECT_TRUE(fs::exists(dir_ / "splits" / "fold_2.tsv"));
  EXPECT_EQ(run_cli("split " + common()), 1);
  ASSERT_EQ(run_cli("split " + common() + " --force"), 0);
  EXPECT_EQ(slurp(dir_ / "splits" / "fold_0.tsv"), first);
  ASSERT_EQ(run_cli("split " + common() + " --force --seed 5"), 0);
  EXPECT_NE(slurp(dir_ / "splits" / "fold_0.tsv"), first);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run_cli("split " + common() + " --folds 1"), 1);
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("train " + common() + " --variant sideways"), 1);
  EXPECT_EQ(run_cli("train " + common() + " --no-such-flag 3"), 1);
  EXPECT_EQ(run_cli("evaluate " + common()), 1);
}

TEST_F(CliTest, DataErrors) {
  EXPECT_EQ(run_cli("split --dataset " + (dir_ / "missing.tsv").string() + " --splits " + (dir_ / "s").string()), 2);
  std::ofstream(dir_ / "bad.tsv") << "1\t2\t9\t0\n";
  EXPECT_EQ(run_cli("split --dataset " + (dir_ / "bad.tsv").string() + " --splits " + (dir_ / "s").string()), 2);
  EXPECT_EQ(run_cli("train " + common()), 2);  // no manifests yet
}

TEST_F(CliTest, TrainEvaluateRoundTrip) {
  ASSERT_EQ(run_cli("split " + common()), 0);
  ASSERT_EQ(run_cli("train " + train_flags() + " --checkpoint-every 2"), 0);
  const auto run = dir_ / "runs" / "mlp-gn-lightgcn-sign-aware-bpr-fold0-seed4";
  ASSERT_TRUE(fs::exists(run / "checkpoints" / "final.ckpt"));
  EXPECT_TRUE(fs::exists(run / "checkpoints" / "epoch_2.ckpt"));
  EXPECT_TRUE(fs::exists(run / "checkpoints" / "embeddings.bin"));
  const auto csv = slurp(run / "logs" / "train.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,mean_loss,regularization,triples");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  ASSERT_EQ(run_cli("evaluate --run " + run.string()), 0);
  const auto metrics = slurp(run / "reports" / "metrics.csv");
  EXPECT_EQ(metrics.substr(0, metrics.find('\n')), "K,metric,value,group");
  EXPECT_NE(metrics.find("10,ndcg,"), std::string::npos);
  EXPECT_TRUE(fs::exists(run / "reports" / "metrics.txt"));

  std::ifstream ck(run / "checkpoints" / "final.ckpt", std::ios::binary);
  const auto loaded = load_checkpoint(ck);
  EXPECT_EQ(loaded.config.variant, Variant::kMlpGn);
  EXPECT_EQ(loaded.config.dim, 8u);
}

TEST_F(CliTest, AggregatesAcrossFolds) {
  ASSERT_EQ(run_cli("split " + common()), 0);
  std::string runs;
  for (int f = 0; f < 3; ++f) {
    ASSERT_EQ(run_cli("train " + train_flags() + " --variant no-gn --fold " + std::to_string(f)), 0);
    runs += " --run " + (dir_ / "runs" / ("no-gn-lightgcn-sign-aware-bpr-fold" + std::to_string(f) + "-seed4")).string();
  }
  ASSERT_EQ(run_cli("evaluate" + runs + " --aggregate-out " + (dir_ / "agg").string()), 0);
  const auto agg = slurp(dir_ / "agg" / "aggregate.csv");
  EXPECT_EQ(agg.substr(0, agg.find('\n')), "K,metric,mean,std,group,runs");
  EXPECT_NE(agg.find(",all,3"), std::string::npos);
}

TEST_F(CliTest, CorruptCheckpointIsRejected) {
  ASSERT_EQ(run_cli("split " + common()), 0);
  ASSERT_EQ(run_cli("train " + train_flags() + " --variant no-gn --epochs 1"), 0);
  const auto run = dir_ / "runs" / "no-gn-lightgcn-sign-aware-bpr-fold0-seed4";
  std::ofstream(run / "checkpoints" / "final.ckpt", std::ios::binary) << "garbage";
  EXPECT_EQ(run_cli("evaluate --run " + run.string()), 2);
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
  ASSERT_EQ(run_cli("split " + common()), 0);
  std::ofstream(dir_ / "exp.conf") << "# toy run\nvariant=gnn-gn\nbackbone=ngcf\ndim=4\nattn-dim=4\nlayers=1\n"
                                      "epochs=2\nn-neg=1\nbatch-size=256\nk=5\n";
  ASSERT_EQ(run_cli("train --config " + (dir_ / "exp.conf").string() + " " + common() + " --backbone lrgccf"), 0);
  const auto run = dir_ / "runs" / "gnn-gn-lrgccf-sign-aware-bpr-fold0-seed4";
  ASSERT_TRUE(fs::exists(run / "config"));
  std::ifstream in(run / "config");
  const auto cfg = read_config(in);
  EXPECT_EQ(cfg.model.backbone, Backbone::kLrGccf);
  EXPECT_EQ(cfg.model.variant, Variant::kGnnGn);
  EXPECT_EQ(cfg.model.dim, 4u);
  EXPECT_EQ(cfg.seed, 4u);
}

TEST_F(CliTest, RepeatedRunsAreBitwiseIdentical) {
  ASSERT_EQ(run_cli("split " + common()), 0);
  const auto run = dir_ / "runs" / "mlp-gn-lightgcn-sign-aware-bpr-fold1-seed4";
  std::string csv[2], report[2];
  for (int n = 0; n < 2; ++n) {
    ASSERT_EQ(run_cli("train " + train_flags() + " --fold 1 --threads 1"), 0);
    ASSERT_EQ(run_cli("evaluate --threads 1 --run " + run.string()), 0);
    csv[n] = slurp(run / "logs" / "train.csv");
    report[n] = slurp(run / "reports" / "metrics.csv");
  }
  EXPECT_EQ(csv[0], csv[1]);
  EXPECT_EQ(report[0], report[1]);
}

TEST_F(CliTest, DiagnoseExitCodes) {
  EXPECT_EQ(run_cli("diagnose"), 0);
  EXPECT_EQ(run_cli("diagnose --inject-gradient-bug"), 3);
}

TEST(ConfigText, RoundTripsEveryKey) {
  ExperimentConfig c;
  c.dataset = "a.tsv";
  c.model.backbone = Backbone::kNgcf;
  c.model.variant = Variant::kNoSplit;
  c.train.loss = LossKind::kStandard;
  c.train.noise_degree = NoiseDegree::kPositive;
  c.train.positive_only = true;
  c.ks = {1, 20};
  c.seed = 99;
  c.w_o = 3.0;
  std::stringstream s;
  write_config(s, c);
  const auto back = read_config(s);
  std::stringstream t;
  write_config(t, back);
  EXPECT_EQ(s.str(), t.str());
  EXPECT_EQ(back.train.seed, 99u);
  std::stringstream bad("colour=blue\n");
  EXPECT_THROW(read_config(bad), std::invalid_argument);
  std::stringstream noeq("dim 4\n");
  EXPECT_THROW(read_config(noeq), ParseError);
}

TEST(RunId, EncodesTheExperiment) {
  ExperimentConfig c;
  c.model.variant = Variant::kNoGn;
  c.train.loss = LossKind::kStandard;
  c.train.positive_only = true;
  c.fold = 3;
  c.seed = 7;
  EXPECT_EQ(run_id(c), "no-gn-lightgcn-standard-bpr-posonly-fold3-seed7");
}
