/*
 * Copyright 2026 The selcal Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "selcal/dataset.hpp"
#include "selcal/io.hpp"
#include "test_util.hpp"

namespace selcal {
namespace {

namespace fs = std::filesystem;
using testing::temp_path;

const fs::path kData = SELCAL_TEST_DATA;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the CLI; stderr goes to err_path when given.
int run(const std::string& args, const fs::path& err_path = {}) {
  std::string cmd = std::string(SELCAL_BINARY) + " " + args;
  cmd += err_path.empty() ? " 2>/dev/null" : " 2>" + err_path.string();
  cmd += " >/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = temp_path("cli");
    fs::create_directories(dir_);
    spec_ = (kData / "theory_reference_spec.json").string();
    write_text(dir_ / "train.json",
               R"({"hidden_dims": [8], "epochs": 5, "batch_size": 64, "seed": 3,
                   "loss": {"kind": "s_tlbce", "lambda": 32, "beta": 0.8}})");
    ASSERT_EQ(run("gen-synth --config " + spec_ + " --n 2000 --seed 1 --out " + p("train.selc")), 0);
    ASSERT_EQ(run("gen-synth --config " + spec_ + " --n 3000 --seed 2 --out " + p("test.selc")), 0);
    ASSERT_EQ(run("train --data " + p("train.selc") + " --config " + p("train.json") + " --out " +
                  p("model.json")),
              0);
  }

  static std::string p(const std::string& name) { return (dir_ / name).string(); }

  static fs::path dir_;
  static std::string spec_;
};

fs::path CliTest::dir_;
std::string CliTest::spec_;

TEST_F(CliTest, GenSynthShapeAndDeterminism) {
  ASSERT_EQ(run("gen-synth --config " + spec_ + " --n 1000 --seed 9 --out " + p("a.selc")), 0);
  ASSERT_EQ(run("gen-synth --config " + spec_ + " --n 1000 --seed 9 --out " + p("b.selc")), 0);
  const auto d = load_dataset(p("a.selc"));
  EXPECT_EQ(d.size(), 1000u);
  EXPECT_EQ(d.num_classes(), 2u);
  EXPECT_EQ(d.embed_dim(), 4u);
  EXPECT_EQ(slurp(p("a.selc")), slurp(p("b.selc")));
}

TEST_F(CliTest, GenSynthInvalidAlphaExitsTwo) {
  Json j = read_json(spec_);
  j["alpha"] = 0.7;
  write_json(p("bad_spec.json"), j);
  EXPECT_EQ(run("gen-synth --config " + p("bad_spec.json") + " --n 10 --out " + p("x.selc"),
                p("err.txt")),
            2);
  EXPECT_NE(slurp(p("err.txt")).find("alpha"), std::string::npos);
  EXPECT_FALSE(fs::exists(p("x.selc")));
}

TEST_F(CliTest, EvalMeetsCoverage) {
  ASSERT_EQ(run("eval --data " + p("test.selc") + " --model " + p("model.json") +
                " --beta 0.9 --out " + p("report.json")),
            0);
  const Json r = read_json(p("report.json"));
  EXPECT_GE(r.at("coverage_achieved").get<double>(), 0.9);
  EXPECT_EQ(r.at("beta_target").get<double>(), 0.9);
  EXPECT_EQ(r.at("num_bins").get<int>(), 15);
}

TEST_F(CliTest, EvalThresholdFromTuningSplit) {
  const std::string base = "eval --model " + p("model.json") + " --beta 0.8 ";
  ASSERT_EQ(run(base + "--data " + p("train.selc") + " --out " + p("tune_self.json")), 0);
  ASSERT_EQ(run(base + "--data " + p("test.selc") + " --tune-data " + p("train.selc") +
                " --out " + p("tuned.json")),
            0);
  const Json self = read_json(p("tune_self.json"));
  const Json tuned = read_json(p("tuned.json"));
  EXPECT_EQ(self.at("tau_source"), "eval_data");
  EXPECT_EQ(tuned.at("tau_source"), "tune_data");
  EXPECT_EQ(tuned.at("tau").get<double>(), self.at("tau").get<double>());
  EXPECT_EQ(tuned.at("n_total").get<int>(), 3000);
  EXPECT_NEAR(tuned.at("coverage_achieved").get<double>(), 0.8, 0.05);

  const auto other = testing::random_dataset(100, 7, 2, 0);
  save_dataset(other, p("tune7.selc"));
  EXPECT_EQ(run(base + "--data " + p("test.selc") + " --tune-data " + p("tune7.selc") +
                    " --out " + p("r.json"),
                p("err.txt")),
            2);
  EXPECT_NE(slurp(p("err.txt")).find("embed_dim"), std::string::npos);
}

TEST_F(CliTest, SweepRowCount) {
  ASSERT_EQ(run("sweep --data " + p("test.selc") + " --model " + p("model.json") +
                " --beta-grid 0.5:1.0:0.05 --out " + p("curve.csv")),
            0);
  std::istringstream in(slurp(p("curve.csv")));
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 13u);
  EXPECT_EQ(lines.front(), "beta,ece1,ece2,brier,accuracy");
  EXPECT_EQ(lines.back().rfind("auc,", 0), 0u);
  EXPECT_EQ(lines[1].rfind("0.5,", 0), 0u);
  EXPECT_EQ(lines[11].rfind("1,", 0), 0u);
}

TEST_F(CliTest, EmbedDimMismatchExitsTwo) {
  const auto other = testing::random_dataset(100, 7, 2, 0);
  save_dataset(other, p("seven.selc"));
  EXPECT_EQ(run("eval --data " + p("seven.selc") + " --model " + p("model.json") + " --out " +
                    p("r.json"),
                p("err.txt")),
            2);
  const auto err = slurp(p("err.txt"));
  EXPECT_NE(err.find('7'), std::string::npos) << err;
  EXPECT_NE(err.find('4'), std::string::npos) << err;
  EXPECT_NE(err.find("embed_dim"), std::string::npos) << err;
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run("--version"), 0);
  EXPECT_EQ(run("eval --data " + p("missing.selc") + " --model " + p("model.json") + " --out " +
                p("r.json")),
            2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("baseline --data " + p("test.selc") + " --model " + p("model.json") +
                " --method svm --out " + p("r.json")),
            2);
  write_text(p("corrupt.selc"), "SELCjunk");
  EXPECT_EQ(run("eval --data " + p("corrupt.selc") + " --model " + p("model.json") + " --out " +
                p("r.json")),
            2);
  write_text(p("bad_train.json"), R"({"epochs": -1})");
  EXPECT_EQ(run("train --data " + p("train.selc") + " --config " + p("bad_train.json") +
                " --out " + p("m.json")),
            2);
}

TEST_F(CliTest, BaselinesRun) {
  for (const std::string m : {"confidence", "iforest", "mahalanobis"}) {
    ASSERT_EQ(run("baseline --data " + p("test.selc") + " --model " + p("model.json") +
                  " --method " + m + " --beta 0.8 --seed 1 --out " + p("b_" + m + ".json")),
              0)
        << m;
    const Json r = read_json(p("b_" + m + ".json"));
    EXPECT_EQ(r.at("method"), m);
    EXPECT_GE(r.at("coverage_achieved").get<double>(), 0.8);
  }
}

TEST_F(CliTest, CommandsAreIdempotentAndLeaveInputsAlone) {
  const auto data_before = slurp(p("test.selc"));
  const auto model_before = slurp(p("model.json"));
  const std::vector<std::pair<std::string, std::string>> cmds{
      {"train --data " + p("train.selc") + " --config " + p("train.json") + " --out ", "m"},
      {"eval --data " + p("test.selc") + " --model " + p("model.json") + " --out ", "e"},
      {"sweep --data " + p("test.selc") + " --model " + p("model.json") + " --out ", "s"},
      {"reliability --data " + p("test.selc") + " --model " + p("model.json") + " --out ", "r"},
      {"baseline --data " + p("test.selc") + " --model " + p("model.json") + " --method iforest --seed 4 --ranking-out " +
           p("rank.csv") + " --out ",
       "b"},
  };
  for (const auto& [cmd, tag] : cmds) {
    ASSERT_EQ(run(cmd + p(tag + "1")), 0) << cmd;
    ASSERT_EQ(run(cmd + p(tag + "2")), 0) << cmd;
    EXPECT_EQ(slurp(p(tag + "1")), slurp(p(tag + "2"))) << cmd;
  }
  EXPECT_EQ(slurp(p("test.selc")), data_before);
  EXPECT_EQ(slurp(p("model.json")), model_before);
}

TEST_F(CliTest, TrainSeedOverrideChangesModel) {
  ASSERT_EQ(run("train --data " + p("train.selc") + " --config " + p("train.json") +
                " --seed 11 --out " + p("m11.json")),
            0);
  EXPECT_NE(slurp(p("m11.json")), slurp(p("model.json")));
  EXPECT_EQ(read_json(p("m11.json")).at("provenance").at("seed"), 11);
}

TEST_F(CliTest, TheoryReportWritten) {
  Json j = read_json(spec_);
  j.erase("sweep");
  write_json(p("spec_nosweep.json"), j);
  ASSERT_EQ(run("theory --config " + p("spec_nosweep.json") + " --seed 0 --out " + p("t1.json")), 0);
  const Json r = read_json(p("t1.json"));
  EXPECT_LT(r.at("srece_g0_t0").get<double>(), 1e-3);
  EXPECT_TRUE(r.at("checks").contains("passed"));
}

}  // namespace
}  // namespace selcal
