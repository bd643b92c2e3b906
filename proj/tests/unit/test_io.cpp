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

#include <cmath>
#include <fstream>
#include <sstream>

#include "selcal/error.hpp"
#include "selcal/io.hpp"
#include "test_util.hpp"

namespace selcal {
namespace {

using testing::temp_path;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TrainedModel small_model(RecalibratorParams recal) {
  TrainedModel m;
  m.config.hidden_dims = {5, 3};
  m.config.seed = 42;
  m.selector = init_selector(4, {5, 3}, 7);
  m.recalibrator = std::move(recal);
  m.loss_trace = {1.0, 0.5, 0.25};
  m.initial_loss = 1.0;
  m.final_loss = 0.25;
  return m;
}

TEST(Base64, KnownVectors) {
  const auto enc = [](const std::string& s) {
    return base64_encode(std::vector<std::uint8_t>(s.begin(), s.end()));
  };
  EXPECT_EQ(enc(""), "");
  EXPECT_EQ(enc("f"), "Zg==");
  EXPECT_EQ(enc("fo"), "Zm8=");
  EXPECT_EQ(enc("foo"), "Zm9v");
  EXPECT_EQ(enc("foobar"), "Zm9vYmFy");
  const auto dec = base64_decode("Zm9vYmE=");
  EXPECT_EQ(std::string(dec.begin(), dec.end()), "fooba");
  EXPECT_THROW(base64_decode("Zm9"), CorruptionError);
  EXPECT_THROW(base64_decode("Zm9*"), CorruptionError);
  EXPECT_THROW(base64_decode("Z=9v"), CorruptionError);
}

TEST(Base64, RandomRoundTrip) {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::uint8_t> bytes(rng.index(64));
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng.index(256));
    EXPECT_EQ(base64_decode(base64_encode(bytes)), bytes);
  }
}

TEST(EncodeF32, LittleEndianLayout) {
  const double v[] = {1.0, -2.5};
  const auto bytes = base64_decode(encode_f32(v, 2));
  ASSERT_EQ(bytes.size(), 8u);
  EXPECT_EQ(bytes[0], 0x00);
  EXPECT_EQ(bytes[3], 0x3f);
  EXPECT_EQ(bytes[7], 0xc0);
  EXPECT_EQ(decode_f32(encode_f32(v, 2), 2), (std::vector<double>{1.0, -2.5}));
  EXPECT_THROW(decode_f32(encode_f32(v, 2), 3), CorruptionError);
}

TEST(ModelFile, RoundTripAllRecalibrators) {
  HistogramBins hb{{0.0, 0.6, 1.0}, {0.55, 0.9}};
  const std::vector<RecalibratorParams> kinds{Temperature{0.3}, Platt{-2.0, 0.5}, hb,
                                              PlattBins{Platt{-1.5, 0.1}, hb}};
  for (const auto& r : kinds) {
    auto m = small_model(r);
    m.selector.tau = 0.625;
    const auto p1 = temp_path("model_a.json"), p2 = temp_path("model_b.json");
    save_model(m, p1);
    const auto back = load_model(p1);
    EXPECT_EQ(kind_of(back.recalibrator), kind_of(m.recalibrator));
    EXPECT_EQ(trainable_parameters(back.recalibrator), trainable_parameters(m.recalibrator));
    EXPECT_EQ(back.selector.hidden_dims, m.selector.hidden_dims);
    ASSERT_EQ(back.selector.weights.size(), m.selector.weights.size());
    for (std::size_t i = 0; i < m.selector.weights.size(); ++i) {
      EXPECT_EQ(back.selector.weights[i], static_cast<double>(static_cast<float>(m.selector.weights[i])));
    }
    EXPECT_EQ(back.selector.tau, m.selector.tau);
    EXPECT_EQ(back.config.seed, 42u);
    EXPECT_EQ(back.loss_trace, m.loss_trace);
    save_model(back, p2);
    EXPECT_EQ(slurp(p1), slurp(p2));
  }
}

TEST(ModelFile, SchemaFields) {
  const auto m = small_model(Temperature{0.0});
  const Json j = to_json(m);
  EXPECT_EQ(j.at("format_version"), kModelFormatVersion);
  EXPECT_EQ(j.at("recalibrator").at("kind"), "temperature");
  EXPECT_TRUE(j.at("selector").at("tau").is_null());
  EXPECT_EQ(j.at("selector").at("layers").size(), 3u);
  EXPECT_EQ(j.at("selector").at("layers")[0].at("shape"), Json::array({5, 4}));
  EXPECT_EQ(j.at("provenance").at("seed"), 42);
  EXPECT_EQ(j.at("provenance").at("tool_version"), kToolVersion);
  EXPECT_EQ(j.at("train_config").at("mode"), "joint");
}

TEST(ModelFile, RejectsBadDocuments) {
  Json j = to_json(small_model(Temperature{0.0}));
  Json bad = j;
  bad["format_version"] = 99;
  EXPECT_THROW(model_from_json(bad), FormatError);
  bad = j;
  bad["selector"]["layers"][0]["weights"] = "AAAA";
  EXPECT_THROW(model_from_json(bad), ValidationError);
  bad = j;
  bad["recalibrator"]["kind"] = "isotonic";
  EXPECT_THROW(model_from_json(bad), ValidationError);
  bad = j;
  bad.erase("selector");
  EXPECT_THROW(model_from_json(bad), ValidationError);

  const auto p = temp_path("garbage.json");
  write_text(p, "{ not json");
  EXPECT_THROW(load_model(p), FormatError);
  EXPECT_THROW(load_model(temp_path("does_not_exist.json")), IoError);
}

TEST(TrainConfigJson, PresetAndOverrides) {
  const Json j = Json::parse(R"({"preset": "camelyon", "epochs": 3, "loss": {"lambda": 4}})");
  const auto c = train_config_from_json(j);
  EXPECT_EQ(c.epochs, 3u);
  EXPECT_EQ(c.loss.lambda, 4.0);
  EXPECT_EQ(c.recalibrator, RecalibratorKind::kPlatt);
  EXPECT_EQ(c.learning_rate, 5e-4);
  const auto back = train_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_THROW(train_config_from_json(Json::parse(R"({"preset": "cifar"})")), ValidationError);
  EXPECT_THROW(train_config_from_json(Json::parse(R"({"epochs": "many"})")), ValidationError);
  EXPECT_THROW(train_config_from_json(Json::parse(R"({"loss": {"kind": "focal"}})")),
               ValidationError);
  EXPECT_THROW(train_config_from_json(Json::parse("[1, 2]")), ValidationError);
}

TEST(SyntheticSpecJson, MatchesRadiusWhenAbsent) {
  const Json j = Json::parse(R"({"theta_star": [1, 0, 0, 0], "sigma": 0.2, "alpha": 0.3,
                                 "r2": 0.2, "beta_mix": 0.8})");
  const auto s = synthetic_spec_from_json(j);
  EXPECT_NEAR(s.r1, SyntheticSpec::reference().r1, 1e-12);
  EXPECT_NO_THROW(s.validate());
  Json bad = j;
  bad["alpha"] = 0.7;
  try {
    synthetic_spec_from_json(bad);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("alpha"), std::string::npos);
  }
  const auto back = synthetic_spec_from_json(to_json(s));
  EXPECT_EQ(back.r1, s.r1);
}

TEST(Csv, Formats) {
  std::vector<EvalReport> reports(2);
  reports[0].beta_target = 0.5;
  reports[0].ece1 = 0.1;
  reports[1].beta_target = 1.0;
  reports[1].ece1 = 0.3;
  const auto csv = curve_csv(make_curve(reports));
  std::istringstream in(csv);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "beta,ece1,ece2,brier,accuracy");
  EXPECT_EQ(lines[3].rfind("auc,", 0), 0u);

  const auto rows = sweep_csv({SweepRow{0.2, 0.3, 0.8, 1, 2, 3, 4, 5}});
  EXPECT_EQ(rows.substr(0, rows.find('\n')),
            "sigma,alpha,beta,min_rece,min_sece,srece_g0_T0,ece_r_then_s,ece_s_then_r");
  EXPECT_EQ(bins_csv({}).substr(0, 35), "bin_index,mean_conf,accuracy,count\n");
  EXPECT_EQ(ranking_csv(Ranking{{0.5}, "x"}).substr(0, 12), "index,score\n");
}

TEST(WriteText, AtomicReplace) {
  const auto p = temp_path("atomic.txt");
  write_text(p, "one");
  write_text(p, "two");
  EXPECT_EQ(slurp(p), "two");
  EXPECT_FALSE(std::filesystem::exists(p.string() + ".tmp"));
}

}  // namespace
}  // namespace selcal
