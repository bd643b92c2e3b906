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
#include <set>

#include "selcal/error.hpp"
#include "selcal/recalibrate.hpp"
#include "selcal/rng.hpp"
#include "test_util.hpp"

namespace selcal {
namespace {

using testing::rel_err;

TEST(Temperature, ApplyExamples) {
  const std::vector<double> zero{0.0, 0.0};
  for (double lt : {-2.0, 0.0, 3.0}) {
    const auto p = temperature_apply(Temperature{lt}, zero);
    EXPECT_DOUBLE_EQ(p[0], 0.5);
  }
  const std::vector<double> l3{std::log(3.0), 0.0};
  const auto p = temperature_apply(Temperature{0.0}, l3);
  EXPECT_NEAR(p[0], 0.75, 1e-15);
  EXPECT_NEAR(p[1], 0.25, 1e-15);
  const std::vector<double> l4{4.0, 0.0};
  const auto q = temperature_apply(Temperature{std::log(1e6)}, l4);
  EXPECT_NEAR(q[0], 0.5, 1e-5);
}

TEST(Temperature, RowsSumToOneAndRankPreserved) {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> l(6);
    for (auto& v : l) v = 3.0 * rng.normal();
    const double lt = rng.uniform(-3.0, 3.0);
    const auto p = temperature_apply(Temperature{lt}, l);
    double s = 0.0;
    for (double v : p) s += v;
    EXPECT_NEAR(s, 1.0, 1e-9);
    EXPECT_EQ(argmax(p), argmax(l));
  }
}

TEST(Platt, ApplyExamples) {
  EXPECT_DOUBLE_EQ(platt_apply(Platt{0.0, 0.0}, 0.3), 0.5);
  EXPECT_NEAR(platt_apply(Platt{-2.0, 0.0}, 1.0), 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
  EXPECT_NEAR(platt_apply(Platt{-2.0, 0.0}, 1.0), 0.88080, 1e-5);
  EXPECT_DOUBLE_EQ(platt_apply(Platt{-2.0, 1.0}, 0.5), 0.5);
}

TEST(Platt, TopLabelIsMaxOfBothSides) {
  const std::vector<float> logits{0.0f, 2.0f};
  const auto pt = recalibrate_point(Platt{-1.0, 0.0}, logits, 1);
  const double h = platt_apply(Platt{-1.0, 0.0}, softmax(std::span<const float>(logits))[1]);
  EXPECT_DOUBLE_EQ(pt.top_conf, std::max(h, 1.0 - h));
  EXPECT_EQ(pt.pred, 1u);
  const std::vector<float> three{0.f, 1.f, 2.f};
  EXPECT_THROW(recalibrate_point(Platt{}, three, 0), ValidationError);
}

TEST(Recalibrate, ParameterGradientsMatchFiniteDifferences) {
  Rng rng(8);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t k = 2 + rng.index(4);
    std::vector<float> logits(k);
    for (auto& v : logits) v = static_cast<float>(2.0 * rng.normal());
    const auto label = static_cast<std::uint32_t>(rng.index(k));
    std::vector<RecalibratorParams> cases{Temperature{rng.uniform(-1.0, 1.0)}};
    if (k == 2) cases.push_back(Platt{rng.uniform(-4.0, 4.0), rng.uniform(-2.0, 2.0)});
    for (const auto& params : cases) {
      const auto pt = recalibrate_point(params, logits, label);
      auto theta = trainable_parameters(params);
      for (std::size_t j = 0; j < theta.size(); ++j) {
        constexpr double kStep = 1e-5;
        auto up = params, down = params;
        auto tu = theta, td = theta;
        tu[j] += kStep;
        td[j] -= kStep;
        set_trainable_parameters(up, tu);
        set_trainable_parameters(down, td);
        const auto pu = recalibrate_point(up, logits, label);
        const auto pd = recalibrate_point(down, logits, label);
        if (pu.pred != pt.pred || pd.pred != pt.pred) continue;  // crossed the decision flip
        worst = std::max(worst, rel_err(pt.d_top[j], (pu.top_conf - pd.top_conf) / (2 * kStep)));
        worst = std::max(worst, rel_err(pt.d_label[j], (pu.label_prob - pd.label_prob) / (2 * kStep)));
      }
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Recalibrate, BceGradientMatchesFiniteDifferences) {
  const auto d = testing::calibrated_dataset(200, 2, 12);
  for (const RecalibratorParams& params :
       {RecalibratorParams{Temperature{0.3}}, RecalibratorParams{Platt{-2.5, 0.7}}}) {
    std::vector<double> grad;
    top_label_bce(params, d, &grad);
    auto theta = trainable_parameters(params);
    for (std::size_t j = 0; j < theta.size(); ++j) {
      constexpr double kStep = 1e-5;
      auto up = params, down = params;
      auto tu = theta, td = theta;
      tu[j] += kStep;
      td[j] -= kStep;
      set_trainable_parameters(up, tu);
      set_trainable_parameters(down, td);
      const double fd = (top_label_bce(up, d) - top_label_bce(down, d)) / (2 * kStep);
      EXPECT_LT(rel_err(grad[j], fd), 1e-4);
    }
  }
}

TEST(Fit, TemperatureOnCalibratedData) {
  const auto d = testing::calibrated_dataset(10000, 4, 21);
  const auto fit = fit_recalibrator(d, RecalibratorKind::kTemperature);
  const double t = std::get<Temperature>(fit.params).temperature();
  EXPECT_GE(t, 0.9);
  EXPECT_LE(t, 1.1);
  EXPECT_LE(fit.final_loss, fit.initial_loss);
  EXPECT_FALSE(fit.warning);
}

TEST(Fit, TemperatureUndoesDoubledLogits) {
  const auto d = testing::calibrated_dataset(10000, 4, 21, 2.0, 0, 2.0);
  const auto fit = fit_recalibrator(d, RecalibratorKind::kTemperature);
  const double t = std::get<Temperature>(fit.params).temperature();
  EXPECT_GE(t, 1.8);
  EXPECT_LE(t, 2.2);
}

TEST(Fit, PlattIsIncreasingOnBinaryData) {
  const auto d = testing::calibrated_dataset(4000, 2, 5);
  const auto fit = fit_recalibrator(d, RecalibratorKind::kPlatt);
  const auto& p = std::get<Platt>(fit.params);
  EXPECT_LT(p.w, 0.0);
  double prev = -1.0;
  for (int i = 0; i <= 100; ++i) {
    const double h = platt_apply(p, i / 100.0);
    EXPECT_GE(h, prev);
    prev = h;
  }
  EXPECT_LE(fit.final_loss, fit.initial_loss);
}

TEST(Fit, DegenerateLabelsWarn) {
  const CalibrationDataset one("one", 1, 0, 2, {}, {0.f, 1.f}, {1});
  const auto fit = fit_recalibrator(one, RecalibratorKind::kTemperature);
  EXPECT_TRUE(fit.warning);
  EXPECT_LE(std::abs(std::get<Temperature>(fit.params).log_t), kMaxAbsLogT);
  EXPECT_LE(fit.final_loss, fit.initial_loss);

  const CalibrationDataset empty("empty", 0, 0, 2, {}, {}, {});
  EXPECT_THROW(fit_recalibrator(empty, RecalibratorKind::kTemperature), ValidationError);
  const auto three = testing::calibrated_dataset(10, 3, 1);
  EXPECT_THROW(fit_recalibrator(three, RecalibratorKind::kPlatt), ValidationError);
}

TEST(Fit, Deterministic) {
  const auto d = testing::calibrated_dataset(1000, 3, 2);
  const auto a = fit_recalibrator(d, RecalibratorKind::kTemperature);
  const auto b = fit_recalibrator(d, RecalibratorKind::kTemperature);
  EXPECT_EQ(std::get<Temperature>(a.params).log_t, std::get<Temperature>(b.params).log_t);
}

TEST(Histogram, Examples) {
  const std::vector<double> conf{0.6, 0.6, 0.9, 0.9};
  const std::vector<std::uint8_t> correct{1, 0, 1, 0};
  const auto two = histogram_binning_fit(conf, correct, 2);
  ASSERT_EQ(two.values.size(), 2u);
  EXPECT_DOUBLE_EQ(two.values[0], 0.5);
  EXPECT_DOUBLE_EQ(two.values[1], 0.5);

  const auto one = histogram_binning_fit(conf, correct, 1);
  for (double c : {0.0, 0.3, 0.99, 1.0}) EXPECT_DOUBLE_EQ(histogram_binning_apply(one, c), 0.5);

  EXPECT_THROW(histogram_binning_fit(conf, correct, 5), ValidationError);
}

TEST(Histogram, EdgesAreLeftClosed) {
  const HistogramBins b{{0.0, 0.5, 1.0}, {0.2, 0.8}};
  EXPECT_DOUBLE_EQ(histogram_binning_apply(b, 0.5), 0.8);
  EXPECT_DOUBLE_EQ(histogram_binning_apply(b, 0.4999), 0.2);
  EXPECT_DOUBLE_EQ(histogram_binning_apply(b, 1.0), 0.8);
  EXPECT_DOUBLE_EQ(histogram_binning_apply(b, 0.0), 0.2);
  HistogramBins bad{{0.0, 0.5, 0.4, 1.0}, {0.1, 0.1, 0.1}};
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(Histogram, PiecewiseConstantWithAtMostMValues) {
  const auto d = testing::calibrated_dataset(3000, 3, 6);
  const auto bins = histogram_binning_fit(d, 15);
  std::set<double> distinct;
  for (int i = 0; i <= 1000; ++i) distinct.insert(histogram_binning_apply(bins, i / 1000.0));
  EXPECT_LE(distinct.size(), 15u);
}

TEST(PlattBinning, Examples) {
  CalibrationDataset d("pb", 4, 0, 2, {}, {0.f, 0.4f, 0.f, 0.4f, 0.f, 2.2f, 0.f, 2.2f}, {1, 0, 1, 0});
  const auto forced = platt_binning_fit(d, Platt{0.0, 0.0}, 2);
  const auto base = derive_outputs(d);
  double acc = 0.0;
  for (auto c : base.correct) acc += c;
  acc /= 4.0;
  for (double v : forced.bins.values) EXPECT_DOUBLE_EQ(v, acc);

  const auto composed = platt_binning_fit(d, Platt{-1.0, 0.0}, 2);
  ASSERT_EQ(composed.bins.values.size(), 2u);
  EXPECT_DOUBLE_EQ(composed.bins.values[0], 0.5);
  EXPECT_DOUBLE_EQ(composed.bins.values[1], 0.5);

  const auto bin = testing::calibrated_dataset(40, 2, 8);
  const auto full = platt_binning_fit(bin, 40);
  for (double v : full.bins.values) EXPECT_TRUE(v == 0.0 || v == 1.0);
}

TEST(Recalibrate, KindNames) {
  for (auto k : {RecalibratorKind::kTemperature, RecalibratorKind::kPlatt,
                 RecalibratorKind::kHistogram, RecalibratorKind::kPlattBinning}) {
    EXPECT_EQ(recalibrator_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(recalibrator_kind_from_string("dirichlet"), ValidationError);
}

}  // namespace
}  // namespace selcal
