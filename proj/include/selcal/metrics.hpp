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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "selcal/dataset.hpp"
#include "selcal/recalibrate.hpp"
#include "selcal/train.hpp"

namespace selcal {

inline constexpr std::size_t kDefaultBins = 15;

struct ReliabilityBin {
  double mean_conf = 0.0;
  double accuracy = 0.0;
  std::size_t count = 0;
};

// Equal-mass bins over instances sorted by confidence. Sizes differ by at
// most one; the larger bins hold the lower confidences.
std::vector<ReliabilityBin> reliability_bins(std::span<const double> top_conf,
                                             std::span<const std::uint8_t> correct,
                                             std::size_t num_bins);

// ( (1/m) sum_j |acc_j - conf_j|^q )^(1/q)
double ece(std::span<const double> top_conf, std::span<const std::uint8_t> correct,
           double q = 1.0, std::size_t num_bins = kDefaultBins);

// Top-label Brier score: mean (conf - correct)^2.
double brier(std::span<const double> top_conf, std::span<const std::uint8_t> correct);

struct EvalReport {
  double beta_target = 1.0;
  double coverage_achieved = 1.0;
  double tau = 0.0;
  double ece1 = 0.0;
  double ece2 = 0.0;
  double brier = 0.0;
  double selective_accuracy = 0.0;
  std::size_t n_total = 0;
  std::size_t n_accepted = 0;
  std::size_t num_bins = kDefaultBins;
  std::vector<ReliabilityBin> bins;
  bool reduced_bins = false;          // fewer accepted points than requested bins
  bool degenerate_threshold = false;  // ties at tau accept everything for beta < 1
  bool tau_from_tuning = false;
};

// Thresholds the given selector scores at coverage beta and evaluates the
// recalibrated outputs on the accepted subset.
EvalReport evaluate_selection(std::span<const double> scores,
                              const RecalibratedOutputs& outputs, double beta,
                              std::size_t num_bins = kDefaultBins);

// Evaluates a fixed acceptance mask (no threshold; tau reported as 0).
EvalReport evaluate_mask(std::span<const std::uint8_t> accept,
                         const RecalibratedOutputs& outputs, double beta,
                         std::size_t num_bins = kDefaultBins);

EvalReport selective_eval(const TrainedModel& model, const CalibrationDataset& d,
                          double beta, std::size_t num_bins = kDefaultBins);

// tau chosen on `tune` at coverage beta, then applied to d. Achieved coverage
// on d may fall below beta.
EvalReport selective_eval(const TrainedModel& model, const CalibrationDataset& d,
                          const CalibrationDataset& tune, double beta,
                          std::size_t num_bins = kDefaultBins);

struct CurvePoint {
  double beta = 0.0;
  double coverage = 0.0;
  double ece1 = 0.0;
  double ece2 = 0.0;
  double brier = 0.0;
  double accuracy = 0.0;
};

struct CoverageCurve {
  std::vector<CurvePoint> points;
  double auc_ece1 = 0.0;
  double auc_ece2 = 0.0;
  double auc_brier = 0.0;
  double auc_accuracy = 0.0;
};

// Trapezoidal integral divided by the span of x; a single point returns its
// value.
double normalized_trapezoid(std::span<const double> x, std::span<const double> y);

CoverageCurve coverage_auc(const TrainedModel& model, const CalibrationDataset& d,
                           std::span<const double> grid,
                           std::size_t num_bins = kDefaultBins);

// Builds a curve from per-beta reports.
CoverageCurve make_curve(std::span<const EvalReport> reports);

// "a:b:step", inclusive of b up to rounding. Must be strictly increasing and
// inside [0.5, 1].
std::vector<double> parse_beta_grid(const std::string& text);

}  // namespace selcal
