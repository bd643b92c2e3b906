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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "selcal/dataset.hpp"

namespace selcal {

enum class RecalibratorKind { kTemperature, kPlatt, kHistogram, kPlattBinning };

std::string to_string(RecalibratorKind kind);
RecalibratorKind recalibrator_kind_from_string(const std::string& name);

// T = exp(log_t) keeps the temperature positive under unconstrained steps.
struct Temperature {
  double log_t = 0.0;
  double temperature() const;
};

// h(p) = 1 / (1 + exp(w p + b)) on the positive-class probability p.
// (-1, 0) makes the initial map increasing.
struct Platt {
  double w = -1.0;
  double b = 0.0;
};

// Equal-mass bins over [0, 1]: bin j is [edges[j], edges[j+1]) and the last
// bin is closed. values[j] is the empirical accuracy of its members.
struct HistogramBins {
  std::vector<double> edges;
  std::vector<double> values;

  void validate() const;
};

struct PlattBins {
  Platt platt;
  HistogramBins bins;
};

using RecalibratorParams = std::variant<Temperature, Platt, HistogramBins, PlattBins>;

RecalibratorKind kind_of(const RecalibratorParams& params);

inline constexpr double kMaxAbsLogT = 10.0;
inline constexpr double kMaxAbsPlatt = 50.0;

std::vector<double> temperature_apply(const Temperature& params,
                                      std::span<const double> logits);
double platt_apply(const Platt& params, double p);
double histogram_binning_apply(const HistogramBins& params, double top_conf);

// Recalibrated output for a single instance. For the differentiable kinds the
// derivatives of the top-label confidence and of the true-class probability
// with respect to the trainable parameters ((log_t) or (w, b)) are filled in.
struct RecalibratedPoint {
  double top_conf = 0.0;
  double label_prob = 0.0;
  std::uint32_t pred = 0;
  bool correct = false;
  std::array<double, 2> d_top{0.0, 0.0};
  std::array<double, 2> d_label{0.0, 0.0};
};

RecalibratedPoint recalibrate_point(const RecalibratorParams& params,
                                    std::span<const float> logits,
                                    std::uint32_t label);

struct RecalibratedOutputs {
  std::vector<double> top_conf;
  std::vector<std::uint32_t> pred;
  std::vector<std::uint8_t> correct;
};

RecalibratedOutputs recalibrate(const RecalibratorParams& params,
                                const CalibrationDataset& d);

// Trainable parameter vector: {log_t} or {w, b}; empty for binning kinds.
std::vector<double> trainable_parameters(const RecalibratorParams& params);
void set_trainable_parameters(RecalibratorParams& params,
                              std::span<const double> values);
// Projects onto |log_t| <= 10, |w|, |b| <= 50. Returns true if anything moved.
bool clamp_parameters(RecalibratorParams& params);

struct FitOptions {
  int steps = 500;
  double learning_rate = 0.05;
};

struct FitResult {
  RecalibratorParams params;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  // Degenerate labels (all correct or all wrong) or a parameter pinned at its
  // clamp.
  bool warning = false;
};

// Full-batch Adam on the top-label binary cross entropy. Histogram and
// Platt-binning kinds use m = 15 bins.
FitResult fit_recalibrator(const CalibrationDataset& d, RecalibratorKind kind,
                           const FitOptions& options = {});

// Top-label binary cross entropy of a recalibrator with gradient on its
// trainable parameters.
double top_label_bce(const RecalibratorParams& params, const CalibrationDataset& d,
                     std::vector<double>* grad = nullptr);

HistogramBins histogram_binning_fit(std::span<const double> top_conf,
                                    std::span<const std::uint8_t> correct,
                                    std::size_t num_bins);
HistogramBins histogram_binning_fit(const CalibrationDataset& d,
                                    std::size_t num_bins);

PlattBins platt_binning_fit(const CalibrationDataset& d, std::size_t num_bins,
                            const FitOptions& options = {});
// Binning stage only, on top of a given Platt map.
PlattBins platt_binning_fit(const CalibrationDataset& d, const Platt& platt,
                            std::size_t num_bins);

}  // namespace selcal
