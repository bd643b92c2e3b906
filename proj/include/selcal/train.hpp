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
#include "selcal/losses.hpp"
#include "selcal/recalibrate.hpp"
#include "selcal/selector.hpp"

namespace selcal {

enum class TrainMode { kJoint, kSequential };

std::string to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& name);

struct TrainConfig {
  LossConfig loss;
  TrainMode mode = TrainMode::kJoint;
  RecalibratorKind recalibrator = RecalibratorKind::kTemperature;
  std::vector<std::size_t> hidden_dims{128, 128};
  double learning_rate = 5e-4;
  int epochs = 100;
  std::size_t batch_size = 100;
  std::uint64_t seed = 0;
  int pretrain_steps = 500;
  double pretrain_lr = 0.05;
  double noise_std = 0.0;  // Gaussian input noise on selector batches

  void validate() const;

  // Published hyperparameters: "camelyon", "imagenet", "ood".
  static TrainConfig preset(const std::string& name);
};

struct TrainedModel {
  SelectorParams selector;
  RecalibratorParams recalibrator;
  TrainConfig config;
  std::vector<double> loss_trace;  // mean batch objective per epoch
  double initial_loss = 0.0;       // full-data objective before the main loop
  double final_loss = 0.0;         // full-data objective after the main loop
  bool pretrain_warning = false;
};

// A mini-batch: selector inputs plus the classifier outputs of the same rows.
struct Batch {
  RowMatrix inputs;
  std::vector<std::span<const float>> logits;
  std::vector<std::uint32_t> labels;
};

Batch make_batch(const CalibrationDataset& d, std::span<const std::size_t> rows);

struct BatchGradient {
  double value = 0.0;
  double selection = 0.0;
  double coverage = 0.0;
  double mean_selection = 0.0;
  std::vector<double> selector;      // d value / d selector weights
  std::vector<double> recalibrator;  // d value / d (log_t) or (w, b)
};

// Surrogate objective L_sel + lambda L_cov on one batch and its gradient with
// respect to both models.
BatchGradient batch_objective(const SelectorParams& selector,
                              const RecalibratorParams& recalibrator,
                              const LossConfig& loss, const Batch& batch);

RecalibratorParams pretrain_recalibrator(const CalibrationDataset& d,
                                         const TrainConfig& config,
                                         bool* warning = nullptr);

// Pre-trains h, then optimizes g (sequential) or (g, h) jointly with Adam on
// seeded, reshuffled mini-batches. tau is left unset.
TrainedModel train_selective_recalibration(const CalibrationDataset& d,
                                           const TrainConfig& config);

}  // namespace selcal
