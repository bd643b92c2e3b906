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

namespace selcal {

enum class LossKind { kSTlbce, kSMce, kSMmce };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

struct LossConfig {
  LossKind kind = LossKind::kSTlbce;
  double q = 2.0;                 // S-MMCE exponent
  double kernel_bandwidth = 0.2;  // Laplacian kernel exp(-|a-b|/bandwidth)
  double lambda = 32.0;           // coverage weight
  double beta = 0.8;              // target coverage
  bool drop_denominator = true;

  void validate() const;
};

// Confidences are clamped to [kConfFloor, 1 - kConfFloor] before logs.
inline constexpr double kConfFloor = 1e-7;
inline constexpr double kMinMeanSelection = 1e-3;

using Scores = std::span<const double>;
using Flags = std::span<const std::uint8_t>;

// -(1/n) sum g_i [c_i log h_i + (1-c_i) log(1-h_i)]
double s_tlbce(Scores g, Scores top_conf, Flags correct);

// -(1/n) sum g_i log p_i, where p_i is the recalibrated probability of the
// true class.
double s_mce(Scores g, Scores label_prob);
double s_mce(Scores g, std::span<const double> probs, std::size_t num_classes,
             std::span<const std::uint32_t> labels);

// [ (1/n^2) sum_ij e_i e_j g_i g_j phi(h_i, h_j) ]^(1/q), e_i = |c_i - h_i|^q.
double s_mmce(Scores g, Scores top_conf, Flags correct, const LossConfig& config);

// (beta - mean g)^2
double coverage_loss(Scores g, double beta);

// L_sel + lambda L_cov. With drop_denominator == false the selection term is
// divided by max(mean_g, kMinMeanSelection).
double total_loss(double selection, double coverage, double lambda,
                  bool drop_denominator = true, double mean_g = 1.0);

// Loss value with partial derivatives. d_conf is with respect to the
// confidence argument of each loss (top-label confidence, or the true-class
// probability for S-MCE).
struct LossGradient {
  double value = 0.0;
  std::vector<double> d_g;
  std::vector<double> d_conf;
};

LossGradient s_tlbce_grad(Scores g, Scores top_conf, Flags correct);
LossGradient s_mce_grad(Scores g, Scores label_prob);
LossGradient s_mmce_grad(Scores g, Scores top_conf, Flags correct,
                         const LossConfig& config);
LossGradient coverage_loss_grad(Scores g, double beta);

// Full surrogate objective on one batch, with gradients routed to the
// selector scores, the top-label confidences and the true-class
// probabilities.
struct ObjectiveValue {
  double value = 0.0;
  double selection = 0.0;  // after the optional denominator
  double coverage = 0.0;
  std::vector<double> d_g;
  std::vector<double> d_top;
  std::vector<double> d_label;
};

ObjectiveValue objective(const LossConfig& config, Scores g, Scores top_conf,
                         Flags correct, Scores label_prob);

}  // namespace selcal
