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
#include <filesystem>
#include <optional>
#include <string>

#include "selcal/dataset.hpp"
#include "selcal/theorylab.hpp"

namespace selcal {

namespace fs = std::filesystem;

// Two-class dataset from the synthetic model: embeddings are the raw x,
// logits (-v, v) with v = theta_hat^T x, labels {-1, 1} -> {0, 1}. The
// classifier theta_hat comes from the spec JSON ("theta_hat") or is trained
// with "classifier_seed" (default 0), so files drawn with different sample
// seeds share one classifier.
CalibrationDataset synthetic_dataset(const SyntheticSpec& spec,
                                     const std::vector<double>& theta_hat, std::size_t n,
                                     std::uint64_t seed);

void cmd_gen_synth(const fs::path& spec_path, std::size_t n, std::uint64_t seed,
                   const fs::path& out);

struct TrainOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> noise_std;
};

void cmd_train(const fs::path& data, const fs::path& config, const fs::path& out,
               const TrainOverrides& overrides = {});

// Without tune_data, tau is fitted on the evaluation data and the report says
// so (tau_source "eval_data").
void cmd_eval(const fs::path& data, const fs::path& model, double beta, std::size_t bins,
              const fs::path& out, const std::optional<fs::path>& tune_data = std::nullopt);

void cmd_sweep(const fs::path& data, const fs::path& model, const std::string& grid,
               std::size_t bins, const fs::path& out);

// Writes the theorem report; with sweep_out also the sweep CSV over the
// spec's "sweep" grid.
void cmd_theory(const fs::path& spec_path, std::uint64_t seed, const fs::path& out,
                const std::optional<fs::path>& sweep_out = std::nullopt);

void cmd_reliability(const fs::path& data, const fs::path& model, double beta,
                     std::size_t bins, const fs::path& out);

struct BaselineOptions {
  std::string method = "confidence";  // confidence, iforest, mahalanobis
  double beta = 0.8;
  std::size_t bins = 15;
  std::uint64_t seed = 0;
  std::optional<fs::path> ranking_out;
};

void cmd_baseline(const fs::path& data, const fs::path& model, const BaselineOptions& options,
                  const fs::path& out);

}  // namespace selcal
