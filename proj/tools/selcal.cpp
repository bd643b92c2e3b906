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

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "selcal/commands.hpp"
#include "selcal/error.hpp"
#include "selcal/io.hpp"
#include "selcal/metrics.hpp"

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitValidation = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selective recalibration toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", selcal::kToolVersion);

  std::string data, config, model, out, method = "confidence", grid = "0.5:1.0:0.05";
  std::string sweep_out, ranking_out, tune_data;
  double beta = 0.8;
  double reliability_beta = 1.0;
  std::size_t bins = selcal::kDefaultBins;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> train_seed;
  std::optional<double> noise_std;

  auto* gen = app.add_subcommand("gen-synth", "Sample the synthetic mixture into a .selc file");
  gen->add_option("--config", config, "Synthetic spec JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--n", n, "Number of instances")->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "Sampling seed");
  gen->add_option("--out", out, "Output .selc path")->required();

  auto* train = app.add_subcommand("train", "Train a selector and recalibrator");
  train->add_option("--data", data, "Training .selc file")->required()->check(CLI::ExistingFile);
  train->add_option("--config", config, "Training config JSON")->required()->check(CLI::ExistingFile);
  train->add_option("--out", out, "Output model JSON")->required();
  train->add_option("--seed", train_seed, "Override the config seed");
  train->add_option("--noise-std", noise_std, "Override the input-noise std")
      ->check(CLI::NonNegativeNumber);

  auto* eval = app.add_subcommand("eval", "Selective evaluation at one coverage level");
  eval->add_option("--data", data, "Evaluation .selc file")->required()->check(CLI::ExistingFile);
  eval->add_option("--model", model, "Model JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--beta", beta, "Target coverage")->check(CLI::Range(0.0, 1.0));
  eval->add_option("--bins", bins, "Number of equal-mass bins")->check(CLI::PositiveNumber);
  eval->add_option("--tune-data", tune_data, "Separate .selc split for fitting tau")
      ->check(CLI::ExistingFile);
  eval->add_option("--out", out, "Report JSON")->required();

  auto* sweep = app.add_subcommand("sweep", "Metrics over a coverage grid with AUC");
  sweep->add_option("--data", data, "Evaluation .selc file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--model", model, "Model JSON")->required()->check(CLI::ExistingFile);
  sweep->add_option("--beta-grid", grid, "Grid a:b:step");
  sweep->add_option("--bins", bins, "Number of equal-mass bins")->check(CLI::PositiveNumber);
  sweep->add_option("--out", out, "Curve CSV")->required();

  auto* theory = app.add_subcommand("theory", "Numerically verify the synthetic-model theorems");
  theory->add_option("--config", config, "Synthetic spec JSON")->required()->check(CLI::ExistingFile);
  theory->add_option("--seed", seed, "Seed for theta_hat training and Monte Carlo");
  theory->add_option("--out", out, "Report JSON")->required();
  theory->add_option("--sweep-out", sweep_out, "Also write a sweep CSV over the spec's grid");

  auto* rel = app.add_subcommand("reliability", "Reliability-diagram bins as CSV");
  rel->add_option("--data", data, "Evaluation .selc file")->required()->check(CLI::ExistingFile);
  rel->add_option("--model", model, "Model JSON")->required()->check(CLI::ExistingFile);
  rel->add_option("--beta", reliability_beta, "Target coverage (default 1)")
      ->check(CLI::Range(0.0, 1.0));
  rel->add_option("--bins", bins, "Number of equal-mass bins")->check(CLI::PositiveNumber);
  rel->add_option("--out", out, "Bin CSV")->required();

  auto* base = app.add_subcommand("baseline", "Evaluate a selection baseline");
  base->add_option("--data", data, "Evaluation .selc file")->required()->check(CLI::ExistingFile);
  base->add_option("--model", model, "Model JSON (recalibrator used)")
      ->required()
      ->check(CLI::ExistingFile);
  base->add_option("--method", method, "confidence, iforest or mahalanobis")
      ->check(CLI::IsMember({"confidence", "iforest", "mahalanobis"}));
  base->add_option("--beta", beta, "Target coverage")->check(CLI::Range(0.0, 1.0));
  base->add_option("--bins", bins, "Number of equal-mass bins")->check(CLI::PositiveNumber);
  base->add_option("--seed", seed, "Isolation forest seed");
  base->add_option("--ranking-out", ranking_out, "Also write the ranking CSV");
  base->add_option("--out", out, "Report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*gen) {
      selcal::cmd_gen_synth(config, n, seed, out);
    } else if (*train) {
      selcal::cmd_train(data, config, out, {train_seed, noise_std});
    } else if (*eval) {
      std::optional<std::filesystem::path> t;
      if (!tune_data.empty()) t = tune_data;
      selcal::cmd_eval(data, model, beta, bins, out, t);
    } else if (*sweep) {
      selcal::cmd_sweep(data, model, grid, bins, out);
    } else if (*theory) {
      std::optional<std::filesystem::path> s;
      if (!sweep_out.empty()) s = sweep_out;
      selcal::cmd_theory(config, seed, out, s);
    } else if (*rel) {
      selcal::cmd_reliability(data, model, reliability_beta, bins, out);
    } else if (*base) {
      selcal::BaselineOptions o;
      o.method = method;
      o.beta = beta;
      o.bins = bins;
      o.seed = seed;
      if (!ranking_out.empty()) o.ranking_out = ranking_out;
      selcal::cmd_baseline(data, model, o, out);
    }
  } catch (const selcal::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const selcal::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return 0;
}
