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

#include "selcal/commands.hpp"

#include <iostream>

#include "selcal/baselines.hpp"
#include "selcal/error.hpp"
#include "selcal/io.hpp"
#include "selcal/metrics.hpp"
#include "selcal/train.hpp"

namespace selcal {

CalibrationDataset synthetic_dataset(const SyntheticSpec& spec,
                                     const std::vector<double>& theta_hat, std::size_t n,
                                     std::uint64_t seed) {
  if (theta_hat.size() != spec.dim()) throw ValidationError("theta_hat dimension differs from spec");
  const SyntheticSample s = sample_synthetic(spec, n, seed);
  const std::size_t p = spec.dim();
  std::vector<float> embeddings(n * p);
  std::vector<float> logits(2 * n);
  std::vector<std::uint32_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      embeddings[i * p + j] = static_cast<float>(s.x[i * p + j]);
      v += theta_hat[j] * s.x[i * p + j];
    }
    logits[2 * i] = static_cast<float>(-v);
    logits[2 * i + 1] = static_cast<float>(v);
    labels[i] = s.y[i] > 0 ? 1 : 0;
  }
  return CalibrationDataset("synthetic", n, p, 2, std::move(embeddings), std::move(logits),
                            std::move(labels));
}

void cmd_gen_synth(const fs::path& spec_path, std::size_t n, std::uint64_t seed,
                   const fs::path& out) {
  const Json j = read_json(spec_path);
  const SyntheticSpec spec = synthetic_spec_from_json(j);
  std::vector<double> theta_hat;
  try {
    if (j.contains("theta_hat")) {
      theta_hat = j.at("theta_hat").get<std::vector<double>>();
    } else {
      const auto classifier_seed = j.value("classifier_seed", std::uint64_t{0});
      theta_hat = fit_projected_model(spec, classifier_seed).theta_hat();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("spec: ") + e.what());
  }
  if (theta_hat.size() != spec.dim()) {
    throw ValidationError("theta_hat has " + std::to_string(theta_hat.size()) +
                          " entries, spec dimension is " + std::to_string(spec.dim()));
  }
  save_dataset(synthetic_dataset(spec, theta_hat, n, seed), out);
}

void cmd_train(const fs::path& data, const fs::path& config, const fs::path& out,
               const TrainOverrides& overrides) {
  TrainConfig c = train_config_from_json(read_json(config));
  if (overrides.seed) c.seed = *overrides.seed;
  if (overrides.noise_std) c.noise_std = *overrides.noise_std;
  const CalibrationDataset d = load_dataset(data);
  save_model(train_selective_recalibration(d, c), out);
}

void cmd_eval(const fs::path& data, const fs::path& model, double beta, std::size_t bins,
              const fs::path& out, const std::optional<fs::path>& tune_data) {
  const TrainedModel m = load_model(model);
  const CalibrationDataset d = load_dataset(data);
  if (tune_data) {
    const CalibrationDataset tune = load_dataset(*tune_data);
    write_json(out, to_json(selective_eval(m, d, tune, beta, bins)));
    return;
  }
  std::cerr << "note: no --tune-data given; tau is fitted on the evaluation data\n";
  write_json(out, to_json(selective_eval(m, d, beta, bins)));
}

void cmd_sweep(const fs::path& data, const fs::path& model, const std::string& grid,
               std::size_t bins, const fs::path& out) {
  const auto betas = parse_beta_grid(grid);
  const TrainedModel m = load_model(model);
  const CalibrationDataset d = load_dataset(data);
  write_text(out, curve_csv(coverage_auc(m, d, betas, bins)));
}

void cmd_theory(const fs::path& spec_path, std::uint64_t seed, const fs::path& out,
                const std::optional<fs::path>& sweep_out) {
  const Json j = read_json(spec_path);
  const SyntheticSpec spec = synthetic_spec_from_json(j);
  if (sweep_out) {
    if (!j.contains("sweep")) throw ValidationError("spec has no 'sweep' grid");
    std::vector<double> sigmas, alphas, betas;
    try {
      const Json& g = j.at("sweep");
      sigmas = g.value("sigma", std::vector<double>{spec.sigma});
      alphas = g.value("alpha", std::vector<double>{spec.alpha});
      betas = g.value("beta", std::vector<double>{spec.beta_mix});
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("sweep grid: ") + e.what());
    }
    write_text(*sweep_out, sweep_csv(theory_sweep(spec, sigmas, alphas, betas, seed)));
  }
  write_json(out, to_json(verify_theorems(spec, seed)));
}

void cmd_reliability(const fs::path& data, const fs::path& model, double beta,
                     std::size_t bins, const fs::path& out) {
  const TrainedModel m = load_model(model);
  const CalibrationDataset d = load_dataset(data);
  write_text(out, bins_csv(selective_eval(m, d, beta, bins).bins));
}

void cmd_baseline(const fs::path& data, const fs::path& model, const BaselineOptions& options,
                  const fs::path& out) {
  const TrainedModel m = load_model(model);
  const CalibrationDataset d = load_dataset(data);
  const RecalibratedOutputs outputs = recalibrate(m.recalibrator, d);
  Ranking ranking;
  Json params = Json::object();
  if (options.method == "confidence") {
    ranking = confidence_rank(outputs.top_conf);
  } else if (options.method == "iforest") {
    const auto forest =
        iforest_fit(d.embeddings(), d.embed_dim(), kForestTrees, kForestSubsample, options.seed);
    ranking = iforest_rank(forest, d.embeddings());
    params = {{"trees", kForestTrees}, {"psi", forest.psi}, {"seed", options.seed}};
  } else if (options.method == "mahalanobis") {
    constexpr double kEps = 1e-3;
    ranking = mahalanobis_rank(d.embeddings(), d.embed_dim(), kEps);
    params = {{"eps", kEps}};
  } else {
    throw ValidationError("unknown baseline method '" + options.method +
                          "' (confidence, iforest, mahalanobis)");
  }
  const auto keep = select_at_coverage(ranking.scores, options.beta);
  Json report = to_json(evaluate_mask(keep, outputs, options.beta, options.bins));
  report.erase("tau");
  report["method"] = ranking.method;
  report["method_params"] = params;
  if (options.ranking_out) write_text(*options.ranking_out, ranking_csv(ranking));
  write_json(out, report);
}

}  // namespace selcal
