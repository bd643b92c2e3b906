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

#include "selcal/train.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "selcal/adam.hpp"
#include "selcal/error.hpp"
#include "selcal/rng.hpp"

namespace selcal {

std::string to_string(TrainMode mode) {
  return mode == TrainMode::kJoint ? "joint" : "sequential";
}

TrainMode train_mode_from_string(const std::string& name) {
  if (name == "joint") return TrainMode::kJoint;
  if (name == "sequential") return TrainMode::kSequential;
  throw ValidationError("unknown training mode '" + name + "'");
}

void TrainConfig::validate() const {
  loss.validate();
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (pretrain_steps < 0) throw ValidationError("pretrain_steps must be >= 0");
  if (!(pretrain_lr > 0.0)) throw ValidationError("pretrain_lr must be > 0");
  if (!(noise_std >= 0.0)) throw ValidationError("noise_std must be >= 0");
  for (std::size_t h : hidden_dims) {
    if (h == 0) throw ValidationError("hidden_dims entries must be positive");
  }
  if (mode == TrainMode::kJoint && (recalibrator == RecalibratorKind::kHistogram ||
                                    recalibrator == RecalibratorKind::kPlattBinning)) {
    throw ValidationError("joint training needs a differentiable recalibrator "
                          "(temperature or platt)");
  }
}

TrainConfig TrainConfig::preset(const std::string& name) {
  TrainConfig c;
  c.loss.lambda = 32.0;
  if (name == "camelyon") {
    c.learning_rate = 5e-4;
    c.epochs = 1000;
    c.batch_size = 100;
    c.hidden_dims = {128, 128};
    c.recalibrator = RecalibratorKind::kPlatt;
  } else if (name == "imagenet") {
    c.learning_rate = 1e-5;
    c.epochs = 1000;
    c.batch_size = 200;
    c.hidden_dims = {128, 128};
    c.recalibrator = RecalibratorKind::kTemperature;
  } else if (name == "ood") {
    c.learning_rate = 1e-4;
    c.loss.lambda = 8.0;
    c.epochs = 50;
    c.batch_size = 256;
    c.hidden_dims = {64};
    c.recalibrator = RecalibratorKind::kTemperature;
    c.noise_std = 1.0;
  } else {
    throw ValidationError("unknown preset '" + name + "' (camelyon, imagenet, ood)");
  }
  return c;
}

Batch make_batch(const CalibrationDataset& d, std::span<const std::size_t> rows) {
  Batch b;
  b.inputs.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(d.embed_dim()));
  b.logits.reserve(rows.size());
  b.labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto e = d.embedding(rows[r]);
    for (std::size_t j = 0; j < e.size(); ++j) {
      b.inputs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = e[j];
    }
    b.logits.push_back(d.logits(rows[r]));
    b.labels.push_back(d.label(rows[r]));
  }
  return b;
}

BatchGradient batch_objective(const SelectorParams& selector,
                              const RecalibratorParams& recalibrator,
                              const LossConfig& loss, const Batch& batch) {
  const std::size_t n = batch.labels.size();
  const auto cache = selector_forward_batch(selector, batch.inputs);
  std::vector<double> g(n), top(n), label_prob(n);
  std::vector<std::uint8_t> correct(n);
  std::vector<RecalibratedPoint> points(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = cache.scores[static_cast<Eigen::Index>(i)];
    points[i] = recalibrate_point(recalibrator, batch.logits[i], batch.labels[i]);
    top[i] = points[i].top_conf;
    label_prob[i] = points[i].label_prob;
    correct[i] = points[i].correct ? 1 : 0;
  }
  const ObjectiveValue obj = objective(loss, g, top, correct, label_prob);

  BatchGradient out;
  out.value = obj.value;
  out.selection = obj.selection;
  out.coverage = obj.coverage;
  out.mean_selection = n == 0 ? 0.0 : std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(n);
  out.selector = selector_backward(selector, cache, obj.d_g);
  const std::size_t k = trainable_parameters(recalibrator).size();
  out.recalibrator.assign(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      out.recalibrator[j] += obj.d_top[i] * points[i].d_top[j] +
                             obj.d_label[i] * points[i].d_label[j];
    }
  }
  return out;
}

RecalibratorParams pretrain_recalibrator(const CalibrationDataset& d,
                                         const TrainConfig& config, bool* warning) {
  FitOptions options;
  options.steps = config.pretrain_steps;
  options.learning_rate = config.pretrain_lr;
  FitResult fit = fit_recalibrator(d, config.recalibrator, options);
  if (warning != nullptr) *warning = fit.warning;
  return fit.params;
}

namespace {

double full_data_objective(const SelectorParams& selector,
                           const RecalibratorParams& recalibrator,
                           const LossConfig& loss, const CalibrationDataset& d) {
  std::vector<std::size_t> rows(d.size());
  std::iota(rows.begin(), rows.end(), 0);
  return batch_objective(selector, recalibrator, loss, make_batch(d, rows)).value;
}

}  // namespace

TrainedModel train_selective_recalibration(const CalibrationDataset& d,
                                           const TrainConfig& config) {
  config.validate();
  if (d.embed_dim() == 0) {
    throw ValidationError("selective recalibration needs embeddings (embed_dim = 0)");
  }
  if (d.size() == 0) throw ValidationError("cannot train on an empty dataset");

  TrainedModel model;
  model.config = config;
  model.recalibrator = pretrain_recalibrator(d, config, &model.pretrain_warning);
  model.selector = init_selector(d.embed_dim(), config.hidden_dims, config.seed);
  model.initial_loss = full_data_objective(model.selector, model.recalibrator, config.loss, d);

  const bool joint = config.mode == TrainMode::kJoint;
  AdamState selector_state(model.selector.weights.size());
  std::vector<double> recal_theta = trainable_parameters(model.recalibrator);
  AdamState recal_state(recal_theta.size());

  // Independent streams for batch order and input noise.
  Rng order_rng(config.seed ^ 0x5eed0fba7c4e5ull);
  Rng noise_rng(config.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(order));
    double epoch_total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, order.size() - start);
      Batch batch = make_batch(d, std::span<const std::size_t>(order).subspan(start, len));
      if (config.noise_std > 0.0) {
        for (Eigen::Index i = 0; i < batch.inputs.size(); ++i) {
          batch.inputs.data()[i] += config.noise_std * noise_rng.normal();
        }
      }
      const BatchGradient grad =
          batch_objective(model.selector, model.recalibrator, config.loss, batch);
      if (!std::isfinite(grad.value)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << ", batch " << batches
            << " (selection " << grad.selection << ", coverage " << grad.coverage << ")";
        throw TrainingError(msg.str());
      }
      adam_step(model.selector.weights, grad.selector, selector_state, config.learning_rate);
      if (joint && !recal_theta.empty()) {
        adam_step(recal_theta, grad.recalibrator, recal_state, config.learning_rate);
        set_trainable_parameters(model.recalibrator, recal_theta);
        clamp_parameters(model.recalibrator);
        recal_theta = trainable_parameters(model.recalibrator);
      }
      epoch_total += grad.value;
      ++batches;
    }
    model.loss_trace.push_back(epoch_total / static_cast<double>(batches));
  }
  model.final_loss = full_data_objective(model.selector, model.recalibrator, config.loss, d);
  if (!std::isfinite(model.final_loss)) {
    throw TrainingError("non-finite loss after training");
  }
  return model;
}

}  // namespace selcal
