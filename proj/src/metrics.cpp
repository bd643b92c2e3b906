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

#include "selcal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "selcal/error.hpp"
#include "selcal/parallel.hpp"
#include "selcal/selector.hpp"

namespace selcal {

namespace {

void check_pair(std::span<const double> conf, std::span<const std::uint8_t> correct) {
  if (conf.size() != correct.size()) {
    throw ValidationError("confidence and correctness lengths differ");
  }
}

}  // namespace

std::vector<ReliabilityBin> reliability_bins(std::span<const double> top_conf,
                                             std::span<const std::uint8_t> correct,
                                             std::size_t num_bins) {
  check_pair(top_conf, correct);
  const std::size_t n = top_conf.size();
  if (num_bins == 0) throw ValidationError("number of bins must be positive");
  if (num_bins > n) {
    std::ostringstream msg;
    msg << "number of bins (" << num_bins << ") exceeds number of points (" << n << ")";
    throw ValidationError(msg.str());
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (top_conf[a] != top_conf[b]) return top_conf[a] < top_conf[b];
    return correct[a] < correct[b];
  });
  const std::size_t base = n / num_bins;
  const std::size_t extra = n % num_bins;
  std::vector<ReliabilityBin> bins(num_bins);
  std::size_t pos = 0;
  for (std::size_t j = 0; j < num_bins; ++j) {
    const std::size_t size = base + (j < extra ? 1 : 0);
    double conf_sum = 0.0;
    double acc_sum = 0.0;
    for (std::size_t k = 0; k < size; ++k, ++pos) {
      conf_sum += top_conf[order[pos]];
      acc_sum += correct[order[pos]] ? 1.0 : 0.0;
    }
    bins[j].count = size;
    bins[j].mean_conf = conf_sum / static_cast<double>(size);
    bins[j].accuracy = acc_sum / static_cast<double>(size);
  }
  return bins;
}

double ece(std::span<const double> top_conf, std::span<const std::uint8_t> correct,
           double q, std::size_t num_bins) {
  if (!(q >= 1.0)) throw ValidationError("ECE exponent q must be >= 1");
  const auto bins = reliability_bins(top_conf, correct, num_bins);
  double total = 0.0;
  for (const auto& b : bins) total += std::pow(std::abs(b.accuracy - b.mean_conf), q);
  return std::pow(total / static_cast<double>(bins.size()), 1.0 / q);
}

double brier(std::span<const double> top_conf, std::span<const std::uint8_t> correct) {
  check_pair(top_conf, correct);
  if (top_conf.empty()) throw ValidationError("Brier score of an empty set");
  double total = 0.0;
  for (std::size_t i = 0; i < top_conf.size(); ++i) {
    const double diff = top_conf[i] - (correct[i] ? 1.0 : 0.0);
    total += diff * diff;
  }
  return total / static_cast<double>(top_conf.size());
}

EvalReport evaluate_mask(std::span<const std::uint8_t> accept,
                         const RecalibratedOutputs& outputs, double beta,
                         std::size_t num_bins) {
  const std::size_t n = outputs.top_conf.size();
  if (accept.size() != n) throw ValidationError("acceptance mask length differs from data");
  EvalReport r;
  r.beta_target = beta;
  r.n_total = n;
  std::vector<double> conf;
  std::vector<std::uint8_t> corr;
  for (std::size_t i = 0; i < n; ++i) {
    if (!accept[i]) continue;
    conf.push_back(outputs.top_conf[i]);
    corr.push_back(outputs.correct[i]);
  }
  r.n_accepted = conf.size();
  if (r.n_accepted == 0) throw ValidationError("no instances accepted");
  r.coverage_achieved = static_cast<double>(r.n_accepted) / static_cast<double>(n);
  r.num_bins = num_bins;
  if (num_bins > r.n_accepted) {
    r.num_bins = r.n_accepted;
    r.reduced_bins = true;
  }
  r.bins = reliability_bins(conf, corr, r.num_bins);
  r.ece1 = ece(conf, corr, 1.0, r.num_bins);
  r.ece2 = ece(conf, corr, 2.0, r.num_bins);
  r.brier = brier(conf, corr);
  r.selective_accuracy =
      static_cast<double>(std::count(corr.begin(), corr.end(), std::uint8_t{1})) /
      static_cast<double>(r.n_accepted);
  return r;
}

EvalReport evaluate_selection(std::span<const double> scores,
                              const RecalibratedOutputs& outputs, double beta,
                              std::size_t num_bins) {
  if (scores.size() != outputs.top_conf.size()) {
    throw ValidationError("selector scores length differs from data");
  }
  const double tau = choose_threshold(scores, beta);
  std::vector<std::uint8_t> accept(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) accept[i] = scores[i] >= tau ? 1 : 0;
  EvalReport r = evaluate_mask(accept, outputs, beta, num_bins);
  r.tau = tau;
  r.degenerate_threshold =
      r.n_accepted == r.n_total && coverage_count(beta, r.n_total) < r.n_total;
  return r;
}

EvalReport selective_eval(const TrainedModel& model, const CalibrationDataset& d,
                          double beta, std::size_t num_bins) {
  if (d.size() == 0) throw ValidationError("cannot evaluate on an empty dataset");
  const auto scores = selector_scores(model.selector, d);
  return evaluate_selection(scores, recalibrate(model.recalibrator, d), beta, num_bins);
}

EvalReport selective_eval(const TrainedModel& model, const CalibrationDataset& d,
                          const CalibrationDataset& tune, double beta,
                          std::size_t num_bins) {
  if (d.size() == 0 || tune.size() == 0) {
    throw ValidationError("cannot evaluate on an empty dataset");
  }
  const double tau = choose_threshold(selector_scores(model.selector, tune), beta);
  const auto scores = selector_scores(model.selector, d);
  std::vector<std::uint8_t> accept(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) accept[i] = scores[i] >= tau ? 1 : 0;
  EvalReport r = evaluate_mask(accept, recalibrate(model.recalibrator, d), beta, num_bins);
  r.tau = tau;
  r.tau_from_tuning = true;
  return r;
}

double normalized_trapezoid(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) {
    throw ValidationError("trapezoid needs equal-length, nonempty inputs");
  }
  if (x.size() == 1) return y[0];
  double area = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    area += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  }
  return area / (x.back() - x.front());
}

CoverageCurve make_curve(std::span<const EvalReport> reports) {
  CoverageCurve c;
  std::vector<double> b, e1, e2, br, acc;
  for (const auto& r : reports) {
    c.points.push_back({r.beta_target, r.coverage_achieved, r.ece1, r.ece2, r.brier,
                        r.selective_accuracy});
    b.push_back(r.beta_target);
    e1.push_back(r.ece1);
    e2.push_back(r.ece2);
    br.push_back(r.brier);
    acc.push_back(r.selective_accuracy);
  }
  if (c.points.empty()) return c;
  c.auc_ece1 = normalized_trapezoid(b, e1);
  c.auc_ece2 = normalized_trapezoid(b, e2);
  c.auc_brier = normalized_trapezoid(b, br);
  c.auc_accuracy = normalized_trapezoid(b, acc);
  return c;
}

CoverageCurve coverage_auc(const TrainedModel& model, const CalibrationDataset& d,
                           std::span<const double> grid, std::size_t num_bins) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 0.5 || grid[i] > 1.0) throw ValidationError("beta grid must lie in [0.5, 1]");
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw ValidationError("beta grid must be strictly increasing");
    }
  }
  const auto scores = selector_scores(model.selector, d);
  const auto outputs = recalibrate(model.recalibrator, d);
  std::vector<EvalReport> reports(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    reports[i] = evaluate_selection(scores, outputs, grid[i], num_bins);
  });
  return make_curve(reports);
}

std::vector<double> parse_beta_grid(const std::string& text) {
  double a = 0.0, b = 0.0, step = 0.0;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  if (!(in >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || !in.eof()) {
    throw ValidationError("beta grid must look like a:b:step, got '" + text + "'");
  }
  if (!(step > 0.0)) throw ValidationError("beta grid step must be positive");
  if (!(a <= b)) throw ValidationError("beta grid start must not exceed its end");
  const auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = a + static_cast<double>(i) * step;
  }
  // Snap the last point onto b when it differs only by rounding.
  if (std::abs(grid.back() - b) < 1e-9) grid.back() = b;
  for (double v : grid) {
    if (v < 0.5 - 1e-12 || v > 1.0 + 1e-12) {
      throw ValidationError("beta grid must lie in [0.5, 1]");
    }
  }
  for (double& v : grid) v = std::clamp(v, 0.5, 1.0);
  return grid;
}

}  // namespace selcal
