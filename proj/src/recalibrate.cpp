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

#include "selcal/recalibrate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "selcal/adam.hpp"
#include "selcal/error.hpp"
#include "selcal/losses.hpp"

namespace selcal {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

RecalibratedPoint temperature_point(const Temperature& t,
                                    std::span<const float> logits,
                                    std::uint32_t label) {
  const double temp = t.temperature();
  std::vector<double> u(logits.size());
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = logits[k] / temp;
  const auto p = softmax(std::span<const double>(u));
  double u_bar = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) u_bar += p[k] * u[k];

  RecalibratedPoint out;
  const std::size_t top = argmax(p);
  out.pred = static_cast<std::uint32_t>(top);
  out.correct = top == label;
  out.top_conf = p[top];
  out.label_prob = p[label];
  // d p_k / d log_t = -p_k (u_k - sum_j p_j u_j)
  out.d_top[0] = -p[top] * (u[top] - u_bar);
  out.d_label[0] = -p[label] * (u[label] - u_bar);
  return out;
}

RecalibratedPoint platt_point(const Platt& platt, std::span<const float> logits,
                              std::uint32_t label) {
  if (logits.size() != 2) {
    throw ValidationError("Platt recalibration needs num_classes = 2, got " +
                          std::to_string(logits.size()));
  }
  const auto base = softmax(logits);
  const double p = base[1];
  const double h = platt_apply(platt, p);
  const double dh_dz = -h * (1.0 - h);  // z = w p + b
  const std::array<double, 2> dh{dh_dz * p, dh_dz};

  RecalibratedPoint out;
  // An exact 0.5 keeps the base model's prediction.
  if (h > 0.5) {
    out.pred = 1;
  } else if (h < 0.5) {
    out.pred = 0;
  } else {
    out.pred = static_cast<std::uint32_t>(argmax(base));
  }
  out.correct = out.pred == label;
  const double top_sign = out.pred == 1 ? 1.0 : -1.0;
  const double label_sign = label == 1 ? 1.0 : -1.0;
  out.top_conf = out.pred == 1 ? h : 1.0 - h;
  out.label_prob = label == 1 ? h : 1.0 - h;
  for (int j = 0; j < 2; ++j) {
    out.d_top[j] = top_sign * dh[j];
    out.d_label[j] = label_sign * dh[j];
  }
  return out;
}

RecalibratedPoint binned(const RecalibratedPoint& base, const HistogramBins& bins,
                         std::size_t num_classes) {
  RecalibratedPoint out = base;
  out.top_conf = histogram_binning_apply(bins, base.top_conf);
  out.label_prob = out.correct ? out.top_conf
                               : (1.0 - out.top_conf) / static_cast<double>(num_classes - 1);
  out.d_top = {0.0, 0.0};
  out.d_label = {0.0, 0.0};
  return out;
}

RecalibratedPoint base_point(std::span<const float> logits, std::uint32_t label) {
  const auto p = softmax(logits);
  RecalibratedPoint out;
  const std::size_t top = argmax(p);
  out.pred = static_cast<std::uint32_t>(top);
  out.correct = top == label;
  out.top_conf = p[top];
  out.label_prob = p[label];
  return out;
}

// Sizes of m contiguous equal-mass groups over n sorted items; the first
// n % m groups take one extra item.
std::vector<std::size_t> group_sizes(std::size_t n, std::size_t m) {
  std::vector<std::size_t> sizes(m, n / m);
  for (std::size_t j = 0; j < n % m; ++j) ++sizes[j];
  return sizes;
}

}  // namespace

std::string to_string(RecalibratorKind kind) {
  switch (kind) {
    case RecalibratorKind::kTemperature: return "temperature";
    case RecalibratorKind::kPlatt: return "platt";
    case RecalibratorKind::kHistogram: return "histogram";
    case RecalibratorKind::kPlattBinning: return "platt_binning";
  }
  return "?";
}

RecalibratorKind recalibrator_kind_from_string(const std::string& name) {
  if (name == "temperature") return RecalibratorKind::kTemperature;
  if (name == "platt") return RecalibratorKind::kPlatt;
  if (name == "histogram" || name == "histogram_binning") return RecalibratorKind::kHistogram;
  if (name == "platt_binning" || name == "platt-binning") return RecalibratorKind::kPlattBinning;
  throw ValidationError("unknown recalibrator kind '" + name + "'");
}

double Temperature::temperature() const { return std::exp(log_t); }

void HistogramBins::validate() const {
  if (edges.size() < 2 || values.size() + 1 != edges.size()) {
    throw ValidationError("histogram bins need m+1 edges for m values");
  }
  if (edges.front() != 0.0 || edges.back() != 1.0) {
    throw ValidationError("histogram edges must start at 0 and end at 1");
  }
  for (std::size_t j = 1; j < edges.size(); ++j) {
    if (!(edges[j] > edges[j - 1])) {
      throw ValidationError("histogram edges must be strictly increasing");
    }
  }
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("bin values must lie in [0, 1]");
  }
}

RecalibratorKind kind_of(const RecalibratorParams& params) {
  return std::visit(
      Overloaded{[](const Temperature&) { return RecalibratorKind::kTemperature; },
                 [](const Platt&) { return RecalibratorKind::kPlatt; },
                 [](const HistogramBins&) { return RecalibratorKind::kHistogram; },
                 [](const PlattBins&) { return RecalibratorKind::kPlattBinning; }},
      params);
}

std::vector<double> temperature_apply(const Temperature& params,
                                      std::span<const double> logits) {
  const double t = params.temperature();
  std::vector<double> scaled(logits.begin(), logits.end());
  for (double& z : scaled) z /= t;
  return softmax(std::span<const double>(scaled));
}

double platt_apply(const Platt& params, double p) {
  return sigmoid(-(params.w * p + params.b));
}

double histogram_binning_apply(const HistogramBins& params, double top_conf) {
  const auto& e = params.edges;
  // First edge strictly greater than the value; the bin is the one before it.
  auto it = std::upper_bound(e.begin() + 1, e.end() - 1, top_conf);
  const std::size_t bin = static_cast<std::size_t>(it - (e.begin() + 1));
  return params.values[std::min(bin, params.values.size() - 1)];
}

RecalibratedPoint recalibrate_point(const RecalibratorParams& params,
                                    std::span<const float> logits,
                                    std::uint32_t label) {
  return std::visit(
      Overloaded{
          [&](const Temperature& t) { return temperature_point(t, logits, label); },
          [&](const Platt& p) { return platt_point(p, logits, label); },
          [&](const HistogramBins& b) {
            return binned(base_point(logits, label), b, logits.size());
          },
          [&](const PlattBins& pb) {
            return binned(platt_point(pb.platt, logits, label), pb.bins, logits.size());
          }},
      params);
}

RecalibratedOutputs recalibrate(const RecalibratorParams& params,
                                const CalibrationDataset& d) {
  RecalibratedOutputs out;
  const std::size_t n = d.size();
  out.top_conf.resize(n);
  out.pred.resize(n);
  out.correct.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto pt = recalibrate_point(params, d.logits(i), d.label(i));
    out.top_conf[i] = pt.top_conf;
    out.pred[i] = pt.pred;
    out.correct[i] = pt.correct ? 1 : 0;
  }
  return out;
}

std::vector<double> trainable_parameters(const RecalibratorParams& params) {
  return std::visit(
      Overloaded{[](const Temperature& t) { return std::vector<double>{t.log_t}; },
                 [](const Platt& p) { return std::vector<double>{p.w, p.b}; },
                 [](const auto&) { return std::vector<double>{}; }},
      params);
}

void set_trainable_parameters(RecalibratorParams& params,
                              std::span<const double> values) {
  if (values.size() != trainable_parameters(params).size()) {
    throw ValidationError("recalibrator parameter count mismatch");
  }
  std::visit(Overloaded{[&](Temperature& t) { t.log_t = values[0]; },
                        [&](Platt& p) {
                          p.w = values[0];
                          p.b = values[1];
                        },
                        [](auto&) {}},
             params);
}

bool clamp_parameters(RecalibratorParams& params) {
  auto clamp = [](double& v, double limit) {
    const double c = std::clamp(v, -limit, limit);
    const bool moved = c != v;
    v = c;
    return moved;
  };
  return std::visit(Overloaded{[&](Temperature& t) { return clamp(t.log_t, kMaxAbsLogT); },
                               [&](Platt& p) {
                                 const bool a = clamp(p.w, kMaxAbsPlatt);
                                 const bool b = clamp(p.b, kMaxAbsPlatt);
                                 return a || b;
                               },
                               [](auto&) { return false; }},
                    params);
}

double top_label_bce(const RecalibratorParams& params, const CalibrationDataset& d,
                     std::vector<double>* grad) {
  const std::size_t n = d.size();
  std::vector<double> ones(n, 1.0), top(n);
  std::vector<std::uint8_t> correct(n);
  std::vector<RecalibratedPoint> points(n);
  for (std::size_t i = 0; i < n; ++i) {
    points[i] = recalibrate_point(params, d.logits(i), d.label(i));
    top[i] = points[i].top_conf;
    correct[i] = points[i].correct ? 1 : 0;
  }
  const LossGradient loss = s_tlbce_grad(ones, top, correct);
  if (grad != nullptr) {
    const std::size_t k = trainable_parameters(params).size();
    grad->assign(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        (*grad)[j] += loss.d_conf[i] * points[i].d_top[j];
      }
    }
  }
  return loss.value;
}

FitResult fit_recalibrator(const CalibrationDataset& d, RecalibratorKind kind,
                           const FitOptions& options) {
  if (d.size() == 0) throw ValidationError("cannot fit a recalibrator on an empty dataset");
  constexpr std::size_t kDefaultBins = 15;
  if (kind == RecalibratorKind::kHistogram) {
    FitResult r{histogram_binning_fit(d, std::min(kDefaultBins, d.size())), 0.0, 0.0, false};
    r.initial_loss = r.final_loss = top_label_bce(r.params, d);
    return r;
  }
  if (kind == RecalibratorKind::kPlattBinning) {
    FitResult r{platt_binning_fit(d, std::min(kDefaultBins, d.size()), options), 0.0, 0.0, false};
    r.initial_loss = r.final_loss = top_label_bce(r.params, d);
    return r;
  }
  if (kind == RecalibratorKind::kPlatt && d.num_classes() != 2) {
    throw ValidationError("Platt recalibration needs num_classes = 2, got " +
                          std::to_string(d.num_classes()));
  }

  RecalibratorParams params =
      kind == RecalibratorKind::kTemperature ? RecalibratorParams{Temperature{}}
                                             : RecalibratorParams{Platt{}};
  std::vector<double> theta = trainable_parameters(params);
  AdamState state(theta.size());
  std::vector<double> grad;

  FitResult result{params, 0.0, 0.0, false};
  result.initial_loss = top_label_bce(params, d, &grad);
  double best = result.initial_loss;
  for (int step = 0; step < options.steps; ++step) {
    adam_step(theta, grad, state, options.learning_rate);
    set_trainable_parameters(params, theta);
    clamp_parameters(params);
    theta = trainable_parameters(params);
    const double loss = top_label_bce(params, d, &grad);
    if (!std::isfinite(loss)) break;
    if (loss <= best) {
      best = loss;
      result.params = params;
    }
  }
  result.final_loss = best;

  const auto base = derive_outputs(d);
  const auto n_correct = std::count(base.correct.begin(), base.correct.end(), 1);
  const bool degenerate = n_correct == 0 || static_cast<std::size_t>(n_correct) == d.size();
  bool pinned = false;
  for (double v : trainable_parameters(result.params)) {
    const double limit = kind == RecalibratorKind::kTemperature ? kMaxAbsLogT : kMaxAbsPlatt;
    if (std::abs(v) >= limit) pinned = true;
  }
  result.warning = degenerate || pinned;
  return result;
}

HistogramBins histogram_binning_fit(std::span<const double> top_conf,
                                    std::span<const std::uint8_t> correct,
                                    std::size_t num_bins) {
  const std::size_t n = top_conf.size();
  if (correct.size() != n) throw ValidationError("histogram_binning_fit: length mismatch");
  if (n == 0) throw ValidationError("histogram_binning_fit: empty input");
  if (num_bins == 0) throw ValidationError("histogram_binning_fit: need at least one bin");
  if (num_bins > n) {
    throw ValidationError("histogram_binning_fit: " + std::to_string(num_bins) +
                          " bins for " + std::to_string(n) + " points");
  }
  std::vector<double> sorted(top_conf.begin(), top_conf.end());
  std::sort(sorted.begin(), sorted.end());

  HistogramBins bins;
  bins.edges.push_back(0.0);
  const auto sizes = group_sizes(n, num_bins);
  std::size_t start = 0;
  for (std::size_t j = 0; j + 1 < num_bins; ++j) {
    start += sizes[j];
    const double e = sorted[start];
    // Skip edges that would leave an empty bin behind them.
    if (e > bins.edges.back() && e > sorted.front() && e < 1.0) bins.edges.push_back(e);
  }
  bins.edges.push_back(1.0);

  const std::size_t m = bins.edges.size() - 1;
  std::vector<double> hits(m, 0.0), counts(m, 0.0);
  HistogramBins probe{bins.edges, std::vector<double>(m)};
  std::iota(probe.values.begin(), probe.values.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto b = static_cast<std::size_t>(histogram_binning_apply(probe, top_conf[i]));
    counts[b] += 1.0;
    hits[b] += correct[i] ? 1.0 : 0.0;
  }
  bins.values.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    bins.values[j] = counts[j] > 0.0
                         ? hits[j] / counts[j]
                         : 0.5 * (bins.edges[j] + bins.edges[j + 1]);
  }
  return bins;
}

HistogramBins histogram_binning_fit(const CalibrationDataset& d,
                                    std::size_t num_bins) {
  const auto base = derive_outputs(d);
  return histogram_binning_fit(base.top_conf, base.correct, num_bins);
}

PlattBins platt_binning_fit(const CalibrationDataset& d, const Platt& platt,
                            std::size_t num_bins) {
  const auto stage = recalibrate(RecalibratorParams{platt}, d);
  return PlattBins{platt, histogram_binning_fit(stage.top_conf, stage.correct, num_bins)};
}

PlattBins platt_binning_fit(const CalibrationDataset& d, std::size_t num_bins,
                            const FitOptions& options) {
  const auto fit = fit_recalibrator(d, RecalibratorKind::kPlatt, options);
  return platt_binning_fit(d, std::get<Platt>(fit.params), num_bins);
}

}  // namespace selcal
