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

#include "selcal/losses.hpp"

#include <algorithm>
#include <cmath>

#include "selcal/error.hpp"

namespace selcal {

namespace {

void check_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ValidationError(std::string(what) + ": length mismatch (" +
                          std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

double clamp_conf(double h) {
  return std::clamp(h, kConfFloor, 1.0 - kConfFloor);
}

bool is_clamped(double h) { return h < kConfFloor || h > 1.0 - kConfFloor; }

double sign(double x) { return (x > 0.0) - (x < 0.0); }

double mean(Scores g) {
  double s = 0.0;
  for (double v : g) s += v;
  return g.empty() ? 0.0 : s / static_cast<double>(g.size());
}

}  // namespace

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kSTlbce: return "S-TLBCE";
    case LossKind::kSMce: return "S-MCE";
    case LossKind::kSMmce: return "S-MMCE";
  }
  return "?";
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "S-TLBCE" || name == "s_tlbce" || name == "tlbce") return LossKind::kSTlbce;
  if (name == "S-MCE" || name == "s_mce" || name == "mce") return LossKind::kSMce;
  if (name == "S-MMCE" || name == "s_mmce" || name == "mmce") return LossKind::kSMmce;
  throw ValidationError("unknown loss kind '" + name + "'");
}

void LossConfig::validate() const {
  if (!(q >= 1.0)) throw ValidationError("loss q must be >= 1");
  if (!(kernel_bandwidth > 0.0)) throw ValidationError("kernel_bandwidth must be > 0");
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
  if (!(beta > 0.0 && beta <= 1.0)) throw ValidationError("beta must lie in (0, 1]");
}

double s_tlbce(Scores g, Scores top_conf, Flags correct) {
  return s_tlbce_grad(g, top_conf, correct).value;
}

LossGradient s_tlbce_grad(Scores g, Scores top_conf, Flags correct) {
  check_same_length(g.size(), top_conf.size(), "s_tlbce");
  check_same_length(g.size(), correct.size(), "s_tlbce");
  const std::size_t n = g.size();
  LossGradient out;
  out.d_g.assign(n, 0.0);
  out.d_conf.assign(n, 0.0);
  if (n == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double h = clamp_conf(top_conf[i]);
    const bool c = correct[i] != 0;
    const double term = c ? -std::log(h) : -std::log(1.0 - h);
    total += g[i] * term;
    out.d_g[i] = term * inv_n;
    if (!is_clamped(top_conf[i])) {
      out.d_conf[i] = g[i] * inv_n * (c ? -1.0 / h : 1.0 / (1.0 - h));
    }
  }
  out.value = total * inv_n;
  return out;
}

double s_mce(Scores g, Scores label_prob) {
  return s_mce_grad(g, label_prob).value;
}

double s_mce(Scores g, std::span<const double> probs, std::size_t num_classes,
             std::span<const std::uint32_t> labels) {
  check_same_length(g.size(), labels.size(), "s_mce");
  check_same_length(probs.size(), labels.size() * num_classes, "s_mce");
  std::vector<double> label_prob(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) throw ValidationError("s_mce: label out of range");
    label_prob[i] = probs[i * num_classes + labels[i]];
  }
  return s_mce(g, label_prob);
}

LossGradient s_mce_grad(Scores g, Scores label_prob) {
  check_same_length(g.size(), label_prob.size(), "s_mce");
  const std::size_t n = g.size();
  LossGradient out;
  out.d_g.assign(n, 0.0);
  out.d_conf.assign(n, 0.0);
  if (n == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = clamp_conf(label_prob[i]);
    const double term = -std::log(p);
    total += g[i] * term;
    out.d_g[i] = term * inv_n;
    if (!is_clamped(label_prob[i])) out.d_conf[i] = -g[i] * inv_n / p;
  }
  out.value = total * inv_n;
  return out;
}

double s_mmce(Scores g, Scores top_conf, Flags correct, const LossConfig& config) {
  return s_mmce_grad(g, top_conf, correct, config).value;
}

LossGradient s_mmce_grad(Scores g, Scores top_conf, Flags correct,
                         const LossConfig& config) {
  check_same_length(g.size(), top_conf.size(), "s_mmce");
  check_same_length(g.size(), correct.size(), "s_mmce");
  const std::size_t n = g.size();
  const double q = config.q;
  const double bw = config.kernel_bandwidth;
  LossGradient out;
  out.d_g.assign(n, 0.0);
  out.d_conf.assign(n, 0.0);
  if (n == 0) return out;

  // a_i = e_i g_i, with e_i = |c_i - h_i|^q
  std::vector<double> resid(n), e(n), de(n), a(n);
  for (std::size_t i = 0; i < n; ++i) {
    resid[i] = top_conf[i] - (correct[i] ? 1.0 : 0.0);
    const double r = std::abs(resid[i]);
    e[i] = std::pow(r, q);
    de[i] = r > 0.0 ? q * std::pow(r, q - 1.0) * sign(resid[i]) : 0.0;
    a[i] = e[i] * g[i];
  }
  // kernel_row[i] = sum_j a_j phi_ij ; dphi_row[i] = sum_j a_j d phi_ij / d h_i
  std::vector<double> kernel_row(n, 0.0), dphi_row(n, 0.0);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double diff = top_conf[i] - top_conf[j];
      const double phi = std::exp(-std::abs(diff) / bw);
      kernel_row[i] += a[j] * phi;
      dphi_row[i] += a[j] * (-phi * sign(diff) / bw);
    }
    s += a[i] * kernel_row[i];
  }
  const double inv_n2 = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  s *= inv_n2;
  if (s <= 0.0) {
    out.value = 0.0;
    return out;
  }
  out.value = std::pow(s, 1.0 / q);
  const double d_outer = out.value / (q * s);  // d s^(1/q) / ds
  for (std::size_t i = 0; i < n; ++i) {
    const double ds_dg = 2.0 * inv_n2 * e[i] * kernel_row[i];
    const double ds_dh =
        2.0 * inv_n2 * (de[i] * g[i] * kernel_row[i] + a[i] * dphi_row[i]);
    out.d_g[i] = d_outer * ds_dg;
    out.d_conf[i] = d_outer * ds_dh;
  }
  return out;
}

double coverage_loss(Scores g, double beta) {
  return coverage_loss_grad(g, beta).value;
}

LossGradient coverage_loss_grad(Scores g, double beta) {
  if (g.empty()) throw ValidationError("coverage_loss: empty score vector");
  const double gap = beta - mean(g);
  LossGradient out;
  out.value = gap * gap;
  out.d_g.assign(g.size(), -2.0 * gap / static_cast<double>(g.size()));
  out.d_conf.assign(g.size(), 0.0);
  return out;
}

double total_loss(double selection, double coverage, double lambda,
                  bool drop_denominator, double mean_g) {
  const double sel =
      drop_denominator ? selection : selection / std::max(mean_g, kMinMeanSelection);
  return sel + lambda * coverage;
}

ObjectiveValue objective(const LossConfig& config, Scores g, Scores top_conf,
                         Flags correct, Scores label_prob) {
  const std::size_t n = g.size();
  LossGradient sel;
  ObjectiveValue out;
  out.d_top.assign(n, 0.0);
  out.d_label.assign(n, 0.0);
  switch (config.kind) {
    case LossKind::kSTlbce:
      sel = s_tlbce_grad(g, top_conf, correct);
      out.d_top = sel.d_conf;
      break;
    case LossKind::kSMce:
      sel = s_mce_grad(g, label_prob);
      out.d_label = sel.d_conf;
      break;
    case LossKind::kSMmce:
      sel = s_mmce_grad(g, top_conf, correct, config);
      out.d_top = sel.d_conf;
      break;
  }
  const LossGradient cov = coverage_loss_grad(g, config.beta);
  out.d_g = sel.d_g;
  out.selection = sel.value;
  if (!config.drop_denominator) {
    const double mg = mean(g);
    const double denom = std::max(mg, kMinMeanSelection);
    out.selection = sel.value / denom;
    const double inv = 1.0 / denom;
    for (double& v : out.d_top) v *= inv;
    for (double& v : out.d_label) v *= inv;
    // Quotient rule; the clamp makes the denominator constant below the floor.
    const double d_denom =
        mg > kMinMeanSelection ? -sel.value / (denom * denom) / static_cast<double>(n) : 0.0;
    for (std::size_t i = 0; i < n; ++i) out.d_g[i] = sel.d_g[i] * inv + d_denom;
  }
  out.coverage = cov.value;
  out.value = out.selection + config.lambda * cov.value;
  for (std::size_t i = 0; i < n; ++i) out.d_g[i] += config.lambda * cov.d_g[i];
  return out;
}

}  // namespace selcal
