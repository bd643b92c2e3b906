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

#include "selcal/selector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "selcal/error.hpp"
#include "selcal/rng.hpp"

namespace selcal {

namespace {

using ConstMap = Eigen::Map<const RowMatrix>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::size_t SelectorParams::layer_in(std::size_t l) const {
  return l == 0 ? input_dim : hidden_dims[l - 1];
}

std::size_t SelectorParams::layer_out(std::size_t l) const {
  return l < hidden_dims.size() ? hidden_dims[l] : 1;
}

std::size_t SelectorParams::weight_offset(std::size_t l) const {
  std::size_t off = 0;
  for (std::size_t k = 0; k < l; ++k) off += (layer_in(k) + 1) * layer_out(k);
  return off;
}

std::size_t SelectorParams::bias_offset(std::size_t l) const {
  return weight_offset(l) + layer_in(l) * layer_out(l);
}

std::size_t SelectorParams::parameter_count(std::size_t input_dim,
                                            std::span<const std::size_t> hidden_dims) {
  std::size_t count = 0;
  std::size_t in = input_dim;
  for (std::size_t h : hidden_dims) {
    count += (in + 1) * h;
    in = h;
  }
  return count + in + 1;
}

void SelectorParams::validate() const {
  if (input_dim == 0) throw ValidationError("selector input_dim must be positive");
  for (std::size_t h : hidden_dims) {
    if (h == 0) throw ValidationError("selector hidden dims must be positive");
  }
  if (weights.size() != parameter_count(input_dim, hidden_dims)) {
    throw ValidationError("selector weight count " + std::to_string(weights.size()) +
                          " does not match architecture (" +
                          std::to_string(parameter_count(input_dim, hidden_dims)) + ")");
  }
}

SelectorParams init_selector(std::size_t input_dim,
                             std::vector<std::size_t> hidden_dims,
                             std::uint64_t seed) {
  SelectorParams p;
  p.input_dim = input_dim;
  p.hidden_dims = std::move(hidden_dims);
  p.weights.assign(SelectorParams::parameter_count(p.input_dim, p.hidden_dims), 0.0);
  p.validate();
  Rng rng(seed);
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    const double fan_in = static_cast<double>(p.layer_in(l));
    const double fan_out = static_cast<double>(p.layer_out(l));
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    const std::size_t off = p.weight_offset(l);
    for (std::size_t k = 0; k < p.layer_in(l) * p.layer_out(l); ++k) {
      p.weights[off + k] = rng.uniform(-limit, limit);
    }
  }
  return p;
}

ForwardCache selector_forward_batch(const SelectorParams& params,
                                    const RowMatrix& inputs) {
  if (static_cast<std::size_t>(inputs.cols()) != params.input_dim) {
    throw ValidationError("selector expects embed_dim " + std::to_string(params.input_dim) +
                          ", got " + std::to_string(inputs.cols()));
  }
  if (params.weights.size() !=
      SelectorParams::parameter_count(params.input_dim, params.hidden_dims)) {
    throw ValidationError("selector weights do not match architecture");
  }
  ForwardCache cache;
  cache.post.push_back(inputs);
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    const auto in = static_cast<Eigen::Index>(params.layer_in(l));
    const auto out = static_cast<Eigen::Index>(params.layer_out(l));
    ConstMap w(params.weights.data() + params.weight_offset(l), out, in);
    ConstVecMap b(params.weights.data() + params.bias_offset(l), out);
    RowMatrix z = cache.post.back() * w.transpose();
    z.rowwise() += b.transpose();
    cache.pre.push_back(z);
    if (l + 1 < params.num_layers()) {
      cache.post.push_back(z.cwiseMax(0.0));
    }
  }
  const RowMatrix& logit = cache.pre.back();
  cache.scores.resize(logit.rows());
  for (Eigen::Index i = 0; i < logit.rows(); ++i) cache.scores[i] = sigmoid(logit(i, 0));
  return cache;
}

double selector_forward(const SelectorParams& params,
                        std::span<const float> embedding) {
  RowMatrix x(1, static_cast<Eigen::Index>(embedding.size()));
  for (std::size_t j = 0; j < embedding.size(); ++j) x(0, static_cast<Eigen::Index>(j)) = embedding[j];
  return selector_forward_batch(params, x).scores[0];
}

std::vector<double> selector_scores(const SelectorParams& params,
                                    const CalibrationDataset& d) {
  if (d.embed_dim() != params.input_dim) {
    throw ValidationError("selector expects embed_dim " + std::to_string(params.input_dim) +
                          " but data has embed_dim " + std::to_string(d.embed_dim()));
  }
  std::vector<double> scores(d.size());
  constexpr std::size_t kChunk = 4096;
  for (std::size_t start = 0; start < d.size(); start += kChunk) {
    const std::size_t rows = std::min(kChunk, d.size() - start);
    RowMatrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d.embed_dim()));
    for (std::size_t r = 0; r < rows; ++r) {
      const auto e = d.embedding(start + r);
      for (std::size_t j = 0; j < e.size(); ++j) {
        x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = e[j];
      }
    }
    const auto cache = selector_forward_batch(params, x);
    for (std::size_t r = 0; r < rows; ++r) scores[start + r] = cache.scores[static_cast<Eigen::Index>(r)];
  }
  return scores;
}

std::vector<double> selector_backward(const SelectorParams& params,
                                      const ForwardCache& cache,
                                      std::span<const double> upstream) {
  const auto batch = cache.scores.size();
  if (static_cast<Eigen::Index>(upstream.size()) != batch ||
      cache.pre.size() != params.num_layers()) {
    throw ValidationError("selector_backward: upstream gradient does not match cached batch");
  }
  std::vector<double> grad(params.weights.size(), 0.0);
  RowMatrix delta(batch, 1);
  for (Eigen::Index i = 0; i < batch; ++i) {
    const double s = cache.scores[i];
    delta(i, 0) = upstream[static_cast<std::size_t>(i)] * s * (1.0 - s);
  }
  for (std::size_t l = params.num_layers(); l-- > 0;) {
    const auto in = static_cast<Eigen::Index>(params.layer_in(l));
    const auto out = static_cast<Eigen::Index>(params.layer_out(l));
    Eigen::Map<RowMatrix> dw(grad.data() + params.weight_offset(l), out, in);
    Eigen::Map<Eigen::VectorXd> db(grad.data() + params.bias_offset(l), out);
    dw = delta.transpose() * cache.post[l];
    db = delta.colwise().sum().transpose();
    if (l > 0) {
      ConstMap w(params.weights.data() + params.weight_offset(l), out, in);
      RowMatrix back = delta * w;
      const RowMatrix& z = cache.pre[l - 1];
      delta = back.cwiseProduct((z.array() > 0.0).cast<double>().matrix());
    }
  }
  return grad;
}

std::size_t coverage_count(double beta, std::size_t n) {
  const double exact = beta * static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  return std::clamp<std::size_t>(k, n == 0 ? 0 : 1, n);
}

double choose_threshold(std::span<const double> scores, double beta) {
  if (scores.empty()) throw ValidationError("choose_threshold: empty score vector");
  if (!(beta > 0.0 && beta <= 1.0)) throw ValidationError("choose_threshold: beta must lie in (0, 1]");
  std::vector<double> sorted(scores.begin(), scores.end());
  const std::size_t keep = coverage_count(beta, sorted.size());
  const std::size_t k = sorted.size() - keep;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
  return sorted[k];
}

double empirical_coverage(std::span<const double> scores, double tau) {
  if (scores.empty()) return 0.0;
  const auto kept = std::count_if(scores.begin(), scores.end(),
                                  [tau](double s) { return s >= tau; });
  return static_cast<double>(kept) / static_cast<double>(scores.size());
}

CoverageBound coverage_bound(double beta_tilde, std::size_t n_u, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("coverage_bound: delta must lie in (0, 1)");
  if (n_u == 0) throw ValidationError("coverage_bound: n_u must be at least 1");
  CoverageBound b;
  b.beta_tilde = beta_tilde;
  b.delta = delta;
  b.n_u = n_u;
  b.epsilon = std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n_u)));
  return b;
}

double choose_threshold_certified(std::span<const double> scores, double beta,
                                  double delta) {
  if (scores.empty()) throw ValidationError("choose_threshold_certified: empty score vector");
  const double eps = coverage_bound(beta, scores.size(), delta).epsilon;
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    // Everything >= sorted[i] is kept, including ties further down.
    const double tau = sorted[i];
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == tau) ++j;
    if (static_cast<double>(j + 1) / n - eps >= beta) return tau;
    i = j;
  }
  return sorted.back();
}

}  // namespace selcal
