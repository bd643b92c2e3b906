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

#include "selcal/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "selcal/error.hpp"
#include "selcal/parallel.hpp"
#include "selcal/rng.hpp"
#include "selcal/selector.hpp"

namespace selcal {

Ranking confidence_rank(std::span<const double> top_conf) {
  return {std::vector<double>(top_conf.begin(), top_conf.end()), "confidence"};
}

std::vector<std::uint8_t> select_at_coverage(std::span<const double> scores, double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw ValidationError("beta must lie in (0, 1]");
  const std::size_t n = scores.size();
  std::vector<std::uint8_t> keep(n, 0);
  if (n == 0) return keep;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const std::size_t k = coverage_count(beta, n);
  for (std::size_t i = 0; i < k; ++i) keep[order[i]] = 1;
  return keep;
}

double average_path_length(std::size_t n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  constexpr double kEulerGamma = 0.5772156649015329;
  const double m = static_cast<double>(n - 1);
  return 2.0 * (std::log(m) + kEulerGamma) - 2.0 * m / static_cast<double>(n);
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(std::span<const float> data, std::size_t dim, std::size_t limit, Rng& rng)
      : data_(data), dim_(dim), limit_(limit), rng_(rng) {}

  IsolationTree build(std::vector<std::size_t> rows) {
    tree_.nodes.clear();
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  float at(std::size_t row, std::size_t j) const { return data_[row * dim_ + j]; }

  std::uint32_t grow(std::vector<std::size_t>& rows, std::size_t depth) {
    const auto id = static_cast<std::uint32_t>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[id].size = static_cast<std::uint32_t>(rows.size());
    if (depth >= limit_ || rows.size() <= 1) return id;

    // Features with a nonzero range at this node.
    std::vector<std::size_t> usable;
    std::vector<std::pair<float, float>> range(dim_);
    for (std::size_t j = 0; j < dim_; ++j) {
      float lo = at(rows[0], j), hi = lo;
      for (std::size_t r : rows) {
        lo = std::min(lo, at(r, j));
        hi = std::max(hi, at(r, j));
      }
      range[j] = {lo, hi};
      if (hi > lo) usable.push_back(j);
    }
    if (usable.empty()) return id;
    const std::size_t f = usable[rng_.index(usable.size())];
    const double split = rng_.uniform(range[f].first, range[f].second);

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) (at(r, f) < split ? left : right).push_back(r);
    if (left.empty() || right.empty()) return id;  // split landed on an endpoint

    tree_.nodes[id].feature = static_cast<int>(f);
    tree_.nodes[id].split = split;
    const std::uint32_t l = grow(left, depth + 1);
    const std::uint32_t rgt = grow(right, depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = rgt;
    return id;
  }

  std::span<const float> data_;
  std::size_t dim_;
  std::size_t limit_;
  Rng& rng_;
  IsolationTree tree_;
};

}  // namespace

IsolationForestModel iforest_fit(std::span<const float> embeddings, std::size_t dim,
                                 std::size_t trees, std::size_t psi, std::uint64_t seed) {
  if (dim == 0) throw ValidationError("isolation forest needs embeddings (embed_dim = 0)");
  if (embeddings.size() % dim != 0) throw ValidationError("embedding buffer is not n x dim");
  const std::size_t n = embeddings.size() / dim;
  if (n < 2) throw ValidationError("isolation forest needs at least 2 points");
  if (trees == 0) throw ValidationError("isolation forest needs at least one tree");
  if (psi < 2) throw ValidationError("isolation forest subsample size must be >= 2");

  IsolationForestModel model;
  model.dim = dim;
  model.psi = std::min(psi, n);
  model.height_limit =
      static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(model.psi))));
  Rng rng(seed);
  TreeBuilder builder(embeddings, dim, model.height_limit, rng);
  model.trees.reserve(trees);
  for (std::size_t t = 0; t < trees; ++t) {
    auto perm = rng.permutation(n);
    perm.resize(model.psi);
    model.trees.push_back(builder.build(std::move(perm)));
  }
  return model;
}

double iforest_path_length(const IsolationForestModel& model, std::span<const float> x) {
  if (x.size() != model.dim) throw ValidationError("point dimension differs from forest");
  double total = 0.0;
  for (const auto& tree : model.trees) {
    std::uint32_t id = 0;
    double depth = 0.0;
    while (tree.nodes[id].feature >= 0) {
      const auto& node = tree.nodes[id];
      id = x[static_cast<std::size_t>(node.feature)] < node.split ? node.left : node.right;
      depth += 1.0;
    }
    total += depth + average_path_length(tree.nodes[id].size);
  }
  return total / static_cast<double>(model.trees.size());
}

double iforest_score(const IsolationForestModel& model, std::span<const float> x) {
  const double c = average_path_length(model.psi);
  return -std::exp2(-iforest_path_length(model, x) / c);
}

Ranking iforest_rank(const IsolationForestModel& model, std::span<const float> embeddings) {
  const std::size_t n = embeddings.size() / model.dim;
  Ranking r{std::vector<double>(n), "iforest"};
  parallel_for(n, [&](std::size_t i) {
    r.scores[i] = iforest_score(model, embeddings.subspan(i * model.dim, model.dim));
  });
  return r;
}

Ranking mahalanobis_rank(std::span<const float> embeddings, std::size_t dim, double eps) {
  if (dim == 0) throw ValidationError("Mahalanobis ranking needs embeddings (embed_dim = 0)");
  if (embeddings.size() % dim != 0) throw ValidationError("embedding buffer is not n x dim");
  if (!(eps > 0.0)) throw ValidationError("ridge eps must be positive");
  const std::size_t n = embeddings.size() / dim;
  if (n == 0) throw ValidationError("Mahalanobis ranking of an empty set");
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = embeddings[i * dim + j];
    }
  }
  const Eigen::RowVectorXd mu = x.colwise().mean();
  x.rowwise() -= mu;
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  Eigen::MatrixXd cov = (x.transpose() * x) / denom;
  cov.diagonal().array() += eps;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  const Eigen::MatrixXd solved = ldlt.solve(x.transpose());
  Ranking r{std::vector<double>(n), "mahalanobis"};
  for (std::size_t i = 0; i < n; ++i) {
    r.scores[i] = -x.row(static_cast<Eigen::Index>(i)).dot(solved.col(static_cast<Eigen::Index>(i)));
  }
  return r;
}

}  // namespace selcal
