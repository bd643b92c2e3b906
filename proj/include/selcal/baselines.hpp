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

#include "selcal/dataset.hpp"

namespace selcal {

// Higher score = keep first.
struct Ranking {
  std::vector<double> scores;
  std::string method;
};

Ranking confidence_rank(std::span<const double> top_conf);

// Keeps the ceil(beta n) highest scores; ties go to the lower index.
std::vector<std::uint8_t> select_at_coverage(std::span<const double> scores, double beta);

struct IsolationNode {
  int feature = -1;  // -1 marks a leaf
  double split = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::uint32_t size = 0;  // training points that reached a leaf
};

struct IsolationTree {
  std::vector<IsolationNode> nodes;  // nodes[0] is the root
};

struct IsolationForestModel {
  std::size_t dim = 0;
  std::size_t psi = 256;
  std::size_t height_limit = 0;
  std::vector<IsolationTree> trees;
};

inline constexpr std::size_t kForestTrees = 100;
inline constexpr std::size_t kForestSubsample = 256;

// Average unsuccessful-search path length in a binary search tree of n
// points: 2 H(n-1) - 2 (n-1) / n, with c(2) = 1 and c(n <= 1) = 0.
double average_path_length(std::size_t n);

// Rows of a row-major n x dim matrix.
IsolationForestModel iforest_fit(std::span<const float> embeddings, std::size_t dim,
                                 std::size_t trees = kForestTrees,
                                 std::size_t psi = kForestSubsample,
                                 std::uint64_t seed = 0);

double iforest_path_length(const IsolationForestModel& model, std::span<const float> x);

// -2^(-E[h(x)] / c(psi)); lies in (-1, 0), higher is more typical.
double iforest_score(const IsolationForestModel& model, std::span<const float> x);

Ranking iforest_rank(const IsolationForestModel& model, std::span<const float> embeddings);

// -(x - mu)^T (Sigma + eps I)^-1 (x - mu) with the sample mean and covariance.
Ranking mahalanobis_rank(std::span<const float> embeddings, std::size_t dim,
                         double eps = 1e-3);

}  // namespace selcal
