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
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "selcal/dataset.hpp"

namespace selcal {

// Soft selector: an MLP with ReLU hidden layers and a sigmoid scalar output.
// All weights live in one flat vector; layer l stores its (out x in)
// row-major weight matrix followed by its bias.
struct SelectorParams {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims;
  std::vector<double> weights;
  std::optional<double> tau;  // set at inference by choose_threshold

  std::size_t num_layers() const { return hidden_dims.size() + 1; }
  std::size_t layer_in(std::size_t l) const;
  std::size_t layer_out(std::size_t l) const;
  std::size_t weight_offset(std::size_t l) const;
  std::size_t bias_offset(std::size_t l) const;
  static std::size_t parameter_count(std::size_t input_dim,
                                     std::span<const std::size_t> hidden_dims);
  void validate() const;
};

// Glorot-uniform weights, zero biases.
SelectorParams init_selector(std::size_t input_dim,
                             std::vector<std::size_t> hidden_dims,
                             std::uint64_t seed);

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Activations of one forward pass, kept for the backward pass.
struct ForwardCache {
  std::vector<RowMatrix> pre;   // pre-activation per layer
  std::vector<RowMatrix> post;  // post[0] is the input batch
  Eigen::VectorXd scores;
};

ForwardCache selector_forward_batch(const SelectorParams& params,
                                    const RowMatrix& inputs);

double selector_forward(const SelectorParams& params,
                        std::span<const float> embedding);

std::vector<double> selector_scores(const SelectorParams& params,
                                    const CalibrationDataset& d);

// Gradient of a scalar loss with respect to every weight, given dL/dscore for
// each row of the cached batch. Layout matches SelectorParams::weights.
std::vector<double> selector_backward(const SelectorParams& params,
                                      const ForwardCache& cache,
                                      std::span<const double> upstream);

// Number of items kept for target coverage beta out of n: ceil(beta * n),
// with a small tolerance against representation error in beta * n.
std::size_t coverage_count(double beta, std::size_t n);

// tau = the (n - ceil(beta n) + 1)-th smallest score; every score >= tau is
// accepted, ties included.
double choose_threshold(std::span<const double> scores, double beta);

// Hoeffding interval [beta_tilde - epsilon, beta_tilde + epsilon] for the
// population coverage given n_u i.i.d. tuning points.
struct CoverageBound {
  double beta_tilde = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  std::size_t n_u = 0;

  double lower() const { return beta_tilde - epsilon; }
  double upper() const { return beta_tilde + epsilon; }
};

CoverageBound coverage_bound(double beta_tilde, std::size_t n_u, double delta);

// Lowers tau until the Hoeffding lower bound on coverage clears beta. Returns
// the smallest score when no threshold can certify beta.
double choose_threshold_certified(std::span<const double> scores, double beta,
                                  double delta);

double empirical_coverage(std::span<const double> scores, double tau);

}  // namespace selcal
