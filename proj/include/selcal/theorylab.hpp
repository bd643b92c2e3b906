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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace selcal {

// Perturbed two-class mixture. Inliers (mass beta_mix) are N(y theta*, sigma^2 I)
// truncated to B(theta*, r1) u B(-theta*, r1); outliers are N(-y alpha theta*,
// sigma^2 I) truncated to B(alpha theta*, r2) u B(-alpha theta*, r2).
struct SyntheticSpec {
  std::vector<double> theta_star;
  double sigma = 0.2;
  double alpha = 0.3;
  double r1 = 0.2;
  double r2 = 0.2;
  double beta_mix = 0.8;
  std::size_t m_train = 100000;

  std::size_t dim() const { return theta_star.size(); }
  double theta_norm() const;

  // Ranges, radii and pairwise ball disjointness.
  void validate_geometry() const;

  // Geometry plus the normalization check |rho1 - rho2| <= 1e-3 rho2.
  void validate() const;

  // p = 4, theta* = e1, sigma = 0.2, alpha = 0.3, beta = 0.8, r2 = 0.2 and r1
  // matched to it.
  static SyntheticSpec reference();
};

inline constexpr double kNormalizationTolerance = 1e-3;
inline constexpr std::size_t kNormalizationDraws = 200000;

// Truncation masses rho1 (inlier component on its ball pair) and rho2
// (outlier component on its ball pair), estimated from one shared set of
// N(0, I) draws.
struct Normalization {
  double rho1 = 0.0;
  double rho2 = 0.0;
  double relative_gap() const;
};

Normalization estimate_normalization(const SyntheticSpec& spec,
                                     std::size_t draws = kNormalizationDraws);

// Solves rho1(r1) = rho2(r2) for r1 by bisection; returns spec with r1 set.
SyntheticSpec match_radius(SyntheticSpec spec, std::size_t draws = kNormalizationDraws);

enum class Ball : std::uint8_t { kInlierPos, kInlierNeg, kOutlierPos, kOutlierNeg };

struct SyntheticSample {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::vector<double> x;  // n x dim, row-major
  std::vector<int> y;     // +1 / -1
  std::vector<std::uint8_t> z;  // 1 = inlier
  std::vector<Ball> ball;
  double acceptance_rate = 0.0;
  std::span<const double> row(std::size_t i) const { return {x.data() + i * dim, dim}; }
};

inline constexpr double kMinAcceptanceRate = 1e-4;

SyntheticSample sample_synthetic(const SyntheticSpec& spec, std::size_t n, std::uint64_t seed);

// Center of the ball a point was tagged with, and its radius.
std::pair<std::vector<double>, double> ball_geometry(const SyntheticSpec& spec, Ball b);

// Unperturbed training mixture x | y ~ N(y theta*, sigma^2 I).
SyntheticSample sample_training(const SyntheticSpec& spec, std::size_t m, std::uint64_t seed);

// (1/m) sum x_i y_i
std::vector<double> train_theta_hat(const SyntheticSample& train);

// (f_-1, f_1) with f_1 = sigmoid(2 theta_hat^T x).
std::pair<double, double> confidence(std::span<const double> theta_hat,
                                     std::span<const double> x);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
  double length() const { return hi - lo; }
};

// Composite Simpson grid: each cell contributes three nodes (left, mid,
// right) with weights h/6, 4h/6, h/6.
struct QuadratureGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<std::uint8_t> cell_region;  // 0..1 = A intervals, 2..3 = Bset intervals
  std::size_t num_cells() const { return cell_region.size(); }
};

inline constexpr std::size_t kCellsPerInterval = 2048;

// 1-D law of v = theta_hat^T x under the spec.
class ProjectedModel {
 public:
  ProjectedModel(const SyntheticSpec& spec, std::vector<double> theta_hat,
                 std::size_t cells_per_interval = kCellsPerInterval);

  const std::vector<double>& theta_hat() const { return theta_hat_; }
  double mu() const { return mu_; }          // theta_hat^T theta*
  double norm() const { return norm_; }      // |theta_hat|
  double scale() const { return scale_; }    // sigma |theta_hat|
  double a1() const { return a1_; }
  double a2() const { return a2_; }
  double beta() const { return beta_; }
  // Temperature of the inlier-optimal recalibration, sigma^2 |theta_hat|^2 / mu.
  double t0() const { return 1.0 / a1_; }
  const std::array<Interval, 2>& region_a() const { return a_; }
  const std::array<Interval, 2>& region_b() const { return b_; }
  bool in_a(double v) const;
  bool in_b(double v) const;

  const QuadratureGrid& grid() const { return grid_; }
  // Marginal density times Simpson weight at every node.
  const std::vector<double>& node_mass() const { return node_mass_; }
  const std::vector<double>& cell_mass() const { return cell_mass_; }

  double true_conditional(double v) const;
  double density(double v, int y) const;
  double marginal(double v) const;

 private:
  std::vector<double> theta_hat_;
  double mu_ = 0.0, norm_ = 0.0, scale_ = 0.0, a1_ = 0.0, a2_ = 0.0;
  double alpha_ = 0.0, beta_ = 0.0;
  std::array<Interval, 2> a_{}, b_{};
  double za_ = 1.0, zb_ = 1.0;  // truncation normalizers on the grid
  QuadratureGrid grid_;
  std::vector<double> node_mass_;
  std::vector<double> cell_mass_;
};

// Retrains on fresh samples (up to 100 times) until theta_hat^T theta* > 0.
ProjectedModel fit_projected_model(const SyntheticSpec& spec, std::uint64_t seed,
                                   std::size_t cells_per_interval = kCellsPerInterval);

double true_conditional(const ProjectedModel& pm, double v);
double projected_density(const ProjectedModel& pm, double v, int y);

// Acceptance fraction per quadrature cell.
struct RegionSelector {
  std::vector<double> accept;
};

RegionSelector accept_all(const ProjectedModel& pm);
// Accepts region A only (rejects every Bset cell).
RegionSelector inlier_selector(const ProjectedModel& pm);
double selector_coverage(const ProjectedModel& pm, const RegionSelector& g);

// E[ |P[y=1|v] - sigmoid(2v/T)| ] under the selector-weighted marginal.
double srece(const ProjectedModel& pm, const RegionSelector& g, double t);
double rece(const ProjectedModel& pm, double t);
double sece(const ProjectedModel& pm, const RegionSelector& g);

// Greedy cell acceptance in increasing order of mean gap until the accepted
// mass reaches beta; the boundary cell is accepted fractionally.
RegionSelector optimal_selector(const ProjectedModel& pm, double t, double beta);

struct TemperatureMin {
  double t = 1.0;
  double value = 0.0;
};

// Global minimum over T in [e^-8, e^8]: coarse log-grid scan, then
// golden-section refinement around the best grid point.
TemperatureMin minimize_over_temperature(const ProjectedModel& pm, const RegionSelector& g);

struct TheoryReport {
  SyntheticSpec spec;
  std::uint64_t seed = 0;
  std::vector<double> theta_hat;
  double t0 = 0.0;
  double srece_g0_t0 = 0.0;
  double rece_t0 = 0.0;
  double min_rece = 0.0;
  double t_tilde = 0.0;
  double min_sece = 0.0;
  double ece_r_then_s = 0.0;
  double ece_s_then_r = 0.0;
  double t_s_then_r = 0.0;
  double mc_max_discrepancy = 0.0;  // closed-form vs binned Monte Carlo P[y=1|v]
  std::size_t mc_samples = 0;
  bool zero_error_ok = false;   // srece_g0_t0 < 1e-3
  bool separation_ok = false;   // every competitor > 1e-2
  bool passed() const { return zero_error_ok && separation_ok; }
};

inline constexpr double kZeroErrorBound = 1e-3;
inline constexpr double kSeparationBound = 1e-2;
inline constexpr std::size_t kDiscrepancySamples = 1000000;

TheoryReport verify_theorems(const SyntheticSpec& spec, std::uint64_t seed,
                             std::size_t mc_samples = kDiscrepancySamples);

// Max over bins of |empirical P[y=1|v] - mean closed form| for a sample.
// Each region interval is cut into equal-mass bins; bins with fewer than
// min_count points are skipped.
double conditional_discrepancy(const ProjectedModel& pm, const SyntheticSample& sample,
                               std::size_t bins_per_interval = 10,
                               std::size_t min_count = 200);

struct SweepRow {
  double sigma = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double min_rece = 0.0;
  double min_sece = 0.0;
  double srece_g0_t0 = 0.0;
  double ece_r_then_s = 0.0;
  double ece_s_then_r = 0.0;
};

// Every (sigma, alpha, beta) combination of the base spec, r1 rematched per
// point. Monte Carlo discrepancy is skipped.
std::vector<SweepRow> theory_sweep(const SyntheticSpec& base, std::span<const double> sigmas,
                                   std::span<const double> alphas,
                                   std::span<const double> betas, std::uint64_t seed);

}  // namespace selcal
