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

#include "selcal/theorylab.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "selcal/error.hpp"
#include "selcal/parallel.hpp"
#include "selcal/rng.hpp"

namespace selcal {

namespace {

constexpr std::uint64_t kNormalizationSeed = 0x6e6f726d616c697aull;
constexpr int kMaxThetaRetries = 100;
constexpr std::size_t kMinRejectionAttempts = 100000;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double gauss(double v, double mean, double sd) {
  const double u = (v - mean) / sd;
  return std::exp(-0.5 * u * u);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  Rng rng(seed ^ (0x9e3779b97f4a7c15ull * (stream + 1)));
  return rng.next_u64();
}

// Distances from x = shift + sigma z to the nearer of two ball centers +-c,
// where the draw is centered on +c (own = sigma |z|).
struct DrawDistances {
  std::vector<double> inlier;
  std::vector<double> outlier;
};

DrawDistances draw_distances(const SyntheticSpec& spec, std::size_t draws) {
  const std::size_t p = spec.dim();
  Rng rng(kNormalizationSeed);
  DrawDistances d;
  d.inlier.resize(draws);
  d.outlier.resize(draws);
  std::vector<double> z(p);
  for (std::size_t i = 0; i < draws; ++i) {
    for (double& v : z) v = rng.normal();
    double own = 0.0, far_in = 0.0, far_out = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double s = spec.sigma * z[j];
      own += s * s;
      // Inlier draw centered at theta*: other ball at -theta*.
      const double a = s + 2.0 * spec.theta_star[j];
      far_in += a * a;
      // Outlier draw centered at -alpha theta*: other ball at +alpha theta*.
      const double b = s - 2.0 * spec.alpha * spec.theta_star[j];
      far_out += b * b;
    }
    d.inlier[i] = std::sqrt(std::min(own, far_in));
    d.outlier[i] = std::sqrt(std::min(own, far_out));
  }
  std::sort(d.inlier.begin(), d.inlier.end());
  std::sort(d.outlier.begin(), d.outlier.end());
  return d;
}

double mass_within(const std::vector<double>& sorted, double r) {
  const auto k = std::upper_bound(sorted.begin(), sorted.end(), r) - sorted.begin();
  return static_cast<double>(k) / static_cast<double>(sorted.size());
}

bool in_ball(std::span<const double> x, std::span<const double> center, double scale,
             double r) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double d = x[j] - scale * center[j];
    s += d * d;
  }
  return s <= r * r;
}

}  // namespace

double SyntheticSpec::theta_norm() const { return norm2(theta_star); }

void SyntheticSpec::validate_geometry() const {
  if (theta_star.empty()) throw ValidationError("theta_star must be nonempty");
  for (double v : theta_star) {
    if (!std::isfinite(v)) throw ValidationError("theta_star must be finite");
  }
  const double t = theta_norm();
  if (!(t > 0.0)) throw ValidationError("theta_star must be nonzero");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("sigma must be > 0");
  if (!(alpha > 0.0 && alpha < 0.5)) {
    std::ostringstream msg;
    msg << "alpha must lie in (0, 1/2), got " << alpha;
    throw ValidationError(msg.str());
  }
  if (!(r1 > 0.0) || !(r2 > 0.0)) throw ValidationError("radii r1, r2 must be > 0");
  if (!(beta_mix > 0.0 && beta_mix < 1.0)) throw ValidationError("beta_mix must lie in (0, 1)");
  if (m_train < 1) throw ValidationError("m_train must be >= 1");
  if (!(t > r1)) throw ValidationError("balls B(theta*, r1) and B(-theta*, r1) overlap");
  if (!(alpha * t > r2)) {
    throw ValidationError("balls B(alpha theta*, r2) and B(-alpha theta*, r2) overlap");
  }
  if (!((1.0 - alpha) * t > r1 + r2)) {
    throw ValidationError("inlier and outlier balls overlap; shrink r1 + r2 below (1 - alpha)|theta*|");
  }
}

double Normalization::relative_gap() const {
  return rho2 > 0.0 ? std::abs(rho1 - rho2) / rho2 : INFINITY;
}

Normalization estimate_normalization(const SyntheticSpec& spec, std::size_t draws) {
  spec.validate_geometry();
  const DrawDistances d = draw_distances(spec, draws);
  return {mass_within(d.inlier, spec.r1), mass_within(d.outlier, spec.r2)};
}

void SyntheticSpec::validate() const {
  validate_geometry();
  const Normalization n = estimate_normalization(*this);
  if (!(n.relative_gap() <= kNormalizationTolerance)) {
    std::ostringstream msg;
    msg << "truncation masses differ: rho1 = " << n.rho1 << ", rho2 = " << n.rho2
        << " (relative gap " << n.relative_gap() << " > " << kNormalizationTolerance
        << "); rematch r1";
    throw ValidationError(msg.str());
  }
}

SyntheticSpec match_radius(SyntheticSpec spec, std::size_t draws) {
  const double saved_r1 = spec.r1;
  spec.r1 = std::min(spec.r2, 0.5 * spec.theta_norm());
  spec.validate_geometry();
  spec.r1 = saved_r1;
  const DrawDistances d = draw_distances(spec, draws);
  const double target = mass_within(d.outlier, spec.r2);
  if (target <= 0.0) {
    throw ValidationError("outlier truncation mass is zero; increase r2 relative to sigma");
  }
  double lo = 0.0;
  double hi = d.inlier.back();
  double r = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    r = 0.5 * (lo + hi);
    const double rho = mass_within(d.inlier, r);
    if (std::abs(rho - target) <= 0.25 * kNormalizationTolerance * target) break;
    (rho < target ? lo : hi) = r;
  }
  spec.r1 = r;
  spec.validate_geometry();
  return spec;
}

std::pair<std::vector<double>, double> ball_geometry(const SyntheticSpec& spec, Ball b) {
  std::vector<double> c = spec.theta_star;
  double scale = 1.0, r = spec.r1;
  switch (b) {
    case Ball::kInlierPos: break;
    case Ball::kInlierNeg: scale = -1.0; break;
    case Ball::kOutlierPos: scale = spec.alpha; r = spec.r2; break;
    case Ball::kOutlierNeg: scale = -spec.alpha; r = spec.r2; break;
  }
  for (double& v : c) v *= scale;
  return {c, r};
}

SyntheticSample sample_synthetic(const SyntheticSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  const std::size_t p = spec.dim();
  SyntheticSample s;
  s.n = n;
  s.dim = p;
  s.x.resize(n * p);
  s.y.resize(n);
  s.z.resize(n);
  s.ball.resize(n);
  Rng rng(seed);
  std::vector<double> x(p);
  std::size_t attempts = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = rng.bernoulli(0.5) ? 1 : -1;
    const bool inlier = rng.bernoulli(spec.beta_mix);
    const double mean_scale = inlier ? y : -y * spec.alpha;
    const double ball_scale = inlier ? 1.0 : spec.alpha;
    const double r = inlier ? spec.r1 : spec.r2;
    for (;;) {
      ++attempts;
      for (std::size_t j = 0; j < p; ++j) {
        x[j] = mean_scale * spec.theta_star[j] + spec.sigma * rng.normal();
      }
      const bool pos = in_ball(x, spec.theta_star, ball_scale, r);
      const bool neg = !pos && in_ball(x, spec.theta_star, -ball_scale, r);
      if (pos || neg) {
        std::copy(x.begin(), x.end(), s.x.begin() + static_cast<std::ptrdiff_t>(i * p));
        s.y[i] = y;
        s.z[i] = inlier ? 1 : 0;
        s.ball[i] = inlier ? (pos ? Ball::kInlierPos : Ball::kInlierNeg)
                           : (pos ? Ball::kOutlierPos : Ball::kOutlierNeg);
        break;
      }
      if (attempts >= kMinRejectionAttempts &&
          static_cast<double>(i) / static_cast<double>(attempts) < kMinAcceptanceRate) {
        std::ostringstream msg;
        msg << "rejection sampling acceptance rate below " << kMinAcceptanceRate
            << " after " << attempts << " attempts; use larger radii relative to sigma";
        throw ValidationError(msg.str());
      }
    }
  }
  s.acceptance_rate = n == 0 ? 1.0 : static_cast<double>(n) / static_cast<double>(attempts);
  return s;
}

SyntheticSample sample_training(const SyntheticSpec& spec, std::size_t m, std::uint64_t seed) {
  spec.validate_geometry();
  const std::size_t p = spec.dim();
  SyntheticSample s;
  s.n = m;
  s.dim = p;
  s.x.resize(m * p);
  s.y.resize(m);
  s.z.assign(m, 1);
  s.ball.resize(m);
  Rng rng(seed);
  for (std::size_t i = 0; i < m; ++i) {
    const int y = rng.bernoulli(0.5) ? 1 : -1;
    for (std::size_t j = 0; j < p; ++j) {
      s.x[i * p + j] = y * spec.theta_star[j] + spec.sigma * rng.normal();
    }
    s.y[i] = y;
    s.ball[i] = y > 0 ? Ball::kInlierPos : Ball::kInlierNeg;
  }
  s.acceptance_rate = 1.0;
  return s;
}

std::vector<double> train_theta_hat(const SyntheticSample& train) {
  if (train.n == 0) throw ValidationError("theta_hat needs at least one training point");
  std::vector<double> theta(train.dim, 0.0);
  for (std::size_t i = 0; i < train.n; ++i) {
    for (std::size_t j = 0; j < train.dim; ++j) theta[j] += train.x[i * train.dim + j] * train.y[i];
  }
  for (double& v : theta) v /= static_cast<double>(train.n);
  return theta;
}

std::pair<double, double> confidence(std::span<const double> theta_hat,
                                     std::span<const double> x) {
  if (theta_hat.size() != x.size()) throw ValidationError("theta_hat and x dimensions differ");
  const double f1 = sigmoid(2.0 * dot(theta_hat, x));
  return {1.0 - f1, f1};
}

ProjectedModel::ProjectedModel(const SyntheticSpec& spec, std::vector<double> theta_hat,
                               std::size_t cells_per_interval)
    : theta_hat_(std::move(theta_hat)) {
  spec.validate_geometry();
  if (theta_hat_.size() != spec.dim()) throw ValidationError("theta_hat dimension differs from spec");
  if (cells_per_interval < 1) throw ValidationError("quadrature needs at least one cell");
  mu_ = dot(theta_hat_, spec.theta_star);
  norm_ = norm2(theta_hat_);
  if (!(mu_ > 0.0)) throw DomainError("theta_hat is not positively aligned with theta*");
  scale_ = spec.sigma * norm_;
  a1_ = mu_ / (spec.sigma * spec.sigma * norm_ * norm_);
  a2_ = spec.alpha * a1_;
  alpha_ = spec.alpha;
  beta_ = spec.beta_mix;
  const double ra = spec.r1 * norm_;
  const double rb = spec.r2 * norm_;
  a_ = {Interval{mu_ - ra, mu_ + ra}, Interval{-mu_ - ra, -mu_ + ra}};
  b_ = {Interval{alpha_ * mu_ - rb, alpha_ * mu_ + rb}, Interval{-alpha_ * mu_ - rb, -alpha_ * mu_ + rb}};
  if (!(a_[0].lo > b_[0].hi) || !(b_[0].lo > b_[1].hi) || !(b_[1].lo > a_[1].hi)) {
    throw DomainError("projected regions A and Bset overlap");
  }

  const std::array<Interval, 4> parts{a_[0], a_[1], b_[0], b_[1]};
  const std::size_t cells = 4 * cells_per_interval;
  grid_.nodes.reserve(3 * cells);
  grid_.weights.reserve(3 * cells);
  grid_.cell_region.reserve(cells);
  for (std::size_t r = 0; r < parts.size(); ++r) {
    const double h = parts[r].length() / static_cast<double>(cells_per_interval);
    for (std::size_t c = 0; c < cells_per_interval; ++c) {
      const double left = parts[r].lo + static_cast<double>(c) * h;
      const double right = c + 1 == cells_per_interval ? parts[r].hi : left + h;
      grid_.nodes.insert(grid_.nodes.end(), {left, 0.5 * (left + right), right});
      const double w = (right - left) / 6.0;
      grid_.weights.insert(grid_.weights.end(), {w, 4.0 * w, w});
      grid_.cell_region.push_back(static_cast<std::uint8_t>(r));
    }
  }

  // Normalizers of the truncated components.
  za_ = 0.0;
  zb_ = 0.0;
  for (std::size_t k = 0; k < grid_.nodes.size(); ++k) {
    const double v = grid_.nodes[k];
    if (grid_.cell_region[k / 3] < 2) {
      za_ += grid_.weights[k] * gauss(v, mu_, scale_);
    } else {
      zb_ += grid_.weights[k] * gauss(v, -alpha_ * mu_, scale_);
    }
  }
  node_mass_.resize(grid_.nodes.size());
  cell_mass_.assign(cells, 0.0);
  for (std::size_t k = 0; k < grid_.nodes.size(); ++k) {
    const double v = grid_.nodes[k];
    double m = 0.0;
    if (grid_.cell_region[k / 3] < 2) {
      m = 0.5 * beta_ * (gauss(v, mu_, scale_) + gauss(v, -mu_, scale_)) / za_;
    } else {
      m = 0.5 * (1.0 - beta_) *
          (gauss(v, -alpha_ * mu_, scale_) + gauss(v, alpha_ * mu_, scale_)) / zb_;
    }
    node_mass_[k] = grid_.weights[k] * m;
    cell_mass_[k / 3] += node_mass_[k];
  }
}

bool ProjectedModel::in_a(double v) const { return a_[0].contains(v) || a_[1].contains(v); }
bool ProjectedModel::in_b(double v) const { return b_[0].contains(v) || b_[1].contains(v); }

double ProjectedModel::true_conditional(double v) const {
  if (in_a(v)) return sigmoid(2.0 * a1_ * v);
  if (in_b(v)) return sigmoid(-2.0 * a2_ * v);
  std::ostringstream msg;
  msg << "v = " << v << " lies outside A and Bset (zero density)";
  throw DomainError(msg.str());
}

double ProjectedModel::density(double v, int y) const {
  if (y != 1 && y != -1) throw ValidationError("label must be +1 or -1");
  if (in_a(v)) return beta_ * gauss(v, y * mu_, scale_) / za_;
  if (in_b(v)) return (1.0 - beta_) * gauss(v, -y * alpha_ * mu_, scale_) / zb_;
  return 0.0;
}

double ProjectedModel::marginal(double v) const {
  return 0.5 * (density(v, 1) + density(v, -1));
}

ProjectedModel fit_projected_model(const SyntheticSpec& spec, std::uint64_t seed,
                                   std::size_t cells_per_interval) {
  for (int attempt = 0; attempt < kMaxThetaRetries; ++attempt) {
    const auto train =
        sample_training(spec, spec.m_train, derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    auto theta = train_theta_hat(train);
    if (dot(theta, spec.theta_star) > 0.0) {
      return ProjectedModel(spec, std::move(theta), cells_per_interval);
    }
  }
  throw DomainError("theta_hat failed to align with theta* after 100 training draws");
}

double true_conditional(const ProjectedModel& pm, double v) { return pm.true_conditional(v); }

double projected_density(const ProjectedModel& pm, double v, int y) { return pm.density(v, y); }

RegionSelector accept_all(const ProjectedModel& pm) {
  return {std::vector<double>(pm.grid().num_cells(), 1.0)};
}

RegionSelector inlier_selector(const ProjectedModel& pm) {
  RegionSelector g{std::vector<double>(pm.grid().num_cells(), 0.0)};
  for (std::size_t c = 0; c < g.accept.size(); ++c) {
    g.accept[c] = pm.grid().cell_region[c] < 2 ? 1.0 : 0.0;
  }
  return g;
}

namespace {

void check_selector(const ProjectedModel& pm, const RegionSelector& g) {
  if (g.accept.size() != pm.grid().num_cells()) {
    throw ValidationError("selector size differs from quadrature grid");
  }
  for (double a : g.accept) {
    if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("selector fractions must lie in [0, 1]");
  }
}

// Per-cell integral of the marginal times |P[y=1|v] - sigmoid(2v/T)|.
std::vector<double> cell_gap_mass(const ProjectedModel& pm, double t) {
  if (!(t > 0.0)) throw ValidationError("temperature must be > 0");
  const auto& grid = pm.grid();
  std::vector<double> out(grid.num_cells(), 0.0);
  for (std::size_t k = 0; k < grid.nodes.size(); ++k) {
    const double v = grid.nodes[k];
    const bool a = grid.cell_region[k / 3] < 2;
    const double p = a ? sigmoid(2.0 * pm.a1() * v) : sigmoid(-2.0 * pm.a2() * v);
    out[k / 3] += pm.node_mass()[k] * std::abs(p - sigmoid(2.0 * v / t));
  }
  return out;
}

}  // namespace

double selector_coverage(const ProjectedModel& pm, const RegionSelector& g) {
  check_selector(pm, g);
  double m = 0.0;
  for (std::size_t c = 0; c < g.accept.size(); ++c) m += g.accept[c] * pm.cell_mass()[c];
  return m;
}

double srece(const ProjectedModel& pm, const RegionSelector& g, double t) {
  check_selector(pm, g);
  const auto gap = cell_gap_mass(pm, t);
  double num = 0.0, den = 0.0;
  for (std::size_t c = 0; c < gap.size(); ++c) {
    num += g.accept[c] * gap[c];
    den += g.accept[c] * pm.cell_mass()[c];
  }
  if (!(den > 0.0)) throw DomainError("selector accepts zero mass");
  return num / den;
}

double rece(const ProjectedModel& pm, double t) { return srece(pm, accept_all(pm), t); }

double sece(const ProjectedModel& pm, const RegionSelector& g) { return srece(pm, g, 1.0); }

RegionSelector optimal_selector(const ProjectedModel& pm, double t, double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw ValidationError("beta must lie in (0, 1]");
  RegionSelector g = accept_all(pm);
  if (beta >= 1.0) return g;
  const auto gap = cell_gap_mass(pm, t);
  const auto& mass = pm.cell_mass();
  std::vector<double> mean_gap(gap.size(), 0.0);
  for (std::size_t c = 0; c < gap.size(); ++c) {
    mean_gap[c] = mass[c] > 0.0 ? gap[c] / mass[c] : 0.0;
  }
  std::vector<std::size_t> order(gap.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return mean_gap[a] < mean_gap[b]; });
  std::fill(g.accept.begin(), g.accept.end(), 0.0);
  double acc = 0.0;
  for (std::size_t c : order) {
    if (acc + mass[c] >= beta) {
      g.accept[c] = mass[c] > 0.0 ? std::clamp((beta - acc) / mass[c], 0.0, 1.0) : 1.0;
      return g;
    }
    g.accept[c] = 1.0;
    acc += mass[c];
  }
  return g;
}

TemperatureMin minimize_over_temperature(const ProjectedModel& pm, const RegionSelector& g) {
  constexpr double kLo = -8.0, kHi = 8.0, kStep = 0.05;
  const auto f = [&](double lt) { return srece(pm, g, std::exp(lt)); };
  const int count = static_cast<int>(std::lround((kHi - kLo) / kStep));
  int best = 0;
  double best_val = INFINITY;
  for (int i = 0; i <= count; ++i) {
    const double val = f(kLo + i * kStep);
    if (val < best_val) {
      best_val = val;
      best = i;
    }
  }
  double a = kLo + std::max(best - 1, 0) * kStep;
  double b = kLo + std::min(best + 1, count) * kStep;
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > 1e-10) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  const double lt = 0.5 * (a + b);
  const double val = f(lt);
  if (val <= best_val) return {std::exp(lt), val};
  return {std::exp(kLo + best * kStep), best_val};
}

double conditional_discrepancy(const ProjectedModel& pm, const SyntheticSample& sample,
                               std::size_t bins_per_interval, std::size_t min_count) {
  if (bins_per_interval < 1) throw ValidationError("need at least one bin per interval");
  const std::array<Interval, 4> parts{pm.region_a()[0], pm.region_a()[1], pm.region_b()[0],
                                      pm.region_b()[1]};
  // (v, y = +1) per interval
  std::array<std::vector<std::pair<double, int>>, 4> members;
  for (std::size_t i = 0; i < sample.n; ++i) {
    const double v = dot(pm.theta_hat(), sample.row(i));
    for (std::size_t r = 0; r < parts.size(); ++r) {
      if (parts[r].contains(v)) {
        members[r].emplace_back(v, sample.y[i] > 0 ? 1 : 0);
        break;
      }
    }
  }
  double worst = 0.0;
  for (auto& m : members) {
    std::sort(m.begin(), m.end());
    const std::size_t bins = std::min(bins_per_interval, std::max<std::size_t>(1, m.size()));
    for (std::size_t b = 0; b < bins; ++b) {
      const std::size_t lo = b * m.size() / bins, hi = (b + 1) * m.size() / bins;
      const std::size_t count = hi - lo;
      if (count == 0 || count < min_count) continue;
      double ones = 0.0, closed = 0.0;
      for (std::size_t k = lo; k < hi; ++k) {
        ones += m[k].second;
        closed += pm.true_conditional(m[k].first);
      }
      worst = std::max(worst, std::abs(ones - closed) / static_cast<double>(count));
    }
  }
  return worst;
}

TheoryReport verify_theorems(const SyntheticSpec& spec, std::uint64_t seed,
                             std::size_t mc_samples) {
  spec.validate();
  TheoryReport r;
  r.spec = spec;
  r.seed = seed;
  const ProjectedModel pm = fit_projected_model(spec, seed);
  r.theta_hat = pm.theta_hat();
  r.t0 = pm.t0();
  r.srece_g0_t0 = srece(pm, inlier_selector(pm), r.t0);
  r.rece_t0 = rece(pm, r.t0);

  const TemperatureMin rmin = minimize_over_temperature(pm, accept_all(pm));
  r.min_rece = rmin.value;
  r.t_tilde = rmin.t;

  const RegionSelector g_tilde = optimal_selector(pm, 1.0, spec.beta_mix);
  r.min_sece = sece(pm, g_tilde);
  r.ece_r_then_s = srece(pm, optimal_selector(pm, r.t_tilde, spec.beta_mix), r.t_tilde);
  const TemperatureMin smin = minimize_over_temperature(pm, g_tilde);
  r.ece_s_then_r = smin.value;
  r.t_s_then_r = smin.t;

  if (mc_samples > 0) {
    const auto sample = sample_synthetic(spec, mc_samples, derive_seed(seed, 1000));
    r.mc_max_discrepancy = conditional_discrepancy(pm, sample);
    r.mc_samples = mc_samples;
  }
  r.zero_error_ok = r.srece_g0_t0 < kZeroErrorBound;
  r.separation_ok = r.min_rece > kSeparationBound && r.min_sece > kSeparationBound &&
                    r.ece_r_then_s > kSeparationBound && r.ece_s_then_r > kSeparationBound;
  return r;
}

std::vector<SweepRow> theory_sweep(const SyntheticSpec& base, std::span<const double> sigmas,
                                   std::span<const double> alphas,
                                   std::span<const double> betas, std::uint64_t seed) {
  std::vector<SyntheticSpec> specs;
  for (double s : sigmas) {
    for (double a : alphas) {
      for (double b : betas) {
        SyntheticSpec spec = base;
        spec.sigma = s;
        spec.alpha = a;
        spec.beta_mix = b;
        specs.push_back(match_radius(spec));
      }
    }
  }
  std::vector<SweepRow> rows(specs.size());
  parallel_for(specs.size(), [&](std::size_t i) {
    const TheoryReport r = verify_theorems(specs[i], seed, 0);
    rows[i] = {specs[i].sigma, specs[i].alpha, specs[i].beta_mix, r.min_rece,
               r.min_sece,     r.srece_g0_t0,  r.ece_r_then_s,    r.ece_s_then_r};
  });
  return rows;
}

SyntheticSpec SyntheticSpec::reference() {
  SyntheticSpec s;
  s.theta_star = {1.0, 0.0, 0.0, 0.0};
  s.sigma = 0.2;
  s.alpha = 0.3;
  s.r2 = 0.2;
  s.r1 = 0.2;
  s.beta_mix = 0.8;
  s.m_train = 100000;
  return match_radius(s);
}

}  // namespace selcal
