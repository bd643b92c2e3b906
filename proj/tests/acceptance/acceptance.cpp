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

// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

#include "selcal/baselines.hpp"
#include "selcal/commands.hpp"
#include "selcal/io.hpp"
#include "selcal/losses.hpp"
#include "selcal/metrics.hpp"
#include "selcal/recalibrate.hpp"
#include "selcal/rng.hpp"
#include "selcal/selector.hpp"
#include "selcal/theorylab.hpp"
#include "selcal/train.hpp"

namespace fs = std::filesystem;
using namespace selcal;

namespace {

const fs::path kData = SELCAL_TEST_DATA;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)});
}

CalibrationDataset random_dataset(std::size_t n, std::size_t d, std::size_t k, Rng& rng) {
  std::vector<float> emb(n * d), logits(n * k);
  std::vector<std::uint32_t> labels(n);
  for (auto& v : emb) v = static_cast<float>(rng.normal());
  for (auto& v : logits) v = static_cast<float>(1.5 * rng.normal());
  for (auto& l : labels) l = static_cast<std::uint32_t>(rng.index(k));
  return CalibrationDataset("random", n, d, k, std::move(emb), std::move(logits),
                            std::move(labels));
}

void loss_identities(Outcome& o) {
  Rng rng(101);
  double worst_bce = 0.0, worst_mce = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.index(64);
    std::vector<double> g(n, 1.0), h(n);
    std::vector<std::uint8_t> c(n);
    double bce = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = rng.uniform(0.01, 0.999);
      c[i] = rng.bernoulli(0.7) ? 1 : 0;
      bce -= c[i] ? std::log(h[i]) : std::log(1.0 - h[i]);
    }
    bce /= static_cast<double>(n);
    worst_bce = std::max(worst_bce, std::abs(s_tlbce(g, h, c) - bce));
  }
  // Binary instances through a recalibrator: on correct predictions the
  // true-class probability is the top-label confidence.
  int checked = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::vector<float> logits{static_cast<float>(2.0 * rng.normal()),
                                    static_cast<float>(2.0 * rng.normal())};
    const auto label = static_cast<std::uint32_t>(rng.index(2));
    const RecalibratorParams recal =
        rng.bernoulli(0.5) ? RecalibratorParams{Temperature{rng.uniform(-1.0, 1.0)}}
                           : RecalibratorParams{Platt{rng.uniform(-4.0, -0.5), rng.uniform(-1.0, 1.0)}};
    const auto pt = recalibrate_point(recal, logits, label);
    if (!pt.correct) continue;
    ++checked;
    const std::vector<double> g{rng.uniform()};
    worst_mce = std::max(worst_mce, std::abs(s_mce(g, std::vector<double>{pt.label_prob}) -
                                             s_tlbce(g, std::vector<double>{pt.top_conf},
                                                     std::vector<std::uint8_t>{1})));
  }
  o.require(worst_bce <= 1e-12, "S-TLBCE(g=1) vs BCE");
  o.require(worst_mce <= 1e-12, "S-MCE vs S-TLBCE on correct K=2 instances");
  o.require(checked > 300, "enough correct instances");
  o.detail << "max|S-TLBCE(g=1)-BCE|=" << worst_bce << " max|S-MCE-S-TLBCE|=" << worst_mce
           << " over " << checked << " correct instances";
}

void gradient_suite(Outcome& o) {
  Rng rng(202);
  constexpr double kStep = 1e-5;
  double worst_sel = 0.0, worst_logt = 0.0, worst_platt = 0.0;
  for (int b = 0; b < 100; ++b) {
    for (LossKind kind : {LossKind::kSTlbce, LossKind::kSMce, LossKind::kSMmce}) {
      for (bool platt : {false, true}) {
        const std::size_t n = 4 + rng.index(13), d = 2 + rng.index(3);
        const std::size_t k = platt ? 2 : 2 + rng.index(3);
        const auto data = random_dataset(n, d, k, rng);
        std::vector<std::size_t> rows(n);
        std::iota(rows.begin(), rows.end(), 0);
        const Batch batch = make_batch(data, rows);
        LossConfig loss;
        loss.kind = kind;
        loss.drop_denominator = rng.bernoulli(0.5);
        SelectorParams sel = init_selector(d, {4}, rng.next_u64());
        for (auto& w : sel.weights) w += 0.1 * rng.normal();
        const RecalibratorParams recal =
            platt ? RecalibratorParams{Platt{rng.uniform(-3.0, -0.5), rng.uniform(-0.5, 0.5)}}
                  : RecalibratorParams{Temperature{rng.uniform(-0.7, 0.7)}};
        const auto grad = batch_objective(sel, recal, loss, batch);
        for (std::size_t j = 0; j < sel.weights.size(); ++j) {
          auto up = sel, down = sel;
          up.weights[j] += kStep;
          down.weights[j] -= kStep;
          const double fd = (batch_objective(up, recal, loss, batch).value -
                             batch_objective(down, recal, loss, batch).value) / (2.0 * kStep);
          worst_sel = std::max(worst_sel, rel_err(grad.selector[j], fd));
        }
        const auto theta = trainable_parameters(recal);
        for (std::size_t j = 0; j < theta.size(); ++j) {
          auto up = recal, down = recal;
          auto tu = theta, td = theta;
          tu[j] += kStep;
          td[j] -= kStep;
          set_trainable_parameters(up, tu);
          set_trainable_parameters(down, td);
          const double fd = (batch_objective(sel, up, loss, batch).value -
                             batch_objective(sel, down, loss, batch).value) / (2.0 * kStep);
          double& worst = platt ? worst_platt : worst_logt;
          worst = std::max(worst, rel_err(grad.recalibrator[j], fd));
        }
      }
    }
  }
  o.require(worst_sel < 1e-4, "selector weights");
  o.require(worst_logt < 1e-4, "log_t");
  o.require(worst_platt < 1e-4, "(w, b)");
  o.detail << "max rel err: selector=" << worst_sel << " log_t=" << worst_logt
           << " platt=" << worst_platt << " (100 batches x 3 losses x 2 recalibrators)";
}

void metric_oracle(Outcome& o) {
  const std::vector<double> conf{0.9, 0.9, 0.6, 0.6};
  const std::vector<std::uint8_t> correct{1, 0, 1, 0};
  const double e1 = ece(conf, correct, 1.0, 2), e2 = ece(conf, correct, 2.0, 2);
  o.require(std::abs(e1 - 0.25) < 1e-12, "fixture ECE1");
  o.require(std::abs(e2 - 0.29155) < 5e-6, "fixture ECE2");

  Rng rng(303);
  constexpr std::size_t kN = 100000;
  std::vector<double> c(kN);
  std::vector<std::uint8_t> k(kN);
  for (std::size_t i = 0; i < kN; ++i) {
    c[i] = rng.uniform(0.5, 1.0);
    k[i] = rng.bernoulli(c[i]) ? 1 : 0;
  }
  const double cal = ece(c, k, 1.0, 15);
  o.require(cal < 0.02, "calibrated ECE1");

  int ordered = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 15 + rng.index(500);
    std::vector<double> cc(n);
    std::vector<std::uint8_t> kk(n);
    for (std::size_t i = 0; i < n; ++i) {
      cc[i] = rng.uniform();
      kk[i] = rng.bernoulli(0.5) ? 1 : 0;
    }
    if (ece(cc, kk, 1.0, 15) <= ece(cc, kk, 2.0, 15) + 1e-15) ++ordered;
  }
  o.require(ordered == 1000, "ECE1 <= ECE2");
  o.detail << "fixture ECE1=" << e1 << " ECE2=" << e2 << "; calibrated n=1e5 ECE1=" << cal
           << "; ECE1<=ECE2 on " << ordered << "/1000";
}

void theorem_verification(Outcome& o) {
  const Json golden = read_json(kData / "theory_reference_golden.json");
  const SyntheticSpec spec = synthetic_spec_from_json(read_json(kData / "theory_reference_spec.json"));
  const TheoryReport r = verify_theorems(spec, 0);
  const Json now = to_json(r);
  double drift = 0.0;
  for (const char* key : {"t0", "srece_g0_t0", "rece_t0", "min_rece", "t_tilde", "min_sece",
                          "ece_r_then_s", "ece_s_then_r", "mc_max_discrepancy"}) {
    const double a = now.at(key).get<double>(), b = golden.at(key).get<double>();
    drift = std::max(drift, std::abs(a - b) <= 1e-12 ? 0.0 : rel_err(a, b));
  }
  o.require(drift < 1e-6, "reproduces golden report");
  o.require(r.srece_g0_t0 < kZeroErrorBound, "SR-ECE(g0,T0) < 1e-3");
  o.require(r.min_rece > kSeparationBound, "min R-ECE > 1e-2");
  o.require(r.min_sece > kSeparationBound, "min S-ECE > 1e-2");
  o.require(r.ece_r_then_s > kSeparationBound, "ECE R->S > 1e-2");
  o.require(r.ece_s_then_r > kSeparationBound, "ECE S->R > 1e-2");
  o.detail << "SR-ECE(g0,T0)=" << r.srece_g0_t0 << " minR-ECE=" << r.min_rece
           << " minS-ECE=" << r.min_sece << " ECE_RS=" << r.ece_r_then_s
           << " ECE_SR=" << r.ece_s_then_r << " golden drift=" << drift;
}

struct Pipeline {
  CalibrationDataset train, test;
  TrainedModel joint, sequential;
  RecalibratorParams ts;
  double joint_ece = 0, sequential_ece = 0, ts_ece = 0, conf_ece = 0;
  Json joint_file, sequential_file;
};

const Pipeline& pipeline() {
  static const Pipeline p = [] {
    const Json pre = read_json(kData / "two_cluster_preregistered.json");
    const fs::path dir = fs::temp_directory_path() / "selcal_acceptance";
    fs::create_directories(dir);
    const fs::path spec = kData / "two_cluster_spec.json";
    cmd_gen_synth(spec, pre["train"]["n"], pre["train"]["seed"], dir / "train.selc");
    cmd_gen_synth(spec, pre["test"]["n"], pre["test"]["seed"], dir / "test.selc");
    cmd_train(dir / "train.selc", kData / "two_cluster_joint.json", dir / "joint.json");
    cmd_train(dir / "train.selc", kData / "two_cluster_sequential.json", dir / "sequential.json");
    const double beta = pre["beta"];
    Pipeline out{load_dataset(dir / "train.selc"), load_dataset(dir / "test.selc"),
                 load_model(dir / "joint.json"), load_model(dir / "sequential.json"),
                 {}, 0.0, 0.0, 0.0, 0.0, Json{}, Json{}};
    out.joint_file = read_json(dir / "joint.json");
    out.sequential_file = read_json(dir / "sequential.json");
    out.joint_ece = selective_eval(out.joint, out.test, beta).ece1;
    out.sequential_ece = selective_eval(out.sequential, out.test, beta).ece1;
    out.ts = pretrain_recalibrator(out.train, train_config_from_json(
                                                  read_json(kData / "two_cluster_joint.json")));
    const auto recal = recalibrate(out.ts, out.test);
    const std::vector<std::uint8_t> all(out.test.size(), 1);
    out.ts_ece = evaluate_mask(all, recal, 1.0).ece1;
    const auto keep = select_at_coverage(confidence_rank(recal.top_conf).scores, beta);
    out.conf_ece = evaluate_mask(keep, recal, beta).ece1;
    return out;
  }();
  return p;
}

void end_to_end(Outcome& o) {
  const auto& p = pipeline();
  const Json pre = read_json(kData / "two_cluster_preregistered.json")["ece1"];
  const double m_ts = p.ts_ece - p.joint_ece, m_conf = p.conf_ece - p.joint_ece;
  o.require(m_ts >= 0.005, "margin over temperature scaling alone");
  o.require(m_conf >= 0.005, "margin over confidence selection");
  double drift = 0.0;
  drift = std::max(drift, std::abs(p.joint_ece - pre["joint"].get<double>()));
  drift = std::max(drift, std::abs(p.ts_ece - pre["temperature_only"].get<double>()));
  drift = std::max(drift, std::abs(p.conf_ece - pre["confidence_on_recalibrated"].get<double>()));
  o.require(drift < 1e-6, "reproduces pre-registered run");
  o.detail << "test ECE1 @0.8: joint=" << p.joint_ece << " TS-only=" << p.ts_ece
           << " conf+TS=" << p.conf_ece << " margins=" << m_ts << "," << m_conf
           << " drift=" << drift;
}

void sequential_vs_joint(Outcome& o) {
  const auto& p = pipeline();
  const Json pre = read_json(kData / "two_cluster_preregistered.json")["ece1"];
  o.require(p.joint_ece <= p.sequential_ece + 1e-3, "joint <= sequential + 1e-3");
  o.require(p.joint_file["train_config"]["mode"] == "joint", "joint mode echo");
  o.require(p.sequential_file["train_config"]["mode"] == "sequential", "sequential mode echo");
  o.require(std::abs(p.sequential_ece - pre["sequential"].get<double>()) < 1e-6,
            "reproduces pre-registered run");
  o.detail << "test SR-ECE @0.8: joint=" << p.joint_ece << " sequential=" << p.sequential_ece
           << " (T joint=" << std::get<Temperature>(p.joint.recalibrator).temperature()
           << ", T sequential=" << std::get<Temperature>(p.sequential.recalibrator).temperature()
           << ")";
}

void coverage_contract(Outcome& o) {
  std::vector<std::vector<double>> fixtures;
  fixtures.push_back(selector_scores(pipeline().joint.selector, pipeline().test));
  Rng rng(505);
  for (int f = 0; f < 20; ++f) {
    std::vector<double> s(1 + rng.index(2000));
    const double grid = f % 2 ? 10.0 : 1e6;  // coarse grids force ties
    for (auto& v : s) v = std::round(rng.uniform() * grid) / grid;
    fixtures.push_back(std::move(s));
  }
  fixtures.push_back(std::vector<double>(37, 0.5));
  int violations = 0;
  for (const auto& s : fixtures) {
    for (double beta : {0.75, 0.8, 0.85, 0.9}) {
      const double tau = choose_threshold(s, beta);
      const double cov = empirical_coverage(s, tau);
      const auto ties = std::count(s.begin(), s.end(), tau);
      const double n = static_cast<double>(s.size());
      if (cov < beta - 1e-12 || cov > beta + static_cast<double>(ties) / n + 1e-12) ++violations;
    }
  }
  o.require(violations == 0, "coverage in [beta, beta + ties/n]");

  std::ostringstream sim;
  for (std::size_t n_u : {std::size_t{100}, std::size_t{10000}}) {
    constexpr double kRate = 0.8;
    int covered = 0;
    for (int t = 0; t < 1000; ++t) {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < n_u; ++i) hits += rng.bernoulli(kRate) ? 1 : 0;
      const auto b = coverage_bound(static_cast<double>(hits) / static_cast<double>(n_u), n_u, 0.05);
      if (kRate >= b.lower() && kRate <= b.upper()) ++covered;
    }
    o.require(covered >= 950, "Hoeffding coverage n_u=" + std::to_string(n_u));
    sim << " n_u=" << n_u << ":" << covered << "/1000";
  }
  const double eps = coverage_bound(0.8, 10000, 0.05).epsilon;
  o.require(std::abs(eps - 0.013581) <= 1e-6, "epsilon(0.05, 1e4)");
  o.detail << fixtures.size() << " fixtures x 4 betas, violations=" << violations
           << "; Hoeffding" << sim.str() << "; eps(0.05,1e4)=" << eps;
}

void baselines(Outcome& o) {
  int seeds_ok = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(900 + seed);
    constexpr std::size_t kD = 8, kIn = 1000, kOut = 10;
    std::vector<float> x((kIn + kOut) * kD);
    for (std::size_t i = 0; i < kIn * kD; ++i) x[i] = static_cast<float>(rng.normal());
    for (std::size_t o2 = 0; o2 < kOut; ++o2) {
      std::vector<double> dir(kD);
      double norm = 0.0;
      for (auto& v : dir) {
        v = rng.normal();
        norm += v * v;
      }
      for (std::size_t j = 0; j < kD; ++j) {
        x[(kIn + o2) * kD + j] = static_cast<float>(10.0 * dir[j] / std::sqrt(norm));
      }
    }
    const auto r = iforest_rank(iforest_fit(x, kD, kForestTrees, kForestSubsample, seed), x);
    auto sorted = r.scores;
    std::sort(sorted.begin(), sorted.end());
    const double cutoff = sorted[static_cast<std::size_t>(0.02 * static_cast<double>(sorted.size()))];
    bool ok = true;
    for (std::size_t o2 = 0; o2 < kOut; ++o2) ok = ok && r.scores[kIn + o2] < cutoff;
    seeds_ok += ok ? 1 : 0;
  }
  o.require(seeds_ok == 5, "planted outliers in bottom 2% for every seed");

  Rng rng(606);
  int exact = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.index(1000);
    std::vector<double> s(n);
    for (auto& v : s) v = std::round(rng.uniform() * 20.0);
    const double beta = rng.uniform(0.01, 1.0);
    const auto keep = select_at_coverage(s, beta);
    const auto kept = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), 1));
    if (kept == coverage_count(beta, n) &&
        kept == static_cast<std::size_t>(std::ceil(beta * static_cast<double>(n) - 1e-9))) {
      ++exact;
    }
  }
  o.require(exact == 100, "select_at_coverage keeps ceil(beta n)");
  o.detail << "iforest seeds passing=" << seeds_ok << "/5; exact-count pairs=" << exact << "/100";
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
      {"loss identities", loss_identities},
      {"gradient suite", gradient_suite},
      {"metric oracle", metric_oracle},
      {"theorem verification", theorem_verification},
      {"coverage contract", coverage_contract},
      {"end-to-end selective recalibration", end_to_end},
      {"sequential vs joint", sequential_vs_joint},
      {"baselines", baselines},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "[error: " << e.what() << "]";
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("CRITERION %zu %s: %s | %s (%.1fs)\n", i + 1, o.pass ? "PASS" : "FAIL",
                criteria[i].first, o.detail.str().c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed;
}
