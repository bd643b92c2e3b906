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

#include "selcal/io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "selcal/error.hpp"

namespace selcal {

namespace {

constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T require(const Json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("field '") + key + "': " + e.what());
  }
}

const Json& section(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(10) << v;
  return out.str();
}

}  // namespace

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::array<int, 256> table;
  table.fill(-1);
  for (int k = 0; k < 64; ++k) table[static_cast<unsigned char>(kAlphabet[k])] = k;
  if (text.size() % 4 != 0) throw CorruptionError("base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int pad = 0;
    std::uint32_t v = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        ++pad;
        v <<= 6;
        continue;
      }
      const int d = table[static_cast<unsigned char>(c)];
      if (d < 0 || pad > 0) throw CorruptionError("invalid base64 character");
      v = (v << 6) | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v & 0xff));
  }
  return out;
}

std::string encode_f32(const double* values, std::size_t count) {
  std::vector<std::uint8_t> bytes(count * 4);
  for (std::size_t i = 0; i < count; ++i) {
    const auto u = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
    for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<std::uint8_t>(u >> (8 * b));
  }
  return base64_encode(bytes);
}

std::vector<double> decode_f32(const std::string& text, std::size_t expected) {
  const auto bytes = base64_decode(text);
  if (bytes.size() != expected * 4) {
    std::ostringstream msg;
    msg << "weight array holds " << bytes.size() / 4 << " values, expected " << expected;
    throw CorruptionError(msg.str());
  }
  std::vector<double> out(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(bytes[4 * i + b]) << (8 * b);
    out[i] = std::bit_cast<float>(u);
  }
  return out;
}

Json to_json(const LossConfig& c) {
  return Json{{"kind", to_string(c.kind)},
              {"q", c.q},
              {"kernel_bandwidth", c.kernel_bandwidth},
              {"lambda", c.lambda},
              {"beta", c.beta},
              {"drop_denominator", c.drop_denominator}};
}

Json to_json(const TrainConfig& c) {
  return Json{{"loss", to_json(c.loss)},
              {"mode", to_string(c.mode)},
              {"recalibrator", to_string(c.recalibrator)},
              {"hidden_dims", c.hidden_dims},
              {"learning_rate", c.learning_rate},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"seed", c.seed},
              {"pretrain_steps", c.pretrain_steps},
              {"pretrain_lr", c.pretrain_lr},
              {"noise_std", c.noise_std},
              {"optimizer", "adam"}};
}

Json to_json(const RecalibratorParams& p) {
  Json params;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Temperature>) {
          params = {{"log_t", v.log_t}, {"temperature", v.temperature()}};
        } else if constexpr (std::is_same_v<T, Platt>) {
          params = {{"w", v.w}, {"b", v.b}};
        } else if constexpr (std::is_same_v<T, HistogramBins>) {
          params = {{"edges", v.edges}, {"values", v.values}};
        } else {
          params = {{"w", v.platt.w}, {"b", v.platt.b}, {"edges", v.bins.edges},
                    {"values", v.bins.values}};
        }
      },
      p);
  return Json{{"kind", to_string(kind_of(p))}, {"params", params}};
}

Json to_json(const SelectorParams& s) {
  Json layers = Json::array();
  for (std::size_t l = 0; l < s.num_layers(); ++l) {
    const std::size_t in = s.layer_in(l), out = s.layer_out(l);
    layers.push_back({{"shape", {out, in}},
                      {"weights", encode_f32(s.weights.data() + s.weight_offset(l), out * in)},
                      {"bias", encode_f32(s.weights.data() + s.bias_offset(l), out)}});
  }
  Json tau = nullptr;
  if (s.tau) tau = *s.tau;
  return Json{{"input_dim", s.input_dim},
              {"hidden_dims", s.hidden_dims},
              {"encoding", "base64-f32le"},
              {"layers", layers},
              {"tau", tau}};
}

Json to_json(const TrainedModel& m) {
  return Json{{"format_version", kModelFormatVersion},
              {"recalibrator", to_json(m.recalibrator)},
              {"selector", to_json(m.selector)},
              {"train_config", to_json(m.config)},
              {"training", {{"initial_loss", m.initial_loss},
                            {"final_loss", m.final_loss},
                            {"pretrain_warning", m.pretrain_warning},
                            {"loss_trace", m.loss_trace}}},
              {"provenance", {{"seed", m.config.seed}, {"tool_version", kToolVersion}}}};
}

Json to_json(const EvalReport& r) {
  Json bins = Json::array();
  for (const auto& b : r.bins) {
    bins.push_back({{"mean_conf", b.mean_conf}, {"accuracy", b.accuracy}, {"count", b.count}});
  }
  Json warnings = Json::array();
  if (r.reduced_bins) warnings.push_back("reduced_bins");
  if (r.degenerate_threshold) warnings.push_back("degenerate_threshold");
  return Json{{"beta_target", r.beta_target},
              {"coverage_achieved", r.coverage_achieved},
              {"tau", r.tau},
              {"tau_source", r.tau_from_tuning ? "tune_data" : "eval_data"},
              {"ece1", r.ece1},
              {"ece2", r.ece2},
              {"brier", r.brier},
              {"selective_accuracy", r.selective_accuracy},
              {"n_total", r.n_total},
              {"n_accepted", r.n_accepted},
              {"num_bins", r.num_bins},
              {"warnings", warnings},
              {"bins", bins}};
}

Json to_json(const CoverageCurve& c) {
  Json points = Json::array();
  for (const auto& p : c.points) {
    points.push_back({{"beta", p.beta}, {"coverage", p.coverage}, {"ece1", p.ece1},
                      {"ece2", p.ece2}, {"brier", p.brier}, {"accuracy", p.accuracy}});
  }
  return Json{{"points", points},
              {"auc", {{"ece1", c.auc_ece1}, {"ece2", c.auc_ece2}, {"brier", c.auc_brier},
                       {"accuracy", c.auc_accuracy}}}};
}

Json to_json(const SyntheticSpec& s) {
  return Json{{"theta_star", s.theta_star}, {"sigma", s.sigma}, {"alpha", s.alpha},
              {"r1", s.r1},                 {"r2", s.r2},       {"beta_mix", s.beta_mix},
              {"m_train", s.m_train}};
}

Json to_json(const TheoryReport& r) {
  return Json{{"spec", to_json(r.spec)},
              {"seed", r.seed},
              {"theta_hat", r.theta_hat},
              {"t0", r.t0},
              {"srece_g0_t0", r.srece_g0_t0},
              {"rece_t0", r.rece_t0},
              {"min_rece", r.min_rece},
              {"t_tilde", r.t_tilde},
              {"min_sece", r.min_sece},
              {"ece_r_then_s", r.ece_r_then_s},
              {"ece_s_then_r", r.ece_s_then_r},
              {"t_s_then_r", r.t_s_then_r},
              {"mc_samples", r.mc_samples},
              {"mc_max_discrepancy", r.mc_max_discrepancy},
              {"checks", {{"zero_error", r.zero_error_ok},
                          {"separation", r.separation_ok},
                          {"passed", r.passed()}}}};
}

TrainConfig train_config_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("training config must be a JSON object");
  TrainConfig c = j.contains("preset") ? TrainConfig::preset(require<std::string>(j, "preset"))
                                       : TrainConfig{};
  if (j.contains("loss")) {
    const Json& l = j.at("loss");
    if (l.contains("kind")) c.loss.kind = loss_kind_from_string(require<std::string>(l, "kind"));
    c.loss.q = get_or(l, "q", c.loss.q);
    c.loss.kernel_bandwidth = get_or(l, "kernel_bandwidth", c.loss.kernel_bandwidth);
    c.loss.lambda = get_or(l, "lambda", c.loss.lambda);
    c.loss.beta = get_or(l, "beta", c.loss.beta);
    c.loss.drop_denominator = get_or(l, "drop_denominator", c.loss.drop_denominator);
  }
  if (j.contains("mode")) c.mode = train_mode_from_string(require<std::string>(j, "mode"));
  if (j.contains("recalibrator")) {
    c.recalibrator = recalibrator_kind_from_string(require<std::string>(j, "recalibrator"));
  }
  c.hidden_dims = get_or(j, "hidden_dims", c.hidden_dims);
  c.learning_rate = get_or(j, "learning_rate", c.learning_rate);
  c.epochs = get_or(j, "epochs", c.epochs);
  c.batch_size = get_or(j, "batch_size", c.batch_size);
  c.seed = get_or(j, "seed", c.seed);
  c.pretrain_steps = get_or(j, "pretrain_steps", c.pretrain_steps);
  c.pretrain_lr = get_or(j, "pretrain_lr", c.pretrain_lr);
  c.noise_std = get_or(j, "noise_std", c.noise_std);
  c.validate();
  return c;
}

RecalibratorParams recalibrator_from_json(const Json& j) {
  const auto kind = recalibrator_kind_from_string(require<std::string>(j, "kind"));
  const Json& p = section(j, "params");
  RecalibratorParams out;
  switch (kind) {
    case RecalibratorKind::kTemperature:
      out = Temperature{require<double>(p, "log_t")};
      break;
    case RecalibratorKind::kPlatt:
      out = Platt{require<double>(p, "w"), require<double>(p, "b")};
      break;
    case RecalibratorKind::kHistogram: {
      HistogramBins h{require<std::vector<double>>(p, "edges"),
                      require<std::vector<double>>(p, "values")};
      h.validate();
      out = h;
      break;
    }
    case RecalibratorKind::kPlattBinning: {
      PlattBins pb{Platt{require<double>(p, "w"), require<double>(p, "b")},
                   HistogramBins{require<std::vector<double>>(p, "edges"),
                                 require<std::vector<double>>(p, "values")}};
      pb.bins.validate();
      out = pb;
      break;
    }
  }
  for (double v : trainable_parameters(out)) {
    if (!std::isfinite(v)) throw ValidationError("recalibrator parameters must be finite");
  }
  return out;
}

SelectorParams selector_from_json(const Json& j) {
  SelectorParams s;
  s.input_dim = require<std::size_t>(j, "input_dim");
  s.hidden_dims = require<std::vector<std::size_t>>(j, "hidden_dims");
  s.weights.assign(SelectorParams::parameter_count(s.input_dim, s.hidden_dims), 0.0);
  const Json& layers = section(j, "layers");
  if (!layers.is_array() || layers.size() != s.num_layers()) {
    throw CorruptionError("selector layer count does not match hidden_dims");
  }
  for (std::size_t l = 0; l < s.num_layers(); ++l) {
    const std::size_t in = s.layer_in(l), out = s.layer_out(l);
    const auto shape = require<std::vector<std::size_t>>(layers[l], "shape");
    if (shape != std::vector<std::size_t>{out, in}) {
      throw CorruptionError("selector layer " + std::to_string(l) + " has an unexpected shape");
    }
    const auto w = decode_f32(require<std::string>(layers[l], "weights"), out * in);
    const auto b = decode_f32(require<std::string>(layers[l], "bias"), out);
    std::copy(w.begin(), w.end(), s.weights.begin() + static_cast<std::ptrdiff_t>(s.weight_offset(l)));
    std::copy(b.begin(), b.end(), s.weights.begin() + static_cast<std::ptrdiff_t>(s.bias_offset(l)));
  }
  if (j.contains("tau") && !j.at("tau").is_null()) s.tau = require<double>(j, "tau");
  s.validate();
  return s;
}

TrainedModel model_from_json(const Json& j) {
  if (!j.is_object()) throw FormatError("model file must be a JSON object");
  const int version = require<int>(j, "format_version");
  if (version != kModelFormatVersion) {
    throw FormatError("unsupported model format_version " + std::to_string(version));
  }
  TrainedModel m;
  m.recalibrator = recalibrator_from_json(section(j, "recalibrator"));
  m.selector = selector_from_json(section(j, "selector"));
  if (j.contains("train_config")) m.config = train_config_from_json(j.at("train_config"));
  if (j.contains("training")) {
    const Json& t = j.at("training");
    m.initial_loss = get_or(t, "initial_loss", 0.0);
    m.final_loss = get_or(t, "final_loss", 0.0);
    m.pretrain_warning = get_or(t, "pretrain_warning", false);
    m.loss_trace = get_or(t, "loss_trace", std::vector<double>{});
  }
  return m;
}

SyntheticSpec synthetic_spec_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("synthetic spec must be a JSON object");
  SyntheticSpec s;
  s.theta_star = require<std::vector<double>>(j, "theta_star");
  s.sigma = require<double>(j, "sigma");
  s.alpha = require<double>(j, "alpha");
  s.r2 = require<double>(j, "r2");
  s.beta_mix = get_or(j, "beta_mix", s.beta_mix);
  s.m_train = get_or(j, "m_train", s.m_train);
  if (j.contains("r1") && !j.at("r1").is_null()) {
    s.r1 = require<double>(j, "r1");
  } else {
    s = match_radius(s);
  }
  s.validate();
  return s;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

void write_json(const std::filesystem::path& path, const Json& j) {
  write_text(path, j.dump(2) + "\n");
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  write_json(path, to_json(model));
}

TrainedModel load_model(const std::filesystem::path& path) {
  return model_from_json(read_json(path));
}

std::string curve_csv(const CoverageCurve& curve) {
  std::ostringstream out;
  out << "beta,ece1,ece2,brier,accuracy\n";
  for (const auto& p : curve.points) {
    out << fmt(p.beta) << ',' << fmt(p.ece1) << ',' << fmt(p.ece2) << ',' << fmt(p.brier)
        << ',' << fmt(p.accuracy) << '\n';
  }
  out << "auc," << fmt(curve.auc_ece1) << ',' << fmt(curve.auc_ece2) << ','
      << fmt(curve.auc_brier) << ',' << fmt(curve.auc_accuracy) << '\n';
  return out.str();
}

std::string bins_csv(const std::vector<ReliabilityBin>& bins) {
  std::ostringstream out;
  out << "bin_index,mean_conf,accuracy,count\n";
  for (std::size_t i = 0; i < bins.size(); ++i) {
    out << i << ',' << fmt(bins[i].mean_conf) << ',' << fmt(bins[i].accuracy) << ','
        << bins[i].count << '\n';
  }
  return out.str();
}

std::string ranking_csv(const Ranking& r) {
  std::ostringstream out;
  out << "index,score\n";
  for (std::size_t i = 0; i < r.scores.size(); ++i) out << i << ',' << fmt(r.scores[i]) << '\n';
  return out.str();
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "sigma,alpha,beta,min_rece,min_sece,srece_g0_T0,ece_r_then_s,ece_s_then_r\n";
  for (const auto& r : rows) {
    out << fmt(r.sigma) << ',' << fmt(r.alpha) << ',' << fmt(r.beta) << ',' << fmt(r.min_rece)
        << ',' << fmt(r.min_sece) << ',' << fmt(r.srece_g0_t0) << ',' << fmt(r.ece_r_then_s)
        << ',' << fmt(r.ece_s_then_r) << '\n';
  }
  return out.str();
}

}  // namespace selcal
