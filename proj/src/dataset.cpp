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

#include "selcal/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "selcal/error.hpp"
#include "selcal/rng.hpp"

namespace selcal {

namespace {

constexpr std::array<char, 4> kMagic = {'S', 'E', 'L', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::size_t checked_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > SIZE_MAX / a) throw CorruptionError("dimension overflow");
  return a * b;
}

}  // namespace

CalibrationDataset::CalibrationDataset(std::string name, std::size_t n,
                                       std::size_t embed_dim,
                                       std::size_t num_classes,
                                       std::vector<float> embeddings,
                                       std::vector<float> logits,
                                       std::vector<std::uint32_t> labels)
    : name_(std::move(name)),
      n_(n),
      embed_dim_(embed_dim),
      num_classes_(num_classes),
      embeddings_(std::move(embeddings)),
      logits_(std::move(logits)),
      labels_(std::move(labels)) {
  if (num_classes_ < 2) {
    throw ValidationError("num_classes must be at least 2, got " +
                          std::to_string(num_classes_));
  }
  if (embeddings_.size() != checked_mul(n_, embed_dim_) ||
      logits_.size() != checked_mul(n_, num_classes_) || labels_.size() != n_) {
    throw CorruptionError("array sizes inconsistent with n=" +
                          std::to_string(n_) +
                          ", embed_dim=" + std::to_string(embed_dim_) +
                          ", num_classes=" + std::to_string(num_classes_));
  }
  for (std::size_t i = 0; i < n_; ++i) {
    if (labels_[i] >= num_classes_) {
      throw ValidationError("label " + std::to_string(labels_[i]) + " at row " +
                            std::to_string(i) + " is not below num_classes=" +
                            std::to_string(num_classes_));
    }
  }
  for (std::size_t i = 0; i < logits_.size(); ++i) {
    if (!std::isfinite(logits_[i])) {
      throw ValidationError("non-finite logit at row " +
                            std::to_string(i / num_classes_));
    }
  }
}

CalibrationDataset CalibrationDataset::subset(
    std::span<const std::size_t> rows) const {
  std::vector<float> emb;
  std::vector<float> lg;
  std::vector<std::uint32_t> lab;
  emb.reserve(rows.size() * embed_dim_);
  lg.reserve(rows.size() * num_classes_);
  lab.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= n_) throw ValidationError("subset row out of range");
    auto e = embedding(r);
    emb.insert(emb.end(), e.begin(), e.end());
    auto l = logits(r);
    lg.insert(lg.end(), l.begin(), l.end());
    lab.push_back(labels_[r]);
  }
  return CalibrationDataset(name_, rows.size(), embed_dim_, num_classes_,
                            std::move(emb), std::move(lg), std::move(lab));
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - mx);
    total += out[k];
  }
  for (double& p : out) p /= total;
  return out;
}

std::vector<double> softmax(std::span<const float> logits) {
  std::vector<double> wide(logits.begin(), logits.end());
  return softmax(std::span<const double>(wide));
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

DerivedOutputs derive_outputs(const CalibrationDataset& d) {
  DerivedOutputs out;
  const std::size_t n = d.size();
  const std::size_t k = d.num_classes();
  out.num_classes = k;
  out.probs.resize(n * k);
  out.top_conf.resize(n);
  out.pred.resize(n);
  out.correct.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = softmax(d.logits(i));
    std::copy(p.begin(), p.end(), out.probs.begin() + i * k);
    const std::size_t top = argmax(p);
    out.pred[i] = static_cast<std::uint32_t>(top);
    out.top_conf[i] = p[top];
    out.correct[i] = top == d.label(i) ? 1 : 0;
  }
  return out;
}

void save_dataset(const CalibrationDataset& d,
                  const std::filesystem::path& path) {
  nlohmann::ordered_json header;
  header["n"] = d.size();
  header["embed_dim"] = d.embed_dim();
  header["num_classes"] = d.num_classes();
  header["name"] = d.name();
  header["sections"] = {"embeddings", "logits", "labels"};
  const std::string header_text = header.dump();

  std::string buf;
  buf.reserve(16 + header_text.size() +
              4 * (d.embeddings().size() + d.logits().size() + d.size()));
  buf.append(kMagic.data(), kMagic.size());
  put_u32(buf, kVersion);
  put_u64(buf, header_text.size());
  buf += header_text;
  for (float v : d.embeddings()) put_u32(buf, std::bit_cast<std::uint32_t>(v));
  for (float v : d.logits()) put_u32(buf, std::bit_cast<std::uint32_t>(v));
  for (std::uint32_t v : d.labels()) put_u32(buf, v);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

CalibrationDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 16 ||
      !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw FormatError(path.string() + ": missing SELC magic");
  }
  const std::uint32_t version = get_u32(p + 4);
  if (version != kVersion) {
    throw FormatError(path.string() + ": unsupported container version " +
                      std::to_string(version));
  }
  const std::uint64_t header_len = get_u64(p + 8);
  if (header_len > bytes.size() - 16) {
    throw CorruptionError(path.string() + ": header length exceeds file size");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(16, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(path.string() + ": malformed header: " + e.what());
  }
  std::size_t n, embed_dim, num_classes;
  std::string name;
  try {
    n = header.at("n").get<std::size_t>();
    embed_dim = header.at("embed_dim").get<std::size_t>();
    num_classes = header.at("num_classes").get<std::size_t>();
    name = header.value("name", std::string());
    const auto sections = header.at("sections").get<std::vector<std::string>>();
    if (sections != std::vector<std::string>{"embeddings", "logits", "labels"}) {
      throw CorruptionError(path.string() + ": unexpected section list");
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(path.string() + ": bad header field: " + e.what());
  }

  const std::size_t n_emb = checked_mul(n, embed_dim);
  const std::size_t n_log = checked_mul(n, num_classes);
  const std::size_t payload = checked_mul(4, n_emb + n_log + n);
  const std::size_t offset = 16 + header_len;
  if (bytes.size() - offset != payload) {
    throw CorruptionError(path.string() + ": payload is " +
                          std::to_string(bytes.size() - offset) +
                          " bytes, expected " + std::to_string(payload));
  }
  const unsigned char* cursor = p + offset;
  auto read_floats = [&cursor](std::size_t count) {
    std::vector<float> v(count);
    for (std::size_t i = 0; i < count; ++i, cursor += 4) {
      v[i] = std::bit_cast<float>(get_u32(cursor));
    }
    return v;
  };
  auto embeddings = read_floats(n_emb);
  auto logits = read_floats(n_log);
  std::vector<std::uint32_t> labels(n);
  for (std::size_t i = 0; i < n; ++i, cursor += 4) labels[i] = get_u32(cursor);
  return CalibrationDataset(std::move(name), n, embed_dim, num_classes,
                            std::move(embeddings), std::move(logits),
                            std::move(labels));
}

std::vector<CalibrationDataset> split(const CalibrationDataset& d,
                                      std::span<const double> fractions,
                                      std::uint64_t seed) {
  if (fractions.empty()) throw ValidationError("split needs at least one fraction");
  double total = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw ValidationError("split fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << "split fractions sum to " << total << ", expected 1";
    throw ValidationError(msg.str());
  }

  const std::size_t n = d.size();
  std::vector<std::size_t> sizes(fractions.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t j = 0; j < fractions.size(); ++j) {
    const double exact = fractions[j] * static_cast<double>(n);
    sizes[j] = static_cast<std::size_t>(std::floor(exact));
    assigned += sizes[j];
    remainders.emplace_back(exact - std::floor(exact), j);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < n; ++r, ++assigned) {
    ++sizes[remainders[r % remainders.size()].second];
  }

  Rng rng(seed);
  const auto perm = rng.permutation(n);
  std::vector<CalibrationDataset> parts;
  std::size_t start = 0;
  for (std::size_t size : sizes) {
    parts.push_back(d.subset(std::span<const std::size_t>(perm).subspan(start, size)));
    start += size;
  }
  return parts;
}

CalibrationDataset add_gaussian_noise(const CalibrationDataset& d,
                                      double stddev, std::uint64_t seed) {
  if (!(stddev >= 0.0)) throw ValidationError("noise stddev must be non-negative");
  std::vector<float> emb = d.embeddings();
  if (stddev > 0.0) {
    Rng rng(seed);
    for (float& v : emb) v = static_cast<float>(v + stddev * rng.normal());
  }
  return CalibrationDataset(d.name(), d.size(), d.embed_dim(), d.num_classes(),
                            std::move(emb), d.logits(), d.labels());
}

}  // namespace selcal
