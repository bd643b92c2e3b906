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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace selcal {

// Per-instance classifier outputs: embeddings f_e(x), logits f_s(x) and
// ground-truth labels. Immutable once constructed; all invariants are checked
// by the constructor.
class CalibrationDataset {
 public:
  CalibrationDataset(std::string name, std::size_t n, std::size_t embed_dim,
                     std::size_t num_classes, std::vector<float> embeddings,
                     std::vector<float> logits,
                     std::vector<std::uint32_t> labels);

  std::size_t size() const { return n_; }
  std::size_t embed_dim() const { return embed_dim_; }
  std::size_t num_classes() const { return num_classes_; }
  const std::string& name() const { return name_; }

  std::span<const float> embedding(std::size_t i) const {
    return {embeddings_.data() + i * embed_dim_, embed_dim_};
  }
  std::span<const float> logits(std::size_t i) const {
    return {logits_.data() + i * num_classes_, num_classes_};
  }
  std::uint32_t label(std::size_t i) const { return labels_[i]; }

  const std::vector<float>& embeddings() const { return embeddings_; }
  const std::vector<float>& logits() const { return logits_; }
  const std::vector<std::uint32_t>& labels() const { return labels_; }

  // Rows in the given order (indices may repeat).
  CalibrationDataset subset(std::span<const std::size_t> rows) const;

  friend bool operator==(const CalibrationDataset&,
                         const CalibrationDataset&) = default;

 private:
  std::string name_;
  std::size_t n_;
  std::size_t embed_dim_;
  std::size_t num_classes_;
  std::vector<float> embeddings_;
  std::vector<float> logits_;
  std::vector<std::uint32_t> labels_;
};

// Softmax outputs of the base classifier and the correctness of its top-label
// prediction.
struct DerivedOutputs {
  std::size_t num_classes = 0;
  std::vector<double> probs;  // n x num_classes, row-major
  std::vector<double> top_conf;
  std::vector<std::uint32_t> pred;
  std::vector<std::uint8_t> correct;

  std::span<const double> prob_row(std::size_t i) const {
    return {probs.data() + i * num_classes, num_classes};
  }
};

// Max-subtracted softmax of one logit row.
std::vector<double> softmax(std::span<const double> logits);
std::vector<double> softmax(std::span<const float> logits);

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

DerivedOutputs derive_outputs(const CalibrationDataset& d);

// .selc container: "SELC", u32 version, u64 header length, JSON header, then
// f32 embeddings, f32 logits, u32 labels (all little-endian).
CalibrationDataset load_dataset(const std::filesystem::path& path);
void save_dataset(const CalibrationDataset& d,
                  const std::filesystem::path& path);

// Seeded random partition. Part sizes are n * fraction rounded by largest
// remainder, so each differs from n * fraction by less than one.
std::vector<CalibrationDataset> split(const CalibrationDataset& d,
                                      std::span<const double> fractions,
                                      std::uint64_t seed);

// Adds i.i.d. N(0, stddev^2) noise to the embeddings only.
CalibrationDataset add_gaussian_noise(const CalibrationDataset& d,
                                      double stddev, std::uint64_t seed);

}  // namespace selcal
