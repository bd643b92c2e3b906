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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "selcal/baselines.hpp"
#include "selcal/metrics.hpp"
#include "selcal/theorylab.hpp"
#include "selcal/train.hpp"

namespace selcal {

using Json = nlohmann::ordered_json;

inline constexpr int kModelFormatVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

// Little-endian f32 packing used for model weights.
std::string encode_f32(const double* values, std::size_t count);
std::vector<double> decode_f32(const std::string& text, std::size_t expected);

Json to_json(const LossConfig& c);
Json to_json(const TrainConfig& c);
Json to_json(const RecalibratorParams& p);
Json to_json(const SelectorParams& s);
Json to_json(const TrainedModel& m);
Json to_json(const EvalReport& r);
Json to_json(const CoverageCurve& c);
Json to_json(const SyntheticSpec& s);
Json to_json(const TheoryReport& r);

// Field names mirror TrainConfig; an optional "preset" supplies defaults that
// the remaining fields override.
TrainConfig train_config_from_json(const Json& j);
RecalibratorParams recalibrator_from_json(const Json& j);
SelectorParams selector_from_json(const Json& j);
TrainedModel model_from_json(const Json& j);
// r1 may be omitted, in which case it is matched to r2.
SyntheticSpec synthetic_spec_from_json(const Json& j);

Json read_json(const std::filesystem::path& path);
// Writes through a temporary file and a rename.
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const Json& j);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

std::string curve_csv(const CoverageCurve& curve);
std::string bins_csv(const std::vector<ReliabilityBin>& bins);
std::string ranking_csv(const Ranking& r);
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace selcal
