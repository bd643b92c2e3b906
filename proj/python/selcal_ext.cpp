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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "selcal/commands.hpp"
#include "selcal/dataset.hpp"
#include "selcal/error.hpp"
#include "selcal/io.hpp"
#include "selcal/metrics.hpp"
#include "selcal/selector.hpp"
#include "selcal/theorylab.hpp"
#include "selcal/train.hpp"

namespace py = pybind11;
using namespace selcal;

namespace {

template <typename T>
py::array_t<T> to_array(const std::vector<T>& v, std::vector<py::ssize_t> shape) {
  py::array_t<T> out(shape);
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

template <typename T>
std::vector<T> flat(const py::array_t<T, py::array::c_style | py::array::forcecast>& a) {
  return std::vector<T>(a.data(), a.data() + a.size());
}

py::dict dataset_dict(const CalibrationDataset& d) {
  const auto n = static_cast<py::ssize_t>(d.size());
  py::dict out;
  out["name"] = d.name();
  out["embeddings"] = to_array(d.embeddings(), {n, static_cast<py::ssize_t>(d.embed_dim())});
  out["logits"] = to_array(d.logits(), {n, static_cast<py::ssize_t>(d.num_classes())});
  out["labels"] = to_array(d.labels(), {n});
  return out;
}

CalibrationDataset dataset_from(const py::array_t<float, py::array::c_style | py::array::forcecast>& emb,
                                const py::array_t<float, py::array::c_style | py::array::forcecast>& logits,
                                const py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast>& labels,
                                const std::string& name) {
  if (emb.ndim() != 2 || logits.ndim() != 2 || labels.ndim() != 1) {
    throw ValidationError("expected embeddings (n, d), logits (n, k) and labels (n,)");
  }
  return CalibrationDataset(name, static_cast<std::size_t>(labels.shape(0)),
                            static_cast<std::size_t>(emb.shape(1)),
                            static_cast<std::size_t>(logits.shape(1)), flat(emb), flat(logits),
                            flat(labels));
}

}  // namespace

PYBIND11_MODULE(_selcal, m) {
  m.doc() = "Selective recalibration core";
  m.attr("__version__") = kToolVersion;

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

  m.def("load_dataset", [](const std::string& path) { return dataset_dict(load_dataset(path)); },
        py::arg("path"));
  m.def(
      "save_dataset",
      [](const std::string& path, const py::array_t<float, py::array::c_style | py::array::forcecast>& emb,
         const py::array_t<float, py::array::c_style | py::array::forcecast>& logits,
         const py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast>& labels,
         const std::string& name) { save_dataset(dataset_from(emb, logits, labels, name), path); },
      py::arg("path"), py::arg("embeddings"), py::arg("logits"), py::arg("labels"),
      py::arg("name") = "python");

  m.def(
      "ece",
      [](const std::vector<double>& conf, const std::vector<std::uint8_t>& correct, double q,
         std::size_t bins) { return ece(conf, correct, q, bins); },
      py::arg("top_conf"), py::arg("correct"), py::arg("q") = 1.0, py::arg("bins") = kDefaultBins);
  m.def(
      "brier",
      [](const std::vector<double>& conf, const std::vector<std::uint8_t>& correct) {
        return brier(conf, correct);
      },
      py::arg("top_conf"), py::arg("correct"));

  m.def("coverage_count", &coverage_count, py::arg("beta"), py::arg("n"));
  m.def(
      "choose_threshold",
      [](const std::vector<double>& scores, double beta) { return choose_threshold(scores, beta); },
      py::arg("scores"), py::arg("beta"));
  m.def(
      "coverage_bound",
      [](double beta_tilde, std::size_t n_u, double delta) {
        const auto b = coverage_bound(beta_tilde, n_u, delta);
        return py::make_tuple(b.lower(), b.upper(), b.epsilon);
      },
      py::arg("beta_tilde"), py::arg("n_u"), py::arg("delta"));

  m.def(
      "train_json",
      [](const std::string& data_path, const std::string& config_json) {
        const auto d = load_dataset(data_path);
        const auto config = train_config_from_json(Json::parse(config_json));
        TrainedModel model;
        {
          py::gil_scoped_release release;
          model = train_selective_recalibration(d, config);
        }
        return to_json(model).dump();
      },
      py::arg("data_path"), py::arg("config_json"));
  m.def(
      "evaluate_json",
      [](const std::string& data_path, const std::string& model_json, double beta,
         std::size_t bins) {
        const auto d = load_dataset(data_path);
        const auto model = model_from_json(Json::parse(model_json));
        return to_json(selective_eval(model, d, beta, bins)).dump();
      },
      py::arg("data_path"), py::arg("model_json"), py::arg("beta") = 0.8,
      py::arg("bins") = kDefaultBins);
  m.def(
      "gen_synth",
      [](const std::string& spec_path, std::size_t n, std::uint64_t seed, const std::string& out) {
        cmd_gen_synth(spec_path, n, seed, out);
      },
      py::arg("spec_path"), py::arg("n"), py::arg("seed"), py::arg("out"));
  m.def(
      "verify_theorems_json",
      [](const std::string& spec_json, std::uint64_t seed, std::size_t mc_samples) {
        const auto spec = synthetic_spec_from_json(Json::parse(spec_json));
        py::gil_scoped_release release;
        return to_json(verify_theorems(spec, seed, mc_samples)).dump();
      },
      py::arg("spec_json"), py::arg("seed") = 0, py::arg("mc_samples") = kDiscrepancySamples);
}
