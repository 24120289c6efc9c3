// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "dce/cli.hpp"
#include "dce/config.hpp"

namespace py = pybind11;
using namespace dce;

namespace {

using ComplexArray = py::array_t<cdouble, py::array::c_style | py::array::forcecast>;
using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

ComplexArray grid_to_array(const ComplexGrid& g) {
  ComplexArray out({g.antennas(), g.subcarriers(), g.symbols()});
  std::copy(g.data().begin(), g.data().end(), out.mutable_data());
  return out;
}

RealTensor3 array_to_tensor(const RealArray& a) {
  if (a.ndim() != 3) throw std::invalid_argument("expected a 3-d array (channels, freq, time)");
  RealTensor3 t(a.shape(0), a.shape(1), a.shape(2));
  std::copy(a.data(), a.data() + a.size(), t.data().begin());
  return t;
}

RealArray tensor_to_array(const RealTensor3& t) {
  RealArray out({t.channels(), t.freq(), t.time()});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

py::list records_to_list(const std::vector<ResultRecord>& records) {
  py::list out;
  for (const auto& r : records) {
    py::dict d;
    d["estimator"] = r.estimator;
    d["snr_db"] = r.snr_db;
    d["sir_db"] = r.sir_db ? py::object(py::float_(*r.sir_db)) : py::object(py::none());
    d["trial"] = r.trial;
    d["metric"] = r.metric;
    d["value"] = r.value;
    d["error"] = r.error;
    d["message"] = r.message;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_dce, m) {
  m.doc() = "Untrained deep channel estimation workbench";
  m.attr("__version__") = DCE_VERSION;

  // translators run newest first, so the base class goes in first
  py::register_exception<Error>(m, "DceError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("preset_names", &preset_names);
  m.def("preset_json", [](const std::string& name) { return preset_json(name).dump(); }, py::arg("name"));
  m.def("resolve_config_json", [](const std::string& text) { return to_json(parse_config_text(text)).dump(); },
        py::arg("config_json"), "Validates a config and returns it with every default filled in.");

  m.def(
      "run_experiment_json",
      [](const std::string& text) {
        const ExperimentConfig c = parse_config_text(text);
        std::vector<ResultRecord> records;
        {
          py::gil_scoped_release release;
          records = run_experiment(c);
        }
        return records_to_list(records);
      },
      py::arg("config_json"));

  m.def(
      "results_csv",
      [](const std::string& text) {
        const ExperimentConfig c = parse_config_text(text);
        std::vector<ResultRecord> records;
        {
          py::gil_scoped_release release;
          records = run_experiment(c);
        }
        std::ostringstream out;
        write_results_csv(records, out);
        return out.str();
      },
      py::arg("config_json"));

  m.def(
      "gradcheck",
      [](const std::string& arch, double tolerance, std::uint64_t seed) {
        GradcheckOptions o{arch, tolerance, seed};
        std::ostringstream out, err;
        const int code = cmd_gradcheck(o, out, err);
        return py::make_tuple(code, out.str() + err.str());
      },
      py::arg("arch") = "small", py::arg("tolerance") = 1e-5, py::arg("seed") = 0);

  m.def(
      "weight_count",
      [](std::size_t layers, std::size_t width, std::size_t out_channels) {
        DecoderArch a;
        a.layers = layers;
        a.width = width;
        a.out_channels = out_channels;
        return weight_count(a);
      },
      py::arg("layers"), py::arg("width"), py::arg("out_channels"));

  m.def(
      "fit_decoder",
      [](const RealArray& target, std::size_t layers, std::size_t width, std::size_t epochs, double lr,
         std::uint64_t seed) {
        const RealTensor3 t = array_to_tensor(target);
        DecoderArch a;
        a.layers = layers;
        a.width = width;
        a.out_channels = t.channels();
        a.out_freq = t.freq();
        a.out_time = t.time();
        FitOptions o;
        o.epochs = epochs;
        o.adam.lr = lr;
        RngStream rng(seed);
        FitReport r;
        {
          py::gil_scoped_release release;
          r = fit(a, t, o, rng);
        }
        return py::make_tuple(tensor_to_array(r.output), r.loss_trace);
      },
      py::arg("target"), py::arg("layers") = 6, py::arg("width") = 16, py::arg("epochs") = 1970,
      py::arg("lr") = 0.01, py::arg("seed") = 0, "Returns (output, loss_trace).");

  m.def(
      "draw_channel",
      [](const std::string& kind, std::size_t antennas, std::size_t subcarriers, std::size_t symbols, double rho,
         std::uint64_t seed) {
        ChannelModelSpec s;
        s.kind = channel_kind_from_string(kind);
        s.rho = rho;
        s.antennas = antennas;
        s.subcarriers = subcarriers;
        s.symbols = symbols;
        s.validate();
        RngStream rng(seed);
        return grid_to_array(draw_channel(s, rng));
      },
      py::arg("kind"), py::arg("antennas"), py::arg("subcarriers"), py::arg("symbols"), py::arg("rho") = 0.0,
      py::arg("seed") = 0, "Complex (M, N_f, N) frequency response.");

  m.def(
      "genie_covariance",
      [](const std::string& kind, std::size_t antennas, std::size_t subcarriers, double rho) {
        ChannelModelSpec s;
        s.kind = channel_kind_from_string(kind);
        s.rho = rho;
        s.antennas = antennas;
        s.subcarriers = subcarriers;
        s.validate();
        const auto f = full_covariance(s);
        return py::make_tuple(f.spatial, f.freq);
      },
      py::arg("kind"), py::arg("antennas"), py::arg("subcarriers"), py::arg("rho") = 0.0,
      "Returns (R_sp, R_f).");

  m.def("ls_estimate",
        [](const ComplexMatrix& y, double power, std::size_t pilot_length) {
          return ls_estimate(y, power, pilot_length).gains;
        },
        py::arg("y"), py::arg("power"), py::arg("pilot_length"));

  m.def(
      "mmse_estimate",
      [](const ComplexMatrix& y, double power, std::size_t pilot_length, const ComplexMatrix& spatial,
         const ComplexMatrix& freq, double noise_variance) {
        CovarianceModel cov{spatial, freq};
        return mmse_estimate(y, power, pilot_length, cov, noise_variance).gains;
      },
      py::arg("y"), py::arg("power"), py::arg("pilot_length"), py::arg("spatial"), py::arg("freq"),
      py::arg("noise_variance"));

  m.def("nmse", py::overload_cast<const ComplexMatrix&, const ComplexMatrix&>(&nmse), py::arg("truth"),
        py::arg("estimate"));
  m.def("analytic_mmse_error",
        [](const std::vector<double>& eig, double snr) { return analytic_mmse_error(eig, snr); }, py::arg("eigenvalues"),
        py::arg("snr"));
  m.def("analytic_ls_error", &analytic_ls_error, py::arg("rank"), py::arg("snr"));
  m.def("noise_variance_for_snr", &noise_variance_for_snr, py::arg("snr_db"), py::arg("power") = 1.0);
}
