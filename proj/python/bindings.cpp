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
// ------------------------------------------------------------------------


// Python module cfxl._core. Structured results travel as the same JSON documents the CLI writes.

#include "cfxl/harness/experiment.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>

namespace py = pybind11;
using namespace cfxl;

namespace
{
    harness::ExperimentConfig resolve(const std::string &yaml, const std::string &preset_name,
                                      const std::map<std::string, std::string> &overrides,
                                      std::optional<std::uint64_t> seed)
    {
        const harness::ExperimentConfig base = preset_name.empty() ? harness::ExperimentConfig{}
                                                                   : harness::preset(preset_name);
        harness::ExperimentConfig cfg = yaml.empty() ? base : harness::parse_config(yaml, base);
        for (const auto &[k, v] : overrides)
            harness::set_key(cfg, k, v);
        if (seed)
            cfg.seed = *seed;
        cfg.validate();
        return cfg;
    }

    std::string train(const std::string &yaml, const std::string &preset_name,
                      const std::map<std::string, std::string> &overrides, std::optional<std::uint64_t> seed,
                      const std::string &out_dir, bool trajectory, bool checkpoint)
    {
        const auto cfg = resolve(yaml, preset_name, overrides, seed);
        harness::RunOptions ro;
        ro.out_dir = out_dir;
        ro.trajectory = trajectory;
        ro.checkpoint = checkpoint;
        const auto r = harness::run_experiment(cfg, ro);
        return harness::summary_json(cfg, r);
    }

    Eigen::MatrixXcd correlation(int bs_h, int bs_v, int ue_h, int ue_v, double bs_spacing_wl, double ue_spacing_wl,
                                 double wavelength)
    {
        channel::ChannelModel model;
        model.wavelength = wavelength;
        return channel::small_scale_stats(channel::build_surface(bs_h, bs_v, bs_spacing_wl * wavelength),
                                          channel::build_surface(ue_h, ue_v, ue_spacing_wl * wavelength), model)
            .corr;
    }
} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "cell-free XL-MIMO power control core";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def(
        "resolve_config",
        [](const std::string &yaml, const std::string &preset_name, const std::map<std::string, std::string> &ov,
           std::optional<std::uint64_t> seed) { return harness::dump_config(resolve(yaml, preset_name, ov, seed)); },
        py::arg("yaml") = "", py::arg("preset") = "", py::arg("overrides") = std::map<std::string, std::string>{},
        py::arg("seed") = py::none(), "Resolved configuration as YAML text.");
    m.def(
        "config_hash",
        [](const std::string &yaml) { return harness::config_hash(harness::parse_config(yaml)); },
        py::arg("yaml"));

    m.def(
        "simulate",
        [](const std::string &yaml, const std::string &preset_name, const std::map<std::string, std::string> &ov,
           std::optional<std::uint64_t> seed, int mc_draws, const std::string &out_dir) {
            const auto cfg = resolve(yaml, preset_name, ov, seed);
            py::gil_scoped_release release;
            return harness::simulate(cfg, out_dir, mc_draws);
        },
        py::arg("yaml") = "", py::arg("preset") = "", py::arg("overrides") = std::map<std::string, std::string>{},
        py::arg("seed") = py::none(), py::arg("mc_draws") = 1000, py::arg("out_dir") = "",
        "Channel and SE report as a JSON document.");

    m.def(
        "train",
        [](const std::string &yaml, const std::string &preset_name, const std::map<std::string, std::string> &ov,
           std::optional<std::uint64_t> seed, const std::string &out_dir, bool trajectory, bool checkpoint) {
            py::gil_scoped_release release;
            return train(yaml, preset_name, ov, seed, out_dir, trajectory, checkpoint);
        },
        py::arg("yaml") = "", py::arg("preset") = "", py::arg("overrides") = std::map<std::string, std::string>{},
        py::arg("seed") = py::none(), py::arg("out_dir") = "", py::arg("trajectory") = true,
        py::arg("checkpoint") = true, "Train one configuration; returns summary.json contents.");

    m.def(
        "evaluate",
        [](const std::string &checkpoint, const std::string &out_dir) {
            const auto r = harness::evaluate_checkpoint(checkpoint, out_dir);
            py::dict d;
            d["episode"] = r.final_eval.episode;
            d["sum_se"] = r.final_eval.sum_se;
            d["per_ue_se"] = r.final_eval.per_ue;
            d["mc_sum_se_mean"] = r.final_eval.mc_mean;
            d["mc_sum_se_std"] = r.final_eval.mc_std;
            return d;
        },
        py::arg("checkpoint"), py::arg("out_dir") = "");

    m.def("detect_convergence", &harness::detect_convergence, py::arg("series"), py::arg("n_conv"),
          py::arg("delta"));
    m.def("fractional_baseline", &harness::fractional_baseline, py::arg("betas"), py::arg("exponent"),
          py::arg("p_max"));
    m.def("priority_simple", &marl::priority_simple, py::arg("losses"));
    m.def("priority_ranked", &marl::priority_ranked, py::arg("losses"), py::arg("counts"), py::arg("mu"),
          py::arg("nu"));
    m.def("correlation_matrix", &correlation, py::arg("bs_h"), py::arg("bs_v"), py::arg("ue_h"), py::arg("ue_v"),
          py::arg("bs_spacing_wl"), py::arg("ue_spacing_wl"), py::arg("wavelength") = 0.01,
          "Covariance of vec(H) for one surface pair.");
    m.def("layer2_allocate",
          [](const Eigen::VectorXd &unit, const Eigen::VectorXd &budgets, int n_s) {
              std::vector<Eigen::VectorXd> out;
              for (const auto &p : dlpc::layer2_allocate(unit, budgets, n_s))
                  out.push_back(p.amp);
              return out;
          },
          py::arg("unit_actions"), py::arg("budgets"), py::arg("n_s"), "Per-UE antenna amplitudes.");

    m.attr("checkpoint_version") = harness::kCheckpointVersion;
    m.attr("summary_version") = harness::kSummaryVersion;
}
