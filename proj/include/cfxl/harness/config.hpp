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

#ifndef CFXL_HARNESS_CONFIG_HPP
#define CFXL_HARNESS_CONFIG_HPP

#include "cfxl/dlpc.hpp"

#include <string>
#include <vector>

namespace cfxl::harness
{
    // Everything a run needs. Physical quantities are kept in the units users write them in
    // (dBm, mW, MHz, GHz, fractions of a wavelength) and converted on use.
    struct ExperimentConfig
    {
        // system
        int num_bs = 2;
        int num_ue = 2;
        int bs_nh = 2, bs_nv = 2;
        int ue_nh = 2, ue_nv = 1;
        double bs_spacing_wl = 1.0 / 3.0; // antenna spacing in wavelengths
        double ue_spacing_wl = 1.0 / 3.0;
        double carrier_ghz = 30.0;
        double area_m = 1000.0;
        double min_bs_distance_m = 200.0;
        double bs_height_m = 10.0;
        double ue_height_m = 1.5;
        double noise_dbm = -69.0;
        double p_max_mw = 200.0;
        double bandwidth_mhz = 20.0;
        double d_max_m = 5.0;
        std::string kz_mode = "consistent";
        std::string spectrum = "isotropic";
        std::string lsf_mode = "per_antenna";

        // MDP
        double gamma = 0.99;
        double r_g = 20.0;   // in units of the reference sum SE (see threshold_mode)
        double r_b = 2.0;
        double alpha = 0.5;
        double beta_acc = 2.0;
        std::string threshold_mode = "relative"; // relative | absolute

        // training
        std::string variant = "mimo-maddpg";
        std::string architecture = "single";
        std::string scenario = "static";
        std::string sampling = "auto"; // auto | uniform | prioritized
        int episodes = 100;
        int steps = 50;
        std::vector<int> hidden{128, 64};
        double leaky_slope = 0.01;
        double lr_actor = 0.01;
        double lr_critic = 0.01;
        double tau = 0.01;
        std::string soft_update = "standard";
        double grad_clip = 0.5;
        int buffer_size = 1024;
        int pool_size = 512;
        int batch_global = 32;
        int batch_local = 32;
        double mu = 2.0;
        double nu = 1e-4;
        double ddpg_weight = 1.0;
        std::string reward_scale = "auto"; // "auto" or a number
        double noise_start = 0.2;
        double noise_end = 0.01;
        bool weight_sharing = false;

        // evaluation
        int eval_every = 10;
        int eval_draws = 32;
        int eval_mc_draws = 128;
        int n_conv = 100;
        double delta_conv = 0.01;
        double fractional_exponent = 0.5;

        std::uint64_t seed = 1;

        // derived
        double wavelength() const;
        double noise_watt() const { return dbm_to_watt(noise_dbm); }
        double p_max_watt() const { return p_max_mw * 1e-3; }

        void validate() const; // throws ConfigError naming the key
    };

    // Named starting points: "desk" (the defaults) and "large" (9 BSs, 6 UEs, 9x9 and 3x3 surfaces).
    ExperimentConfig preset(const std::string &name);

    // Empty file gives the defaults; unknown keys are rejected.
    ExperimentConfig load_config(const std::string &path);
    ExperimentConfig parse_config(const std::string &yaml_text, const ExperimentConfig &base = {});
    std::string dump_config(const ExperimentConfig &cfg);

    // Stable hash of the dumped config with the seed zeroed (runs differing only by seed share it).
    std::string config_hash(const ExperimentConfig &cfg);

    // Sets one key from its textual value, used by CLI overrides and sweeps.
    void set_key(ExperimentConfig &cfg, const std::string &key, const std::string &value);

    env::EnvConfig make_env_config(const ExperimentConfig &cfg);
    marl::LearnerConfig make_learner_config(const ExperimentConfig &cfg);
} // namespace cfxl::harness

#endif
