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

#ifndef CFXL_HARNESS_EXPERIMENT_HPP
#define CFXL_HARNESS_EXPERIMENT_HPP

#include "cfxl/harness/config.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cfxl::harness
{
    inline constexpr int kCheckpointVersion = 1;
    inline constexpr int kSummaryVersion = 1;

    // p_k = p_max * beta_k^-e / max_j beta_j^-e
    Eigen::VectorXd fractional_baseline(const Eigen::VectorXd &betas, double exponent, double p_max);

    // Earliest t such that series[t, t + n_conv) all lie within +-delta (relative) of the last value.
    std::optional<int> detect_convergence(const std::vector<double> &series, int n_conv, double delta);

    struct EvalPoint
    {
        int episode = 0;                // training episodes completed
        double sum_se = 0.0;            // closed form, mean over the greedy episode
        Eigen::VectorXd per_ue;         // closed form, mean over the greedy episode
        double mc_mean = 0.0;           // Monte-Carlo sum SE at the final greedy state
        double mc_std = 0.0;
    };

    struct RunResult
    {
        std::string config_hash;
        std::uint64_t seed = 0;
        double reference_sum_se = 0.0; // full power, uniform split, at the UE origins
        double reward_scale = 1.0;
        double fractional_sum_se = 0.0;
        std::vector<double> episode_sum_se; // training curve: mean reward sum per episode
        std::vector<EvalPoint> evals;
        std::optional<int> convergence_episode;
        EvalPoint final_eval;
        std::vector<double> wall_per_episode; // seconds
    };

    struct RunOptions
    {
        std::string out_dir;       // empty: nothing written
        bool trajectory = true;    // trajectory.jsonl
        bool checkpoint = true;    // checkpoint.json
        bool timing = false;       // timing.json (wall clock, not reproducible)
        // Called after every training step; used by checks that inspect the raw step logs.
        std::function<void(int episode, int step, const dlpc::StepLog &)> on_step;
    };

    // Resolved pieces shared by train, eval and simulate.
    struct Setup
    {
        env::EnvConfig env_cfg;
        env::WorldState world;
        double reference_sum_se = 0.0;
        double reward_scale = 1.0;
        dlpc::SystemConfig system;
    };

    // Places the network (stream "placement"), resolves "auto" reward scaling and relative thresholds.
    Setup build_setup(const ExperimentConfig &cfg);

    RunResult run_experiment(const ExperimentConfig &cfg, const RunOptions &opts = {});

    // Greedy evaluation of the policy stored in a checkpoint; writes eval.csv and summary.json.
    RunResult evaluate_checkpoint(const std::string &checkpoint_path, const std::string &out_dir);

    // Channel and SE only: geometry, LSF, closed-form and Monte-Carlo SE at full and fractional power.
    // Writes simulate.json when out_dir is set and returns the same document.
    std::string simulate(const ExperimentConfig &cfg, const std::string &out_dir, int mc_draws);

    struct SweepPoint
    {
        std::string axis;
        std::string value;
        ExperimentConfig cfg;
        RunResult result;
    };

    // Axis names: ns_row, nr_row, spacing_s, spacing_r, K, M, seed, or any config key.
    std::string sweep_axis_key(const std::string &axis);

    // One run per value; runs execute on up to `workers` threads and are merged in value order.
    // Writes <out>/point_NNN/ per run and <out>/sweep.csv.
    std::vector<SweepPoint> sweep(const ExperimentConfig &base, const std::string &axis,
                                  const std::vector<std::string> &values, const std::string &out_dir, int workers);

    // "1,2,3" or "a:b" (inclusive integer range).
    std::vector<std::string> parse_values(const std::string &text);

    std::string summary_json(const ExperimentConfig &cfg, const RunResult &r);
} // namespace cfxl::harness

#endif
