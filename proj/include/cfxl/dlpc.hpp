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

#ifndef CFXL_DLPC_HPP
#define CFXL_DLPC_HPP

#include "cfxl/env.hpp"
#include "cfxl/marl/learner.hpp"

#include <memory>
#include <optional>

// Power control driven by one or two layers of learners.
//
// Layer 1: one agent per UE, observes the summed Fresnel LSF of its UE and picks a power budget
// (plus a move outside the static scenario). Layer 2 (optional): one agent per UE antenna,
// observes the per-antenna aggregated LSF and its UE's budget, and splits that budget across the
// antennas. Both layers run the same learner machinery on their own views.

namespace cfxl::dlpc
{
    enum class Architecture
    {
        single,
        double_layer
    };

    Architecture architecture_from_string(const std::string &tag);
    std::string to_string(Architecture a);

    // [p_1 x N_s, ..., p_K x N_s]
    Eigen::VectorXd broadcast_budget(const Eigen::VectorXd &powers, int n_s);
    // [r_1 / N_s x N_s, ..., r_K / N_s x N_s]
    Eigen::VectorXd split_reward(const Eigen::VectorXd &rewards, int n_s);

    // Observation feature for an LSF magnitude: (20 log10 x + 100) / 20.
    double lsf_feature(double x);

    // Per-antenna amplitudes u * sqrt(budget) rescaled so each UE spends exactly its budget.
    // unit_actions holds K * N_s entries in (UE, antenna) order.
    std::vector<se::PowerAllocation> layer2_allocate(const Eigen::VectorXd &unit_actions,
                                                     const Eigen::VectorXd &budgets, int n_s);

    struct LayerLog
    {
        Eigen::VectorXd rewards;
        marl::UpdateStats update;
    };

    struct StepLog
    {
        env::StepResult env;              // rewards, allocations, steps taken
        std::vector<env::AgentAction> actions;
        Eigen::VectorXd budgets;          // per UE, W
        LayerLog layer1;
        std::optional<LayerLog> layer2;
    };

    struct SystemConfig
    {
        Architecture architecture = Architecture::single;
        marl::LearnerConfig layer1;
        marl::LearnerConfig layer2;
        bool weight_sharing = false; // layer 2: one network per UE shared by its antennas
    };

    // Fills the dimension fields of both learner configs from the environment.
    SystemConfig make_system_config(const env::EnvConfig &env_cfg, Architecture arch,
                                    const marl::LearnerConfig &base, bool weight_sharing);

    class PowerControlSystem
    {
    public:
        PowerControlSystem(env::Environment &env, SystemConfig cfg, std::uint64_t seed);

        void reset();
        // One timestep: layer 1 acts, budgets broadcast, layer 2 acts, env steps, both layers learn.
        StepLog step(bool explore, bool learn);

        marl::Learner &layer1() { return *l1_; }
        marl::Learner *layer2() { return l2_.get(); }
        const SystemConfig &config() const { return cfg_; }

        Eigen::MatrixXd layer1_obs() const;
        Eigen::MatrixXd layer2_obs(const Eigen::VectorXd &budgets) const;

        // Converts layer-1 unit actions to env actions.
        std::vector<env::AgentAction> to_actions(const Eigen::MatrixXd &unit) const;

        // Forces layer 2 to a fixed unit action (all antennas equal); used for degenerate checks.
        void force_layer2_uniform(bool on) { force_uniform_ = on; }

    private:
        env::Environment &env_;
        SystemConfig cfg_;
        std::unique_ptr<marl::Learner> l1_;
        std::unique_ptr<marl::Learner> l2_;
        Eigen::MatrixXd obs1_;
        bool force_uniform_ = false;
    };
} // namespace cfxl::dlpc

#endif
