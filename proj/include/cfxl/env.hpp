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

#ifndef CFXL_ENV_HPP
#define CFXL_ENV_HPP

#include "cfxl/se.hpp"

#include <string>
#include <vector>

// Mobile uplink power-control environment.
//
// BSs and UEs are dropped uniformly on a square with wrap-around edges. Every UE agent picks a
// transmit power and, outside the static scenario, a step length and heading. Rewards are the
// closed-form MR spectral efficiencies at the post-move positions.

namespace cfxl::env
{
    enum class Scenario
    {
        static_mode,
        dynamic,
        pm_dynamic
    };

    Scenario scenario_from_string(const std::string &tag);
    std::string to_string(Scenario s);

    struct MdpTuple
    {
        double gamma = 0.99;
        double r_g = 1.0;      // deceleration threshold on the reward sum
        double r_b = 0.1;      // acceleration threshold on the reward sum
        double alpha = 0.5;    // in [0, 1]
        double beta_acc = 2.0; // > 1

        void validate() const;
    };

    struct EnvConfig
    {
        int num_bs = 2;
        int num_ue = 2;
        int bs_nh = 2, bs_nv = 2;
        int ue_nh = 2, ue_nv = 1;
        double bs_spacing = 0.01 / 3.0; // m
        double ue_spacing = 0.01 / 3.0; // m
        double area = 1000.0;           // side of the square, m
        double min_bs_distance = 200.0; // m
        double bs_height = 10.0;        // m
        double ue_height = 1.5;         // m
        double noise_power = 1.2589254117941661e-10; // W (-69 dBm)
        double p_max = 0.2;             // W
        double d_max = 5.0;             // m per step
        int max_placement_tries = 10000;
        Scenario scenario = Scenario::static_mode;
        MdpTuple mdp;
        channel::ChannelModel channel;
        se::LsfMode lsf = se::LsfMode::per_antenna;

        int ue_antennas() const { return ue_nh * ue_nv; }
        int bs_antennas() const { return bs_nh * bs_nv; }
    };

    struct AgentAction
    {
        double power = 0.0; // W, in [0, p_max]
        double step = 0.0;  // m, in [0, d_max]
        double angle = 0.0; // rad, in [0, 2 pi)
    };

    struct WorldState
    {
        std::vector<Vec3> bs_positions;
        std::vector<Vec3> ue_positions;
        std::vector<Vec3> ue_origins; // starting points every episode rewinds to
        int t = 0;
        double last_reward_sum = 0.0;
        bool has_reward = false;
    };

    // Uniform drop honoring the minimum BS spacing under wrap-around distance.
    WorldState place(const EnvConfig &cfg, Rng &rng);

    // Minimum-image displacement b - a on the torus (x, y wrap; z does not).
    Vec3 torus_delta(const Vec3 &a, const Vec3 &b, double area);
    double torus_distance(const Vec3 &a, const Vec3 &b, double area);
    Vec3 wrap(const Vec3 &p, double area);

    // Step length after the reward-threshold rule.
    double predictive_limit(double reward_sum, double step, const MdpTuple &mdp);

    // Scales raw amplitudes down uniformly when sum raw^2 exceeds the budget.
    se::PowerAllocation project_power(const Eigen::VectorXd &raw, double budget);

    struct StepResult
    {
        Eigen::VectorXd observation; // layer-1 observation after the move
        Eigen::VectorXd rewards;     // per-UE SE
        double reward_sum = 0.0;
        std::vector<se::PowerAllocation> powers;
        std::vector<double> steps_taken; // after the predictive rule
    };

    class Environment
    {
    public:
        Environment(EnvConfig cfg, WorldState world);

        // Rewinds UEs to their origins and clears the step counter.
        Eigen::VectorXd reset();

        const EnvConfig &config() const { return cfg_; }
        const WorldState &world() const { return world_; }

        // s_k = sum_m beta_mk (Fresnel, mean per-antenna LSF when the approximation fails)
        Eigen::VectorXd observe_layer1() const;
        // K x N_s: sum over BSs and BS antennas of the per-antenna LSF
        Eigen::MatrixXd observe_antennas() const;

        // Powers split uniformly over the UE antennas.
        StepResult step(const std::vector<AgentAction> &actions);
        // Explicit per-antenna allocations; the power field of each action is ignored.
        StepResult step(const std::vector<AgentAction> &actions, const std::vector<se::PowerAllocation> &powers);

        // Closed-form SE at the current positions for given allocations.
        se::SeReport evaluate(const std::vector<se::PowerAllocation> &powers) const;
        // Full statistics of every link at the current positions, grid[m][k].
        se::StatsGrid stats_grid() const;

        // Per-UE Fresnel beta matrix (M x K) at the current positions.
        Eigen::MatrixXd beta_matrix() const;

    private:
        EnvConfig cfg_;
        WorldState world_;
        channel::ChannelStats small_; // shared small-scale statistics
        channel::ArrayGeometry bs_shape_;
        channel::ArrayGeometry ue_shape_;

        channel::ArrayGeometry bs_surface(int m) const;
        channel::ArrayGeometry ue_surface_near(int k, int m) const;
        void move(const std::vector<AgentAction> &actions, std::vector<double> &steps_taken);
    };
} // namespace cfxl::env

#endif
