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

#include "cfxl/dlpc.hpp"

#include <cmath>

namespace cfxl::dlpc
{
    Architecture architecture_from_string(const std::string &tag)
    {
        if (tag == "single")
            return Architecture::single;
        if (tag == "double")
            return Architecture::double_layer;
        throw ConfigError("unknown architecture '" + tag + "' (expected single|double)");
    }

    std::string to_string(Architecture a) { return a == Architecture::double_layer ? "double" : "single"; }

    Eigen::VectorXd broadcast_budget(const Eigen::VectorXd &powers, int n_s)
    {
        if (n_s < 1)
            throw std::invalid_argument("broadcast_budget: n_s must be >= 1");
        if ((powers.array() < 0.0).any())
            throw std::invalid_argument("broadcast_budget: powers must be non-negative");
        Eigen::VectorXd out(powers.size() * n_s);
        for (Eigen::Index k = 0; k < powers.size(); ++k)
            out.segment(k * n_s, n_s).setConstant(powers(k));
        return out;
    }

    Eigen::VectorXd split_reward(const Eigen::VectorXd &rewards, int n_s)
    {
        if (n_s < 1)
            throw std::invalid_argument("split_reward: n_s must be >= 1");
        Eigen::VectorXd out(rewards.size() * n_s);
        for (Eigen::Index k = 0; k < rewards.size(); ++k)
            out.segment(k * n_s, n_s).setConstant(rewards(k) / n_s);
        return out;
    }

    double lsf_feature(double x)
    {
        if (!(x > 0.0))
            throw std::invalid_argument("lsf_feature: LSF magnitude must be positive");
        return (20.0 * std::log10(x) + 100.0) / 20.0;
    }

    std::vector<se::PowerAllocation> layer2_allocate(const Eigen::VectorXd &unit_actions,
                                                     const Eigen::VectorXd &budgets, int n_s)
    {
        if (unit_actions.size() != budgets.size() * n_s)
            throw std::invalid_argument("layer2_allocate: need K * N_s unit actions");
        std::vector<se::PowerAllocation> out;
        out.reserve(static_cast<std::size_t>(budgets.size()));
        for (Eigen::Index k = 0; k < budgets.size(); ++k)
        {
            const double b = budgets(k);
            if (!(b >= 0.0))
                throw std::invalid_argument("layer2_allocate: budgets must be non-negative");
            Eigen::VectorXd u = unit_actions.segment(k * n_s, n_s).cwiseMax(0.0);
            // amplitude u sqrt(b) rescaled to spend b exactly; all-zero actions fall back to a uniform split
            const double total = u.squaredNorm();
            Eigen::VectorXd share = total > 0.0 ? Eigen::VectorXd(u.cwiseAbs2() / total)
                                                : Eigen::VectorXd::Constant(n_s, 1.0 / n_s);
            se::PowerAllocation p;
            p.budget = b;
            p.amp = (share * b).cwiseSqrt();
            if (p.trace() > b)
                p.amp *= std::sqrt(b / p.trace());
            out.push_back(std::move(p));
        }
        return out;
    }

    SystemConfig make_system_config(const env::EnvConfig &env_cfg, Architecture arch,
                                    const marl::LearnerConfig &base, bool weight_sharing)
    {
        SystemConfig sc;
        sc.architecture = arch;
        sc.weight_sharing = weight_sharing;

        sc.layer1 = base;
        sc.layer1.num_agents = env_cfg.num_ue;
        sc.layer1.obs_dim = 1;
        sc.layer1.act_dim = env_cfg.scenario == env::Scenario::static_mode ? 1 : 3;
        sc.layer1.share_slots.clear();

        const int ns = env_cfg.ue_antennas();
        sc.layer2 = base;
        sc.layer2.num_agents = env_cfg.num_ue * ns;
        sc.layer2.obs_dim = 2;
        sc.layer2.act_dim = 1;
        sc.layer2.share_slots.clear();
        if (weight_sharing)
            for (int i = 0; i < sc.layer2.num_agents; ++i)
                sc.layer2.share_slots.push_back(i / ns);
        return sc;
    }

    PowerControlSystem::PowerControlSystem(env::Environment &env, SystemConfig cfg, std::uint64_t seed)
        : env_(env), cfg_(std::move(cfg))
    {
        l1_ = std::make_unique<marl::Learner>(cfg_.layer1, seed, "layer1");
        if (cfg_.architecture == Architecture::double_layer)
            l2_ = std::make_unique<marl::Learner>(cfg_.layer2, seed, "layer2");
        reset();
    }

    void PowerControlSystem::reset()
    {
        env_.reset();
        obs1_ = layer1_obs();
    }

    Eigen::MatrixXd PowerControlSystem::layer1_obs() const
    {
        const Eigen::VectorXd beta = env_.observe_layer1();
        Eigen::MatrixXd obs(1, beta.size());
        for (Eigen::Index k = 0; k < beta.size(); ++k)
            obs(0, k) = lsf_feature(beta(k));
        return obs;
    }

    Eigen::MatrixXd PowerControlSystem::layer2_obs(const Eigen::VectorXd &budgets) const
    {
        const Eigen::MatrixXd agg = env_.observe_antennas(); // K x N_s
        const int ns = static_cast<int>(agg.cols());
        const double p_max = env_.config().p_max;
        Eigen::MatrixXd obs(2, agg.size());
        for (Eigen::Index k = 0; k < agg.rows(); ++k)
            for (int n = 0; n < ns; ++n)
            {
                obs(0, k * ns + n) = lsf_feature(agg(k, n));
                obs(1, k * ns + n) = budgets(k) / p_max;
            }
        return obs;
    }

    std::vector<env::AgentAction> PowerControlSystem::to_actions(const Eigen::MatrixXd &unit) const
    {
        const auto &ec = env_.config();
        std::vector<env::AgentAction> actions(static_cast<std::size_t>(unit.cols()));
        for (Eigen::Index k = 0; k < unit.cols(); ++k)
        {
            auto &a = actions[static_cast<std::size_t>(k)];
            a.power = ec.p_max * unit(0, k);
            if (unit.rows() >= 3)
            {
                a.step = ec.d_max * unit(1, k);
                a.angle = std::fmod(2.0 * kPi * unit(2, k), 2.0 * kPi);
            }
        }
        return actions;
    }

    StepLog PowerControlSystem::step(bool explore, bool learn)
    {
        StepLog log;
        const Eigen::MatrixXd obs1 = obs1_;
        const Eigen::MatrixXd u1 = explore ? l1_->act(obs1, true) : l1_->act_greedy(obs1);
        log.actions = to_actions(u1);
        log.budgets.resize(u1.cols());
        for (Eigen::Index k = 0; k < u1.cols(); ++k)
            log.budgets(k) = log.actions[static_cast<std::size_t>(k)].power;

        Eigen::MatrixXd obs2, u2;
        if (l2_)
        {
            const int ns = env_.config().ue_antennas();
            obs2 = layer2_obs(log.budgets);
            if (force_uniform_)
                u2 = Eigen::MatrixXd::Constant(1, obs2.cols(), 0.5);
            else
                u2 = explore ? l2_->act(obs2, true) : l2_->act_greedy(obs2);
            log.env = env_.step(log.actions, layer2_allocate(u2.row(0).transpose(), log.budgets, ns));
        }
        else
        {
            log.env = env_.step(log.actions);
        }

        const Eigen::MatrixXd next1 = layer1_obs();
        log.layer1.rewards = log.env.rewards;
        if (l2_)
        {
            LayerLog l2log;
            const int ns = env_.config().ue_antennas();
            l2log.rewards = split_reward(log.env.rewards, ns);
            if (learn)
                l2log.update = l2_->observe({obs2, u2, l2log.rewards, layer2_obs(log.budgets)});
            log.layer2 = std::move(l2log);
        }
        if (learn)
            log.layer1.update = l1_->observe({obs1, u1, log.env.rewards, next1});
        obs1_ = next1;
        return log;
    }
} // namespace cfxl::dlpc
