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

#ifndef CFXL_MARL_LEARNER_HPP
#define CFXL_MARL_LEARNER_HPP

#include "cfxl/marl/mlp.hpp"
#include "cfxl/marl/replay.hpp"

#include <string>
#include <utility>
#include <vector>

// Centralised-critic actor-critic learner for K cooperating agents.
//
// Every agent owns an actor (local observation -> unit action in (0,1)^act_dim). A global
// critic scores the joint observation and joint action against the team reward. Optionally
// each agent also owns a local critic on its own observation, action and reward, whose
// deterministic policy gradient is added to the global one, and replay draws can go through a
// rank-based prioritised extraction pool.

namespace cfxl::marl
{
    enum class Variant
    {
        maddpg,    // global critic only, uniform replay
        de_maddpg, // global + local critics
        pes_maddpg, // global critic, prioritised extraction pool
        mimo_maddpg // global + local critics, prioritised extraction pool
    };

    Variant variant_from_string(const std::string &tag);
    std::string to_string(Variant v);

    struct LearnerConfig
    {
        int num_agents = 1;
        int obs_dim = 1;
        int act_dim = 1;
        bool local_critics = true;
        bool prioritized = true;
        double ddpg_weight = 1.0; // weight of the local-critic term in the actor gradient
        std::vector<int> hidden{128, 64};
        double leaky_slope = 0.01;
        double lr_actor = 0.01;
        double lr_critic = 0.01;
        double gamma = 0.99;
        double tau = 0.01;
        SoftDirection soft = SoftDirection::standard;
        double grad_clip = 0.5;
        int buffer_capacity = 1024;
        int pool_size = 512;
        int batch_global = 32;
        int batch_local = 32;
        int warmup = 0; // updates start once |D| >= max(warmup, pool_size)
        double mu = 2.0;
        double nu = 1e-4;
        double reward_scale = 1.0;
        double noise_start = 0.2;
        double noise_end = 0.01;
        long noise_decay_steps = 10000;
        std::vector<int> share_slots; // agent -> network slot; empty means one network per agent

        void apply_variant(Variant v);
        void validate() const;
        int num_slots() const;
        int slot_of(int agent) const;
    };

    struct Transition
    {
        Eigen::MatrixXd obs;      // obs_dim x K
        Eigen::MatrixXd act;      // act_dim x K, unit actions actually taken
        Eigen::VectorXd rewards;  // K
        Eigen::MatrixXd next_obs; // obs_dim x K
    };

    struct UpdateStats
    {
        bool updated = false;
        double new_loss = 0.0;          // loss assigned to the stored record
        double critic_loss_global = 0.0;
        double critic_loss_local = 0.0; // mean over agents
        double actor_objective = 0.0;   // mean global Q at the policy actions
        double pr_mean = 0.0;           // over the extraction pool
        double pr_max = 0.0;
    };

    struct BellmanResult
    {
        double loss = 0.0;
        Eigen::VectorXd target;  // y = r + gamma q_next
        Eigen::VectorXd grad_q;  // dL/dq
    };

    // Mean squared Bellman error of q against r + gamma q_next.
    BellmanResult bellman_loss(const Eigen::VectorXd &q, const Eigen::VectorXd &r, const Eigen::VectorXd &q_next,
                               double gamma);

    struct ActorGradient
    {
        Eigen::VectorXd global_term; // through the global critic
        Eigen::VectorXd local_term;  // through the agent's local critic (unweighted)
        Eigen::VectorXd total;       // global_term + ddpg_weight * local_term
    };

    class Learner
    {
    public:
        // All random streams derive from (seed, tag): "<tag>.init", "<tag>.init.local", "<tag>.noise",
        // "<tag>.sample.global", "<tag>.sample.local", "<tag>.pool.global", "<tag>.pool.local".
        Learner(LearnerConfig cfg, std::uint64_t seed, const std::string &tag);

        const LearnerConfig &config() const { return cfg_; }

        // Unit actions act_dim x K. Exploration adds clipped Gaussian noise.
        Eigen::MatrixXd act(const Eigen::MatrixXd &obs, bool explore);
        Eigen::MatrixXd act_greedy(const Eigen::MatrixXd &obs) const;
        double noise_std() const;

        // Stores the transition and runs one update round once the buffer is warm.
        UpdateStats observe(const Transition &tr);

        // Pieces of the update, exposed for verification.
        double record_loss_global(const Experience &e) const;
        double record_loss_local(const Experience &e, int agent) const;
        ActorGradient actor_gradient(const std::vector<const Experience *> &batch, int agent) const;
        double actor_objective(const std::vector<const Experience *> &batch, int agent) const;

        Mlp &actor(int agent) { return actors_[static_cast<std::size_t>(cfg_.slot_of(agent))]; }
        const Mlp &actor(int agent) const { return actors_[static_cast<std::size_t>(cfg_.slot_of(agent))]; }
        Mlp &global_critic() { return critic_; }
        const Mlp &global_critic() const { return critic_; }
        Mlp &local_critic(int agent) { return local_[static_cast<std::size_t>(cfg_.slot_of(agent))]; }

        ReplayBuffer &global_buffer() { return global_buf_; }
        std::vector<ReplayBuffer> &local_buffers() { return local_bufs_; }

        // Named views for checkpointing, in a fixed order.
        std::vector<std::pair<std::string, Mlp *>> named_networks();
        std::vector<std::pair<std::string, Rng *>> named_rngs();
        long &act_count() { return act_count_; }
        long &update_count() { return update_count_; }

    private:
        LearnerConfig cfg_;
        std::vector<Mlp> actors_, actor_targets_;
        Mlp critic_, critic_target_;
        std::vector<Mlp> local_, local_targets_;
        ReplayBuffer global_buf_;
        std::vector<ReplayBuffer> local_bufs_;
        Rng noise_rng_, sample_g_rng_, sample_l_rng_, pool_g_rng_, pool_l_rng_;
        long act_count_ = 0;
        long update_count_ = 0;

        Eigen::MatrixXd target_actions(const Eigen::MatrixXd &next_obs_joint) const;
        Eigen::VectorXd agent_block(const Eigen::VectorXd &joint, int agent, int dim) const;
        std::vector<std::size_t> draw_batch(ReplayBuffer &buf, std::size_t batch, bool prioritized, Rng &pool_rng,
                                            Rng &sample_rng, UpdateStats *stats);
        double update_global_critic(const std::vector<const Experience *> &batch);
        double update_local_critic(int agent, const std::vector<const Experience *> &batch);
        void update_actors(const std::vector<const Experience *> &batch);
        Experience local_record(const Transition &tr, int agent) const;
    };

    // Environment seen by the learner: K agents, unit actions.
    class MarlEnv
    {
    public:
        virtual ~MarlEnv() = default;
        virtual Eigen::MatrixXd reset() = 0; // obs_dim x K
        struct Step
        {
            Eigen::MatrixXd next_obs;
            Eigen::VectorXd rewards;
        };
        virtual Step step(const Eigen::MatrixXd &unit_actions) = 0;
    };

    struct EpisodeMetrics
    {
        std::vector<Eigen::VectorXd> rewards; // per step
        std::vector<UpdateStats> updates;     // per step (training only)
        double mean_reward_sum = 0.0;
    };

    EpisodeMetrics train_episode(MarlEnv &env, Learner &learner, int steps);
    EpisodeMetrics greedy_episode(MarlEnv &env, const Learner &learner, int steps);

    // Single-agent static bandit: unit action u -> power p = p_max u,
    // reward log2(1 + gain p) - price p. Observation is constant.
    class ConcaveBandit : public MarlEnv
    {
    public:
        ConcaveBandit(double gain = 10.0, double price = 2.0, double p_max = 1.0);
        Eigen::MatrixXd reset() override;
        Step step(const Eigen::MatrixXd &unit_actions) override;

        double reward(double power) const;
        double optimum_power() const; // closed form, clipped to [0, p_max]
        double p_max() const { return p_max_; }

    private:
        double gain_, price_, p_max_;
    };
} // namespace cfxl::marl

#endif
