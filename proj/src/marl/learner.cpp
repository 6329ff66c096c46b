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

#include "cfxl/marl/learner.hpp"

#include <algorithm>
#include <cmath>

namespace cfxl::marl
{
    Variant variant_from_string(const std::string &tag)
    {
        if (tag == "maddpg")
            return Variant::maddpg;
        if (tag == "de-maddpg")
            return Variant::de_maddpg;
        if (tag == "pes-maddpg")
            return Variant::pes_maddpg;
        if (tag == "mimo-maddpg")
            return Variant::mimo_maddpg;
        throw ConfigError("unknown variant '" + tag + "' (expected maddpg|de-maddpg|pes-maddpg|mimo-maddpg)");
    }

    std::string to_string(Variant v)
    {
        switch (v)
        {
        case Variant::maddpg:
            return "maddpg";
        case Variant::de_maddpg:
            return "de-maddpg";
        case Variant::pes_maddpg:
            return "pes-maddpg";
        default:
            return "mimo-maddpg";
        }
    }

    void LearnerConfig::apply_variant(Variant v)
    {
        local_critics = v == Variant::de_maddpg || v == Variant::mimo_maddpg;
        prioritized = v == Variant::pes_maddpg || v == Variant::mimo_maddpg;
    }

    int LearnerConfig::num_slots() const
    {
        if (share_slots.empty())
            return num_agents;
        return *std::max_element(share_slots.begin(), share_slots.end()) + 1;
    }

    int LearnerConfig::slot_of(int agent) const
    {
        return share_slots.empty() ? agent : share_slots[static_cast<std::size_t>(agent)];
    }

    void LearnerConfig::validate() const
    {
        if (num_agents < 1 || obs_dim < 1 || act_dim < 1)
            throw ConfigError("learner: agent count and dimensions must be >= 1");
        if (!share_slots.empty())
        {
            if (static_cast<int>(share_slots.size()) != num_agents)
                throw ConfigError("learner: share_slots needs one entry per agent");
            for (int s : share_slots)
                if (s < 0)
                    throw ConfigError("learner: negative network slot");
        }
        for (int h : hidden)
            if (h < 1)
                throw ConfigError("learner: hidden sizes must be >= 1");
        if (!(lr_actor >= 0.0) || !(lr_critic >= 0.0))
            throw ConfigError("learner: learning rates must be non-negative");
        if (!(gamma >= 0.0 && gamma < 1.0))
            throw ConfigError("learner: gamma must lie in [0, 1)");
        if (!(tau > 0.0 && tau <= 1.0))
            throw ConfigError("learner: tau must lie in (0, 1]");
        if (!(grad_clip > 0.0))
            throw ConfigError("learner: grad_clip must be positive");
        if (buffer_capacity < 1 || pool_size < 1 || pool_size > buffer_capacity)
            throw ConfigError("learner: need 1 <= pool_size <= buffer_capacity");
        if (batch_global < 1 || batch_local < 1)
            throw ConfigError("learner: batch sizes must be >= 1");
        if (!(mu > 0.0))
            throw ConfigError("learner: mu must be positive");
        if (!(nu > 0.0 && nu < 1.0))
            throw ConfigError("learner: nu must lie in (0, 1)");
        if (!(noise_start >= 0.0) || !(noise_end >= 0.0) || noise_decay_steps < 1)
            throw ConfigError("learner: invalid exploration schedule");
    }

    BellmanResult bellman_loss(const Eigen::VectorXd &q, const Eigen::VectorXd &r, const Eigen::VectorXd &q_next,
                               double gamma)
    {
        if (q.size() != r.size() || q.size() != q_next.size() || q.size() == 0)
            throw std::invalid_argument("bellman_loss: size mismatch");
        BellmanResult res;
        res.target = r + gamma * q_next;
        const Eigen::VectorXd diff = q - res.target;
        const double n = static_cast<double>(q.size());
        res.loss = diff.squaredNorm() / n;
        res.grad_q = 2.0 * diff / n;
        return res;
    }

    namespace
    {
        struct BatchMats
        {
            Eigen::MatrixXd s, a, r, s_next;
        };

        BatchMats stack(const std::vector<const Experience *> &batch)
        {
            const auto b = static_cast<Eigen::Index>(batch.size());
            const Experience &e0 = *batch.front();
            BatchMats m;
            m.s.resize(e0.s.size(), b);
            m.a.resize(e0.a.size(), b);
            m.r.resize(e0.r.size(), b);
            m.s_next.resize(e0.s_next.size(), b);
            for (Eigen::Index j = 0; j < b; ++j)
            {
                const Experience &e = *batch[static_cast<std::size_t>(j)];
                m.s.col(j) = e.s;
                m.a.col(j) = e.a;
                m.r.col(j) = e.r;
                m.s_next.col(j) = e.s_next;
            }
            return m;
        }

        Eigen::MatrixXd vstack(const Eigen::MatrixXd &top, const Eigen::MatrixXd &bottom)
        {
            Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
            out << top, bottom;
            return out;
        }

        Eigen::VectorXd flatten(const Eigen::MatrixXd &m) { return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()); }
    } // namespace

    Learner::Learner(LearnerConfig cfg, std::uint64_t seed, const std::string &tag)
        : cfg_(std::move(cfg)), global_buf_(static_cast<std::size_t>(cfg_.buffer_capacity)),
          noise_rng_(derive_seed(seed, tag + ".noise")), sample_g_rng_(derive_seed(seed, tag + ".sample.global")),
          sample_l_rng_(derive_seed(seed, tag + ".sample.local")), pool_g_rng_(derive_seed(seed, tag + ".pool.global")),
          pool_l_rng_(derive_seed(seed, tag + ".pool.local"))
    {
        cfg_.validate();
        const int k = cfg_.num_agents;
        const int slots = cfg_.num_slots();

        auto sizes = [&](int in, int out) {
            std::vector<int> s{in};
            s.insert(s.end(), cfg_.hidden.begin(), cfg_.hidden.end());
            s.push_back(out);
            return s;
        };

        Rng init(derive_seed(seed, tag + ".init"));
        for (int s = 0; s < slots; ++s)
        {
            Mlp a(sizes(cfg_.obs_dim, cfg_.act_dim), cfg_.leaky_slope);
            a.init(init);
            actors_.push_back(a);
        }
        critic_ = Mlp(sizes(k * (cfg_.obs_dim + cfg_.act_dim), 1), cfg_.leaky_slope);
        critic_.init(init);
        actor_targets_ = actors_;
        critic_target_ = critic_;

        if (cfg_.local_critics)
        {
            Rng init_l(derive_seed(seed, tag + ".init.local"));
            for (int s = 0; s < slots; ++s)
            {
                Mlp q(sizes(cfg_.obs_dim + cfg_.act_dim, 1), cfg_.leaky_slope);
                q.init(init_l);
                local_.push_back(q);
            }
            local_targets_ = local_;
            for (int i = 0; i < k; ++i)
                local_bufs_.emplace_back(static_cast<std::size_t>(cfg_.buffer_capacity));
        }
    }

    double Learner::noise_std() const
    {
        const double frac = std::min(1.0, static_cast<double>(act_count_) / static_cast<double>(cfg_.noise_decay_steps));
        return cfg_.noise_start + (cfg_.noise_end - cfg_.noise_start) * frac;
    }

    Eigen::MatrixXd Learner::act_greedy(const Eigen::MatrixXd &obs) const
    {
        if (obs.rows() != cfg_.obs_dim || obs.cols() != cfg_.num_agents)
            throw std::invalid_argument("Learner::act: observation must be obs_dim x num_agents");
        Eigen::MatrixXd u(cfg_.act_dim, cfg_.num_agents);
        for (int i = 0; i < cfg_.num_agents; ++i)
            u.col(i) = logistic(actor(i).forward(obs.col(i)));
        return u;
    }

    Eigen::MatrixXd Learner::act(const Eigen::MatrixXd &obs, bool explore)
    {
        Eigen::MatrixXd u = act_greedy(obs);
        if (!explore)
            return u;
        std::normal_distribution<double> n(0.0, 1.0);
        const double sd = noise_std();
        for (Eigen::Index j = 0; j < u.cols(); ++j)
            for (Eigen::Index i = 0; i < u.rows(); ++i)
                u(i, j) = std::clamp(u(i, j) + sd * n(noise_rng_), 0.0, 1.0);
        ++act_count_;
        return u;
    }

    Eigen::VectorXd Learner::agent_block(const Eigen::VectorXd &joint, int agent, int dim) const
    {
        return joint.segment(static_cast<Eigen::Index>(agent) * dim, dim);
    }

    Eigen::MatrixXd Learner::target_actions(const Eigen::MatrixXd &next_obs_joint) const
    {
        const int k = cfg_.num_agents;
        Eigen::MatrixXd a(static_cast<Eigen::Index>(k) * cfg_.act_dim, next_obs_joint.cols());
        for (int i = 0; i < k; ++i)
            a.middleRows(static_cast<Eigen::Index>(i) * cfg_.act_dim, cfg_.act_dim) =
                logistic(actor_targets_[static_cast<std::size_t>(cfg_.slot_of(i))].forward(
                    next_obs_joint.middleRows(static_cast<Eigen::Index>(i) * cfg_.obs_dim, cfg_.obs_dim)));
        return a;
    }

    double Learner::record_loss_global(const Experience &e) const
    {
        const Eigen::MatrixXd s = e.s;
        const Eigen::MatrixXd sn = e.s_next;
        const double q = critic_.forward(vstack(s, e.a))(0, 0);
        const double qn = critic_target_.forward(vstack(sn, target_actions(sn)))(0, 0);
        const double y = cfg_.reward_scale * e.r.sum() + cfg_.gamma * qn;
        return (q - y) * (q - y);
    }

    double Learner::record_loss_local(const Experience &e, int agent) const
    {
        // local records hold a single agent's slice
        const std::size_t slot = static_cast<std::size_t>(cfg_.slot_of(agent));
        const double q = local_[slot].forward(vstack(e.s, e.a))(0, 0);
        const Eigen::MatrixXd an = logistic(actor_targets_[slot].forward(e.s_next));
        const double qn = local_targets_[slot].forward(vstack(e.s_next, an))(0, 0);
        const double y = cfg_.reward_scale * e.r(0) + cfg_.gamma * qn;
        return (q - y) * (q - y);
    }

    Experience Learner::local_record(const Transition &tr, int agent) const
    {
        Experience e;
        e.s = tr.obs.col(agent);
        e.a = tr.act.col(agent);
        e.r = Eigen::VectorXd::Constant(1, tr.rewards(agent));
        e.s_next = tr.next_obs.col(agent);
        return e;
    }

    std::vector<std::size_t> Learner::draw_batch(ReplayBuffer &buf, std::size_t batch, bool prioritized,
                                                 Rng &pool_rng, Rng &sample_rng, UpdateStats *stats)
    {
        std::vector<std::size_t> out(batch);
        if (prioritized)
        {
            refresh_priorities(buf, cfg_.mu, cfg_.nu);
            const auto pool = fill_extraction_pool(buf, static_cast<std::size_t>(cfg_.pool_size), pool_rng);
            std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
            for (auto &o : out)
                o = pool[pick(sample_rng)];
            if (stats)
            {
                double sum = 0.0, mx = 0.0;
                for (auto i : pool)
                {
                    sum += buf[i].pr;
                    mx = std::max(mx, buf[i].pr);
                }
                stats->pr_mean = sum / static_cast<double>(pool.size());
                stats->pr_max = mx;
            }
        }
        else
        {
            std::uniform_int_distribution<std::size_t> pick(0, buf.size() - 1);
            for (auto &o : out)
                o = pick(sample_rng);
        }
        return out;
    }

    double Learner::update_global_critic(const std::vector<const Experience *> &batch)
    {
        const BatchMats m = stack(batch);
        Mlp::Tape tape;
        const Eigen::MatrixXd q = critic_.forward(vstack(m.s, m.a), tape);
        const Eigen::MatrixXd qn = critic_target_.forward(vstack(m.s_next, target_actions(m.s_next)));
        const Eigen::VectorXd r = cfg_.reward_scale * m.r.colwise().sum().transpose();
        const BellmanResult bl = bellman_loss(q.row(0).transpose(), r, qn.row(0).transpose(), cfg_.gamma);

        Eigen::VectorXd grad = Eigen::VectorXd::Zero(critic_.num_params());
        critic_.backward(tape, bl.grad_q.transpose(), grad);
        clip_global_norm(grad, cfg_.grad_clip);
        critic_.params() -= cfg_.lr_critic * grad;
        return bl.loss;
    }

    double Learner::update_local_critic(int agent, const std::vector<const Experience *> &batch)
    {
        const std::size_t slot = static_cast<std::size_t>(cfg_.slot_of(agent));
        const BatchMats m = stack(batch);
        Mlp::Tape tape;
        Mlp &q_net = local_[slot];
        const Eigen::MatrixXd q = q_net.forward(vstack(m.s, m.a), tape);
        const Eigen::MatrixXd an = logistic(actor_targets_[slot].forward(m.s_next));
        const Eigen::MatrixXd qn = local_targets_[slot].forward(vstack(m.s_next, an));
        const Eigen::VectorXd r = cfg_.reward_scale * m.r.row(0).transpose();
        const BellmanResult bl = bellman_loss(q.row(0).transpose(), r, qn.row(0).transpose(), cfg_.gamma);

        Eigen::VectorXd grad = Eigen::VectorXd::Zero(q_net.num_params());
        q_net.backward(tape, bl.grad_q.transpose(), grad);
        clip_global_norm(grad, cfg_.grad_clip);
        q_net.params() -= cfg_.lr_critic * grad;
        return bl.loss;
    }

    ActorGradient Learner::actor_gradient(const std::vector<const Experience *> &batch, int agent) const
    {
        const BatchMats m = stack(batch);
        const std::size_t slot = static_cast<std::size_t>(cfg_.slot_of(agent));
        const Mlp &pi = actors_[slot];
        const Eigen::Index b = m.s.cols();
        const Eigen::Index od = cfg_.obs_dim, ad = cfg_.act_dim;

        Mlp::Tape tape_pi;
        const Eigen::MatrixXd s_i = m.s.middleRows(agent * od, od);
        const Eigen::MatrixXd u = logistic(pi.forward(s_i, tape_pi));
        const Eigen::MatrixXd dsig = u.cwiseProduct((1.0 - u.array()).matrix());
        const Eigen::MatrixXd upstream = Eigen::MatrixXd::Constant(1, b, 1.0 / static_cast<double>(b));

        ActorGradient g;
        g.global_term = Eigen::VectorXd::Zero(pi.num_params());
        g.local_term = Eigen::VectorXd::Zero(pi.num_params());

        {
            Eigen::MatrixXd a = m.a;
            a.middleRows(agent * ad, ad) = u;
            Mlp::Tape tape_q;
            critic_.forward(vstack(m.s, a), tape_q);
            Eigen::VectorXd scratch = Eigen::VectorXd::Zero(critic_.num_params());
            const Eigen::MatrixXd dx = critic_.backward(tape_q, upstream, scratch);
            const Eigen::Index a_off = m.s.rows() + agent * ad;
            pi.backward(tape_pi, dx.middleRows(a_off, ad).cwiseProduct(dsig), g.global_term);
        }

        if (cfg_.local_critics)
        {
            const Mlp &ql = local_[slot];
            Mlp::Tape tape_q;
            ql.forward(vstack(s_i, u), tape_q);
            Eigen::VectorXd scratch = Eigen::VectorXd::Zero(ql.num_params());
            const Eigen::MatrixXd dx = ql.backward(tape_q, upstream, scratch);
            pi.backward(tape_pi, dx.middleRows(od, ad).cwiseProduct(dsig), g.local_term);
        }

        g.total = g.global_term + cfg_.ddpg_weight * g.local_term;
        return g;
    }

    double Learner::actor_objective(const std::vector<const Experience *> &batch, int agent) const
    {
        const BatchMats m = stack(batch);
        const std::size_t slot = static_cast<std::size_t>(cfg_.slot_of(agent));
        const Eigen::Index od = cfg_.obs_dim, ad = cfg_.act_dim;
        const Eigen::MatrixXd s_i = m.s.middleRows(agent * od, od);
        const Eigen::MatrixXd u = logistic(actors_[slot].forward(s_i));
        Eigen::MatrixXd a = m.a;
        a.middleRows(agent * ad, ad) = u;
        double j = critic_.forward(vstack(m.s, a)).mean();
        if (cfg_.local_critics)
            j += cfg_.ddpg_weight * local_[slot].forward(vstack(s_i, u)).mean();
        return j;
    }

    void Learner::update_actors(const std::vector<const Experience *> &batch)
    {
        const int slots = cfg_.num_slots();
        std::vector<Eigen::VectorXd> grads(static_cast<std::size_t>(slots));
        for (int i = 0; i < cfg_.num_agents; ++i)
        {
            const ActorGradient g = actor_gradient(batch, i);
            auto &acc = grads[static_cast<std::size_t>(cfg_.slot_of(i))];
            if (acc.size() == 0)
                acc = g.total;
            else
                acc += g.total;
        }
        for (int s = 0; s < slots; ++s)
        {
            auto &g = grads[static_cast<std::size_t>(s)];
            if (g.size() == 0)
                continue;
            clip_global_norm(g, cfg_.grad_clip);
            actors_[static_cast<std::size_t>(s)].params() += cfg_.lr_actor * g;
        }
    }

    UpdateStats Learner::observe(const Transition &tr)
    {
        const int k = cfg_.num_agents;
        if (tr.obs.rows() != cfg_.obs_dim || tr.obs.cols() != k || tr.act.rows() != cfg_.act_dim ||
            tr.act.cols() != k || tr.rewards.size() != k || tr.next_obs.rows() != cfg_.obs_dim ||
            tr.next_obs.cols() != k)
            throw std::invalid_argument("Learner::observe: transition dimensions do not match the configuration");

        UpdateStats st;
        Experience e;
        e.s = flatten(tr.obs);
        e.a = flatten(tr.act);
        e.r = tr.rewards;
        e.s_next = flatten(tr.next_obs);
        e.loss = record_loss_global(e);
        st.new_loss = e.loss;
        global_buf_.push(std::move(e));
        if (cfg_.local_critics)
            for (int i = 0; i < k; ++i)
            {
                Experience le = local_record(tr, i);
                le.loss = record_loss_local(le, i);
                local_bufs_[static_cast<std::size_t>(i)].push(std::move(le));
            }

        const std::size_t ready = static_cast<std::size_t>(std::max(cfg_.warmup, cfg_.pool_size));
        if (global_buf_.size() < ready)
            return st;

        // global critic
        const auto idx_g = draw_batch(global_buf_, static_cast<std::size_t>(cfg_.batch_global), cfg_.prioritized,
                                      pool_g_rng_, sample_g_rng_, &st);
        std::vector<const Experience *> batch_g;
        batch_g.reserve(idx_g.size());
        for (auto i : idx_g)
            batch_g.push_back(&global_buf_[i]);
        st.critic_loss_global = update_global_critic(batch_g);

        // local critics
        if (cfg_.local_critics)
        {
            double total = 0.0;
            for (int i = 0; i < k; ++i)
            {
                auto &buf = local_bufs_[static_cast<std::size_t>(i)];
                const auto idx_l = draw_batch(buf, static_cast<std::size_t>(cfg_.batch_local), cfg_.prioritized,
                                              pool_l_rng_, sample_l_rng_, nullptr);
                std::vector<const Experience *> batch_l;
                for (auto j : idx_l)
                    batch_l.push_back(&buf[j]);
                total += update_local_critic(i, batch_l);
                for (auto j : idx_l)
                    buf[j].loss = record_loss_local(buf[j], i);
            }
            st.critic_loss_local = total / k;
        }

        // actors against the freshly updated critics
        update_actors(batch_g);
        for (int i = 0; i < k; ++i)
            st.actor_objective += actor_objective(batch_g, i) / k;

        for (auto i : idx_g)
            global_buf_[i].loss = record_loss_global(global_buf_[i]);

        for (std::size_t s = 0; s < actors_.size(); ++s)
            soft_update(actors_[s].params(), actor_targets_[s].params(), cfg_.tau, cfg_.soft);
        soft_update(critic_.params(), critic_target_.params(), cfg_.tau, cfg_.soft);
        for (std::size_t s = 0; s < local_.size(); ++s)
            soft_update(local_[s].params(), local_targets_[s].params(), cfg_.tau, cfg_.soft);

        ++update_count_;
        st.updated = true;
        return st;
    }

    std::vector<std::pair<std::string, Mlp *>> Learner::named_networks()
    {
        std::vector<std::pair<std::string, Mlp *>> out;
        for (std::size_t s = 0; s < actors_.size(); ++s)
        {
            out.emplace_back("actor." + std::to_string(s), &actors_[s]);
            out.emplace_back("actor_target." + std::to_string(s), &actor_targets_[s]);
        }
        out.emplace_back("critic", &critic_);
        out.emplace_back("critic_target", &critic_target_);
        for (std::size_t s = 0; s < local_.size(); ++s)
        {
            out.emplace_back("local_critic." + std::to_string(s), &local_[s]);
            out.emplace_back("local_critic_target." + std::to_string(s), &local_targets_[s]);
        }
        return out;
    }

    std::vector<std::pair<std::string, Rng *>> Learner::named_rngs()
    {
        return {{"noise", &noise_rng_},
                {"sample.global", &sample_g_rng_},
                {"sample.local", &sample_l_rng_},
                {"pool.global", &pool_g_rng_},
                {"pool.local", &pool_l_rng_}};
    }

    EpisodeMetrics train_episode(MarlEnv &env, Learner &learner, int steps)
    {
        EpisodeMetrics out;
        Eigen::MatrixXd obs = env.reset();
        double total = 0.0;
        for (int t = 0; t < steps; ++t)
        {
            const Eigen::MatrixXd u = learner.act(obs, true);
            MarlEnv::Step st = env.step(u);
            Transition tr{obs, u, st.rewards, st.next_obs};
            out.updates.push_back(learner.observe(tr));
            total += st.rewards.sum();
            out.rewards.push_back(st.rewards);
            obs = std::move(st.next_obs);
        }
        out.mean_reward_sum = steps > 0 ? total / steps : 0.0;
        return out;
    }

    EpisodeMetrics greedy_episode(MarlEnv &env, const Learner &learner, int steps)
    {
        EpisodeMetrics out;
        Eigen::MatrixXd obs = env.reset();
        double total = 0.0;
        for (int t = 0; t < steps; ++t)
        {
            MarlEnv::Step st = env.step(learner.act_greedy(obs));
            total += st.rewards.sum();
            out.rewards.push_back(st.rewards);
            obs = std::move(st.next_obs);
        }
        out.mean_reward_sum = steps > 0 ? total / steps : 0.0;
        return out;
    }

    ConcaveBandit::ConcaveBandit(double gain, double price, double p_max) : gain_(gain), price_(price), p_max_(p_max)
    {
        if (!(gain > 0.0) || !(price > 0.0) || !(p_max > 0.0))
            throw std::invalid_argument("ConcaveBandit: parameters must be positive");
    }

    Eigen::MatrixXd ConcaveBandit::reset() { return Eigen::MatrixXd::Ones(1, 1); }

    double ConcaveBandit::reward(double power) const { return std::log2(1.0 + gain_ * power) - price_ * power; }

    double ConcaveBandit::optimum_power() const
    {
        return std::clamp(1.0 / (price_ * std::log(2.0)) - 1.0 / gain_, 0.0, p_max_);
    }

    MarlEnv::Step ConcaveBandit::step(const Eigen::MatrixXd &unit_actions)
    {
        Step s;
        s.next_obs = Eigen::MatrixXd::Ones(1, 1);
        s.rewards = Eigen::VectorXd::Constant(1, reward(p_max_ * unit_actions(0, 0)));
        return s;
    }
} // namespace cfxl::marl
