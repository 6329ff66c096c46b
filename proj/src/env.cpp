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

#include "cfxl/env.hpp"

#include <algorithm>
#include <cmath>

namespace cfxl::env
{
    Scenario scenario_from_string(const std::string &tag)
    {
        if (tag == "static")
            return Scenario::static_mode;
        if (tag == "dynamic")
            return Scenario::dynamic;
        if (tag == "pm-dynamic")
            return Scenario::pm_dynamic;
        throw ConfigError("unknown scenario '" + tag + "' (expected static|dynamic|pm-dynamic)");
    }

    std::string to_string(Scenario s)
    {
        switch (s)
        {
        case Scenario::dynamic:
            return "dynamic";
        case Scenario::pm_dynamic:
            return "pm-dynamic";
        default:
            return "static";
        }
    }

    void MdpTuple::validate() const
    {
        if (!(gamma > 0.0 && gamma < 1.0))
            throw ConfigError("mdp.gamma must lie in (0, 1)");
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw ConfigError("mdp.alpha must lie in [0, 1]");
        if (!(beta_acc > 1.0))
            throw ConfigError("mdp.beta_acc must exceed 1");
        if (!(r_b < r_g))
            throw ConfigError("mdp.r_b must be below mdp.r_g");
    }

    Vec3 wrap(const Vec3 &p, double area)
    {
        auto w = [area](double v) {
            double r = std::fmod(v, area);
            if (r < 0.0)
                r += area;
            return r >= area ? 0.0 : r;
        };
        return {w(p.x()), w(p.y()), p.z()};
    }

    Vec3 torus_delta(const Vec3 &a, const Vec3 &b, double area)
    {
        Vec3 d = b - a;
        for (int i = 0; i < 2; ++i)
            d(i) -= area * std::round(d(i) / area);
        return d;
    }

    double torus_distance(const Vec3 &a, const Vec3 &b, double area) { return torus_delta(a, b, area).norm(); }

    WorldState place(const EnvConfig &cfg, Rng &rng)
    {
        if (cfg.num_bs < 1 || cfg.num_ue < 1)
            throw ConfigError("placement needs at least one BS and one UE");
        std::uniform_real_distribution<double> u(0.0, cfg.area);

        WorldState w;
        int tries = 0;
        while (static_cast<int>(w.bs_positions.size()) < cfg.num_bs)
        {
            if (++tries > cfg.max_placement_tries)
                throw std::runtime_error("placement: could not honour the minimum BS distance after " +
                                         std::to_string(cfg.max_placement_tries) + " tries");
            const double x = u(rng);
            const double y = u(rng);
            const Vec3 cand(x, y, cfg.bs_height);
            bool ok = true;
            for (const auto &b : w.bs_positions)
                if (torus_distance(b, cand, cfg.area) < cfg.min_bs_distance)
                {
                    ok = false;
                    break;
                }
            if (ok)
                w.bs_positions.push_back(cand);
        }
        for (int k = 0; k < cfg.num_ue; ++k)
        {
            const double x = u(rng);
            const double y = u(rng);
            w.ue_positions.emplace_back(x, y, cfg.ue_height);
        }
        w.ue_origins = w.ue_positions;
        return w;
    }

    double predictive_limit(double reward_sum, double step, const MdpTuple &mdp)
    {
        if (reward_sum >= mdp.r_g)
            return mdp.alpha * step;
        if (reward_sum <= mdp.r_b)
            return mdp.beta_acc * step;
        return step;
    }

    se::PowerAllocation project_power(const Eigen::VectorXd &raw, double budget)
    {
        if ((raw.array() < 0.0).any() || !raw.allFinite())
            throw std::invalid_argument("project_power: amplitudes must be finite and non-negative");
        if (!(budget >= 0.0))
            throw std::invalid_argument("project_power: budget must be non-negative");
        se::PowerAllocation p;
        p.budget = budget;
        p.amp = raw;
        const double tr = raw.squaredNorm();
        if (tr > budget)
            p.amp *= std::sqrt(budget / tr);
        return p;
    }

    Environment::Environment(EnvConfig cfg, WorldState world) : cfg_(std::move(cfg)), world_(std::move(world))
    {
        cfg_.mdp.validate();
        if (static_cast<int>(world_.bs_positions.size()) != cfg_.num_bs ||
            static_cast<int>(world_.ue_positions.size()) != cfg_.num_ue)
            throw std::invalid_argument("Environment: world does not match the configured BS/UE counts");
        if (world_.ue_origins.size() != world_.ue_positions.size())
            world_.ue_origins = world_.ue_positions;
        bs_shape_ = channel::build_surface(cfg_.bs_nh, cfg_.bs_nv, cfg_.bs_spacing);
        ue_shape_ = channel::build_surface(cfg_.ue_nh, cfg_.ue_nv, cfg_.ue_spacing);
        small_ = channel::small_scale_stats(bs_shape_, ue_shape_, cfg_.channel);
    }

    Eigen::VectorXd Environment::reset()
    {
        world_.ue_positions = world_.ue_origins;
        world_.t = 0;
        world_.last_reward_sum = 0.0;
        world_.has_reward = false;
        return observe_layer1();
    }

    channel::ArrayGeometry Environment::bs_surface(int m) const
    {
        return bs_shape_.translated(world_.bs_positions[static_cast<std::size_t>(m)]);
    }

    // UE surface placed at its minimum-image position relative to BS m
    channel::ArrayGeometry Environment::ue_surface_near(int k, int m) const
    {
        const Vec3 &b = world_.bs_positions[static_cast<std::size_t>(m)];
        const Vec3 &u = world_.ue_positions[static_cast<std::size_t>(k)];
        return ue_shape_.translated(b + torus_delta(b, u, cfg_.area));
    }

    Eigen::MatrixXd Environment::beta_matrix() const
    {
        Eigen::MatrixXd beta(cfg_.num_bs, cfg_.num_ue);
        const double lam = cfg_.channel.wavelength;
        for (int m = 0; m < cfg_.num_bs; ++m)
        {
            const auto bs = bs_surface(m);
            for (int k = 0; k < cfg_.num_ue; ++k)
            {
                const auto ue = ue_surface_near(k, m);
                const double d = (ue.origin - bs.origin).norm();
                if (d > std::max(bs.aperture(), ue.aperture()))
                    beta(m, k) = channel::fresnel_beta(bs, ue, lam);
                else
                    beta(m, k) = channel::lsf_matrix(bs, ue, lam).mean();
            }
        }
        return beta;
    }

    Eigen::VectorXd Environment::observe_layer1() const { return beta_matrix().colwise().sum().transpose(); }

    Eigen::MatrixXd Environment::observe_antennas() const
    {
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(cfg_.num_ue, cfg_.ue_antennas());
        for (int m = 0; m < cfg_.num_bs; ++m)
        {
            const auto bs = bs_surface(m);
            for (int k = 0; k < cfg_.num_ue; ++k)
                out.row(k) += channel::lsf_matrix(bs, ue_surface_near(k, m), cfg_.channel.wavelength).colwise().sum();
        }
        return out;
    }

    se::StatsGrid Environment::stats_grid() const
    {
        se::StatsGrid grid(static_cast<std::size_t>(cfg_.num_bs));
        const double lam = cfg_.channel.wavelength;
        const Eigen::MatrixXd beta = beta_matrix();
        for (int m = 0; m < cfg_.num_bs; ++m)
        {
            const auto bs = bs_surface(m);
            for (int k = 0; k < cfg_.num_ue; ++k)
            {
                channel::ChannelStats st = small_;
                st.lsf = channel::lsf_matrix(bs, ue_surface_near(k, m), lam);
                st.beta = beta(m, k);
                grid[static_cast<std::size_t>(m)].push_back(std::move(st));
            }
        }
        return grid;
    }

    se::SeReport Environment::evaluate(const std::vector<se::PowerAllocation> &powers) const
    {
        if (static_cast<int>(powers.size()) != cfg_.num_ue)
            throw std::invalid_argument("evaluate: need one power allocation per UE");
        const double lam = cfg_.channel.wavelength;
        const Eigen::MatrixXd beta = cfg_.lsf == se::LsfMode::fresnel ? beta_matrix() : Eigen::MatrixXd();
        std::vector<std::vector<Eigen::MatrixXcd>> cov(static_cast<std::size_t>(cfg_.num_bs));
        for (int m = 0; m < cfg_.num_bs; ++m)
        {
            const auto bs = bs_surface(m);
            for (int k = 0; k < cfg_.num_ue; ++k)
            {
                if (cfg_.lsf == se::LsfMode::fresnel)
                {
                    cov[static_cast<std::size_t>(m)].push_back((beta(m, k) * beta(m, k)) * small_.corr);
                    continue;
                }
                const Eigen::MatrixXd b = channel::lsf_matrix(bs, ue_surface_near(k, m), lam);
                const Eigen::Map<const Eigen::VectorXd> bv(b.data(), b.size());
                cov[static_cast<std::size_t>(m)].push_back(bv.cast<cplx>().asDiagonal() * small_.corr *
                                                          bv.cast<cplx>().asDiagonal());
            }
        }
        return se::se_closed_form_mr(cov, powers, cfg_.noise_power, small_.n_r(), small_.n_s());
    }

    void Environment::move(const std::vector<AgentAction> &actions, std::vector<double> &steps_taken)
    {
        steps_taken.assign(actions.size(), 0.0);
        if (cfg_.scenario == Scenario::static_mode)
            return;
        for (std::size_t k = 0; k < actions.size(); ++k)
        {
            double step = actions[k].step;
            // the rule needs a reward sum; before the first reward the step passes unchanged
            if (cfg_.scenario == Scenario::pm_dynamic && world_.has_reward)
                step = predictive_limit(world_.last_reward_sum, step, cfg_.mdp);
            steps_taken[k] = step;
            Vec3 &p = world_.ue_positions[k];
            p = wrap(Vec3(p.x() + step * std::cos(actions[k].angle), p.y() + step * std::sin(actions[k].angle), p.z()),
                     cfg_.area);
        }
    }

    StepResult Environment::step(const std::vector<AgentAction> &actions)
    {
        std::vector<se::PowerAllocation> powers;
        powers.reserve(actions.size());
        const int ns = cfg_.ue_antennas();
        for (const auto &a : actions)
        {
            if (!std::isfinite(a.power))
                throw std::invalid_argument("step: NaN power action");
            const double budget = std::clamp(a.power, 0.0, cfg_.p_max);
            powers.push_back(project_power(Eigen::VectorXd::Constant(ns, std::sqrt(budget / ns)), budget));
        }
        return step(actions, powers);
    }

    StepResult Environment::step(const std::vector<AgentAction> &actions, const std::vector<se::PowerAllocation> &powers)
    {
        if (static_cast<int>(actions.size()) != cfg_.num_ue || static_cast<int>(powers.size()) != cfg_.num_ue)
            throw std::invalid_argument("step: need one action and one allocation per UE");
        for (const auto &a : actions)
            if (!std::isfinite(a.power) || !std::isfinite(a.step) || !std::isfinite(a.angle))
                throw std::invalid_argument("step: NaN action component");
        for (const auto &p : powers)
            if (p.trace() > p.budget * (1.0 + 1e-12) + 1e-15 || p.budget > cfg_.p_max * (1.0 + 1e-12))
                throw std::invalid_argument("step: allocation exceeds its budget");

        StepResult res;
        move(actions, res.steps_taken);
        const se::SeReport rep = evaluate(powers);
        res.rewards = rep.per_ue;
        res.reward_sum = rep.sum;
        res.powers = powers;
        res.observation = observe_layer1();

        world_.last_reward_sum = rep.sum;
        world_.has_reward = true;
        ++world_.t;
        return res;
    }
} // namespace cfxl::env
