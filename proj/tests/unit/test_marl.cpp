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

#include <doctest.h>

#include <cmath>

using namespace cfxl;
using namespace cfxl::marl;

namespace
{
    LearnerConfig small_config(Variant v)
    {
        LearnerConfig c;
        c.apply_variant(v);
        c.num_agents = 2;
        c.obs_dim = 1;
        c.act_dim = 1;
        c.hidden = {8, 6};
        c.buffer_capacity = 32;
        c.pool_size = 8;
        c.batch_global = 4;
        c.batch_local = 4;
        c.noise_decay_steps = 100;
        return c;
    }

    Transition random_transition(Rng &rng)
    {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Transition t;
        t.obs = Eigen::MatrixXd(1, 2);
        t.act = Eigen::MatrixXd(1, 2);
        t.next_obs = Eigen::MatrixXd(1, 2);
        t.rewards = Eigen::VectorXd(2);
        for (int k = 0; k < 2; ++k)
        {
            t.obs(0, k) = u(rng);
            t.act(0, k) = u(rng);
            t.next_obs(0, k) = u(rng);
            t.rewards(k) = u(rng);
        }
        return t;
    }

    std::vector<const Experience *> batch_of(ReplayBuffer &b, std::size_t n)
    {
        std::vector<const Experience *> out;
        for (std::size_t i = 0; i < n && i < b.size(); ++i)
            out.push_back(&b[i]);
        return out;
    }
} // namespace

TEST_CASE("mlp forward: hand cases")
{
    Mlp zero({3, 4, 2});
    zero.params().setZero();
    CHECK(zero.forward(Eigen::MatrixXd::Ones(3, 5)).norm() == 0.0);

    Mlp chain({1, 1, 1, 1});
    chain.params() << 1, 0, 1, 0, 1, 0;
    CHECK(chain.forward(Eigen::MatrixXd::Ones(1, 1))(0, 0) == 1.0);
    // negative pre-activation leaks through the hidden layers with slope 0.01
    CHECK(chain.forward(Eigen::MatrixXd::Constant(1, 1, -2.0))(0, 0) == doctest::Approx(-2.0 * 0.01 * 0.01));
}

TEST_CASE("mlp backward: zero upstream, linearity, finite differences")
{
    Rng rng(3);
    Mlp net({3, 16, 8, 2});
    net.init(rng, 0.5);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 4);
    Mlp::Tape tape;
    net.forward(x, tape);

    Eigen::VectorXd g0 = Eigen::VectorXd::Zero(net.num_params());
    net.backward(tape, Eigen::MatrixXd::Zero(2, 4), g0);
    CHECK(g0.norm() == 0.0);

    const Eigen::MatrixXd up = Eigen::MatrixXd::Random(2, 4);
    Eigen::VectorXd g1 = Eigen::VectorXd::Zero(net.num_params()), g2 = g1;
    net.backward(tape, up, g1);
    net.backward(tape, 2.0 * up, g2);
    CHECK((g2 - 2.0 * g1).norm() <= 1e-12 * g1.norm());

    // L = sum(up .* f(x))
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < net.num_params(); i += 7)
    {
        const double keep = net.params()(i);
        net.params()(i) = keep + h;
        const double lp = up.cwiseProduct(net.forward(x)).sum();
        net.params()(i) = keep - h;
        const double lm = up.cwiseProduct(net.forward(x)).sum();
        net.params()(i) = keep;
        const double fd = (lp - lm) / (2 * h);
        CHECK(std::abs(fd - g1(i)) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
}

TEST_CASE("clip_global_norm")
{
    Eigen::VectorXd g(2);
    g << 3, 4;
    CHECK(clip_global_norm(g, 0.5) == doctest::Approx(5.0));
    CHECK(g.norm() == doctest::Approx(0.5));
    Eigen::VectorXd small(2);
    small << 0.1, 0.1;
    const Eigen::VectorXd keep = small;
    clip_global_norm(small, 0.5);
    CHECK(small == keep);
}

TEST_CASE("priority_simple")
{
    CHECK(priority_simple(Eigen::VectorXd::Constant(4, 2.5)).isApprox(Eigen::VectorXd::Constant(4, 0.25)));
    Eigen::VectorXd l(3);
    l << 2, 3, 5;
    Eigen::VectorXd e(3);
    e << 0.2, 0.3, 0.5;
    CHECK(priority_simple(l).isApprox(e));
    CHECK(priority_simple(l).sum() == doctest::Approx(1.0));
}

TEST_CASE("priority_ranked: hand example, symmetry, normalisation")
{
    Eigen::VectorXd loss(2), n(2);
    loss << 1, 9;
    n << 5, 0;
    const Eigen::VectorXd pr = priority_ranked(loss, n, 1.0, 0.0);
    CHECK(pr(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(pr(1) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

    const Eigen::VectorXd flat = priority_ranked(Eigen::VectorXd::Constant(5, 1.0), Eigen::VectorXd::Constant(5, 2.0), 3.0, 1e-3);
    for (Eigen::Index i = 0; i < 5; ++i)
        CHECK(flat(i) == doctest::Approx(0.2 + 1e-3));

    Rng rng(1);
    std::uniform_real_distribution<double> u(0.0, 4.0);
    for (int trial = 0; trial < 50; ++trial)
    {
        Eigen::VectorXd a(17), c(17);
        for (Eigen::Index i = 0; i < 17; ++i)
        {
            a(i) = u(rng);
            c(i) = std::floor(u(rng));
        }
        CHECK(priority_ranked(a, c, 2.0, 1e-4).sum() == doctest::Approx(1.0 + 17 * 1e-4).epsilon(1e-12));
    }

    Eigen::VectorXd ties(4);
    ties << 3, 1, 3, 2;
    Eigen::VectorXd expect(4);
    expect << 3.5, 1, 3.5, 2;
    CHECK(rank_ascending(ties) == expect);
}

TEST_CASE("fill_extraction_pool: coverage, dominance, counters")
{
    ReplayBuffer buf(16);
    for (int i = 0; i < 5; ++i)
    {
        Experience e;
        e.pr = 0.2;
        buf.push(e);
    }
    Rng rng(2);
    auto pool = fill_extraction_pool(buf, 8, rng);
    std::sort(pool.begin(), pool.end());
    CHECK(pool == std::vector<std::size_t>{0, 1, 2, 3, 4});
    for (std::size_t i = 0; i < buf.size(); ++i)
        CHECK(buf[i].n == 1);

    for (std::size_t i = 0; i < buf.size(); ++i)
        buf[i].pr = i == 3 ? 1.0 : 1e-9;
    int hits = 0;
    for (int t = 0; t < 10000; ++t)
        hits += fill_extraction_pool(buf, 1, rng)[0] == 3;
    CHECK(hits >= 9900);
}

TEST_CASE("bellman_loss: hand values")
{
    Eigen::VectorXd q(1), r(1), qn(1);
    q << 1.0;
    r << 0.5;
    qn << 1.0;
    const auto b = bellman_loss(q, r, qn, 0.99);
    CHECK(b.target(0) == doctest::Approx(1.49));
    CHECK(b.loss == doctest::Approx(0.2401));

    const auto exact = bellman_loss(b.target, r, qn, 0.99);
    CHECK(exact.loss == 0.0);
    CHECK(exact.grad_q.norm() == 0.0);

    Eigen::VectorXd q3(3), r3(3), n3(3);
    q3 << 1, 2, 3;
    r3 << 0, 1, 5;
    n3 << 7, 8, 9;
    const auto g0 = bellman_loss(q3, r3, n3, 0.0);
    CHECK(g0.target == r3);
    CHECK(g0.loss == doctest::Approx((1.0 + 1.0 + 4.0) / 3.0));
}

TEST_CASE("soft_update: both directions")
{
    Eigen::VectorXd cur = Eigen::VectorXd::Ones(3), tgt = Eigen::VectorXd::Zero(3);
    soft_update(cur, tgt, 0.01, SoftDirection::reversed);
    CHECK(tgt(0) == doctest::Approx(0.99));
    tgt.setZero();
    soft_update(cur, tgt, 0.01, SoftDirection::standard);
    CHECK(tgt(0) == doctest::Approx(0.01));
    Eigen::VectorXd fixed = Eigen::VectorXd::Constant(3, -4.0);
    soft_update(cur, fixed, 1.0, SoftDirection::reversed);
    CHECK(fixed == Eigen::VectorXd::Constant(3, -4.0));
}

TEST_CASE("actor_gradient: decomposition, constant critic, finite differences")
{
    Rng data(9);
    Learner l(small_config(Variant::mimo_maddpg), 5, "t");
    for (int i = 0; i < 12; ++i)
        l.observe(random_transition(data));
    const auto batch = batch_of(l.global_buffer(), 6);

    for (int agent = 0; agent < 2; ++agent)
    {
        const ActorGradient g = l.actor_gradient(batch, agent);
        CHECK((g.total - (g.global_term + l.config().ddpg_weight * g.local_term)).cwiseAbs().maxCoeff() <= 1e-12);

        const Eigen::VectorXd dir = Eigen::VectorXd::Random(g.total.size());
        for (double eps : {1e-3, 1e-4})
        {
            Eigen::VectorXd &p = l.actor(agent).params();
            const Eigen::VectorXd keep = p;
            const double j0 = l.actor_objective(batch, agent);
            p += eps * dir;
            const double j1 = l.actor_objective(batch, agent);
            p = keep;
            const double lin = g.total.dot(dir) * eps;
            CHECK(std::abs(j1 - j0 - lin) <= 50.0 * eps * eps * std::max(1.0, dir.squaredNorm()));
        }
    }

    // a critic that ignores its input has zero input gradient
    LearnerConfig flat_cfg = small_config(Variant::maddpg);
    Learner flat(flat_cfg, 5, "t");
    for (int i = 0; i < 12; ++i)
        flat.observe(random_transition(data));
    const std::size_t first_w = static_cast<std::size_t>(flat.global_critic().sizes()[1]) * flat.global_critic().sizes()[0];
    flat.global_critic().params().head(static_cast<Eigen::Index>(first_w)).setZero();
    const auto fb = batch_of(flat.global_buffer(), 6);
    CHECK(flat.actor_gradient(fb, 0).total.norm() == 0.0);
}

TEST_CASE("train_episode: zero learning rate, determinism")
{
    LearnerConfig c;
    c.apply_variant(Variant::mimo_maddpg);
    c.lr_actor = c.lr_critic = 0.0;
    c.pool_size = 8;
    c.buffer_capacity = 16;
    c.batch_global = c.batch_local = 4;
    c.hidden = {8, 8};
    ConcaveBandit env;
    Learner l(c, 1, "b");
    std::vector<Eigen::VectorXd> before;
    for (auto &[name, net] : l.named_networks())
        before.push_back(net->params());
    train_episode(env, l, 40);
    std::size_t i = 0;
    for (auto &[name, net] : l.named_networks())
        CHECK(net->params() == before[i++]);

    c.lr_actor = c.lr_critic = 0.01;
    Learner a(c, 7, "b"), b(c, 7, "b");
    const auto ma = train_episode(env, a, 40);
    const auto mb = train_episode(env, b, 40);
    for (std::size_t t = 0; t < ma.rewards.size(); ++t)
        CHECK(ma.rewards[t] == mb.rewards[t]);
    CHECK(a.actor(0).params() == b.actor(0).params());
}

TEST_CASE("ConcaveBandit optimum")
{
    ConcaveBandit b;
    double best = 0.0, arg = 0.0;
    for (int i = 0; i <= 100000; ++i)
    {
        const double p = i / 100000.0;
        if (b.reward(p) > best)
        {
            best = b.reward(p);
            arg = p;
        }
    }
    CHECK(b.optimum_power() == doctest::Approx(arg).epsilon(1e-4));
}
