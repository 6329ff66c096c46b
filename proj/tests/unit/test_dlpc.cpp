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

#include <doctest.h>

#include <cmath>

using namespace cfxl;
using namespace cfxl::dlpc;

namespace
{
    marl::LearnerConfig quick_base()
    {
        marl::LearnerConfig b;
        b.apply_variant(marl::Variant::mimo_maddpg);
        b.hidden = {16, 16};
        b.buffer_capacity = 64;
        b.pool_size = 16;
        b.batch_global = b.batch_local = 8;
        b.noise_decay_steps = 200;
        return b;
    }
} // namespace

TEST_CASE("broadcast_budget and split_reward")
{
    Eigen::VectorXd p(1);
    p << 2;
    CHECK(broadcast_budget(p, 3) == Eigen::VectorXd::Constant(3, 2.0));
    Eigen::VectorXd p2(2), e2(4);
    p2 << 1, 4;
    e2 << 1, 1, 4, 4;
    CHECK(broadcast_budget(p2, 2) == e2);

    Eigen::VectorXd r(1);
    r << 4;
    CHECK(split_reward(r, 4) == Eigen::VectorXd::Ones(4));
    Eigen::VectorXd r2(2), e6(6);
    r2 << 3, 6;
    e6 << 1, 1, 1, 2, 2, 2;
    CHECK(split_reward(r2, 3) == e6);

    Rng rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 100; ++t)
    {
        Eigen::VectorXd rr(3);
        for (auto &x : rr)
            x = u(rng);
        const Eigen::VectorXd s = split_reward(rr, 4);
        for (int k = 0; k < 3; ++k)
            CHECK(s.segment(4 * k, 4).sum() == doctest::Approx(rr(k)).epsilon(1e-15));
    }
}

TEST_CASE("layer2_allocate: single antenna, symmetry, budget")
{
    Eigen::VectorXd b(2);
    b << 0.1, 0.04;
    Eigen::VectorXd u(2);
    u << 0.3, 0.9;
    const auto single = layer2_allocate(u, b, 1);
    CHECK(single[0].amp(0) == doctest::Approx(std::sqrt(0.1)));
    CHECK(single[1].amp(0) == doctest::Approx(0.2));

    const auto eq = layer2_allocate(Eigen::VectorXd::Constant(4, 0.37), b, 2);
    CHECK(eq[0].amp(0) == eq[0].amp(1));
    CHECK(eq[1].amp(0) == eq[1].amp(1));

    Rng rng(2);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    for (int t = 0; t < 1000; ++t)
    {
        Eigen::VectorXd uu(6), bb(2);
        for (auto &x : uu)
            x = d(rng);
        bb << 0.2 * d(rng), 0.2 * d(rng);
        for (const auto &p : layer2_allocate(uu, bb, 3))
            CHECK(p.trace() <= p.budget + 1e-12);
    }
}

TEST_CASE("lsf_feature")
{
    CHECK(lsf_feature(1e-5) == doctest::Approx(0.0));
    CHECK(lsf_feature(1.0) == doctest::Approx(5.0));
    CHECK_THROWS(lsf_feature(0.0));
}

TEST_CASE("double layer: learners are disjoint and both update")
{
    env::EnvConfig ec;
    Rng pr = make_rng(1, "placement");
    env::Environment e(ec, env::place(ec, pr));
    PowerControlSystem sys(e, make_system_config(ec, Architecture::double_layer, quick_base(), false), 1);
    REQUIRE(sys.layer2() != nullptr);
    auto n1 = sys.layer1().named_networks();
    auto n2 = sys.layer2()->named_networks();
    for (auto &[a, pa] : n1)
        for (auto &[b, pb] : n2)
            CHECK(pa->params().data() != pb->params().data());

    const Eigen::VectorXd a1 = sys.layer1().actor(0).params();
    const Eigen::VectorXd a2 = sys.layer2()->actor(0).params();
    bool up1 = false, up2 = false;
    for (int t = 0; t < 40; ++t)
    {
        const StepLog log = sys.step(true, true);
        up1 |= log.layer1.update.updated;
        up2 |= log.layer2->update.updated;
        for (std::size_t k = 0; k < log.env.powers.size(); ++k)
            CHECK(log.env.powers[k].trace() <= log.budgets(static_cast<Eigen::Index>(k)) * (1 + 1e-12));
        for (Eigen::Index k = 0; k < log.layer1.rewards.size(); ++k)
            CHECK(log.layer2->rewards.segment(2 * k, 2).sum() == doctest::Approx(log.layer1.rewards(k)).epsilon(1e-15));
    }
    CHECK(up1);
    CHECK(up2);
    CHECK(sys.layer1().actor(0).params() != a1);
    CHECK(sys.layer2()->actor(0).params() != a2);
}

TEST_CASE("weight sharing maps antennas of one UE to one network")
{
    env::EnvConfig ec;
    const auto sc = make_system_config(ec, Architecture::double_layer, quick_base(), true);
    CHECK(sc.layer2.num_slots() == ec.num_ue);
    CHECK(sc.layer2.slot_of(0) == sc.layer2.slot_of(1));
    CHECK(sc.layer2.slot_of(1) != sc.layer2.slot_of(2));
}
