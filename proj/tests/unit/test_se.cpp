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
#include "cfxl/se.hpp"

#include <doctest.h>

#include <cmath>

using namespace cfxl;
using namespace cfxl::se;

namespace
{
    env::Environment desk_env(std::uint64_t seed)
    {
        env::EnvConfig cfg;
        Rng rng = make_rng(seed, "placement");
        return env::Environment(cfg, env::place(cfg, rng));
    }

    std::vector<PowerAllocation> full_power(int k, int n_s, double p)
    {
        return std::vector<PowerAllocation>(static_cast<std::size_t>(k), PowerAllocation::uniform(n_s, p));
    }
} // namespace

TEST_CASE("PowerAllocation: trace and diagonal")
{
    const auto p = PowerAllocation::uniform(4, 0.2);
    CHECK(p.trace() == doctest::Approx(0.2));
    const Eigen::MatrixXcd pp = p.p();
    CHECK(pp.isDiagonal());
    for (Eigen::Index i = 0; i < 4; ++i)
        CHECK(pp(i, i).real() >= 0.0);
    CHECK((p.p() * p.p().adjoint()).trace().real() <= 0.2 + 1e-12);
}

TEST_CASE("uplink_receive: pass-through and noise covariance")
{
    Rng rng(11);
    ChannelDraw g(1, std::vector<Eigen::MatrixXcd>(1, complex_normal_matrix(3, 2, rng)));
    std::vector<Eigen::VectorXcd> x{complex_normal_matrix(2, 1, rng).col(0)};

    PowerAllocation zero;
    zero.amp = Eigen::VectorXd::Zero(2);
    CHECK(uplink_receive(g, {zero}, x, 0.0, rng)[0].norm() == 0.0);

    PowerAllocation id;
    id.amp = Eigen::VectorXd::Ones(2);
    id.budget = 2.0;
    CHECK(uplink_receive(g, {id}, x, 0.0, rng)[0].isApprox(g[0][0] * x[0], 1e-14));

    const int n = 100000;
    const double sigma2 = 0.5;
    Eigen::MatrixXcd cov = Eigen::MatrixXcd::Zero(3, 3);
    for (int i = 0; i < n; ++i)
    {
        const Eigen::VectorXcd y = uplink_receive(g, {zero}, x, sigma2, rng)[0];
        cov += y * y.adjoint();
    }
    cov /= n;
    const Eigen::MatrixXcd expect = sigma2 * Eigen::MatrixXcd::Identity(3, 3);
    CHECK((cov - expect).norm() / expect.norm() <= 0.05);
}

TEST_CASE("mr_combiner and cpu_estimate")
{
    Rng rng(2);
    const Eigen::MatrixXcd g = complex_normal_matrix(4, 2, rng);
    CHECK(mr_combiner(g) == g);
    CHECK(mr_combiner(Eigen::MatrixXcd::Zero(4, 2)).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(mr_combiner(g).adjoint() * g);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);

    const Eigen::VectorXcd a = complex_normal_matrix(2, 1, rng).col(0);
    const Eigen::VectorXcd b = complex_normal_matrix(2, 1, rng).col(0);
    CHECK(cpu_estimate({a}) == a);
    CHECK(cpu_estimate({a, a, a}).isApprox(a, 1e-15));
    const cplx s(0.3, -1.2);
    CHECK(cpu_estimate({(s * a).eval(), (s * b).eval()}).isApprox(s * cpu_estimate({a, b}), 1e-14));
}

TEST_CASE("se_monte_carlo: zero power and symmetric UEs")
{
    auto e = desk_env(3);
    StatsGrid grid = e.stats_grid();
    const double noise = e.config().noise_power;
    MonteCarloOptions mc;
    mc.n_draws = 512;
    const SeReport zero = se_monte_carlo(grid, full_power(2, 2, 0.0), noise, 1, mc);
    CHECK(zero.per_ue.cwiseAbs().maxCoeff() == 0.0);

    for (auto &row : grid)
        row[1] = row[0];
    const int reps = 12;
    Eigen::VectorXd diff(reps);
    for (int r = 0; r < reps; ++r)
    {
        const SeReport s = se_monte_carlo(grid, full_power(2, 2, 0.2), noise, 100 + r, mc);
        diff(r) = s.per_ue(0) - s.per_ue(1);
    }
    const double mean = diff.mean();
    const double sd = std::sqrt((diff.array() - mean).square().sum() / (reps - 1));
    CHECK(std::abs(mean) <= 3.0 * sd / std::sqrt(double(reps)) + 1e-15);
}

TEST_CASE("se_monte_carlo: independent worker count does not change the result")
{
    auto e = desk_env(4);
    const StatsGrid grid = e.stats_grid();
    MonteCarloOptions one, three;
    one.n_draws = three.n_draws = 1000;
    three.workers = 3;
    const auto a = se_monte_carlo(grid, full_power(2, 2, 0.2), e.config().noise_power, 9, one);
    const auto b = se_monte_carlo(grid, full_power(2, 2, 0.2), e.config().noise_power, 9, three);
    CHECK(a.per_ue == b.per_ue);
}

TEST_CASE("se_from_draws: scalar straight-line reimplementation")
{
    // M = 1, K = 1, N_r = 2, N_s = 1: every matrix in the SE expression is a scalar
    env::EnvConfig cfg;
    cfg.num_bs = 1;
    cfg.num_ue = 1;
    cfg.bs_nh = 2;
    cfg.bs_nv = 1;
    cfg.ue_nh = 1;
    cfg.ue_nv = 1;
    env::WorldState w;
    w.bs_positions = {Vec3(0, 0, 10)};
    w.ue_positions = {Vec3(20, 5, 1.5)};
    env::Environment e(cfg, w);
    const StatsGrid grid = e.stats_grid();
    Rng rng(5);
    std::vector<ChannelDraw> draws;
    for (int i = 0; i < 2000; ++i)
        draws.push_back(draw_channels(grid, LsfMode::per_antenna, rng));

    const double p = 0.2, noise = cfg.noise_power;
    double m1 = 0.0, m2 = 0.0;
    for (const auto &d : draws)
    {
        const double a = d[0][0].squaredNorm(); // G^H G
        m1 += a;
        m2 += a * a;
    }
    m1 /= draws.size();
    m2 /= draws.size();
    const double amp = std::sqrt(p);
    const double e_k = m1 * amp;
    const double psi = m2 * p - e_k * e_k + noise * m1;
    const double expect = std::log2(1.0 + e_k * e_k / psi);

    const SeReport got = se_from_draws(draws, {PowerAllocation::uniform(1, p)}, noise);
    CHECK(std::abs(got.per_ue(0) - expect) <= 1e-12 * std::max(1.0, expect));
}

TEST_CASE("se_closed_form_mr: zero power, noise monotonicity, agreement with Monte-Carlo")
{
    auto e = desk_env(6);
    const StatsGrid grid = e.stats_grid();
    const double noise = e.config().noise_power;
    CHECK(se_closed_form_mr(grid, full_power(2, 2, 0.0), noise).sum == 0.0);

    const SeReport base = se_closed_form_mr(grid, full_power(2, 2, 0.2), noise);
    const SeReport loud = se_closed_form_mr(grid, full_power(2, 2, 0.2), 10 * noise);
    CHECK((loud.per_ue.array() < base.per_ue.array()).all());

    MonteCarloOptions mc;
    mc.n_draws = 4000;
    const SeReport sim = se_monte_carlo(grid, full_power(2, 2, 0.2), noise, 17, mc);
    CHECK(std::abs(base.sum - sim.sum) / sim.sum < 0.05);
}

TEST_CASE("log_det_se: rejects an indefinite interference matrix")
{
    Eigen::MatrixXcd psi = Eigen::MatrixXcd::Identity(2, 2);
    psi(1, 1) = -1.0;
    CHECK_THROWS(log_det_se(Eigen::MatrixXcd::Identity(2, 2), psi));
    CHECK(log_det_se(Eigen::MatrixXcd::Identity(2, 2), Eigen::MatrixXcd::Identity(2, 2)) ==
          doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("gaussian_moment_oracle: zero weight and the scalar fourth moment")
{
    Rng rng(8);
    const Eigen::MatrixXcd one = Eigen::MatrixXcd::Ones(1, 1);
    const auto zero = gaussian_moment_oracle(one, one, Eigen::MatrixXcd::Zero(1, 1), 1, 1, true, 1000, rng);
    CHECK(zero.isserlis.norm() == 0.0);
    const auto scalar = gaussian_moment_oracle(one, one, one, 1, 1, true, 200000, rng);
    CHECK(scalar.isserlis(0, 0).real() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(scalar.simulated(0, 0) - 2.0) < 0.03);
    // closed form used by the SE expression agrees with the quadruple loop
    CHECK((fourth_moment(one, one, one, 1, 1, true) - scalar.isserlis).norm() < 1e-12);
}
