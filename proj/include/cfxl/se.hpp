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

#ifndef CFXL_SE_HPP
#define CFXL_SE_HPP

#include "cfxl/channel.hpp"

#include <vector>

// Uplink spectral efficiency with CPU-side averaging of the local MR estimates.
//
// For UE k with combiners V_mk:
//
//      SE_k = log2 | I + E_k^H Psi_k^-1 E_k |
//      E_k   = sum_m E{V_mk^H G_mk} P_k
//      Psi_k = sum_l sum_m sum_m' E{V_mk^H G_ml Pbar_l G_m'l^H V_m'k} - E_k E_k^H + sigma^2 sum_m E{V_mk^H V_mk}
//
// The Monte-Carlo evaluator estimates the expectations from channel draws. The closed form
// (V = G) uses Z_mk = E{G_mk^H G_mk} and the fourth moments of the Gaussian channel.

namespace cfxl::se
{
    // Real non-negative per-antenna amplitudes; P = diag(amp), Pbar = diag(amp^2).
    struct PowerAllocation
    {
        Eigen::VectorXd amp;
        double budget = 0.0; // watts

        Eigen::MatrixXcd p() const;
        Eigen::MatrixXcd pbar() const;
        double trace() const { return amp.squaredNorm(); }

        static PowerAllocation uniform(int n_s, double budget); // every antenna at budget / n_s
    };

    struct SeReport
    {
        Eigen::VectorXd per_ue;
        double sum = 0.0;
    };

    // How the large-scale fading enters G.
    enum class LsfMode
    {
        per_antenna, // G = B .* H
        fresnel      // G = beta H
    };

    LsfMode lsf_mode_from_string(const std::string &tag);
    std::string to_string(LsfMode mode);

    // grid[m][k]: statistics of the link between BS m and UE k
    using StatsGrid = std::vector<std::vector<channel::ChannelStats>>;
    // draws[m][k]: one channel realisation G_mk
    using ChannelDraw = std::vector<std::vector<Eigen::MatrixXcd>>;

    ChannelDraw draw_channels(const StatsGrid &grid, LsfMode mode, Rng &rng);

    // y_m = sum_k G_mk P_k x_k + n_m for every BS m.
    std::vector<Eigen::VectorXcd> uplink_receive(const ChannelDraw &g, const std::vector<PowerAllocation> &powers,
                                                 const std::vector<Eigen::VectorXcd> &symbols, double noise_power,
                                                 Rng &rng);

    inline const Eigen::MatrixXcd &mr_combiner(const Eigen::MatrixXcd &g) { return g; }

    // Average of the per-BS local estimates.
    Eigen::VectorXcd cpu_estimate(const std::vector<Eigen::VectorXcd> &local);

    // log2 |I + E^H Psi^-1 E| with a relative ridge on Psi. Throws when Psi is not PSD.
    double log_det_se(const Eigen::MatrixXcd &e, const Eigen::MatrixXcd &psi);

    // SE from an explicit list of draws (MR combining).
    SeReport se_from_draws(const std::vector<ChannelDraw> &draws, const std::vector<PowerAllocation> &powers,
                           double noise_power);

    struct MonteCarloOptions
    {
        int n_draws = 10000;
        int chunk = 256;   // draws per derived-seed chunk
        int workers = 1;
        LsfMode lsf = LsfMode::per_antenna;
    };

    // Draws are split into chunks of opts.chunk with seeds derive_seed(seed, "se.mc", chunk_index);
    // the result does not depend on opts.workers.
    SeReport se_monte_carlo(const StatsGrid &grid, const std::vector<PowerAllocation> &powers, double noise_power,
                            std::uint64_t seed, const MonteCarloOptions &opts = {});

    // Covariance of vec(G) for one link: D_b R D_b.
    Eigen::MatrixXcd channel_covariance(const channel::ChannelStats &stats, LsfMode mode);

    // Z = E{G^H G} from the covariance of vec(G).
    Eigen::MatrixXcd gram_mean(const Eigen::MatrixXcd &cov, Eigen::Index n_r, Eigen::Index n_s);

    // E{G_k^H G_l Pbar G_l^H G_k}. With same_channel the two matrices are one draw (l = k).
    Eigen::MatrixXcd fourth_moment(const Eigen::MatrixXcd &cov_k, const Eigen::MatrixXcd &cov_l,
                                   const Eigen::MatrixXcd &pbar, Eigen::Index n_r, Eigen::Index n_s,
                                   bool same_channel);

    SeReport se_closed_form_mr(const StatsGrid &grid, const std::vector<PowerAllocation> &powers,
                               double noise_power, LsfMode mode = LsfMode::per_antenna);

    // Same as above with covariances already formed: cov[m][k].
    SeReport se_closed_form_mr(const std::vector<std::vector<Eigen::MatrixXcd>> &cov,
                               const std::vector<PowerAllocation> &powers, double noise_power, Eigen::Index n_r,
                               Eigen::Index n_s);

    // Verification oracle for the fourth-moment term: index-quadruple expansion and simulation.
    struct MomentOracleResult
    {
        Eigen::MatrixXcd isserlis;
        Eigen::MatrixXcd simulated;
    };

    MomentOracleResult gaussian_moment_oracle(const Eigen::MatrixXcd &cov_k, const Eigen::MatrixXcd &cov_l,
                                              const Eigen::MatrixXcd &pbar, Eigen::Index n_r, Eigen::Index n_s,
                                              bool same_channel, int n_draws, Rng &rng);
} // namespace cfxl::se

#endif
