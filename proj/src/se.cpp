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

#include "cfxl/se.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

namespace cfxl::se
{
    namespace
    {
        constexpr double kRidge = 1e-12;

        // Running sums for one group of draws, per UE k.
        struct DrawSums
        {
            std::vector<Eigen::MatrixXcd> x;   // sum X_kk
            std::vector<Eigen::MatrixXcd> xpx; // sum sum_l X_kl Pbar_l X_kl^H
            std::vector<Eigen::MatrixXcd> vv;  // sum sum_m V_mk^H V_mk
            long count = 0;

            DrawSums(std::size_t k, Eigen::Index n_s)
                : x(k, Eigen::MatrixXcd::Zero(n_s, n_s)), xpx(k, Eigen::MatrixXcd::Zero(n_s, n_s)),
                  vv(k, Eigen::MatrixXcd::Zero(n_s, n_s))
            {
            }

            void add(const ChannelDraw &g, const std::vector<Eigen::MatrixXcd> &pbar)
            {
                const std::size_t m_count = g.size();
                const std::size_t k_count = pbar.size();
                for (std::size_t k = 0; k < k_count; ++k)
                {
                    for (std::size_t l = 0; l < k_count; ++l)
                    {
                        Eigen::MatrixXcd xkl = g[0][k].adjoint() * g[0][l];
                        for (std::size_t m = 1; m < m_count; ++m)
                            xkl.noalias() += g[m][k].adjoint() * g[m][l];
                        if (l == k)
                            x[k] += xkl;
                        xpx[k].noalias() += xkl * pbar[l] * xkl.adjoint();
                    }
                    for (std::size_t m = 0; m < m_count; ++m)
                        vv[k].noalias() += g[m][k].adjoint() * g[m][k];
                }
                ++count;
            }

            void merge(const DrawSums &other)
            {
                for (std::size_t k = 0; k < x.size(); ++k)
                {
                    x[k] += other.x[k];
                    xpx[k] += other.xpx[k];
                    vv[k] += other.vv[k];
                }
                count += other.count;
            }

            SeReport finish(const std::vector<PowerAllocation> &powers, double noise_power) const
            {
                if (count < 1)
                    throw std::invalid_argument("se: no channel draws");
                const double inv = 1.0 / static_cast<double>(count);
                SeReport rep;
                rep.per_ue.resize(static_cast<Eigen::Index>(x.size()));
                for (std::size_t k = 0; k < x.size(); ++k)
                {
                    const Eigen::MatrixXcd e = (x[k] * inv) * powers[k].p();
                    const Eigen::MatrixXcd psi = xpx[k] * inv - e * e.adjoint() + noise_power * inv * vv[k];
                    rep.per_ue(static_cast<Eigen::Index>(k)) = log_det_se(e, psi);
                }
                rep.sum = rep.per_ue.sum();
                return rep;
            }
        };

        std::vector<Eigen::MatrixXcd> pbars(const std::vector<PowerAllocation> &powers)
        {
            std::vector<Eigen::MatrixXcd> out;
            out.reserve(powers.size());
            for (const auto &p : powers)
                out.push_back(p.pbar());
            return out;
        }

        void check_grid(const StatsGrid &grid, const std::vector<PowerAllocation> &powers)
        {
            if (grid.empty() || grid.front().empty())
                throw std::invalid_argument("se: empty link grid");
            for (const auto &row : grid)
                if (row.size() != powers.size())
                    throw std::invalid_argument("se: link grid and power list disagree on the UE count");
            const Eigen::Index ns = grid.front().front().n_s();
            for (const auto &p : powers)
                if (p.amp.size() != ns)
                    throw std::invalid_argument("se: power allocation length differs from the UE antenna count");
        }

        // Cov index of element (a, j) of an n_r x n_s matrix, column-major.
        inline Eigen::Index idx(Eigen::Index a, Eigen::Index j, Eigen::Index n_r) { return a + n_r * j; }
    } // namespace

    Eigen::MatrixXcd PowerAllocation::p() const { return amp.cast<cplx>().asDiagonal(); }

    Eigen::MatrixXcd PowerAllocation::pbar() const { return amp.cwiseAbs2().cast<cplx>().asDiagonal(); }

    PowerAllocation PowerAllocation::uniform(int n_s, double budget)
    {
        PowerAllocation p;
        p.budget = budget;
        p.amp = Eigen::VectorXd::Constant(n_s, std::sqrt(budget / n_s));
        return p;
    }

    LsfMode lsf_mode_from_string(const std::string &tag)
    {
        if (tag == "per_antenna")
            return LsfMode::per_antenna;
        if (tag == "fresnel")
            return LsfMode::fresnel;
        throw ConfigError("unknown lsf mode '" + tag + "' (expected per_antenna|fresnel)");
    }

    std::string to_string(LsfMode mode) { return mode == LsfMode::fresnel ? "fresnel" : "per_antenna"; }

    ChannelDraw draw_channels(const StatsGrid &grid, LsfMode mode, Rng &rng)
    {
        ChannelDraw g(grid.size());
        for (std::size_t m = 0; m < grid.size(); ++m)
        {
            g[m].reserve(grid[m].size());
            for (const auto &st : grid[m])
            {
                const Eigen::MatrixXcd h = channel::sample_ssf(st, rng);
                g[m].push_back(mode == LsfMode::fresnel ? channel::channel_matrix(st.beta, h)
                                                        : channel::channel_matrix(st.lsf, h));
            }
        }
        return g;
    }

    std::vector<Eigen::VectorXcd> uplink_receive(const ChannelDraw &g, const std::vector<PowerAllocation> &powers,
                                                 const std::vector<Eigen::VectorXcd> &symbols, double noise_power,
                                                 Rng &rng)
    {
        if (powers.empty() || powers.size() != symbols.size())
            throw std::invalid_argument("uplink_receive: need one power allocation and one symbol vector per UE");
        const double noise_amp = std::sqrt(noise_power);
        std::vector<Eigen::VectorXcd> y;
        y.reserve(g.size());
        for (const auto &row : g)
        {
            if (row.size() != powers.size())
                throw std::invalid_argument("uplink_receive: channel row and UE count differ");
            Eigen::VectorXcd ym = Eigen::VectorXcd::Zero(row.front().rows());
            for (std::size_t k = 0; k < row.size(); ++k)
            {
                if (row[k].cols() != powers[k].amp.size() || symbols[k].size() != powers[k].amp.size() ||
                    row[k].rows() != ym.size())
                    throw std::invalid_argument("uplink_receive: dimension mismatch");
                ym.noalias() += row[k] * powers[k].amp.cast<cplx>().cwiseProduct(symbols[k]);
            }
            for (Eigen::Index a = 0; a < ym.size(); ++a)
                ym(a) += noise_amp * complex_normal(rng);
            y.push_back(std::move(ym));
        }
        return y;
    }

    Eigen::VectorXcd cpu_estimate(const std::vector<Eigen::VectorXcd> &local)
    {
        if (local.empty())
            throw std::invalid_argument("cpu_estimate: no local estimates");
        Eigen::VectorXcd acc = local.front();
        for (std::size_t m = 1; m < local.size(); ++m)
            acc += local[m];
        return acc / static_cast<double>(local.size());
    }

    double log_det_se(const Eigen::MatrixXcd &e, const Eigen::MatrixXcd &psi)
    {
        if (e.isZero(0.0))
            return 0.0;

        const Eigen::Index n = psi.rows();
        const Eigen::MatrixXcd herm = 0.5 * (psi + psi.adjoint());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(herm);
        const Eigen::VectorXd lam = eig.eigenvalues();
        const double top = std::max(lam.maxCoeff(), 0.0);
        if (!(top > 0.0))
            throw std::domain_error("log_det_se: interference-plus-noise matrix vanishes while the signal does not");
        if (lam.minCoeff() < -1e-8 * top)
        {
            std::ostringstream os;
            os << "log_det_se: interference-plus-noise matrix is not PSD (min eigenvalue " << lam.minCoeff()
               << ", max " << top << ")";
            throw std::domain_error(os.str());
        }

        // ridge relative to the average eigenvalue keeps the guard scale-free
        const double ridge = kRidge * std::max(herm.trace().real() / static_cast<double>(n), 0.0);
        Eigen::VectorXd inv_sqrt(n);
        for (Eigen::Index i = 0; i < n; ++i)
            inv_sqrt(i) = 1.0 / std::sqrt(std::max(lam(i), 0.0) + ridge);
        const Eigen::MatrixXcd whiten = inv_sqrt.cast<cplx>().asDiagonal() * eig.eigenvectors().adjoint();
        const Eigen::MatrixXcd x = whiten * e;
        Eigen::MatrixXcd inner = Eigen::MatrixXcd::Identity(e.cols(), e.cols()) + x.adjoint() * x;
        inner = 0.5 * (inner + inner.adjoint()).eval();

        Eigen::LLT<Eigen::MatrixXcd> llt(inner);
        if (llt.info() != Eigen::Success)
            throw std::domain_error("log_det_se: Cholesky factorisation failed");
        double logdet = 0.0;
        for (Eigen::Index i = 0; i < inner.rows(); ++i)
            logdet += 2.0 * std::log(llt.matrixL()(i, i).real());
        return std::max(logdet / std::log(2.0), 0.0);
    }

    SeReport se_from_draws(const std::vector<ChannelDraw> &draws, const std::vector<PowerAllocation> &powers,
                           double noise_power)
    {
        if (draws.empty())
            throw std::invalid_argument("se_from_draws: no draws");
        const Eigen::Index ns = draws.front().front().front().cols();
        const auto pb = pbars(powers);
        DrawSums sums(powers.size(), ns);
        for (const auto &g : draws)
            sums.add(g, pb);
        return sums.finish(powers, noise_power);
    }

    SeReport se_monte_carlo(const StatsGrid &grid, const std::vector<PowerAllocation> &powers, double noise_power,
                            std::uint64_t seed, const MonteCarloOptions &opts)
    {
        if (opts.n_draws < 1)
            throw std::invalid_argument("se_monte_carlo: n_draws must be >= 1");
        if (opts.chunk < 1)
            throw std::invalid_argument("se_monte_carlo: chunk must be >= 1");
        check_grid(grid, powers);

        const Eigen::Index ns = grid.front().front().n_s();
        const auto pb = pbars(powers);
        const int n_chunks = (opts.n_draws + opts.chunk - 1) / opts.chunk;

        auto run_chunk = [&](int c) {
            DrawSums s(powers.size(), ns);
            Rng rng(derive_seed(seed, "se.mc", static_cast<std::uint64_t>(c)));
            const int begin = c * opts.chunk;
            const int end = std::min(opts.n_draws, begin + opts.chunk);
            for (int d = begin; d < end; ++d)
                s.add(draw_channels(grid, opts.lsf, rng), pb);
            return s;
        };

        std::vector<DrawSums> parts;
        parts.reserve(static_cast<std::size_t>(n_chunks));
        const int workers = std::max(1, std::min(opts.workers, n_chunks));
        if (workers == 1)
        {
            for (int c = 0; c < n_chunks; ++c)
                parts.push_back(run_chunk(c));
        }
        else
        {
            for (int c0 = 0; c0 < n_chunks; c0 += workers)
            {
                std::vector<std::future<DrawSums>> futs;
                for (int c = c0; c < std::min(n_chunks, c0 + workers); ++c)
                    futs.push_back(std::async(std::launch::async, run_chunk, c));
                for (auto &f : futs)
                    parts.push_back(f.get());
            }
        }

        DrawSums total(powers.size(), ns);
        for (const auto &p : parts)
            total.merge(p);
        return total.finish(powers, noise_power);
    }

    Eigen::MatrixXcd channel_covariance(const channel::ChannelStats &stats, LsfMode mode)
    {
        if (mode == LsfMode::fresnel)
            return (stats.beta * stats.beta) * stats.corr;
        const Eigen::Map<const Eigen::VectorXd> b(stats.lsf.data(), stats.lsf.size());
        if (b.size() != stats.corr.rows())
            throw std::invalid_argument("channel_covariance: LSF and correlation sizes differ");
        return b.cast<cplx>().asDiagonal() * stats.corr * b.cast<cplx>().asDiagonal();
    }

    Eigen::MatrixXcd gram_mean(const Eigen::MatrixXcd &cov, Eigen::Index n_r, Eigen::Index n_s)
    {
        Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(n_s, n_s);
        for (Eigen::Index i = 0; i < n_s; ++i)
            for (Eigen::Index j = 0; j < n_s; ++j)
            {
                cplx acc = 0.0;
                for (Eigen::Index a = 0; a < n_r; ++a)
                    acc += cov(idx(a, j, n_r), idx(a, i, n_r));
                z(i, j) = acc;
            }
        return z;
    }

    Eigen::MatrixXcd fourth_moment(const Eigen::MatrixXcd &cov_k, const Eigen::MatrixXcd &cov_l,
                                   const Eigen::MatrixXcd &pbar, Eigen::Index n_r, Eigen::Index n_s,
                                   bool same_channel)
    {
        // A = E{G_l Pbar G_l^H}
        Eigen::MatrixXcd a_mat = Eigen::MatrixXcd::Zero(n_r, n_r);
        for (Eigen::Index a = 0; a < n_r; ++a)
            for (Eigen::Index b = 0; b < n_r; ++b)
            {
                cplx acc = 0.0;
                for (Eigen::Index j = 0; j < n_s; ++j)
                    for (Eigen::Index jp = 0; jp < n_s; ++jp)
                        if (pbar(j, jp) != cplx(0.0))
                            acc += pbar(j, jp) * cov_l(idx(a, j, n_r), idx(b, jp, n_r));
                a_mat(a, b) = acc;
            }

        // E{G_k^H A G_k}
        Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n_s, n_s);
        for (Eigen::Index i = 0; i < n_s; ++i)
            for (Eigen::Index j = 0; j < n_s; ++j)
            {
                cplx acc = 0.0;
                for (Eigen::Index a = 0; a < n_r; ++a)
                    for (Eigen::Index b = 0; b < n_r; ++b)
                        acc += a_mat(a, b) * cov_k(idx(b, j, n_r), idx(a, i, n_r));
                out(i, j) = acc;
            }

        if (same_channel)
        {
            const Eigen::MatrixXcd z = gram_mean(cov_k, n_r, n_s);
            out += z * pbar * z;
        }
        return out;
    }

    SeReport se_closed_form_mr(const std::vector<std::vector<Eigen::MatrixXcd>> &cov,
                               const std::vector<PowerAllocation> &powers, double noise_power, Eigen::Index n_r,
                               Eigen::Index n_s)
    {
        const std::size_t m_count = cov.size();
        const std::size_t k_count = powers.size();
        if (m_count == 0)
            throw std::invalid_argument("se_closed_form_mr: no BSs");
        for (const auto &row : cov)
            if (row.size() != k_count)
                throw std::invalid_argument("se_closed_form_mr: covariance row and UE count differ");

        const auto pb = pbars(powers);
        std::vector<std::vector<Eigen::MatrixXcd>> z(m_count);
        for (std::size_t m = 0; m < m_count; ++m)
            for (std::size_t k = 0; k < k_count; ++k)
                z[m].push_back(gram_mean(cov[m][k], n_r, n_s));

        SeReport rep;
        rep.per_ue.resize(static_cast<Eigen::Index>(k_count));
        for (std::size_t k = 0; k < k_count; ++k)
        {
            Eigen::MatrixXcd z_sum = Eigen::MatrixXcd::Zero(n_s, n_s);
            for (std::size_t m = 0; m < m_count; ++m)
                z_sum += z[m][k];
            const Eigen::MatrixXcd e = z_sum * powers[k].p();

            Eigen::MatrixXcd psi = noise_power * z_sum - e * e.adjoint();
            for (std::size_t l = 0; l < k_count; ++l)
                for (std::size_t m = 0; m < m_count; ++m)
                {
                    psi += fourth_moment(cov[m][k], cov[m][l], pb[l], n_r, n_s, l == k);
                    // cross-BS terms only survive for l = k, where they factor into Z P Z
                    if (l == k)
                        for (std::size_t mp = 0; mp < m_count; ++mp)
                            if (mp != m)
                                psi += z[m][k] * pb[k] * z[mp][k];
                }
            rep.per_ue(static_cast<Eigen::Index>(k)) = log_det_se(e, psi);
        }
        rep.sum = rep.per_ue.sum();
        return rep;
    }

    SeReport se_closed_form_mr(const StatsGrid &grid, const std::vector<PowerAllocation> &powers,
                               double noise_power, LsfMode mode)
    {
        check_grid(grid, powers);
        std::vector<std::vector<Eigen::MatrixXcd>> cov(grid.size());
        for (std::size_t m = 0; m < grid.size(); ++m)
            for (const auto &st : grid[m])
                cov[m].push_back(channel_covariance(st, mode));
        return se_closed_form_mr(cov, powers, noise_power, grid.front().front().n_r(),
                                 grid.front().front().n_s());
    }

    MomentOracleResult gaussian_moment_oracle(const Eigen::MatrixXcd &cov_k, const Eigen::MatrixXcd &cov_l,
                                              const Eigen::MatrixXcd &pbar, Eigen::Index n_r, Eigen::Index n_s,
                                              bool same_channel, int n_draws, Rng &rng)
    {
        const Eigen::Index n = n_r * n_s;
        if (n > 16)
            throw std::invalid_argument("gaussian_moment_oracle: limited to N_r N_s <= 16");
        if (cov_k.rows() != n || cov_l.rows() != n || pbar.rows() != n_s)
            throw std::invalid_argument("gaussian_moment_oracle: dimension mismatch");
        if (n_draws < 1)
            throw std::invalid_argument("gaussian_moment_oracle: n_draws must be >= 1");

        MomentOracleResult res;

        // E{conj(G_ai) G'_ap Pbar_pq conj(G'_bq) G_bj}, paired term by term
        res.isserlis = Eigen::MatrixXcd::Zero(n_s, n_s);
        for (Eigen::Index i = 0; i < n_s; ++i)
            for (Eigen::Index j = 0; j < n_s; ++j)
            {
                cplx acc = 0.0;
                for (Eigen::Index a = 0; a < n_r; ++a)
                    for (Eigen::Index b = 0; b < n_r; ++b)
                        for (Eigen::Index p = 0; p < n_s; ++p)
                            for (Eigen::Index q = 0; q < n_s; ++q)
                            {
                                const cplx w = pbar(p, q);
                                const cplx ai_bj = cov_k(idx(b, j, n_r), idx(a, i, n_r));
                                const cplx ap_bq = cov_l(idx(a, p, n_r), idx(b, q, n_r));
                                cplx term = ai_bj * ap_bq;
                                if (same_channel)
                                    term += cov_k(idx(a, p, n_r), idx(a, i, n_r)) * cov_k(idx(b, j, n_r), idx(b, q, n_r));
                                acc += w * term;
                            }
                res.isserlis(i, j) = acc;
            }

        auto sqrt_psd = [](const Eigen::MatrixXcd &c) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(0.5 * (c + c.adjoint()));
            const Eigen::VectorXd s = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
            return Eigen::MatrixXcd(eig.eigenvectors() * s.cast<cplx>().asDiagonal());
        };
        const Eigen::MatrixXcd lk = sqrt_psd(cov_k);
        const Eigen::MatrixXcd ll = same_channel ? lk : sqrt_psd(cov_l);

        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n_s, n_s);
        Eigen::VectorXcd w(n);
        for (int d = 0; d < n_draws; ++d)
        {
            for (Eigen::Index t = 0; t < n; ++t)
                w(t) = complex_normal(rng);
            const Eigen::VectorXcd gk = lk * w;
            Eigen::VectorXcd gl = gk;
            if (!same_channel)
            {
                for (Eigen::Index t = 0; t < n; ++t)
                    w(t) = complex_normal(rng);
                gl = ll * w;
            }
            const Eigen::Map<const Eigen::MatrixXcd> gkm(gk.data(), n_r, n_s);
            const Eigen::Map<const Eigen::MatrixXcd> glm(gl.data(), n_r, n_s);
            const Eigen::MatrixXcd x = gkm.adjoint() * glm;
            acc.noalias() += x * pbar * x.adjoint();
        }
        res.simulated = acc / static_cast<double>(n_draws);
        return res;
    }
} // namespace cfxl::se
