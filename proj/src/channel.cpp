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

#include "cfxl/channel.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace cfxl::channel
{
    namespace
    {
        constexpr double kEllipseTol = 1e-12;

        Eigen::MatrixXcd kron(const Eigen::MatrixXcd &a, const Eigen::MatrixXcd &b)
        {
            Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
            for (Eigen::Index i = 0; i < a.rows(); ++i)
                for (Eigen::Index j = 0; j < a.cols(); ++j)
                    out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
            return out;
        }

        void warn_spacing(const ArrayGeometry &g, double wavelength, const char *which)
        {
            if (g.size() > 1 && g.spacing >= 0.5 * wavelength)
                std::clog << "cfxl: warning: " << which << " antenna spacing " << g.spacing
                          << " m is not below half a wavelength (" << 0.5 * wavelength << " m)\n";
        }
    } // namespace

    double ArrayGeometry::aperture() const { return std::max(length_x(), length_y()); }

    ArrayGeometry ArrayGeometry::translated(const Vec3 &new_origin) const
    {
        ArrayGeometry out = *this;
        const Vec3 shift = new_origin - origin;
        for (auto &p : out.positions)
            p += shift;
        out.origin = new_origin;
        return out;
    }

    ArrayGeometry build_surface(int n_h, int n_v, double spacing, const Vec3 &origin)
    {
        if (n_h < 1 || n_v < 1)
            throw std::invalid_argument("build_surface: antenna counts must be >= 1");
        if (!(spacing > 0.0))
            throw std::invalid_argument("build_surface: spacing must be positive");

        ArrayGeometry g;
        g.n_h = n_h;
        g.n_v = n_v;
        g.spacing = spacing;
        g.origin = origin;
        g.positions.reserve(static_cast<std::size_t>(n_h * n_v));

        const double cx = 0.5 * (n_h - 1);
        const double cy = 0.5 * (n_v - 1);
        for (int row = 0; row < n_v; ++row)
            for (int col = 0; col < n_h; ++col)
                g.positions.push_back(origin + Vec3((col - cx) * spacing, (row - cy) * spacing, 0.0));
        return g;
    }

    WavenumberLattice wavenumber_lattice(double length_x, double length_y, double wavelength)
    {
        if (!(length_x > 0.0) || !(length_y > 0.0) || !(wavelength > 0.0))
            throw std::invalid_argument("wavenumber_lattice: lengths and wavelength must be positive");

        WavenumberLattice lat;
        lat.length_x = length_x;
        lat.length_y = length_y;
        lat.wavelength = wavelength;

        const int mx = static_cast<int>(std::floor(length_x / wavelength));
        const int my = static_cast<int>(std::floor(length_y / wavelength));
        for (int lx = -mx; lx <= mx; ++lx)
            for (int ly = -my; ly <= my; ++ly)
            {
                const double ex = lx * wavelength / length_x;
                const double ey = ly * wavelength / length_y;
                if (ex * ex + ey * ey <= 1.0 + kEllipseTol)
                    lat.points.push_back({lx, ly});
            }
        return lat;
    }

    KzMode kz_mode_from_string(const std::string &tag)
    {
        if (tag == "consistent")
            return KzMode::consistent;
        if (tag == "raw")
            return KzMode::raw;
        throw ConfigError("unknown kz mode '" + tag + "' (expected consistent|raw)");
    }

    std::string to_string(KzMode mode) { return mode == KzMode::raw ? "raw" : "consistent"; }

    Eigen::MatrixXcd wave_vector_matrix(const WavenumberLattice &lattice, const ArrayGeometry &geom, KzMode mode)
    {
        const auto n = static_cast<Eigen::Index>(geom.positions.size());
        const auto np = static_cast<Eigen::Index>(lattice.size());
        const double k = 2.0 * kPi / lattice.wavelength;
        const double inv_n = 1.0 / static_cast<double>(n);

        Eigen::MatrixXcd u(n, np);
        for (Eigen::Index j = 0; j < np; ++j)
        {
            const auto &pt = lattice.points[static_cast<std::size_t>(j)];
            const double kx = 2.0 * kPi * pt.lx / lattice.length_x;
            const double ky = 2.0 * kPi * pt.ly / lattice.length_y;

            double kz_sq = 0.0;
            if (mode == KzMode::consistent)
                kz_sq = k * k - kx * kx - ky * ky;
            else
                kz_sq = k * k - static_cast<double>(pt.lx * pt.lx + pt.ly * pt.ly);

            // points inside the ellipse give kz^2 >= 0 up to rounding
            if (kz_sq < -1e-9 * k * k)
                throw std::invalid_argument("wave_vector_matrix: lattice point (" + std::to_string(pt.lx) + "," +
                                            std::to_string(pt.ly) + ") gives an evanescent wave vector");
            const double kz = std::sqrt(std::max(kz_sq, 0.0));

            for (Eigen::Index a = 0; a < n; ++a)
            {
                const Vec3 &p = geom.positions[static_cast<std::size_t>(a)];
                const double phase = kx * p.x() + ky * p.y() + kz * p.z();
                u(a, j) = std::polar(inv_n, -phase);
            }
        }
        return u;
    }

    SpectralModel spectral_model_from_tag(const std::string &tag)
    {
        if (tag == "isotropic")
            return SpectralModel::isotropic();
        throw ConfigError("unknown spectral model '" + tag + "' (expected isotropic)");
    }

    Eigen::VectorXd variance_profile(const WavenumberLattice &lattice, int n_antennas, const SpectralModel &model)
    {
        const auto np = static_cast<Eigen::Index>(lattice.size());
        if (np == 0)
            throw std::invalid_argument("variance_profile: empty lattice");
        if (n_antennas < 1)
            throw std::invalid_argument("variance_profile: antenna count must be >= 1");

        Eigen::VectorXd var(np);
        if (model.tag == "isotropic")
        {
            var.setConstant(1.0 / static_cast<double>(np));
        }
        else if (model.tag == "custom")
        {
            if (static_cast<Eigen::Index>(model.weights.size()) != np)
                throw std::invalid_argument("variance_profile: custom weights do not match the lattice size");
            double total = 0.0;
            for (Eigen::Index i = 0; i < np; ++i)
            {
                const double w = model.weights[static_cast<std::size_t>(i)];
                if (!(w >= 0.0))
                    throw std::invalid_argument("variance_profile: custom weights must be non-negative");
                var(i) = w;
                total += w;
            }
            if (!(total > 0.0))
                throw std::invalid_argument("variance_profile: custom weights sum to zero");
            var /= total;
        }
        else
        {
            throw ConfigError("variance_profile: unknown spectral model '" + model.tag + "'");
        }
        return (var * static_cast<double>(n_antennas)).cwiseSqrt();
    }

    Eigen::MatrixXcd correlation_matrix(const Eigen::MatrixXcd &u_r, const Eigen::MatrixXcd &u_s,
                                        const Eigen::VectorXd &v_r, const Eigen::VectorXd &v_s)
    {
        if (u_r.cols() != v_r.size() || u_s.cols() != v_s.size())
            throw std::invalid_argument("correlation_matrix: wave-vector and variance dimensions differ");

        const Eigen::MatrixXcd a = kron(u_s.conjugate(), u_r);
        Eigen::VectorXd d(v_s.size() * v_r.size());
        for (Eigen::Index js = 0; js < v_s.size(); ++js)
            for (Eigen::Index jr = 0; jr < v_r.size(); ++jr)
                d(js * v_r.size() + jr) = v_s(js) * v_s(js) * v_r(jr) * v_r(jr);

        Eigen::MatrixXcd r = a * d.asDiagonal() * a.adjoint();
        Eigen::MatrixXcd herm = 0.5 * (r + r.adjoint());
        return herm;
    }

    ChannelStats small_scale_stats(const ArrayGeometry &bs, const ArrayGeometry &ue, const ChannelModel &model)
    {
        warn_spacing(bs, model.wavelength, "BS");
        warn_spacing(ue, model.wavelength, "UE");

        const ArrayGeometry bs_local = bs.translated(Vec3::Zero());
        const ArrayGeometry ue_local = ue.translated(Vec3::Zero());
        const auto lat_r = wavenumber_lattice(bs.length_x(), bs.length_y(), model.wavelength);
        const auto lat_s = wavenumber_lattice(ue.length_x(), ue.length_y(), model.wavelength);

        ChannelStats st;
        st.u_r = wave_vector_matrix(lat_r, bs_local, model.kz);
        st.u_s = wave_vector_matrix(lat_s, ue_local, model.kz);
        st.v_r = variance_profile(lat_r, bs.size(), model.bs_spectrum);
        st.v_s = variance_profile(lat_s, ue.size(), model.ue_spectrum);
        st.corr = correlation_matrix(st.u_r, st.u_s, st.v_r, st.v_s);
        return st;
    }

    ChannelStats link_stats(const ArrayGeometry &bs, const ArrayGeometry &ue, const ChannelModel &model)
    {
        ChannelStats st = small_scale_stats(bs, ue, model);
        st.lsf = lsf_matrix(bs, ue, model.wavelength);
        const double d = (bs.origin - ue.origin).norm();
        st.beta = d > std::max(bs.aperture(), ue.aperture()) ? fresnel_beta(bs, ue, model.wavelength) : 0.0;
        return st;
    }

    Eigen::MatrixXcd sample_ssf(const ChannelStats &stats, Rng &rng)
    {
        const Eigen::Index nr = stats.v_r.size();
        const Eigen::Index ns = stats.v_s.size();
        Eigen::MatrixXcd x = complex_normal_matrix(nr, ns, rng);
        for (Eigen::Index j = 0; j < ns; ++j)
            for (Eigen::Index i = 0; i < nr; ++i)
                x(i, j) *= stats.v_r(i) * stats.v_s(j);
        return stats.u_r * x * stats.u_s.adjoint();
    }

    double radiation_gain(double theta) { return 2.0 * std::cos(theta); }

    double incidence_angle(const Vec3 &rx, const Vec3 &tx)
    {
        const Vec3 diff = tx - rx;
        const double d = diff.norm();
        if (!(d > 0.0))
            throw std::invalid_argument("incidence_angle: coincident points");
        return std::acos(std::min(1.0, std::abs(diff.z()) / d));
    }

    Eigen::MatrixXd lsf_matrix(const ArrayGeometry &geom_r, const ArrayGeometry &geom_s, double wavelength)
    {
        const auto nr = static_cast<Eigen::Index>(geom_r.positions.size());
        const auto ns = static_cast<Eigen::Index>(geom_s.positions.size());
        Eigen::MatrixXd b(nr, ns);
        for (Eigen::Index i = 0; i < nr; ++i)
            for (Eigen::Index j = 0; j < ns; ++j)
            {
                const Vec3 &r = geom_r.positions[static_cast<std::size_t>(i)];
                const Vec3 &s = geom_s.positions[static_cast<std::size_t>(j)];
                const Vec3 diff = s - r;
                const double d = diff.norm();
                if (!(d > 0.0))
                    throw std::invalid_argument("lsf_matrix: coincident antennas (" + std::to_string(i) + "," +
                                                std::to_string(j) + ")");
                // 2 cos(theta) with cos(theta) = |dz| / d
                const double gain = 2.0 * std::abs(diff.z()) / d;
                b(i, j) = std::sqrt(gain) * wavelength / (4.0 * kPi * d);
            }
        return b;
    }

    double fresnel_beta(const ArrayGeometry &geom_r, const ArrayGeometry &geom_s, double wavelength)
    {
        const Vec3 diff = geom_s.origin - geom_r.origin;
        const double d = diff.norm();
        const double aperture = std::max(geom_r.aperture(), geom_s.aperture());
        if (!(d > aperture))
            throw std::domain_error("fresnel_beta: centre distance " + std::to_string(d) +
                                    " m does not exceed the aperture " + std::to_string(aperture) + " m");
        const double gain = 2.0 * std::abs(diff.z()) / d;
        return std::sqrt(gain) * wavelength / (4.0 * kPi * d);
    }

    Eigen::MatrixXcd channel_matrix(const Eigen::MatrixXd &lsf, const Eigen::MatrixXcd &ssf)
    {
        if (lsf.rows() != ssf.rows() || lsf.cols() != ssf.cols())
            throw std::invalid_argument("channel_matrix: LSF and SSF shapes differ");
        return lsf.cast<cplx>().cwiseProduct(ssf);
    }

    Eigen::MatrixXcd channel_matrix(double beta, const Eigen::MatrixXcd &ssf) { return beta * ssf; }
} // namespace cfxl::channel
