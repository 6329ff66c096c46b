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

#ifndef CFXL_CHANNEL_HPP
#define CFXL_CHANNEL_HPP

#include "cfxl/common.hpp"

#include <string>
#include <vector>

// Near-field channel model for planar XL-surfaces.
//
// A channel between a receive surface (N_r antennas) and a transmit surface (N_s antennas) is
// expanded over the wavenumber lattices of both surfaces:
//
//      H = U_r (Q .* W) U_s^H,    Q = v_r 1^T .* 1 v_s^T,    W ~ CN(0, I)
//
// with vec(H) ~ CN(0, R), R = (conj(U_s) kron U_r) (diag(v_s^2) kron diag(v_r^2)) (U_s^T kron U_r^H).
// The deterministic large-scale fading B (one coefficient per antenna pair) multiplies H
// elementwise, G = B .* H.

namespace cfxl::channel
{
    // Planar antenna grid parallel to the x-y plane, antennas indexed row by row.
    struct ArrayGeometry
    {
        int n_h = 1;              // antennas per row (x direction)
        int n_v = 1;              // antennas per column (y direction)
        double spacing = 0.0;     // antenna spacing in [m]
        Vec3 origin = Vec3::Zero(); // surface centre in [m]
        std::vector<Vec3> positions;

        int size() const { return n_h * n_v; }
        double length_x() const { return n_h * spacing; } // edge spacing is spacing / 2 on both sides
        double length_y() const { return n_v * spacing; }
        double aperture() const;                          // largest side length
        ArrayGeometry translated(const Vec3 &new_origin) const;
    };

    ArrayGeometry build_surface(int n_h, int n_v, double spacing, const Vec3 &origin = Vec3::Zero());

    struct LatticePoint
    {
        int lx = 0;
        int ly = 0;
        bool operator==(const LatticePoint &) const = default;
    };

    // Integer pairs inside the ellipse (lx lambda / Lx)^2 + (ly lambda / Ly)^2 <= 1, lexicographic order.
    struct WavenumberLattice
    {
        std::vector<LatticePoint> points;
        double length_x = 0.0;
        double length_y = 0.0;
        double wavelength = 0.0;

        std::size_t size() const { return points.size(); }
    };

    WavenumberLattice wavenumber_lattice(double length_x, double length_y, double wavelength);

    // How the z-component of the wave vector is formed.
    //  consistent: kz = sqrt((2 pi / lambda)^2 - (2 pi lx / Lx)^2 - (2 pi ly / Ly)^2)
    //  raw:        kz = sqrt((2 pi / lambda)^2 - lx^2 - ly^2)   (integer indices, as typeset in the model)
    enum class KzMode
    {
        consistent,
        raw
    };

    KzMode kz_mode_from_string(const std::string &tag);
    std::string to_string(KzMode mode);

    // N x n matrix with entries (1/N) exp(-j (kx x + ky y + kz z)); every entry has modulus 1/N.
    Eigen::MatrixXcd wave_vector_matrix(const WavenumberLattice &lattice, const ArrayGeometry &geom,
                                        KzMode mode = KzMode::consistent);

    // Shape of the per-lattice-point Fourier variances sigma^2(lx, ly). The total power is
    // always normalised to one; "custom" takes user weights that are renormalised.
    struct SpectralModel
    {
        std::string tag = "isotropic";
        std::vector<double> weights; // custom only, one per lattice point

        static SpectralModel isotropic() { return {}; }
        static SpectralModel custom(std::vector<double> w) { return {"custom", std::move(w)}; }
    };

    SpectralModel spectral_model_from_tag(const std::string &tag);

    // Returns sqrt(N) * sigma per lattice point (the v vectors of the expansion).
    Eigen::VectorXd variance_profile(const WavenumberLattice &lattice, int n_antennas,
                                     const SpectralModel &model = SpectralModel::isotropic());

    // Full correlation matrix of vec(H), Hermitian-symmetrised.
    Eigen::MatrixXcd correlation_matrix(const Eigen::MatrixXcd &u_r, const Eigen::MatrixXcd &u_s,
                                        const Eigen::VectorXd &v_r, const Eigen::VectorXd &v_s);

    // Second-order statistics of one BS-UE link.
    struct ChannelStats
    {
        Eigen::MatrixXcd u_r;  // N_r x n_r
        Eigen::MatrixXcd u_s;  // N_s x n_s
        Eigen::VectorXd v_r;   // n_r
        Eigen::VectorXd v_s;   // n_s
        Eigen::MatrixXcd corr; // N_r N_s x N_r N_s, covariance of vec(H)
        Eigen::MatrixXd lsf;   // N_r x N_s, per antenna pair
        double beta = 0.0;     // Fresnel scalar, 0 when the approximation is not valid

        Eigen::Index n_r() const { return u_r.rows(); }
        Eigen::Index n_s() const { return u_s.rows(); }
    };

    struct ChannelModel
    {
        double wavelength = 0.01;
        KzMode kz = KzMode::consistent;
        SpectralModel bs_spectrum = SpectralModel::isotropic();
        SpectralModel ue_spectrum = SpectralModel::isotropic();
    };

    // Small-scale part only (u, v, corr). The expensive piece, shared by every link with the same
    // surface shapes since R does not depend on where the surfaces sit.
    ChannelStats small_scale_stats(const ArrayGeometry &bs, const ArrayGeometry &ue, const ChannelModel &model);

    // Full link statistics: small-scale part plus LSF of the actual placement.
    ChannelStats link_stats(const ArrayGeometry &bs, const ArrayGeometry &ue, const ChannelModel &model);

    // H = U_r (Q .* W) U_s^H; W drawn column-major from rng.
    Eigen::MatrixXcd sample_ssf(const ChannelStats &stats, Rng &rng);

    // Normalised power pattern G_t F(theta) = 2 cos(theta); integrates to one against sin(theta) on [0, pi/2].
    double radiation_gain(double theta);

    // Angle between the receive surface normal (z axis) and the line joining the two points.
    double incidence_angle(const Vec3 &rx, const Vec3 &tx);

    // Entry (n_r, n_s) = sqrt(G_t F(theta)) lambda / (4 pi d). Throws on coincident antennas.
    Eigen::MatrixXd lsf_matrix(const ArrayGeometry &geom_r, const ArrayGeometry &geom_s, double wavelength);

    // Single coefficient between surface centres; throws when the centre distance is within the aperture.
    double fresnel_beta(const ArrayGeometry &geom_r, const ArrayGeometry &geom_s, double wavelength);

    Eigen::MatrixXcd channel_matrix(const Eigen::MatrixXd &lsf, const Eigen::MatrixXcd &ssf);
    Eigen::MatrixXcd channel_matrix(double beta, const Eigen::MatrixXcd &ssf);
} // namespace cfxl::channel

#endif
