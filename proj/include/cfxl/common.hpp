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

#ifndef CFXL_COMMON_HPP
#define CFXL_COMMON_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cfxl
{
    using cplx = std::complex<double>;
    using Vec3 = Eigen::Vector3d;

    // All randomness in the project flows through this engine type.
    using Rng = std::mt19937_64;

    inline constexpr double kPi = 3.14159265358979323846;

    // Thrown for invalid user-facing configuration (maps to CLI exit code 2)
    class ConfigError : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    // Derives an independent sub-seed from a master seed and a stream label.
    // Streams are keyed by name so adding a consumer never shifts existing ones.
    std::uint64_t derive_seed(std::uint64_t master, std::string_view stream);
    std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index);

    inline Rng make_rng(std::uint64_t master, std::string_view stream)
    {
        return Rng(derive_seed(master, stream));
    }

    // Standard circularly-symmetric complex Gaussian, E|z|^2 = 1
    inline cplx complex_normal(Rng &rng)
    {
        std::normal_distribution<double> n(0.0, 1.0);
        const double re = n(rng);
        const double im = n(rng);
        return {re * 0.7071067811865476, im * 0.7071067811865476};
    }

    Eigen::MatrixXcd complex_normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng &rng);

    // 64-bit FNV-1a, used for stable config hashes in sweep output
    std::uint64_t fnv1a(std::string_view text);

    double dbm_to_watt(double dbm);
    double watt_to_dbm(double watt);
} // namespace cfxl

#endif
