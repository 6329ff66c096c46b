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

#include "cfxl/common.hpp"

#include <cmath>

namespace cfxl
{
    namespace
    {
        std::uint64_t splitmix64(std::uint64_t x)
        {
            x += 0x9E3779B97F4A7C15ULL;
            x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
            x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
            return x ^ (x >> 31);
        }
    } // namespace

    std::uint64_t fnv1a(std::string_view text)
    {
        std::uint64_t h = 0xCBF29CE484222325ULL;
        for (unsigned char c : text)
        {
            h ^= c;
            h *= 0x100000001B3ULL;
        }
        return h;
    }

    std::uint64_t derive_seed(std::uint64_t master, std::string_view stream)
    {
        return splitmix64(splitmix64(master) ^ fnv1a(stream));
    }

    std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index)
    {
        return splitmix64(derive_seed(master, stream) + splitmix64(index));
    }

    Eigen::MatrixXcd complex_normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng &rng)
    {
        Eigen::MatrixXcd w(rows, cols);
        // column-major fill order is part of the determinism contract
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i)
                w(i, j) = complex_normal(rng);
        return w;
    }

    double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
    double watt_to_dbm(double watt) { return 10.0 * std::log10(watt) + 30.0; }
} // namespace cfxl
