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

#ifndef CFXL_MARL_MLP_HPP
#define CFXL_MARL_MLP_HPP

#include "cfxl/common.hpp"

#include <string>
#include <vector>

namespace cfxl::marl
{
    // Fully connected network, leaky rectifier on hidden layers, linear output.
    // Parameters live in one flat vector: per layer W (out x in, column-major) then b.
    // Batches are column-per-sample.
    class Mlp
    {
    public:
        Mlp() = default;
        explicit Mlp(std::vector<int> sizes, double slope = 0.01);

        // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)); the last layer uses +-out_scale instead.
        void init(Rng &rng, double out_scale = 3e-3);

        int in_dim() const { return sizes_.front(); }
        int out_dim() const { return sizes_.back(); }
        const std::vector<int> &sizes() const { return sizes_; }
        double slope() const { return slope_; }
        Eigen::Index num_params() const { return params_.size(); }

        Eigen::VectorXd &params() { return params_; }
        const Eigen::VectorXd &params() const { return params_; }

        struct Tape
        {
            std::vector<Eigen::MatrixXd> input; // input to each layer
            std::vector<Eigen::MatrixXd> pre;   // pre-activation of each layer
        };

        Eigen::MatrixXd forward(const Eigen::MatrixXd &x) const;
        Eigen::MatrixXd forward(const Eigen::MatrixXd &x, Tape &tape) const;

        // Accumulates dL/dparams (summed over the batch) into grad and returns dL/dx.
        Eigen::MatrixXd backward(const Tape &tape, const Eigen::MatrixXd &upstream, Eigen::VectorXd &grad) const;

    private:
        std::vector<int> sizes_;
        double slope_ = 0.01;
        Eigen::VectorXd params_;
        std::vector<Eigen::Index> offsets_; // start of W for each layer

        Eigen::Map<const Eigen::MatrixXd> weight(std::size_t l) const;
        Eigen::Map<const Eigen::VectorXd> bias(std::size_t l) const;
    };

    Eigen::MatrixXd logistic(const Eigen::MatrixXd &z);

    // Rescales g in place so that ||g|| <= max_norm; returns the norm before clipping.
    double clip_global_norm(Eigen::VectorXd &g, double max_norm);

    enum class SoftDirection
    {
        standard, // target <- tau * current + (1 - tau) * target
        reversed  // target <- tau * target + (1 - tau) * current
    };

    SoftDirection soft_direction_from_string(const std::string &tag);
    std::string to_string(SoftDirection d);

    void soft_update(const Eigen::VectorXd &current, Eigen::VectorXd &target, double tau, SoftDirection dir);
} // namespace cfxl::marl

#endif
