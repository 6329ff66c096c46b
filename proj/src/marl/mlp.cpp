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

#include "cfxl/marl/mlp.hpp"

#include <cmath>

namespace cfxl::marl
{
    Mlp::Mlp(std::vector<int> sizes, double slope) : sizes_(std::move(sizes)), slope_(slope)
    {
        if (sizes_.size() < 2)
            throw std::invalid_argument("Mlp: need at least an input and an output size");
        for (int s : sizes_)
            if (s < 1)
                throw std::invalid_argument("Mlp: layer sizes must be >= 1");
        Eigen::Index n = 0;
        for (std::size_t l = 0; l + 1 < sizes_.size(); ++l)
        {
            offsets_.push_back(n);
            n += static_cast<Eigen::Index>(sizes_[l + 1]) * (sizes_[l] + 1);
        }
        params_ = Eigen::VectorXd::Zero(n);
    }

    Eigen::Map<const Eigen::MatrixXd> Mlp::weight(std::size_t l) const
    {
        return {params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
    }

    Eigen::Map<const Eigen::VectorXd> Mlp::bias(std::size_t l) const
    {
        return {params_.data() + offsets_[l] + static_cast<Eigen::Index>(sizes_[l + 1]) * sizes_[l], sizes_[l + 1]};
    }

    void Mlp::init(Rng &rng, double out_scale)
    {
        const std::size_t n_layers = offsets_.size();
        for (std::size_t l = 0; l < n_layers; ++l)
        {
            const double bound = l + 1 == n_layers ? out_scale : 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
            std::uniform_real_distribution<double> u(-bound, bound);
            const Eigen::Index count = static_cast<Eigen::Index>(sizes_[l + 1]) * (sizes_[l] + 1);
            for (Eigen::Index i = 0; i < count; ++i)
                params_(offsets_[l] + i) = u(rng);
        }
    }

    Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd &x) const
    {
        Tape tape;
        return forward(x, tape);
    }

    Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd &x, Tape &tape) const
    {
        if (x.rows() != in_dim())
            throw std::invalid_argument("Mlp::forward: input has " + std::to_string(x.rows()) + " rows, expected " +
                                        std::to_string(in_dim()));
        const std::size_t n_layers = offsets_.size();
        tape.input.resize(n_layers);
        tape.pre.resize(n_layers);
        Eigen::MatrixXd a = x;
        for (std::size_t l = 0; l < n_layers; ++l)
        {
            tape.input[l] = a;
            Eigen::MatrixXd z = weight(l) * a;
            z.colwise() += bias(l);
            tape.pre[l] = z;
            if (l + 1 < n_layers)
                a = z.unaryExpr([s = slope_](double v) { return v > 0.0 ? v : s * v; });
            else
                a = std::move(z);
        }
        return a;
    }

    Eigen::MatrixXd Mlp::backward(const Tape &tape, const Eigen::MatrixXd &upstream, Eigen::VectorXd &grad) const
    {
        if (grad.size() != params_.size())
            grad = Eigen::VectorXd::Zero(params_.size());
        const std::size_t n_layers = offsets_.size();
        Eigen::MatrixXd g = upstream;
        for (std::size_t l = n_layers; l-- > 0;)
        {
            if (l + 1 < n_layers)
                g = g.cwiseProduct(tape.pre[l].unaryExpr([s = slope_](double v) { return v > 0.0 ? 1.0 : s; }));
            const Eigen::Index rows = sizes_[l + 1];
            const Eigen::Index cols = sizes_[l];
            Eigen::Map<Eigen::MatrixXd> gw(grad.data() + offsets_[l], rows, cols);
            Eigen::Map<Eigen::VectorXd> gb(grad.data() + offsets_[l] + rows * cols, rows);
            gw.noalias() += g * tape.input[l].transpose();
            gb += g.rowwise().sum();
            g = weight(l).transpose() * g;
        }
        return g;
    }

    Eigen::MatrixXd logistic(const Eigen::MatrixXd &z)
    {
        return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    }

    double clip_global_norm(Eigen::VectorXd &g, double max_norm)
    {
        const double n = g.norm();
        if (n > max_norm && n > 0.0)
            g *= max_norm / n;
        return n;
    }

    SoftDirection soft_direction_from_string(const std::string &tag)
    {
        if (tag == "standard")
            return SoftDirection::standard;
        if (tag == "reversed")
            return SoftDirection::reversed;
        throw ConfigError("unknown soft update direction '" + tag + "' (expected standard|reversed)");
    }

    std::string to_string(SoftDirection d) { return d == SoftDirection::reversed ? "reversed" : "standard"; }

    void soft_update(const Eigen::VectorXd &current, Eigen::VectorXd &target, double tau, SoftDirection dir)
    {
        if (current.size() != target.size())
            throw std::invalid_argument("soft_update: parameter vectors differ in size");
        if (!(tau > 0.0 && tau <= 1.0))
            throw std::invalid_argument("soft_update: tau must lie in (0, 1]");
        // incremental form: equal vectors stay bit-identical
        const double w = dir == SoftDirection::reversed ? 1.0 - tau : tau;
        target += w * (current - target);
    }
} // namespace cfxl::marl
