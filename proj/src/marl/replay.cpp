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

#include "cfxl/marl/replay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cfxl::marl
{
    ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity)
    {
        if (capacity_ == 0)
            throw std::invalid_argument("ReplayBuffer: capacity must be >= 1");
    }

    void ReplayBuffer::push(Experience e)
    {
        e.id = next_id_++;
        if (data_.size() == capacity_)
            data_.pop_front();
        data_.push_back(std::move(e));
    }

    void ReplayBuffer::clear()
    {
        data_.clear();
        next_id_ = 0;
    }

    void ReplayBuffer::restore(std::deque<Experience> data, long next_id)
    {
        if (data.size() > capacity_)
            throw std::invalid_argument("ReplayBuffer::restore: more records than capacity");
        data_ = std::move(data);
        next_id_ = next_id;
    }

    Eigen::VectorXd priority_simple(const Eigen::VectorXd &losses)
    {
        if (losses.size() == 0)
            return losses;
        if ((losses.array() < 0.0).any())
            throw std::invalid_argument("priority_simple: losses must be non-negative");
        const double total = losses.sum();
        if (!(total > 0.0))
            return Eigen::VectorXd::Constant(losses.size(), 1.0 / static_cast<double>(losses.size()));
        return losses / total;
    }

    namespace
    {
        Eigen::VectorXd average_ranks(const Eigen::VectorXd &x, bool descending)
        {
            const auto n = static_cast<std::size_t>(x.size());
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return descending ? x(static_cast<Eigen::Index>(a)) > x(static_cast<Eigen::Index>(b))
                                  : x(static_cast<Eigen::Index>(a)) < x(static_cast<Eigen::Index>(b));
            });
            Eigen::VectorXd r(x.size());
            std::size_t i = 0;
            while (i < n)
            {
                std::size_t j = i;
                while (j + 1 < n && x(static_cast<Eigen::Index>(order[j + 1])) == x(static_cast<Eigen::Index>(order[i])))
                    ++j;
                const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
                for (std::size_t t = i; t <= j; ++t)
                    r(static_cast<Eigen::Index>(order[t])) = avg;
                i = j + 1;
            }
            return r;
        }
    } // namespace

    Eigen::VectorXd rank_ascending(const Eigen::VectorXd &x) { return average_ranks(x, false); }
    Eigen::VectorXd rank_descending(const Eigen::VectorXd &x) { return average_ranks(x, true); }

    Eigen::VectorXd priority_ranked(const Eigen::VectorXd &losses, const Eigen::VectorXd &counts, double mu,
                                    double nu)
    {
        if (losses.size() != counts.size())
            throw std::invalid_argument("priority_ranked: losses and counts differ in length");
        if (!(mu > 0.0))
            throw std::invalid_argument("priority_ranked: mu must be positive");
        if (!(nu >= 0.0 && nu < 1.0))
            throw std::invalid_argument("priority_ranked: nu must lie in [0, 1)");
        if (losses.size() == 0)
            return losses;
        const Eigen::VectorXd pr = rank_ascending(rank_ascending(losses)) + rank_descending(counts);
        const Eigen::VectorXd powed = pr.array().pow(mu).matrix();
        return (powed / powed.sum()).array() + nu;
    }

    void refresh_priorities(ReplayBuffer &buf, double mu, double nu)
    {
        const auto n = static_cast<Eigen::Index>(buf.size());
        Eigen::VectorXd losses(n), counts(n);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            losses(i) = buf[static_cast<std::size_t>(i)].loss;
            counts(i) = static_cast<double>(buf[static_cast<std::size_t>(i)].n);
        }
        const Eigen::VectorXd pr = priority_ranked(losses, counts, mu, nu);
        for (Eigen::Index i = 0; i < n; ++i)
            buf[static_cast<std::size_t>(i)].pr = pr(i);
    }

    std::vector<std::size_t> fill_extraction_pool(ReplayBuffer &buf, std::size_t size, Rng &rng)
    {
        if (buf.empty())
            throw std::invalid_argument("fill_extraction_pool: empty buffer");
        const std::size_t n = buf.size();
        const std::size_t take = std::min(size, n);

        // Efraimidis-Spirakis: key = log(u) / w, keep the largest keys
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        std::vector<std::pair<double, std::size_t>> keys(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            const double w = buf[i].pr;
            double u = u01(rng);
            while (u <= 0.0)
                u = u01(rng);
            keys[i] = {w > 0.0 ? std::log(u) / w : -std::numeric_limits<double>::infinity(), i};
        }
        std::stable_sort(keys.begin(), keys.end(), [](const auto &a, const auto &b) { return a.first > b.first; });

        std::vector<std::size_t> pool;
        pool.reserve(take);
        for (std::size_t t = 0; t < take; ++t)
        {
            pool.push_back(keys[t].second);
            ++buf[keys[t].second].n;
        }
        return pool;
    }
} // namespace cfxl::marl
