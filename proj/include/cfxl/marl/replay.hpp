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

#ifndef CFXL_MARL_REPLAY_HPP
#define CFXL_MARL_REPLAY_HPP

#include "cfxl/common.hpp"

#include <deque>
#include <vector>

namespace cfxl::marl
{
    // One joint transition plus its replay bookkeeping.
    struct Experience
    {
        Eigen::VectorXd s;      // joint observation, agent blocks concatenated
        Eigen::VectorXd a;      // joint unit action
        Eigen::VectorXd r;      // per-agent reward
        Eigen::VectorXd s_next;
        double loss = 0.0;      // squared TD error under the target networks
        long n = 0;             // times drawn into an extraction pool
        double pr = 0.0;        // priority
        long id = 0;            // insertion counter
    };

    // Fixed-capacity FIFO.
    class ReplayBuffer
    {
    public:
        explicit ReplayBuffer(std::size_t capacity = 1024);

        void push(Experience e);
        std::size_t size() const { return data_.size(); }
        std::size_t capacity() const { return capacity_; }
        bool empty() const { return data_.empty(); }
        long next_id() const { return next_id_; }

        Experience &operator[](std::size_t i) { return data_[i]; }
        const Experience &operator[](std::size_t i) const { return data_[i]; }

        void clear();
        void restore(std::deque<Experience> data, long next_id);
        const std::deque<Experience> &records() const { return data_; }

    private:
        std::size_t capacity_;
        std::deque<Experience> data_;
        long next_id_ = 0;
    };

    // Pr_k = loss_k / sum loss; uniform when every loss is zero.
    Eigen::VectorXd priority_simple(const Eigen::VectorXd &losses);

    // 1-based ranks in ascending order; ties share the average of their positions.
    Eigen::VectorXd rank_ascending(const Eigen::VectorXd &x);
    // 1-based ranks in descending order, ties averaged.
    Eigen::VectorXd rank_descending(const Eigen::VectorXd &x);

    // pr_k = rank(rank(loss_k)) + rank_reverse(n_k); Pr_k = pr_k^mu / sum pr^mu + nu.
    Eigen::VectorXd priority_ranked(const Eigen::VectorXd &losses, const Eigen::VectorXd &counts, double mu,
                                    double nu);

    // Recomputes every record's priority from its loss and extraction count.
    void refresh_priorities(ReplayBuffer &buf, double mu, double nu);

    // Draws min(size, |D|) distinct indices with probability proportional to Pr (sequential
    // weighted sampling without replacement) and increments n of each pick. Indices are returned
    // in draw order.
    std::vector<std::size_t> fill_extraction_pool(ReplayBuffer &buf, std::size_t size, Rng &rng);
} // namespace cfxl::marl

#endif
