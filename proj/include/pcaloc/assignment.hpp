// SPDX-License-Identifier: Apache-2.0
//
// pcaloc - direct localization of multiple sources by partly calibrated arrays
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

#ifndef PCALOC_ASSIGNMENT_HPP
#define PCALOC_ASSIGNMENT_HPP

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "pcaloc/types.hpp"

namespace pcaloc
{
    namespace detail
    {
        // Jonker-Volgenant style shortest augmenting path assignment on a
        // square cost matrix; returns col index per row.
        inline std::vector<int> hungarian(const std::vector<std::vector<double>> &cost)
        {
            const int n = static_cast<int>(cost.size());
            const double inf = std::numeric_limits<double>::infinity();
            std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
            std::vector<int> match(static_cast<std::size_t>(n) + 1, 0); // match[col] = row (1-based)
            std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
            for (int i = 1; i <= n; ++i)
            {
                match[0] = i;
                int j0 = 0;
                std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
                std::vector<bool> used(static_cast<std::size_t>(n) + 1, false);
                do
                {
                    used[static_cast<std::size_t>(j0)] = true;
                    const int i0 = match[static_cast<std::size_t>(j0)];
                    double delta = inf;
                    int j1 = 0;
                    for (int j = 1; j <= n; ++j)
                        if (!used[static_cast<std::size_t>(j)])
                        {
                            const double cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                                               u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                            if (cur < minv[static_cast<std::size_t>(j)])
                            {
                                minv[static_cast<std::size_t>(j)] = cur;
                                way[static_cast<std::size_t>(j)] = j0;
                            }
                            if (minv[static_cast<std::size_t>(j)] < delta)
                            {
                                delta = minv[static_cast<std::size_t>(j)];
                                j1 = j;
                            }
                        }
                    for (int j = 0; j <= n; ++j)
                        if (used[static_cast<std::size_t>(j)])
                        {
                            u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
                            v[static_cast<std::size_t>(j)] -= delta;
                        }
                        else
                            minv[static_cast<std::size_t>(j)] -= delta;
                    j0 = j1;
                } while (match[static_cast<std::size_t>(j0)] != 0);
                do
                {
                    const int j1 = way[static_cast<std::size_t>(j0)];
                    match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
                    j0 = j1;
                } while (j0);
            }
            std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
            for (int j = 1; j <= n; ++j)
                if (match[static_cast<std::size_t>(j)] != 0)
                    row_to_col[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;
            return row_to_col;
        }
    } // namespace detail

    // Map every true source to at most one estimate, minimizing the total
    // squared distance over all assignments. Exhaustive over permutations
    // up to 4 sources, shortest-augmenting-path beyond. Returns the
    // estimate index per source, -1 where no estimate is available.
    inline std::vector<int> best_assignment(const std::vector<Location> &truth,
                                            const std::vector<Location> &estimates)
    {
        const int nt = static_cast<int>(truth.size());
        const int ne = static_cast<int>(estimates.size());
        std::vector<int> result(static_cast<std::size_t>(nt), -1);
        if (nt == 0 || ne == 0)
            return result;

        // Square cost matrix; virtual rows/columns absorb the size mismatch.
        // The virtual cost exceeds the total of all real costs, so using one
        // more virtual pairing than necessary can never pay off, yet it stays
        // in the same magnitude range (a huge sentinel would swallow the real
        // costs when added to them).
        const int n = std::max(nt, ne);
        double real_total = 1.0;
        for (int i = 0; i < nt; ++i)
            for (int j = 0; j < ne; ++j)
            {
                const double d = distance(truth[static_cast<std::size_t>(i)], estimates[static_cast<std::size_t>(j)]);
                real_total += d * d;
            }
        const double virtual_cost = real_total;
        std::vector<std::vector<double>> cost(static_cast<std::size_t>(n),
                                              std::vector<double>(static_cast<std::size_t>(n), virtual_cost));
        for (int i = 0; i < nt; ++i)
            for (int j = 0; j < ne; ++j)
            {
                const double d = distance(truth[static_cast<std::size_t>(i)], estimates[static_cast<std::size_t>(j)]);
                cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = d * d;
            }

        std::vector<int> row_to_col;
        if (n <= 4)
        {
            std::vector<int> perm(static_cast<std::size_t>(n));
            std::iota(perm.begin(), perm.end(), 0);
            double best = std::numeric_limits<double>::infinity();
            std::vector<int> best_perm = perm;
            do
            {
                double total = 0.0;
                for (int i = 0; i < n; ++i)
                    total += cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
                if (total < best)
                {
                    best = total;
                    best_perm = perm;
                }
            } while (std::next_permutation(perm.begin(), perm.end()));
            row_to_col = best_perm;
        }
        else
        {
            row_to_col = detail::hungarian(cost);
        }

        for (int i = 0; i < nt; ++i)
        {
            const int j = row_to_col[static_cast<std::size_t>(i)];
            if (j >= 0 && j < ne)
                result[static_cast<std::size_t>(i)] = j;
        }
        return result;
    }

    // Per-source localization errors under the optimal assignment;
    // +infinity where a source has no estimate.
    inline std::vector<double> assignment_errors(const std::vector<Location> &truth,
                                                 const std::vector<Location> &estimates)
    {
        const std::vector<int> match = best_assignment(truth, estimates);
        std::vector<double> errors(truth.size(), std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < truth.size(); ++i)
            if (match[i] >= 0)
                errors[i] = distance(truth[i], estimates[static_cast<std::size_t>(match[i])]);
        return errors;
    }

} // namespace pcaloc

#endif // PCALOC_ASSIGNMENT_HPP
