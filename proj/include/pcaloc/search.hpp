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

#ifndef PCALOC_SEARCH_HPP
#define PCALOC_SEARCH_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include "pcaloc/types.hpp"

namespace pcaloc
{
    using SingleCost = std::function<double(const Location &)>;
    using MultiCost = std::function<double(const std::vector<Location> &)>;

    // Uniform lattice over an axis-aligned box. Point enumeration is
    // lexicographic in the coordinates (dimension 0 slowest), which fixes
    // every tie-break downstream.
    struct SearchGrid
    {
        Eigen::VectorXd lower;
        Eigen::VectorXd upper;
        Eigen::VectorXd step;
        std::vector<int> counts;

        int dim() const { return static_cast<int>(lower.size()); }

        std::size_t num_points() const
        {
            std::size_t n = 1;
            for (int c : counts)
                n *= static_cast<std::size_t>(c);
            return n;
        }

        double cell_diagonal() const { return step.norm(); }

        std::vector<int> multi_index(std::size_t flat) const
        {
            std::vector<int> idx(counts.size());
            for (int d = dim() - 1; d >= 0; --d)
            {
                const std::size_t c = static_cast<std::size_t>(counts[static_cast<std::size_t>(d)]);
                idx[static_cast<std::size_t>(d)] = static_cast<int>(flat % c);
                flat /= c;
            }
            return idx;
        }

        std::size_t flat_index(const std::vector<int> &idx) const
        {
            std::size_t flat = 0;
            for (int d = 0; d < dim(); ++d)
                flat = flat * static_cast<std::size_t>(counts[static_cast<std::size_t>(d)]) +
                       static_cast<std::size_t>(idx[static_cast<std::size_t>(d)]);
            return flat;
        }

        Location point(std::size_t flat) const
        {
            const std::vector<int> idx = multi_index(flat);
            Eigen::VectorXd c(dim());
            for (int d = 0; d < dim(); ++d)
                c[d] = lower[d] + step[d] * idx[static_cast<std::size_t>(d)];
            return Location{std::move(c)};
        }

        static SearchGrid make(Eigen::VectorXd lower, Eigen::VectorXd upper, Eigen::VectorXd step,
                               std::size_t budget = 1000000)
        {
            if (lower.size() == 0 || lower.size() != upper.size() || lower.size() != step.size())
                throw std::invalid_argument("grid bounds/resolution dimensions disagree");
            SearchGrid g{std::move(lower), std::move(upper), std::move(step), {}};
            std::size_t total = 1;
            for (int d = 0; d < g.dim(); ++d)
            {
                if (!(g.step[d] > 0.0) || !(g.upper[d] > g.lower[d]))
                    throw std::invalid_argument("grid needs positive resolution and upper > lower");
                const int count = static_cast<int>(std::floor((g.upper[d] - g.lower[d]) / g.step[d] * (1.0 + 1e-12))) + 1;
                if (count < 2)
                    throw std::invalid_argument("grid needs at least 2 points per dimension");
                g.counts.push_back(count);
                total *= static_cast<std::size_t>(count);
                if (total > budget)
                    throw std::invalid_argument("grid exceeds the point budget");
            }
            return g;
        }
    };

    namespace detail
    {
        inline constexpr double kInvalidCost = -std::numeric_limits<double>::infinity();

        // Evaluate f over the lattice. Domain errors mark the point
        // invalid; anything else is rethrown on the caller's thread. The
        // output is indexed by lattice point, so results do not depend on
        // the thread count.
        inline std::vector<double> evaluate_lattice(const SingleCost &f, const SearchGrid &grid, int threads,
                                                    const std::function<bool(const Location &)> &skip)
        {
            const std::size_t n = grid.num_points();
            std::vector<double> values(n, kInvalidCost);
            const auto worker = [&](std::size_t begin, std::size_t end) {
                for (std::size_t i = begin; i < end; ++i)
                {
                    const Location p = grid.point(i);
                    if (skip && skip(p))
                        continue;
                    try
                    {
                        const double v = f(p);
                        values[i] = std::isnan(v) ? kInvalidCost : v;
                    }
                    catch (const Error &)
                    {
                        // candidate invalid at this point
                    }
                }
            };
            if (threads <= 1 || n < 2)
            {
                worker(0, n);
                return values;
            }
            const std::size_t used = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
            std::vector<std::thread> pool;
            std::exception_ptr failure;
            std::mutex failure_mutex;
            for (std::size_t t = 0; t < used; ++t)
            {
                const std::size_t begin = n * t / used;
                const std::size_t end = n * (t + 1) / used;
                pool.emplace_back([&, begin, end]() {
                    try
                    {
                        worker(begin, end);
                    }
                    catch (...)
                    {
                        std::lock_guard<std::mutex> lock(failure_mutex);
                        if (!failure)
                            failure = std::current_exception();
                    }
                });
            }
            for (auto &th : pool)
                th.join();
            if (failure)
                std::rethrow_exception(failure);
            return values;
        }

        inline std::size_t argmax_index(const std::vector<double> &values)
        {
            std::size_t best = values.size();
            double best_value = kInvalidCost;
            for (std::size_t i = 0; i < values.size(); ++i)
                if (values[i] > best_value) // strict: first (lexicographically smallest) point wins ties
                {
                    best_value = values[i];
                    best = i;
                }
            if (best == values.size())
                throw AllInvalid("every grid point raised a cost error");
            return best;
        }
    } // namespace detail

    inline std::vector<double> evaluate_grid(const SingleCost &f, const SearchGrid &grid, int threads = 1)
    {
        return detail::evaluate_lattice(f, grid, threads, {});
    }

    struct GridArgmax
    {
        Location location;
        double value = 0.0;
        std::size_t index = 0;
    };

    // Exhaustive lattice maximization; ties go to the lexicographically
    // smallest coordinates.
    inline GridArgmax grid_argmax(const SingleCost &f, const SearchGrid &grid, int threads = 1)
    {
        const std::vector<double> values = detail::evaluate_lattice(f, grid, threads, {});
        const std::size_t best = detail::argmax_index(values);
        return GridArgmax{grid.point(best), values[best], best};
    }

    // --- peak picking -----------------------------------------------------

    struct PeakList
    {
        std::vector<Location> locations; // descending by height
        std::vector<double> values;
        bool short_list = false; // fewer maxima found than requested
    };

    // The `count` highest strict local maxima of a lattice surface
    // (greater than every existing neighbor, full diagonal neighborhood),
    // greedily enforcing a pairwise minimum separation.
    inline PeakList pick_peaks(const std::vector<double> &values, const SearchGrid &grid, int count,
                               double min_separation)
    {
        if (values.size() != grid.num_points())
            throw std::invalid_argument("value array does not match the grid");
        if (count < 1)
            throw std::invalid_argument("pick_peaks requires count >= 1");
        const int d = grid.dim();
        std::vector<std::size_t> maxima;
        std::vector<int> neighbor(static_cast<std::size_t>(d), -1);
        for (std::size_t i = 0; i < values.size(); ++i)
        {
            if (values[i] == detail::kInvalidCost)
                continue;
            const std::vector<int> idx = grid.multi_index(i);
            bool is_peak = true;
            std::fill(neighbor.begin(), neighbor.end(), -1);
            while (is_peak) // enumerate all +-1 offsets around idx
            {
                std::vector<int> probe = idx;
                bool self = true, inside = true;
                for (int k = 0; k < d; ++k)
                {
                    probe[static_cast<std::size_t>(k)] += neighbor[static_cast<std::size_t>(k)];
                    if (neighbor[static_cast<std::size_t>(k)] != 0)
                        self = false;
                    if (probe[static_cast<std::size_t>(k)] < 0 ||
                        probe[static_cast<std::size_t>(k)] >= grid.counts[static_cast<std::size_t>(k)])
                        inside = false;
                }
                if (!self && inside && values[grid.flat_index(probe)] >= values[i])
                    is_peak = false;
                int k = d - 1;
                while (k >= 0 && neighbor[static_cast<std::size_t>(k)] == 1)
                    neighbor[static_cast<std::size_t>(k--)] = -1;
                if (k < 0)
                    break;
                ++neighbor[static_cast<std::size_t>(k)];
            }
            if (is_peak)
                maxima.push_back(i);
        }
        std::sort(maxima.begin(), maxima.end(), [&](std::size_t a, std::size_t b) {
            if (values[a] != values[b])
                return values[a] > values[b];
            return a < b;
        });
        PeakList out;
        for (std::size_t i : maxima)
        {
            if (static_cast<int>(out.locations.size()) == count)
                break;
            const Location p = grid.point(i);
            bool separated = true;
            for (const auto &accepted : out.locations)
                if (distance(p, accepted) < min_separation)
                {
                    separated = false;
                    break;
                }
            if (separated)
            {
                out.locations.push_back(p);
                out.values.push_back(values[i]);
            }
        }
        out.short_list = static_cast<int>(out.locations.size()) < count;
        return out;
    }

    // --- alternating projection --------------------------------------------

    struct ApOptions
    {
        double tol = 1e-8; // relative cost gain below which a sweep counts as converged
        int max_sweeps = 50;
        int threads = 1;
    };

    struct ApState
    {
        std::vector<Location> current;
        int sweeps = 0;                   // completed refinement sweeps
        std::vector<double> cost_history; // initialization value, then one entry per sweep
        bool converged = false;
    };

    namespace detail
    {
        // Candidates inside the same grid cell as an already-placed
        // location are skipped: the steering whitening is singular at
        // exact coincidence.
        inline bool within_one_cell(const Location &a, const Location &b, const Eigen::VectorXd &step)
        {
            for (int d = 0; d < a.dim(); ++d)
                if (std::abs(a.coords[d] - b.coords[d]) >= 0.999 * step[d])
                    return false;
            return true;
        }

        inline GridArgmax coordinate_argmax(const MultiCost &cost, const SearchGrid &grid,
                                            const std::vector<Location> &candidates, std::size_t slot,
                                            int threads)
        {
            const SingleCost f = [&](const Location &p) {
                std::vector<Location> probe = candidates;
                probe[slot] = p;
                return cost(probe);
            };
            const auto skip = [&](const Location &p) {
                for (std::size_t j = 0; j < candidates.size(); ++j)
                    if (j != slot && within_one_cell(p, candidates[j], grid.step))
                        return true;
                return false;
            };
            const std::vector<double> values = detail::evaluate_lattice(f, grid, threads, skip);
            const std::size_t best = detail::argmax_index(values);
            return GridArgmax{grid.point(best), values[best], best};
        }
    } // namespace detail

    // Coordinate-ascent replacement of the joint multi-source search. The
    // first phase places sources one at a time, each by a single-location
    // grid search with the earlier ones held fixed; the second phase cycles
    // through the sources until neither the locations (beyond one grid
    // cell) nor the cost (beyond tol, relative) improve.
    inline ApState alternating_projection(const MultiCost &cost, const SearchGrid &grid, int num_sources,
                                          const ApOptions &opts = {})
    {
        if (num_sources < 1)
            throw std::invalid_argument("alternating_projection requires num_sources >= 1");

        ApState state;
        for (int q = 0; q < num_sources; ++q)
        {
            std::vector<Location> candidates = state.current;
            candidates.push_back(grid.point(0)); // placeholder for the free slot
            try
            {
                const GridArgmax best =
                    detail::coordinate_argmax(cost, grid, candidates, candidates.size() - 1, opts.threads);
                state.current.push_back(best.location);
                if (q == num_sources - 1)
                    state.cost_history.push_back(best.value);
            }
            catch (const AllInvalid &)
            {
                throw NoProgress("alternating projection could not place source " + std::to_string(q + 1));
            }
        }

        const auto moved_more_than_one_cell = [&grid](const Location &a, const Location &b) {
            for (int d = 0; d < a.dim(); ++d)
                if (std::abs(a.coords[d] - b.coords[d]) > 1.001 * grid.step[d])
                    return true;
            return false;
        };

        for (int sweep = 0; sweep < opts.max_sweeps; ++sweep)
        {
            double sweep_cost = state.cost_history.back();
            bool moved_far = false;
            for (std::size_t q = 0; q < state.current.size(); ++q)
            {
                const GridArgmax best = detail::coordinate_argmax(cost, grid, state.current, q, opts.threads);
                if (moved_more_than_one_cell(best.location, state.current[q]))
                    moved_far = true;
                state.current[q] = best.location;
                sweep_cost = best.value;
            }
            state.sweeps = sweep + 1;
            const double previous = state.cost_history.back();
            state.cost_history.push_back(sweep_cost);
            const double gain = sweep_cost - previous;
            if (!moved_far || gain <= opts.tol * std::max(std::abs(previous), 1e-300))
            {
                state.converged = true;
                break;
            }
        }
        return state;
    }

} // namespace pcaloc

#endif // PCALOC_SEARCH_HPP
