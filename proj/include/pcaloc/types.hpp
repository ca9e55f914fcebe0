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

#ifndef PCALOC_TYPES_HPP
#define PCALOC_TYPES_HPP

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "pcaloc/errors.hpp"

namespace pcaloc
{
    using cxd = std::complex<double>;

    // A candidate or true source position, D = 1, 2 or 3 (meters, SI).
    // D is fixed per scenario; all locations in one scenario share it.
    struct Location
    {
        Eigen::VectorXd coords;

        Location() = default;
        explicit Location(Eigen::VectorXd c) : coords(std::move(c)) {}
        Location(std::initializer_list<double> c) : coords(Eigen::Map<const Eigen::VectorXd>(c.begin(), static_cast<Eigen::Index>(c.size()))) {}

        int dim() const { return static_cast<int>(coords.size()); }
        double operator[](int i) const { return coords[i]; }
    };

    inline double distance(const Location &a, const Location &b)
    {
        return (a.coords - b.coords).norm();
    }

    inline bool same_point(const Location &a, const Location &b)
    {
        return a.coords.size() == b.coords.size() && a.coords == b.coords;
    }

    // --- deterministic seed derivation ---------------------------------

    inline std::uint64_t splitmix64(std::uint64_t x)
    {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    // Child stream seed for (base, a, b), e.g. (config seed, sweep index,
    // trial index). Streams are independent of evaluation order.
    inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b)
    {
        std::uint64_t h = splitmix64(base);
        h = splitmix64(h ^ a);
        h = splitmix64(h ^ b);
        return h;
    }

} // namespace pcaloc

#endif // PCALOC_TYPES_HPP
