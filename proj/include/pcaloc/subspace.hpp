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

#ifndef PCALOC_SUBSPACE_HPP
#define PCALOC_SUBSPACE_HPP

#include <utility>
#include <vector>

#include "pcaloc/geometry.hpp"
#include "pcaloc/scenario.hpp"

namespace pcaloc
{
    // Relative eigenvalue floor below which a steering Gram matrix counts
    // as rank deficient.
    inline constexpr double kSteeringRankTol = 1e-12;

    // Per-subarray steering matrices toward a candidate location set,
    // together with their column-orthonormal (whitened) forms. The whitened
    // block A_l (A_l^H A_l)^{-1/2} spans the same columns and satisfies
    // W^H W = I, so subspace projections never need an explicit M_l x M_l
    // projector.
    struct SteeringBlock
    {
        std::vector<Eigen::MatrixXcd> per_subarray; // A_l, M_l x Q
        std::vector<Eigen::MatrixXcd> whitened;     // M_l x Q, orthonormal columns
        int num_locations = 0;

        int num_subarrays() const { return static_cast<int>(per_subarray.size()); }
    };

    namespace detail
    {
        // Inverse square root of a Hermitian PSD matrix via its
        // eigendecomposition. Directions below rank_tol * lambda_max are an
        // error, not a pseudo-inverse: silently dropping them would change
        // the cost surface near coincident candidates.
        inline Eigen::MatrixXcd inverse_sqrt_hermitian(const Eigen::MatrixXcd &gram, double rank_tol)
        {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram);
            const Eigen::VectorXd vals = eig.eigenvalues();
            const double vmax = vals.maxCoeff();
            if (!(vmax > 0.0) || vals.minCoeff() < rank_tol * vmax)
                throw RankDeficientSteering("steering Gram matrix is numerically rank deficient");
            const Eigen::VectorXd inv_root = vals.cwiseSqrt().cwiseInverse();
            return eig.eigenvectors() * inv_root.asDiagonal() * eig.eigenvectors().adjoint();
        }
    } // namespace detail

    inline SteeringBlock build_steering_block(const ArrayGeometry &geom, const std::vector<Location> &locations,
                                              double rank_tol = kSteeringRankTol)
    {
        SteeringBlock sb;
        sb.num_locations = static_cast<int>(locations.size());
        sb.per_subarray.reserve(geom.subarrays.size());
        sb.whitened.reserve(geom.subarrays.size());
        for (int l = 0; l < geom.num_subarrays(); ++l)
        {
            Eigen::MatrixXcd a = steering_matrix(geom, l, locations);
            const Eigen::MatrixXcd gram = a.adjoint() * a;
            sb.whitened.push_back(a * detail::inverse_sqrt_hermitian(gram, rank_tol));
            sb.per_subarray.push_back(std::move(a));
        }
        return sb;
    }

    // Per-subarray projections of the data onto the candidate steering
    // spans, computed as W (W^H X) without forming projector matrices.
    inline std::vector<Eigen::MatrixXcd> project_block(const SteeringBlock &sb, const Snapshots &x)
    {
        if (x.num_subarrays() != sb.num_subarrays())
            throw std::invalid_argument("snapshot blocks do not match the steering block");
        std::vector<Eigen::MatrixXcd> out;
        out.reserve(sb.whitened.size());
        for (std::size_t l = 0; l < sb.whitened.size(); ++l)
        {
            const auto &w = sb.whitened[l];
            if (x.blocks[l].rows() != w.rows())
                throw std::invalid_argument("block row count mismatch in project_block");
            out.push_back(w * (w.adjoint() * x.blocks[l]));
        }
        return out;
    }

    // The small Hermitian matrix W^H R W whose top eigenvalues carry the
    // projected energy; assembled blockwise from the covariance blocks.
    struct ReducedMatrix
    {
        Eigen::MatrixXcd matrix; // LQ x LQ Hermitian
    };

    inline ReducedMatrix reduced_matrix(const SteeringBlock &sb, const SampleCovariance &cov)
    {
        if (cov.num_subarrays() != sb.num_subarrays())
            throw std::invalid_argument("covariance partition does not match the steering block");
        const int num_sub = sb.num_subarrays();
        const int q = sb.num_locations;
        Eigen::MatrixXcd g(num_sub * q, num_sub * q);
        for (int l = 0; l < num_sub; ++l)
            for (int k = l; k < num_sub; ++k)
            {
                const Eigen::MatrixXcd blk =
                    sb.whitened[static_cast<std::size_t>(l)].adjoint() * cov.block(l, k) *
                    sb.whitened[static_cast<std::size_t>(k)];
                g.block(l * q, k * q, q, q) = blk;
                if (k != l)
                    g.block(k * q, l * q, q, q) = blk.adjoint();
            }
        g = 0.5 * (g + g.adjoint()).eval();
        return ReducedMatrix{std::move(g)};
    }

    // Sum of the `count` largest eigenvalues.
    inline double top_eigensum(const ReducedMatrix &g, int count)
    {
        const int n = static_cast<int>(g.matrix.rows());
        if (count < 0 || count > n)
            throw std::invalid_argument("top_eigensum count out of range");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(g.matrix, Eigen::EigenvaluesOnly);
        double sum = 0.0;
        for (int i = 0; i < count; ++i)
            sum += eig.eigenvalues()[n - 1 - i];
        return sum;
    }

} // namespace pcaloc

#endif // PCALOC_SUBSPACE_HPP
