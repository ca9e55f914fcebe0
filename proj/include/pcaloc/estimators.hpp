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

#ifndef PCALOC_ESTIMATORS_HPP
#define PCALOC_ESTIMATORS_HPP

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "pcaloc/subspace.hpp"

namespace pcaloc
{
    namespace detail
    {
        template <class ErrorT>
        inline Eigen::MatrixXcd hermitian_inverse_checked(const Eigen::MatrixXcd &h, double rank_tol,
                                                          const char *what)
        {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h);
            const Eigen::VectorXd vals = eig.eigenvalues();
            const double vmax = vals.maxCoeff();
            if (!(vmax > 0.0) || vals.minCoeff() < rank_tol * vmax)
                throw ErrorT(what);
            return eig.eigenvectors() * vals.cwiseInverse().asDiagonal() * eig.eigenvectors().adjoint();
        }

        // Largest eigenvalue of a Hermitian matrix.
        inline double lambda_max(const Eigen::MatrixXcd &h)
        {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h, Eigen::EigenvaluesOnly);
            return eig.eigenvalues()[h.rows() - 1];
        }
    } // namespace detail

    // ---------------------------------------------------------------------
    // Relaxed maximum likelihood costs. All are "larger is better"; the
    // search layer maximizes. A candidate list of r locations is scored
    // under the r-source model, which is what the alternating-projection
    // build-up phase evaluates.
    // ---------------------------------------------------------------------

    // Noncoherent signals: projected energy captured by the best
    // |P|-dimensional signal subspace, i.e. the sum of the |P| largest
    // eigenvalues of the reduced matrix.
    inline double rml_cost_noncoherent(const ArrayGeometry &geom, const SampleCovariance &cov,
                                       const std::vector<Location> &candidates)
    {
        const SteeringBlock sb = build_steering_block(geom, candidates);
        return top_eigensum(reduced_matrix(sb, cov), static_cast<int>(candidates.size()));
    }

    // Coherent signals: the signal subspace is one-dimensional, so only the
    // largest eigenvalue counts.
    inline double rml_cost_coherent(const ArrayGeometry &geom, const SampleCovariance &cov,
                                    const std::vector<Location> &candidates)
    {
        const SteeringBlock sb = build_steering_block(geom, candidates);
        return top_eigensum(reduced_matrix(sb, cov), 1);
    }

    // Single source: the reduced matrix shrinks to L x L built from the
    // composite steering vectors; the whitening step is vacuous because
    // each steering vector already has unit norm.
    inline double rml_cost_single(const ArrayGeometry &geom, const SampleCovariance &cov, const Location &p)
    {
        const int num_sub = geom.num_subarrays();
        std::vector<Eigen::VectorXcd> steer;
        steer.reserve(static_cast<std::size_t>(num_sub));
        for (int l = 0; l < num_sub; ++l)
            steer.push_back(composite_steering(geom, l, p));
        Eigen::MatrixXcd g(num_sub, num_sub);
        for (int l = 0; l < num_sub; ++l)
            for (int k = l; k < num_sub; ++k)
            {
                const cxd v = steer[static_cast<std::size_t>(l)].dot(cov.block(l, k) * steer[static_cast<std::size_t>(k)]);
                g(l, k) = v;
                if (k != l)
                    g(k, l) = std::conj(v);
            }
        return detail::lambda_max(g);
    }

    // ---------------------------------------------------------------------
    // Reduced-complexity signal-subspace costs. These replace the
    // per-candidate eigendecomposition of the RML costs by the global
    // eigenvectors of the sample covariance, weighting their projections
    // onto the candidate steering span by the global eigenvalues.
    // ---------------------------------------------------------------------

    struct RcOptions
    {
        // Drop eigenvector terms with eigenvalue below cutoff * lambda_1;
        // 0 keeps all terms. Near-null terms contribute nothing at double
        // precision, so Monte-Carlo runs enable this.
        double eigenvalue_cutoff = 0.0;
    };

    namespace detail
    {
        inline int truncated_term_count(const SampleCovariance &cov, const RcOptions &opts, int minimum)
        {
            const int m = cov.size();
            if (opts.eigenvalue_cutoff <= 0.0)
                return m;
            const double floor = opts.eigenvalue_cutoff * std::max(cov.eigenvalues[0], 0.0);
            int count = 0;
            while (count < m && cov.eigenvalues[count] >= floor)
                ++count;
            return std::max(count, std::min(minimum, m));
        }

        // Cross-products H(m, q) = v_m^H P_A v_q for the block-diagonal
        // projector, accumulated across subarrays inside the inner product.
        inline Eigen::MatrixXcd eigenvector_cross_products(const SteeringBlock &sb, const SampleCovariance &cov,
                                                           int m_count, int q_count)
        {
            Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(m_count, q_count);
            for (int l = 0; l < sb.num_subarrays(); ++l)
            {
                const auto &w = sb.whitened[static_cast<std::size_t>(l)];
                const auto rows = cov.eigenvectors.block(cov.block_offsets[static_cast<std::size_t>(l)], 0,
                                                         cov.block_sizes[static_cast<std::size_t>(l)], m_count);
                const Eigen::MatrixXcd t = w.adjoint() * rows; // Q x m_count
                h.noalias() += t.adjoint() * t.leftCols(q_count);
            }
            return h;
        }
    } // namespace detail

    inline double rc_cost(const ArrayGeometry &geom, const SampleCovariance &cov,
                          const std::vector<Location> &candidates, const RcOptions &opts = {})
    {
        const int q = static_cast<int>(candidates.size());
        const SteeringBlock sb = build_steering_block(geom, candidates);
        const int m_count = detail::truncated_term_count(cov, opts, q);
        const Eigen::MatrixXcd h = detail::eigenvector_cross_products(sb, cov, m_count, q);
        double cost = 0.0;
        for (int m = 0; m < m_count; ++m)
            cost += cov.eigenvalues[m] * h.row(m).squaredNorm();
        return cost;
    }

    inline double rc_cost_coherent(const ArrayGeometry &geom, const SampleCovariance &cov,
                                   const std::vector<Location> &candidates, const RcOptions &opts = {})
    {
        const SteeringBlock sb = build_steering_block(geom, candidates);
        const int m_count = detail::truncated_term_count(cov, opts, 1);
        const Eigen::MatrixXcd h = detail::eigenvector_cross_products(sb, cov, m_count, 1);
        double cost = 0.0;
        for (int m = 0; m < m_count; ++m)
            cost += cov.eigenvalues[m] * std::norm(h(m, 0));
        return cost;
    }

    inline double rc_cost_single(const ArrayGeometry &geom, const SampleCovariance &cov, const Location &p,
                                 const RcOptions &opts = {})
    {
        const int num_sub = geom.num_subarrays();
        const int m_count = detail::truncated_term_count(cov, opts, 1);
        Eigen::VectorXcd h = Eigen::VectorXcd::Zero(m_count);
        for (int l = 0; l < num_sub; ++l)
        {
            const Eigen::VectorXcd steer = composite_steering(geom, l, p);
            const auto rows = cov.eigenvectors.block(cov.block_offsets[static_cast<std::size_t>(l)], 0,
                                                     cov.block_sizes[static_cast<std::size_t>(l)], m_count);
            const Eigen::RowVectorXcd t = steer.adjoint() * rows; // projections onto each eigenvector segment
            h += t.adjoint() * t(0);
        }
        double cost = 0.0;
        for (int m = 0; m < m_count; ++m)
            cost += cov.eigenvalues[m] * std::norm(h[m]);
        return cost;
    }

    // ---------------------------------------------------------------------
    // MUSIC-like and MVDR-like spectra (noncoherent signals).
    // ---------------------------------------------------------------------

    inline constexpr double kMusicDenominatorFloor = 1e-30;

    // Segment-level form: per-subarray composite steering vectors against
    // the noise-subspace eigenvector segments. The geometry overload below
    // builds the segments and delegates here.
    inline double music_spectrum(const SampleCovariance &cov, const std::vector<Eigen::VectorXcd> &steering_segments,
                                 int num_sources)
    {
        const int m = cov.size();
        if (num_sources < 1 || num_sources >= m)
            throw std::invalid_argument("music_spectrum requires 1 <= Q < M");
        if (static_cast<int>(steering_segments.size()) != cov.num_subarrays())
            throw std::invalid_argument("one steering segment per subarray expected");
        double denom = 0.0;
        for (int l = 0; l < cov.num_subarrays(); ++l)
        {
            const auto noise = cov.eigenvectors.block(cov.block_offsets[static_cast<std::size_t>(l)], num_sources,
                                                      cov.block_sizes[static_cast<std::size_t>(l)], m - num_sources);
            denom += (noise.adjoint() * steering_segments[static_cast<std::size_t>(l)]).squaredNorm();
        }
        return 1.0 / std::max(denom, kMusicDenominatorFloor);
    }

    inline double music_spectrum(const ArrayGeometry &geom, const SampleCovariance &cov, const Location &p,
                                 int num_sources)
    {
        std::vector<Eigen::VectorXcd> segments;
        segments.reserve(geom.subarrays.size());
        for (int l = 0; l < geom.num_subarrays(); ++l)
            segments.push_back(composite_steering(geom, l, p));
        return music_spectrum(cov, segments, num_sources);
    }

    // Diagonal blocks of the inverse sample covariance, computed once per
    // covariance. Diagonal loading of delta * tr(R)/M kicks in when the
    // spectrum is too spread for a direct inverse (which covers N < M,
    // where R is singular by construction).
    struct MvdrInverse
    {
        std::vector<Eigen::MatrixXcd> diagonal_blocks;
        double loading_applied = 0.0;
    };

    inline MvdrInverse mvdr_inverse_blocks(const SampleCovariance &cov, double loading_delta = 1e-6,
                                           double loading_condition = 1e12, double failure_condition = 1e14)
    {
        const int m = cov.size();
        const Eigen::VectorXd &vals = cov.eigenvalues;
        if (!(vals[0] > 0.0))
            throw SingularCovariance("sample covariance has no positive eigenvalue");
        double shift = 0.0;
        if (!(vals[m - 1] > 0.0) || vals[0] / vals[m - 1] > loading_condition)
        {
            shift = loading_delta * vals.sum() / static_cast<double>(m);
            const double lo = vals[m - 1] + shift;
            if (!(lo > 0.0) || (vals[0] + shift) / lo > failure_condition)
                throw SingularCovariance("sample covariance not invertible even after diagonal loading");
        }
        const Eigen::VectorXd inv = (vals.array() + shift).inverse().matrix();
        const Eigen::MatrixXcd full = cov.eigenvectors * inv.asDiagonal() * cov.eigenvectors.adjoint();
        MvdrInverse out;
        out.loading_applied = shift;
        out.diagonal_blocks.reserve(cov.block_sizes.size());
        for (int l = 0; l < cov.num_subarrays(); ++l)
            out.diagonal_blocks.push_back(full.block(cov.block_offsets[static_cast<std::size_t>(l)],
                                                     cov.block_offsets[static_cast<std::size_t>(l)],
                                                     cov.block_sizes[static_cast<std::size_t>(l)],
                                                     cov.block_sizes[static_cast<std::size_t>(l)]));
        return out;
    }

    inline double mvdr_spectrum(const ArrayGeometry &geom, const MvdrInverse &inv, const Location &p)
    {
        if (static_cast<int>(inv.diagonal_blocks.size()) != geom.num_subarrays())
            throw std::invalid_argument("inverse blocks do not match the geometry");
        double denom = 0.0;
        for (int l = 0; l < geom.num_subarrays(); ++l)
        {
            const Eigen::VectorXcd steer = composite_steering(geom, l, p);
            denom += std::real(steer.dot(inv.diagonal_blocks[static_cast<std::size_t>(l)] * steer));
        }
        return 1.0 / denom;
    }

    // ---------------------------------------------------------------------
    // Propagation-coefficient estimates and the exact ML cost.
    // ---------------------------------------------------------------------

    // Unconstrained least-squares fit of the full coefficient matrix for
    // one subarray: min_B || X - A B S ||_F. The diagonal structure of the
    // true coefficients is deliberately relaxed.
    inline Eigen::MatrixXcd estimate_b_relaxed(const Eigen::MatrixXcd &a, const Eigen::MatrixXcd &x,
                                               const Eigen::MatrixXcd &s)
    {
        if (a.rows() != x.rows() || s.cols() != x.cols())
            throw std::invalid_argument("estimate_b_relaxed: shape mismatch");
        const Eigen::MatrixXcd ga_inv = detail::hermitian_inverse_checked<RankDeficient>(
            a.adjoint() * a, 1e-12, "steering Gram matrix is rank deficient");
        const Eigen::MatrixXcd gs_inv = detail::hermitian_inverse_checked<RankDeficient>(
            s * s.adjoint(), 1e-12, "signal Gram matrix is rank deficient");
        return ga_inv * (a.adjoint() * x * s.adjoint()) * gs_inv;
    }

    // Which factor of the Hadamard-product Gram matrix multiplies the
    // signal correlation. Transposed is the stationary point of the
    // diagonal-constrained least-squares problem; Plain is kept for
    // comparison.
    enum class HadamardVariant
    {
        Transposed,
        Plain
    };

    namespace detail
    {
        inline Eigen::MatrixXcd hadamard_gram(const Eigen::MatrixXcd &steering_gram,
                                              const Eigen::MatrixXcd &signal_gram, HadamardVariant variant)
        {
            if (variant == HadamardVariant::Transposed)
                return steering_gram.cwiseProduct(signal_gram.transpose());
            return steering_gram.cwiseProduct(signal_gram);
        }
    } // namespace detail

    // Diagonal-constrained least-squares fit of the coefficient vector for
    // one subarray: min_b || X - A diag(b) S ||_F, solved in closed form
    // through the Hadamard-product Gram matrix.
    inline Eigen::VectorXcd estimate_b_exact(const Eigen::MatrixXcd &a, const Eigen::MatrixXcd &x,
                                             const Eigen::MatrixXcd &s,
                                             HadamardVariant variant = HadamardVariant::Transposed)
    {
        if (a.rows() != x.rows() || s.cols() != x.cols() || a.cols() != s.rows())
            throw std::invalid_argument("estimate_b_exact: shape mismatch");
        const Eigen::MatrixXcd gram = detail::hadamard_gram(a.adjoint() * a, s * s.adjoint(), variant);
        const Eigen::MatrixXcd gram_inv = detail::hermitian_inverse_checked<SingularHadamardGram>(
            gram, 1e-12, "Hadamard-product Gram matrix is singular");
        const Eigen::VectorXcd d = (a.adjoint() * x * s.adjoint()).diagonal();
        return gram_inv * d;
    }

    // Concentrated exact-ML location cost for a KNOWN signal matrix:
    // per-subarray weighted correlation between the beamformed data and
    // the signals, with the diagonal-constrained coefficients eliminated
    // in closed form. Larger is better. Intended for validation and
    // small-scale comparison; S is typically ground truth.
    inline double exact_ml_cost(const ArrayGeometry &geom, const Snapshots &x,
                                const std::vector<Location> &candidates, const Eigen::MatrixXcd &s,
                                HadamardVariant variant = HadamardVariant::Transposed)
    {
        if (s.rows() != static_cast<Eigen::Index>(candidates.size()))
            throw std::invalid_argument("exact_ml_cost: S must have one row per candidate location");
        const Eigen::MatrixXcd signal_gram = s * s.adjoint();
        double cost = 0.0;
        for (int l = 0; l < geom.num_subarrays(); ++l)
        {
            const Eigen::MatrixXcd a = steering_matrix(geom, l, candidates);
            const Eigen::MatrixXcd gram = detail::hadamard_gram(a.adjoint() * a, signal_gram, variant);
            const Eigen::MatrixXcd gram_inv = detail::hermitian_inverse_checked<SingularHadamardGram>(
                gram, 1e-12, "Hadamard-product Gram matrix is singular");
            const Eigen::VectorXcd d = (a.adjoint() * x.blocks[static_cast<std::size_t>(l)] * s.adjoint()).diagonal();
            cost += std::real(d.dot(gram_inv * d));
        }
        return cost;
    }

    // Least-squares beamformer for one subarray: the projection of the
    // principal eigenvector segment onto the steering span compensates for
    // the unknown propagation coefficients.
    inline Eigen::VectorXcd beamformer_weights(const Eigen::MatrixXcd &a, const Eigen::VectorXcd &v1_segment)
    {
        if (a.rows() != v1_segment.size())
            throw std::invalid_argument("beamformer_weights: segment length mismatch");
        const Eigen::MatrixXcd ga_inv = detail::hermitian_inverse_checked<RankDeficient>(
            a.adjoint() * a, 1e-12, "steering Gram matrix is rank deficient");
        return a * (ga_inv * (a.adjoint() * v1_segment));
    }

} // namespace pcaloc

#endif // PCALOC_ESTIMATORS_HPP
