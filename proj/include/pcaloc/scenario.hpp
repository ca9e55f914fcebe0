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

#ifndef PCALOC_SCENARIO_HPP
#define PCALOC_SCENARIO_HPP

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pcaloc/geometry.hpp"
#include "pcaloc/types.hpp"

namespace pcaloc
{
    enum class SignalKind
    {
        Noncoherent, // arbitrary correlation, full-rank signal covariance
        Coherent,    // all sources emit the same waveform (coherent multipath)
        Single       // one source
    };

    inline std::string to_string(SignalKind k)
    {
        switch (k)
        {
        case SignalKind::Noncoherent: return "noncoherent";
        case SignalKind::Coherent: return "coherent";
        case SignalKind::Single: return "single";
        }
        return "?";
    }

    struct SignalModel
    {
        SignalKind kind = SignalKind::Single;
        int num_sources = 1; // Q
        // Q x Q Hermitian PSD correlation of the source waveforms; used by
        // the noncoherent kind only. Empty means identity.
        Eigen::MatrixXcd correlation;
        double power = 1.0; // expected per-source sample power
    };

    // Unknown complex propagation coefficients, one row per subarray, one
    // column per source. The generator never produces a zero entry (a zero
    // would silently remove a source from a subarray); the estimators make
    // no such assumption.
    struct PropagationCoefficients
    {
        Eigen::MatrixXcd b; // L x Q
    };

    // Sampled array output: per-subarray blocks plus the stacked matrix,
    // kept consistent (stacked is the row concatenation of the blocks).
    struct Snapshots
    {
        std::vector<Eigen::MatrixXcd> blocks; // M_l x N each
        Eigen::MatrixXcd stacked;             // M x N

        int num_snapshots() const { return static_cast<int>(stacked.cols()); }
        int total_sensors() const { return static_cast<int>(stacked.rows()); }
        int num_subarrays() const { return static_cast<int>(blocks.size()); }

        std::vector<int> block_sizes() const
        {
            std::vector<int> sizes;
            sizes.reserve(blocks.size());
            for (const auto &blk : blocks)
                sizes.push_back(static_cast<int>(blk.rows()));
            return sizes;
        }

        static Snapshots from_blocks(std::vector<Eigen::MatrixXcd> blocks)
        {
            if (blocks.empty())
                throw std::invalid_argument("snapshots need at least one block");
            const Eigen::Index n = blocks.front().cols();
            Eigen::Index m = 0;
            for (const auto &blk : blocks)
            {
                if (blk.cols() != n)
                    throw std::invalid_argument("snapshot blocks disagree on the snapshot count");
                m += blk.rows();
            }
            Eigen::MatrixXcd stacked(m, n);
            Eigen::Index row = 0;
            for (const auto &blk : blocks)
            {
                stacked.middleRows(row, blk.rows()) = blk;
                row += blk.rows();
            }
            return Snapshots{std::move(blocks), std::move(stacked)};
        }
    };

    struct ScenarioConfig
    {
        ArrayGeometry geometry;
        std::vector<Location> true_locations;
        SignalModel signal;
        int num_snapshots = 1;                 // N
        double noise_variance = 0.0;           // per complex sample, per sensor
        double location_perturbation_std = 0.0; // rigid per-subarray displacement (meters)
        // Per-subarray phase offsets in radians folded into b; empty = draw
        // uniformly at random.
        std::vector<double> phase_offsets;
        // Draw b with a common per-subarray phase (coherent rank-1 premise
        // exercised in tests); default fully random.
        bool align_coherent_b = false;
        std::uint64_t rng_seed = 0;
    };

    inline void validate(const ScenarioConfig &cfg)
    {
        if (cfg.geometry.num_subarrays() < 2)
            throw ConfigError("geometry must have at least 2 subarrays");
        if (cfg.true_locations.empty())
            throw ConfigError("scenario needs at least one true location");
        if (static_cast<int>(cfg.true_locations.size()) != cfg.signal.num_sources)
            throw ConfigError("signal.Q must equal the number of true locations");
        for (const auto &p : cfg.true_locations)
            if (p.dim() != cfg.geometry.dim())
                throw ConfigError("true location dimension does not match the geometry");
        if (cfg.signal.kind == SignalKind::Single && cfg.signal.num_sources != 1)
            throw ConfigError("signal kind 'single' requires Q = 1");
        if (cfg.num_snapshots < 1)
            throw ConfigError("num_snapshots must be >= 1");
        if (cfg.noise_variance < 0.0)
            throw ConfigError("noise_variance must be >= 0");
        if (cfg.location_perturbation_std < 0.0)
            throw ConfigError("location_perturbation_std must be >= 0");
        if (!cfg.phase_offsets.empty() &&
            static_cast<int>(cfg.phase_offsets.size()) != cfg.geometry.num_subarrays())
            throw ConfigError("phase_offsets must list one value per subarray");
        if (!(cfg.signal.power > 0.0))
            throw ConfigError("signal.power must be positive");
    }

    // --- random draws ----------------------------------------------------

    // Circularly symmetric complex Gaussian matrix, per-entry variance
    // `variance` (real and imaginary parts are independent N(0, variance/2)).
    // Entries are drawn column by column, real part before imaginary part.
    inline Eigen::MatrixXcd complex_gaussian(int rows, int cols, double variance, std::mt19937_64 &rng)
    {
        Eigen::MatrixXcd out(rows, cols);
        std::normal_distribution<double> gauss(0.0, std::sqrt(variance / 2.0));
        for (int j = 0; j < cols; ++j)
            for (int i = 0; i < rows; ++i)
            {
                const double re = gauss(rng);
                const double im = gauss(rng);
                out(i, j) = cxd(re, im);
            }
        return out;
    }

    namespace detail
    {
        // Hermitian PSD square root; throws InvalidCorrelation on asymmetry
        // or a negative spectrum. require_full_rank additionally rejects
        // rank-deficient inputs.
        inline Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd &c, bool require_full_rank)
        {
            const double scale = std::max(c.norm(), 1e-300);
            if ((c - c.adjoint()).norm() > 1e-10 * scale)
                throw InvalidCorrelation("correlation matrix is not Hermitian");
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(c);
            const Eigen::VectorXd vals = eig.eigenvalues();
            const double vmax = vals.maxCoeff();
            if (vmax <= 0.0)
                throw InvalidCorrelation("correlation matrix has no positive eigenvalue");
            if (vals.minCoeff() < -1e-10 * vmax)
                throw InvalidCorrelation("correlation matrix is not positive semidefinite");
            if (require_full_rank && vals.minCoeff() < 1e-10 * vmax)
                throw InvalidCorrelation("noncoherent correlation matrix must have full rank");
            Eigen::VectorXd root = vals.cwiseMax(0.0).cwiseSqrt();
            return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().adjoint();
        }
    } // namespace detail

    // --- signals ----------------------------------------------------------

    // Zero-mean complex Gaussian source waveforms, Q x N. Noncoherent rows
    // follow the requested correlation scaled to the model power; coherent
    // rows are identical copies of one waveform.
    inline Eigen::MatrixXcd generate_signals(const SignalModel &model, int num_snapshots, std::mt19937_64 &rng)
    {
        if (num_snapshots < 1)
            throw std::invalid_argument("num_snapshots must be >= 1");
        const int q = model.num_sources;
        if (q < 1)
            throw std::invalid_argument("signal model must have at least one source");

        switch (model.kind)
        {
        case SignalKind::Single:
            if (q != 1)
                throw std::invalid_argument("single-signal model requires Q = 1");
            return complex_gaussian(1, num_snapshots, model.power, rng);
        case SignalKind::Coherent:
        {
            Eigen::MatrixXcd s(q, num_snapshots);
            const Eigen::MatrixXcd waveform = complex_gaussian(1, num_snapshots, model.power, rng);
            for (int r = 0; r < q; ++r)
                s.row(r) = waveform.row(0);
            return s;
        }
        case SignalKind::Noncoherent:
        {
            Eigen::MatrixXcd corr = model.correlation;
            if (corr.size() == 0)
                corr = Eigen::MatrixXcd::Identity(q, q);
            if (corr.rows() != q || corr.cols() != q)
                throw InvalidCorrelation("correlation matrix must be Q x Q");
            const Eigen::MatrixXcd root = detail::psd_sqrt(corr, /*require_full_rank=*/true);
            return std::sqrt(model.power) * (root * complex_gaussian(q, num_snapshots, 1.0, rng));
        }
        }
        throw std::logic_error("unknown signal kind");
    }

    // Population covariance of one waveform sample vector s(t), Q x Q.
    inline Eigen::MatrixXcd model_covariance(const SignalModel &model)
    {
        const int q = model.num_sources;
        switch (model.kind)
        {
        case SignalKind::Single:
            return Eigen::MatrixXcd::Constant(1, 1, cxd(model.power, 0.0));
        case SignalKind::Coherent:
            return model.power * Eigen::MatrixXcd::Ones(q, q);
        case SignalKind::Noncoherent:
            if (model.correlation.size() == 0)
                return model.power * Eigen::MatrixXcd::Identity(q, q);
            return model.power * model.correlation;
        }
        throw std::logic_error("unknown signal kind");
    }

    // --- synthesis ---------------------------------------------------------

    struct SynthesisResult
    {
        Snapshots snapshots;
        PropagationCoefficients coefficients; // ground-truth b (phase offsets folded in)
        Eigen::MatrixXcd signals;             // ground-truth S
        // Geometry the data was actually generated with; differs from the
        // configured (assumed) geometry when location_perturbation_std > 0.
        ArrayGeometry true_geometry;
    };

    inline SynthesisResult synthesize_snapshots(const ScenarioConfig &cfg, std::mt19937_64 &rng)
    {
        validate(cfg);
        const int num_sub = cfg.geometry.num_subarrays();
        const int q = cfg.signal.num_sources;
        const int n = cfg.num_snapshots;

        // Rigid per-subarray displacement: intra-subarray calibration stays
        // exact, only the assumed subarray placement is off.
        ArrayGeometry truth = cfg.geometry;
        if (cfg.location_perturbation_std > 0.0)
        {
            std::normal_distribution<double> gauss(0.0, cfg.location_perturbation_std);
            for (auto &sub : truth.subarrays)
            {
                Eigen::VectorXd shift(sub.dim());
                for (int d = 0; d < sub.dim(); ++d)
                    shift[d] = gauss(rng);
                sub.sensor_positions.colwise() += shift;
                sub.reference_position += shift;
            }
        }

        // Propagation coefficients: magnitude in [0.5, 1.5), phase uniform;
        // optionally a common per-subarray phase.
        std::uniform_real_distribution<double> mag(0.5, 1.5);
        std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
        Eigen::MatrixXcd b(num_sub, q);
        for (int l = 0; l < num_sub; ++l)
        {
            const double common = cfg.align_coherent_b ? angle(rng) : 0.0;
            for (int j = 0; j < q; ++j)
            {
                const double phase = cfg.align_coherent_b ? common : angle(rng);
                b(l, j) = std::polar(mag(rng), phase);
            }
        }

        // Per-subarray phase offsets fold into b.
        for (int l = 0; l < num_sub; ++l)
        {
            const double offset = cfg.phase_offsets.empty() ? angle(rng) : cfg.phase_offsets[static_cast<std::size_t>(l)];
            b.row(l) *= std::polar(1.0, offset);
        }

        const Eigen::MatrixXcd s = generate_signals(cfg.signal, n, rng);

        std::vector<Eigen::MatrixXcd> blocks;
        blocks.reserve(static_cast<std::size_t>(num_sub));
        for (int l = 0; l < num_sub; ++l)
        {
            const Eigen::MatrixXcd a = steering_matrix(truth, l, cfg.true_locations);
            Eigen::MatrixXcd x = a * b.row(l).transpose().asDiagonal() * s;
            if (cfg.noise_variance > 0.0)
                x += complex_gaussian(static_cast<int>(x.rows()), n, cfg.noise_variance, rng);
            blocks.push_back(std::move(x));
        }

        return SynthesisResult{Snapshots::from_blocks(std::move(blocks)),
                               PropagationCoefficients{std::move(b)}, s, std::move(truth)};
    }

    // Scale each block to unit total power, tr(X_l X_l^H) = 1.
    inline Snapshots normalize_power(const Snapshots &x)
    {
        std::vector<Eigen::MatrixXcd> blocks;
        blocks.reserve(x.blocks.size());
        for (std::size_t l = 0; l < x.blocks.size(); ++l)
        {
            const double power = x.blocks[l].squaredNorm();
            if (power <= 0.0)
                throw ZeroBlock("snapshot block " + std::to_string(l) + " is identically zero");
            blocks.push_back(x.blocks[l] / std::sqrt(power));
        }
        return Snapshots::from_blocks(std::move(blocks));
    }

    // --- sample covariance --------------------------------------------------

    // R = X X^H with block access and a cached eigendecomposition,
    // eigenvalues sorted descending. Ties leave the eigenvector choice to
    // the solver; downstream uses go through span projectors, which are
    // well defined either way.
    struct SampleCovariance
    {
        Eigen::MatrixXcd matrix; // M x M Hermitian
        std::vector<int> block_sizes;
        std::vector<int> block_offsets;      // prefix sums of block_sizes
        Eigen::VectorXd eigenvalues;         // descending
        Eigen::MatrixXcd eigenvectors;       // columns ordered like eigenvalues

        int size() const { return static_cast<int>(matrix.rows()); }
        int num_subarrays() const { return static_cast<int>(block_sizes.size()); }

        Eigen::Block<const Eigen::MatrixXcd> block(int l, int k) const
        {
            return matrix.block(block_offsets[static_cast<std::size_t>(l)],
                                block_offsets[static_cast<std::size_t>(k)],
                                block_sizes[static_cast<std::size_t>(l)],
                                block_sizes[static_cast<std::size_t>(k)]);
        }

        // Rows of eigenvector column m belonging to subarray l.
        Eigen::VectorXcd eigenvector_segment(int m, int l) const
        {
            return eigenvectors.col(m).segment(block_offsets[static_cast<std::size_t>(l)],
                                               block_sizes[static_cast<std::size_t>(l)]);
        }

        static SampleCovariance from_matrix(Eigen::MatrixXcd r, std::vector<int> sizes)
        {
            int total = 0;
            for (int s : sizes)
            {
                if (s < 1)
                    throw std::invalid_argument("block sizes must be positive");
                total += s;
            }
            if (r.rows() != r.cols() || r.rows() != total)
                throw std::invalid_argument("covariance size does not match the block partition");
            // Symmetrize before decomposing; X X^H is Hermitian up to rounding.
            Eigen::MatrixXcd sym = 0.5 * (r + r.adjoint());
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(sym);
            if (eig.info() != Eigen::Success)
                throw std::runtime_error("eigendecomposition of the sample covariance failed");
            const int m = static_cast<int>(sym.rows());
            Eigen::VectorXd vals(m);
            Eigen::MatrixXcd vecs(m, m);
            for (int i = 0; i < m; ++i) // solver returns ascending order
            {
                vals[i] = eig.eigenvalues()[m - 1 - i];
                vecs.col(i) = eig.eigenvectors().col(m - 1 - i);
            }
            std::vector<int> offsets(sizes.size(), 0);
            for (std::size_t l = 1; l < sizes.size(); ++l)
                offsets[l] = offsets[l - 1] + sizes[l - 1];
            return SampleCovariance{std::move(sym), std::move(sizes), std::move(offsets),
                                    std::move(vals), std::move(vecs)};
        }
    };

    inline SampleCovariance sample_covariance(const Snapshots &x)
    {
        return SampleCovariance::from_matrix(x.stacked * x.stacked.adjoint(), x.block_sizes());
    }

    // Analytic array covariance for a known scenario: columns of the
    // composite response stack b_{l,q} a_l(p_q); R = Phi R_s Phi^H + sigma^2 I.
    // Useful for population-level checks where no sampling error is wanted.
    inline Eigen::MatrixXcd population_covariance(const ArrayGeometry &geom,
                                                  const std::vector<Location> &locations,
                                                  const Eigen::MatrixXcd &b,
                                                  const Eigen::MatrixXcd &signal_covariance,
                                                  double noise_variance)
    {
        const int q = static_cast<int>(locations.size());
        const int m = geom.total_sensors();
        if (b.rows() != geom.num_subarrays() || b.cols() != q)
            throw std::invalid_argument("b must be L x Q");
        if (signal_covariance.rows() != q || signal_covariance.cols() != q)
            throw std::invalid_argument("signal covariance must be Q x Q");
        Eigen::MatrixXcd phi(m, q);
        int row = 0;
        for (int l = 0; l < geom.num_subarrays(); ++l)
        {
            const int ml = geom.subarrays[static_cast<std::size_t>(l)].num_sensors();
            for (int j = 0; j < q; ++j)
                phi.col(j).segment(row, ml) = b(l, j) * composite_steering(geom, l, locations[j]);
            row += ml;
        }
        return phi * signal_covariance * phi.adjoint() +
               noise_variance * Eigen::MatrixXcd::Identity(m, m);
    }

} // namespace pcaloc

#endif // PCALOC_SCENARIO_HPP
