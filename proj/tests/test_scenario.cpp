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

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "test_util.hpp"

using namespace pcaloc;
using testutil::kOmega;
using testutil::kSpeed;

namespace
{
    ScenarioConfig base_scenario(std::mt19937_64 &rng, int num_sources, SignalKind kind, int num_snapshots,
                                 double noise_variance)
    {
        ScenarioConfig cfg;
        cfg.geometry = testutil::random_geometry(rng, 3, 4, 600.0);
        for (int q = 0; q < num_sources; ++q)
            cfg.true_locations.push_back(testutil::random_location(rng, 2, -200, 200));
        cfg.signal.kind = kind;
        cfg.signal.num_sources = num_sources;
        cfg.num_snapshots = num_snapshots;
        cfg.noise_variance = noise_variance;
        cfg.phase_offsets.assign(3, 0.0);
        return cfg;
    }
} // namespace

TEST_CASE("generate_signals - coherent rows are identical")
{
    std::mt19937_64 rng(201);
    SignalModel model;
    model.kind = SignalKind::Coherent;
    model.num_sources = 3;
    const Eigen::MatrixXcd s = generate_signals(model, 64, rng);
    REQUIRE(s.rows() == 3);
    CHECK((s.row(1) - s.row(0)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((s.row(2) - s.row(0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("generate_signals - white noncoherent sample correlation")
{
    std::mt19937_64 rng(202);
    SignalModel model;
    model.kind = SignalKind::Noncoherent;
    model.num_sources = 3;
    const int n = 100000;
    const Eigen::MatrixXcd s = generate_signals(model, n, rng);
    const Eigen::MatrixXcd sample_corr = s * s.adjoint() / static_cast<double>(n);
    CHECK((sample_corr - Eigen::MatrixXcd::Identity(3, 3)).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("generate_signals - shapes, power and correlation errors")
{
    std::mt19937_64 rng(203);
    SignalModel model;
    model.kind = SignalKind::Single;
    model.num_sources = 1;
    model.power = 2.5;
    const Eigen::MatrixXcd one = generate_signals(model, 1, rng);
    CHECK(one.rows() == 1);
    CHECK(one.cols() == 1);

    const Eigen::MatrixXcd many = generate_signals(model, 50000, rng);
    CHECK(many.squaredNorm() / 50000.0 == Catch::Approx(2.5).margin(0.1));

    SignalModel bad;
    bad.kind = SignalKind::Noncoherent;
    bad.num_sources = 2;
    bad.correlation = Eigen::MatrixXcd(2, 2);
    bad.correlation << cxd(1, 0), cxd(0.5, 0.2),
                       cxd(0.5, 0.3), cxd(1, 0); // not Hermitian
    std::mt19937_64 rng2(204);
    CHECK_THROWS_AS(generate_signals(bad, 8, rng2), InvalidCorrelation);

    bad.correlation << cxd(1, 0), cxd(2, 0),
                       cxd(2, 0), cxd(1, 0); // indefinite
    CHECK_THROWS_AS(generate_signals(bad, 8, rng2), InvalidCorrelation);

    bad.correlation << cxd(1, 0), cxd(1, 0),
                       cxd(1, 0), cxd(1, 0); // rank 1: not allowed for noncoherent
    CHECK_THROWS_AS(generate_signals(bad, 8, rng2), InvalidCorrelation);
}

TEST_CASE("synthesize_snapshots - noiseless model identity")
{
    std::mt19937_64 rng(205);
    ScenarioConfig cfg = base_scenario(rng, 2, SignalKind::Noncoherent, 32, 0.0);
    std::mt19937_64 synth_rng(cfg.rng_seed);
    const SynthesisResult out = synthesize_snapshots(cfg, synth_rng);

    for (int l = 0; l < cfg.geometry.num_subarrays(); ++l)
    {
        const Eigen::MatrixXcd a = steering_matrix(out.true_geometry, l, cfg.true_locations);
        const Eigen::MatrixXcd model = a * out.coefficients.b.row(l).transpose().asDiagonal() * out.signals;
        const auto &block = out.snapshots.blocks[static_cast<std::size_t>(l)];
        CHECK((block - model).norm() < 1e-10 * block.norm());
    }
    CHECK(out.coefficients.b.cwiseAbs().minCoeff() > 0.0);
}

TEST_CASE("synthesize_snapshots - noiseless single source is a rank-1 outer product")
{
    std::mt19937_64 rng(206);
    ScenarioConfig cfg;
    std::vector<SubarrayGeometry> subs = {
        testutil::random_subarray(rng, 2, 4, Eigen::Vector2d(-300.0, 0.0)),
        testutil::random_subarray(rng, 2, 5, Eigen::Vector2d(300.0, 50.0))};
    cfg.geometry = make_array_geometry(std::move(subs), kOmega, kSpeed);
    cfg.true_locations = {Location{{40.0, 120.0}}};
    cfg.signal.kind = SignalKind::Single;
    cfg.signal.num_sources = 1;
    cfg.num_snapshots = 16;
    cfg.phase_offsets = {0.0, 0.0};

    std::mt19937_64 synth_rng(7);
    const SynthesisResult out = synthesize_snapshots(cfg, synth_rng);
    for (int l = 0; l < 2; ++l)
    {
        const Eigen::VectorXcd steer = composite_steering(cfg.geometry, l, cfg.true_locations[0]);
        const Eigen::MatrixXcd expected = out.coefficients.b(l, 0) * steer * out.signals.row(0);
        CHECK((out.snapshots.blocks[static_cast<std::size_t>(l)] - expected).cwiseAbs().maxCoeff() < 1e-12);

        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(out.snapshots.blocks[static_cast<std::size_t>(l)]);
        CHECK(svd.singularValues()[1] < 1e-12 * svd.singularValues()[0]);
    }
}

TEST_CASE("synthesize_snapshots - noise variance close to requested")
{
    std::mt19937_64 rng(207);
    ScenarioConfig cfg = base_scenario(rng, 1, SignalKind::Single, 4000, 0.37);
    std::mt19937_64 synth_rng(11);
    const SynthesisResult noisy = synthesize_snapshots(cfg, synth_rng);

    // Same draws up to the noise step: replicate the noiseless part.
    std::mt19937_64 synth_rng2(11);
    ScenarioConfig clean = cfg;
    clean.noise_variance = 0.0;
    const SynthesisResult noiseless = synthesize_snapshots(clean, synth_rng2);

    const Eigen::MatrixXcd noise = noisy.snapshots.stacked - noiseless.snapshots.stacked;
    const double var = noise.squaredNorm() / static_cast<double>(noise.size());
    CHECK(var == Catch::Approx(0.37).epsilon(0.05));
}

TEST_CASE("synthesize_snapshots - determinism and rigid perturbation")
{
    std::mt19937_64 rng(208);
    ScenarioConfig cfg = base_scenario(rng, 2, SignalKind::Noncoherent, 20, 0.1);

    std::mt19937_64 r1(5), r2(5);
    const SynthesisResult a = synthesize_snapshots(cfg, r1);
    const SynthesisResult b = synthesize_snapshots(cfg, r2);
    CHECK((a.snapshots.stacked - b.snapshots.stacked).cwiseAbs().maxCoeff() == 0.0);

    cfg.location_perturbation_std = 5.0;
    std::mt19937_64 r3(5);
    const SynthesisResult c = synthesize_snapshots(cfg, r3);
    for (int l = 0; l < cfg.geometry.num_subarrays(); ++l)
    {
        const auto &assumed = cfg.geometry.subarrays[static_cast<std::size_t>(l)];
        const auto &actual = c.true_geometry.subarrays[static_cast<std::size_t>(l)];
        const Eigen::VectorXd shift = actual.reference_position - assumed.reference_position;
        CHECK(shift.norm() > 0.0);
        // rigid displacement: every sensor moves by the same shift
        const Eigen::MatrixXd moved = actual.sensor_positions.colwise() - shift;
        CHECK((moved - assumed.sensor_positions).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("normalize_power - unit block power, idempotent, scale invariant")
{
    std::mt19937_64 rng(209);
    std::vector<Eigen::MatrixXcd> blocks = {testutil::random_complex(rng, 4, 10),
                                            testutil::random_complex(rng, 3, 10)};
    const Snapshots x = Snapshots::from_blocks(blocks);
    const Snapshots normalized = normalize_power(x);
    for (const auto &blk : normalized.blocks)
        CHECK(std::abs(blk.squaredNorm() - 1.0) < 1e-12);

    const Snapshots twice = normalize_power(normalized);
    CHECK((twice.stacked - normalized.stacked).cwiseAbs().maxCoeff() < 1e-12);

    blocks[0] *= 7.0;
    const Snapshots scaled = normalize_power(Snapshots::from_blocks(blocks));
    CHECK((scaled.stacked - normalized.stacked).cwiseAbs().maxCoeff() < 1e-12);

    blocks[1].setZero();
    CHECK_THROWS_AS(normalize_power(Snapshots::from_blocks(blocks)), ZeroBlock);
}

TEST_CASE("sample_covariance - outer product, blocks, rank")
{
    std::mt19937_64 rng(210);

    SECTION("single snapshot gives a rank-1 outer product")
    {
        const Eigen::MatrixXcd x0 = testutil::random_complex(rng, 5, 1);
        const Snapshots x = Snapshots::from_blocks({x0.topRows(2), x0.bottomRows(3)});
        const SampleCovariance cov = sample_covariance(x);
        CHECK((cov.matrix - x0 * x0.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(cov.eigenvalues[0] == Catch::Approx(x0.squaredNorm()).epsilon(1e-12));
        CHECK(std::abs(cov.eigenvalues[1]) < 1e-12 * cov.eigenvalues[0]);
    }

    SECTION("blocks match the per-subarray products; Hermitian PSD spectrum")
    {
        const Snapshots x = Snapshots::from_blocks({testutil::random_complex(rng, 4, 9),
                                                    testutil::random_complex(rng, 3, 9)});
        const SampleCovariance cov = sample_covariance(x);
        CHECK((cov.block(0, 0) - x.blocks[0] * x.blocks[0].adjoint()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((cov.block(1, 1) - x.blocks[1] * x.blocks[1].adjoint()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((cov.block(0, 1) - x.blocks[0] * x.blocks[1].adjoint()).cwiseAbs().maxCoeff() < 1e-12);

        CHECK((cov.matrix - cov.matrix.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(cov.eigenvalues.minCoeff() > -1e-10 * cov.eigenvalues[0]);
    }

    SECTION("noiseless noncoherent scenario has rank Q")
    {
        std::mt19937_64 scen_rng(211);
        ScenarioConfig cfg = base_scenario(scen_rng, 2, SignalKind::Noncoherent, 24, 0.0);
        std::mt19937_64 synth_rng(3);
        const SynthesisResult out = synthesize_snapshots(cfg, synth_rng);
        const SampleCovariance cov = sample_covariance(out.snapshots);
        CHECK(cov.eigenvalues[1] > 1e-10 * cov.eigenvalues[0]);
        CHECK(cov.eigenvalues[2] < 1e-10 * cov.eigenvalues[0]);
    }

    SECTION("noiseless coherent scenario stays within rank Q (observed: rank 1)")
    {
        std::mt19937_64 scen_rng(212);
        ScenarioConfig cfg = base_scenario(scen_rng, 2, SignalKind::Coherent, 24, 0.0);
        std::mt19937_64 synth_rng(4);
        const SynthesisResult out = synthesize_snapshots(cfg, synth_rng);
        const SampleCovariance cov = sample_covariance(out.snapshots);
        CHECK(cov.eigenvalues[2] < 1e-10 * cov.eigenvalues[0]); // rank <= Q = 2
        CHECK(cov.eigenvalues[1] < 1e-10 * cov.eigenvalues[0]); // measured: collapses to rank 1
    }
}

TEST_CASE("rank-1 covariance: block principal eigenvectors equal the segments")
{
    std::mt19937_64 rng(213);
    const std::vector<int> sizes = {4, 3, 5};
    const int m = 12;
    Eigen::VectorXcd v1 = testutil::random_complex(rng, m, 1);
    v1.normalize();
    const double sigma2 = 0.05;
    const Eigen::MatrixXcd r = v1 * v1.adjoint() + sigma2 * Eigen::MatrixXcd::Identity(m, m);
    const SampleCovariance cov = SampleCovariance::from_matrix(r, sizes);

    int offset = 0;
    for (std::size_t l = 0; l < sizes.size(); ++l)
    {
        const Eigen::MatrixXcd block = cov.block(static_cast<int>(l), static_cast<int>(l));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(block);
        const Eigen::VectorXcd principal = eig.eigenvectors().col(sizes[l] - 1);
        Eigen::VectorXcd segment = v1.segment(offset, sizes[l]);
        segment.normalize();
        // compare up to a unit phase
        const cxd phase = segment.dot(principal);
        CHECK(std::abs(std::abs(phase) - 1.0) < 1e-10);
        CHECK((principal - segment * (phase / std::abs(phase))).cwiseAbs().maxCoeff() < 1e-10);
        offset += sizes[l];
    }
}

TEST_CASE("snapshot files - binary round trip and CSV export")
{
    std::mt19937_64 rng(214);
    const Snapshots x = Snapshots::from_blocks({testutil::random_complex(rng, 4, 6),
                                                testutil::random_complex(rng, 2, 6),
                                                testutil::random_complex(rng, 5, 6)});
    const std::string bin = "snapshots_test.pcsn";
    save_snapshots_binary(x, bin);
    const Snapshots y = load_snapshots_binary(bin);
    REQUIRE(y.num_subarrays() == 3);
    REQUIRE(y.block_sizes() == x.block_sizes());
    CHECK((y.stacked - x.stacked).cwiseAbs().maxCoeff() == 0.0);

    const std::string csv = "snapshots_test.csv";
    save_snapshots_csv(x, csv);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "subarray,sensor,snapshot,re,im");
    std::size_t lines = 0;
    for (std::string line; std::getline(in, line);)
        ++lines;
    CHECK(lines == static_cast<std::size_t>(11 * 6));
    std::remove(bin.c_str());
    std::remove(csv.c_str());
}

TEST_CASE("scenario validation failures")
{
    std::mt19937_64 rng(215);
    ScenarioConfig cfg = base_scenario(rng, 2, SignalKind::Noncoherent, 16, 0.0);

    ScenarioConfig wrong_q = cfg;
    wrong_q.signal.num_sources = 3;
    std::mt19937_64 r(1);
    CHECK_THROWS_AS(synthesize_snapshots(wrong_q, r), ConfigError);

    ScenarioConfig bad_offsets = cfg;
    bad_offsets.phase_offsets = {0.0};
    CHECK_THROWS_AS(synthesize_snapshots(bad_offsets, r), ConfigError);

    ScenarioConfig bad_n = cfg;
    bad_n.num_snapshots = 0;
    CHECK_THROWS_AS(synthesize_snapshots(bad_n, r), ConfigError);
}
