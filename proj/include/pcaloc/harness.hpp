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

#ifndef PCALOC_HARNESS_HPP
#define PCALOC_HARNESS_HPP

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "pcaloc/assignment.hpp"
#include "pcaloc/estimators.hpp"
#include "pcaloc/scenario.hpp"
#include "pcaloc/search.hpp"

namespace pcaloc
{
    enum class EstimatorKind
    {
        RML,    // relaxed maximum likelihood (regime chosen by the signal kind)
        RC,     // reduced-complexity signal-subspace cost
        MUSIC,  // noise-subspace spectrum (noncoherent signals)
        MVDR,   // inverse-covariance spectrum
        ExactML // exact-ML cost fed with the ground-truth signals (oracle)
    };

    inline std::string to_string(EstimatorKind k)
    {
        switch (k)
        {
        case EstimatorKind::RML: return "RML";
        case EstimatorKind::RC: return "RC";
        case EstimatorKind::MUSIC: return "MUSIC";
        case EstimatorKind::MVDR: return "MVDR";
        case EstimatorKind::ExactML: return "ExactML";
        }
        return "?";
    }

    enum class SweepAxis
    {
        NoiseVariance,
        SnapshotCount,
        LocationPerturbationStd
    };

    inline std::string to_string(SweepAxis a)
    {
        switch (a)
        {
        case SweepAxis::NoiseVariance: return "noise_variance";
        case SweepAxis::SnapshotCount: return "N";
        case SweepAxis::LocationPerturbationStd: return "location_perturbation_std";
        }
        return "?";
    }

    struct SweepSpec
    {
        SweepAxis axis = SweepAxis::NoiseVariance;
        std::vector<double> values;
    };

    struct ExperimentConfig
    {
        ScenarioConfig scenario;
        std::vector<EstimatorKind> estimators;
        SearchGrid grid;
        SweepSpec sweep;
        int trials = 1;
        std::string output_dir = "out";
        int threads = 1;
        // Peak-picking separation for the spectrum estimators; 0 = one grid
        // cell diagonal.
        double peak_min_separation = 0.0;
        // Errors beyond this many grid-cell diagonals count as failures,
        // not RMSE contributors.
        double failure_radius_cells = 10.0;
        ApOptions ap;
        RcOptions rc{1e-12}; // eigenvalue truncation on for Monte-Carlo runs
    };

    inline void validate(const ExperimentConfig &cfg)
    {
        validate(cfg.scenario);
        if (cfg.estimators.empty())
            throw ConfigError("at least one estimator must be configured");
        if (cfg.grid.dim() != cfg.scenario.geometry.dim())
            throw ConfigError("grid dimension does not match the geometry");
        if (cfg.trials < 1)
            throw ConfigError("trials must be >= 1");
        if (cfg.threads < 1)
            throw ConfigError("threads must be >= 1");
        if (cfg.sweep.values.empty())
            throw ConfigError("sweep.values must not be empty");
        if (cfg.sweep.values.size() >= 2)
        {
            const bool increasing = cfg.sweep.values[1] > cfg.sweep.values[0];
            for (std::size_t i = 1; i < cfg.sweep.values.size(); ++i)
            {
                const double prev = cfg.sweep.values[i - 1];
                const double cur = cfg.sweep.values[i];
                if ((increasing && cur <= prev) || (!increasing && cur >= prev))
                    throw ConfigError("sweep.values must be strictly monotone");
            }
        }
        if (cfg.sweep.axis == SweepAxis::SnapshotCount)
            for (double v : cfg.sweep.values)
                if (v < 1.0)
                    throw ConfigError("snapshot-count sweep values must be >= 1");
        for (EstimatorKind k : cfg.estimators)
            if (k == EstimatorKind::MUSIC &&
                cfg.scenario.signal.num_sources >= cfg.scenario.geometry.total_sensors())
                throw ConfigError("MUSIC requires Q < M");
        if (cfg.failure_radius_cells <= 0.0)
            throw ConfigError("failure_radius_cells must be positive");
    }

    struct TrialRecord
    {
        double sweep_value = 0.0;
        int trial = 0;
        EstimatorKind estimator = EstimatorKind::RML;
        std::vector<Location> estimates;
        std::vector<double> errors_m; // per true source, optimal assignment, inf when unmatched
        double time_s = 0.0;
        std::string flags; // ';'-separated: not_converged, short_peaks, error:<Type>
    };

    namespace detail
    {
        inline std::string error_label(const Error &e)
        {
            if (dynamic_cast<const ZeroDistance *>(&e)) return "ZeroDistance";
            if (dynamic_cast<const DuplicateLocation *>(&e)) return "DuplicateLocation";
            if (dynamic_cast<const RankDeficientSteering *>(&e)) return "RankDeficientSteering";
            if (dynamic_cast<const RankDeficient *>(&e)) return "RankDeficient";
            if (dynamic_cast<const InvalidCorrelation *>(&e)) return "InvalidCorrelation";
            if (dynamic_cast<const ZeroBlock *>(&e)) return "ZeroBlock";
            if (dynamic_cast<const SingularCovariance *>(&e)) return "SingularCovariance";
            if (dynamic_cast<const SingularHadamardGram *>(&e)) return "SingularHadamardGram";
            if (dynamic_cast<const AllInvalid *>(&e)) return "AllInvalid";
            if (dynamic_cast<const NoProgress *>(&e)) return "NoProgress";
            if (dynamic_cast<const ConfigError *>(&e)) return "ConfigError";
            if (dynamic_cast<const IoError *>(&e)) return "IoError";
            return "Error";
        }

        inline void append_flag(std::string &flags, const std::string &flag)
        {
            if (!flags.empty())
                flags += ';';
            flags += flag;
        }

        struct EstimateOutcome
        {
            std::vector<Location> locations;
            std::string flags;
        };

        inline EstimateOutcome run_estimator(EstimatorKind kind, const ExperimentConfig &cfg,
                                             const ScenarioConfig &scen, const SampleCovariance &cov,
                                             const SynthesisResult &truth)
        {
            const ArrayGeometry &geom = cfg.scenario.geometry; // assumed geometry
            const int q = scen.signal.num_sources;
            const SignalKind sk = scen.signal.kind;
            ApOptions ap = cfg.ap;
            ap.threads = 1; // parallelism lives at the trial level
            EstimateOutcome out;

            const auto run_ap = [&](const MultiCost &cost) {
                const ApState state = alternating_projection(cost, cfg.grid, q, ap);
                if (!state.converged)
                    append_flag(out.flags, "not_converged");
                out.locations = state.current;
            };

            const auto picked_peaks = [&](const std::vector<double> &values) {
                const double sep = cfg.peak_min_separation > 0.0 ? cfg.peak_min_separation : cfg.grid.cell_diagonal();
                PeakList peaks = pick_peaks(values, cfg.grid, q, sep);
                if (peaks.short_list)
                    append_flag(out.flags, "short_peaks");
                out.locations = std::move(peaks.locations);
            };

            switch (kind)
            {
            case EstimatorKind::RML:
                if (q == 1)
                    out.locations = {grid_argmax([&](const Location &p) { return rml_cost_single(geom, cov, p); },
                                                 cfg.grid, 1)
                                         .location};
                else if (sk == SignalKind::Coherent)
                    run_ap([&](const std::vector<Location> &c) { return rml_cost_coherent(geom, cov, c); });
                else
                    run_ap([&](const std::vector<Location> &c) { return rml_cost_noncoherent(geom, cov, c); });
                break;
            case EstimatorKind::RC:
                if (q == 1)
                    out.locations = {grid_argmax([&](const Location &p) { return rc_cost_single(geom, cov, p, cfg.rc); },
                                                 cfg.grid, 1)
                                         .location};
                else if (sk == SignalKind::Coherent)
                    run_ap([&](const std::vector<Location> &c) { return rc_cost_coherent(geom, cov, c, cfg.rc); });
                else
                    run_ap([&](const std::vector<Location> &c) { return rc_cost(geom, cov, c, cfg.rc); });
                break;
            case EstimatorKind::MUSIC:
            {
                const std::vector<double> values = evaluate_grid(
                    [&](const Location &p) { return music_spectrum(geom, cov, p, q); }, cfg.grid, 1);
                if (q == 1)
                    out.locations = {cfg.grid.point(detail::argmax_index(values))};
                else
                    picked_peaks(values);
                break;
            }
            case EstimatorKind::MVDR:
            {
                const MvdrInverse inv = mvdr_inverse_blocks(cov);
                const std::vector<double> values = evaluate_grid(
                    [&](const Location &p) { return mvdr_spectrum(geom, inv, p); }, cfg.grid, 1);
                if (q == 1)
                    out.locations = {cfg.grid.point(detail::argmax_index(values))};
                else
                    picked_peaks(values);
                break;
            }
            case EstimatorKind::ExactML:
            {
                // Oracle: consumes the ground-truth signal matrix.
                const Eigen::MatrixXcd &s = truth.signals;
                if (q == 1)
                    out.locations = {grid_argmax(
                                         [&](const Location &p) {
                                             return exact_ml_cost(geom, truth.snapshots, {p}, s.topRows(1));
                                         },
                                         cfg.grid, 1)
                                         .location};
                else
                    run_ap([&](const std::vector<Location> &c) {
                        return exact_ml_cost(geom, truth.snapshots, c,
                                             s.topRows(static_cast<Eigen::Index>(c.size())));
                    });
                break;
            }
            }
            return out;
        }
    } // namespace detail

    // Synthesize one dataset and run every configured estimator on it.
    // Estimator errors never abort the trial; they are recorded in the
    // record's flags with infinite per-source errors.
    inline std::vector<TrialRecord> run_trial(const ExperimentConfig &cfg, double sweep_value, int trial_index,
                                              std::mt19937_64 &rng)
    {
        ScenarioConfig scen = cfg.scenario;
        switch (cfg.sweep.axis)
        {
        case SweepAxis::NoiseVariance: scen.noise_variance = sweep_value; break;
        case SweepAxis::SnapshotCount: scen.num_snapshots = static_cast<int>(sweep_value + 0.5); break;
        case SweepAxis::LocationPerturbationStd: scen.location_perturbation_std = sweep_value; break;
        }

        const SynthesisResult truth = synthesize_snapshots(scen, rng);
        const Snapshots normalized = normalize_power(truth.snapshots);
        const SampleCovariance cov = sample_covariance(normalized);

        std::vector<TrialRecord> records;
        records.reserve(cfg.estimators.size());
        for (EstimatorKind kind : cfg.estimators)
        {
            TrialRecord rec;
            rec.sweep_value = sweep_value;
            rec.trial = trial_index;
            rec.estimator = kind;
            const auto t0 = std::chrono::steady_clock::now();
            try
            {
                detail::EstimateOutcome out = detail::run_estimator(kind, cfg, scen, cov, truth);
                rec.estimates = std::move(out.locations);
                rec.flags = std::move(out.flags);
            }
            catch (const Error &e)
            {
                detail::append_flag(rec.flags, "error:" + detail::error_label(e));
            }
            catch (const std::exception &)
            {
                detail::append_flag(rec.flags, "error:Unexpected");
            }
            const auto t1 = std::chrono::steady_clock::now();
            rec.time_s = std::chrono::duration<double>(t1 - t0).count();
            rec.errors_m = assignment_errors(scen.true_locations, rec.estimates);
            records.push_back(std::move(rec));
        }
        return records;
    }

    struct SummaryRow
    {
        double sweep_value = 0.0;
        EstimatorKind estimator = EstimatorKind::RML;
        double rmse_m = 0.0;       // over non-failed per-source errors
        double failure_rate = 0.0; // fraction of per-source errors beyond the break radius
        double mean_time_s = 0.0;
        int num_errors = 0; // per-source error count entering the statistics
    };

    struct MonteCarloResult
    {
        std::vector<TrialRecord> records; // ordered by (sweep index, trial, estimator)
        std::vector<SummaryRow> summary;
        std::string results_path;
        std::string summary_path;
        std::string plot_path;
    };

    namespace detail
    {
        inline std::string format_double(double v)
        {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            return buf;
        }

        inline void write_results_csv(const std::string &path, SweepAxis axis,
                                      const std::vector<TrialRecord> &records)
        {
            std::ofstream out(path, std::ios::trunc);
            if (!out)
                throw IoError("cannot open " + path + " for writing");
            out << "sweep_axis,sweep_value,estimator,trial,source_index,error_m,time_s,flags\n";
            const std::string axis_name = to_string(axis);
            for (const auto &rec : records)
                for (std::size_t s = 0; s < rec.errors_m.size(); ++s)
                    out << axis_name << ',' << format_double(rec.sweep_value) << ',' << to_string(rec.estimator)
                        << ',' << rec.trial << ',' << s << ',' << format_double(rec.errors_m[s]) << ','
                        << format_double(rec.time_s) << ',' << rec.flags << '\n';
            if (!out)
                throw IoError("failed writing " + path);
        }

        inline void write_summary_csv(const std::string &path, SweepAxis axis,
                                      const std::vector<SummaryRow> &summary)
        {
            std::ofstream out(path, std::ios::trunc);
            if (!out)
                throw IoError("cannot open " + path + " for writing");
            out << "sweep_axis,sweep_value,estimator,rmse_m,failure_rate,mean_time_s,num_errors\n";
            for (const auto &row : summary)
                out << to_string(axis) << ',' << format_double(row.sweep_value) << ',' << to_string(row.estimator)
                    << ',' << format_double(row.rmse_m) << ',' << format_double(row.failure_rate) << ','
                    << format_double(row.mean_time_s) << ',' << row.num_errors << '\n';
            if (!out)
                throw IoError("failed writing " + path);
        }

        inline void write_plot_script(const std::string &path, const ExperimentConfig &cfg)
        {
            std::ofstream out(path, std::ios::trunc);
            if (!out)
                throw IoError("cannot open " + path + " for writing");
            out << "# RMSE vs sweep value, one curve per estimator.\n"
                << "# Usage: gnuplot plot_rmse.gp  (expects summary.csv next to this script)\n"
                << "set datafile separator ','\n"
                << "set xlabel '" << to_string(cfg.sweep.axis) << "'\n"
                << "set ylabel 'RMSE [m]'\n"
                << "set logscale y\n"
                << "set key outside\n"
                << "set term push\n"
                << "set term dumb\n"
                << "plot ";
            for (std::size_t i = 0; i < cfg.estimators.size(); ++i)
            {
                const std::string name = to_string(cfg.estimators[i]);
                if (i > 0)
                    out << ", \\\n     ";
                out << "'summary.csv' skip 1 using (strcol(3) eq '" << name << "' ? $2 : NaN):4 "
                    << "with linespoints title '" << name << "'";
            }
            out << "\n";
            if (!out)
                throw IoError("failed writing " + path);
        }

        inline std::vector<SummaryRow> summarize(const ExperimentConfig &cfg,
                                                 const std::vector<TrialRecord> &records)
        {
            const double break_radius = cfg.failure_radius_cells * cfg.grid.cell_diagonal();
            std::vector<SummaryRow> summary;
            for (double value : cfg.sweep.values)
                for (EstimatorKind kind : cfg.estimators)
                {
                    SummaryRow row;
                    row.sweep_value = value;
                    row.estimator = kind;
                    double sq_sum = 0.0;
                    int ok = 0, failed = 0, times = 0;
                    double time_sum = 0.0;
                    for (const auto &rec : records)
                    {
                        if (rec.estimator != kind || rec.sweep_value != value)
                            continue;
                        ++times;
                        time_sum += rec.time_s;
                        for (double e : rec.errors_m)
                        {
                            if (e <= break_radius)
                            {
                                sq_sum += e * e;
                                ++ok;
                            }
                            else
                                ++failed;
                        }
                    }
                    row.num_errors = ok + failed;
                    row.rmse_m = ok > 0 ? std::sqrt(sq_sum / ok) : std::numeric_limits<double>::quiet_NaN();
                    row.failure_rate = row.num_errors > 0 ? static_cast<double>(failed) / row.num_errors : 0.0;
                    row.mean_time_s = times > 0 ? time_sum / times : 0.0;
                    summary.push_back(row);
                }
            return summary;
        }
    } // namespace detail

    // Full sweep: `trials` independent datasets per sweep value, every
    // estimator on each. Trials run in parallel with per-trial RNG streams
    // derived from (seed, sweep index, trial index); the output order and
    // content do not depend on the thread count. Writes results.csv,
    // summary.csv and a gnuplot script into cfg.output_dir.
    inline MonteCarloResult run_monte_carlo(const ExperimentConfig &cfg)
    {
        validate(cfg);
        std::error_code ec;
        std::filesystem::create_directories(cfg.output_dir, ec);
        if (ec)
            throw IoError("cannot create output directory " + cfg.output_dir);

        const std::size_t num_sweep = cfg.sweep.values.size();
        const std::size_t jobs = num_sweep * static_cast<std::size_t>(cfg.trials);
        std::vector<std::vector<TrialRecord>> slots(jobs);

        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        const auto worker = [&]() {
            try
            {
                for (std::size_t i = next.fetch_add(1); i < jobs; i = next.fetch_add(1))
                {
                    const std::size_t sweep_idx = i / static_cast<std::size_t>(cfg.trials);
                    const int trial = static_cast<int>(i % static_cast<std::size_t>(cfg.trials));
                    std::mt19937_64 rng(derive_seed(cfg.scenario.rng_seed, sweep_idx, static_cast<std::uint64_t>(trial)));
                    slots[i] = run_trial(cfg, cfg.sweep.values[sweep_idx], trial, rng);
                }
            }
            catch (...)
            {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
            }
        };
        const std::size_t pool_size = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), std::max<std::size_t>(jobs, 1));
        if (pool_size <= 1)
            worker();
        else
        {
            std::vector<std::thread> pool;
            for (std::size_t t = 0; t < pool_size; ++t)
                pool.emplace_back(worker);
            for (auto &th : pool)
                th.join();
        }
        if (failure)
            std::rethrow_exception(failure);

        MonteCarloResult result;
        for (auto &slot : slots)
            for (auto &rec : slot)
                result.records.push_back(std::move(rec));
        result.summary = detail::summarize(cfg, result.records);

        const std::filesystem::path dir(cfg.output_dir);
        result.results_path = (dir / "results.csv").string();
        result.summary_path = (dir / "summary.csv").string();
        result.plot_path = (dir / "plot_rmse.gp").string();
        detail::write_results_csv(result.results_path, cfg.sweep.axis, result.records);
        detail::write_summary_csv(result.summary_path, cfg.sweep.axis, result.summary);
        detail::write_plot_script(result.plot_path, cfg);
        return result;
    }

    // Grid surface dump for the spectrum estimators: one row per lattice
    // point, coordinates first, value last.
    inline void write_spectrum_csv(const std::string &path, const SearchGrid &grid,
                                   const std::vector<double> &values, const std::string &value_name)
    {
        if (values.size() != grid.num_points())
            throw std::invalid_argument("value array does not match the grid");
        std::ofstream out(path, std::ios::trunc);
        if (!out)
            throw IoError("cannot open " + path + " for writing");
        for (int d = 0; d < grid.dim(); ++d)
            out << 'p' << d << ',';
        out << value_name << '\n';
        for (std::size_t i = 0; i < values.size(); ++i)
        {
            const Location p = grid.point(i);
            for (int d = 0; d < grid.dim(); ++d)
                out << detail::format_double(p.coords[d]) << ',';
            out << detail::format_double(values[i]) << '\n';
        }
        if (!out)
            throw IoError("failed writing " + path);
    }

} // namespace pcaloc

#endif // PCALOC_HARNESS_HPP
