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

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pcaloc/pcaloc.hpp"

namespace
{
    struct CliOptions
    {
        std::string config_path;
        std::string out_override;
        std::string spectrum_estimator;
        std::string spectrum_out;
        std::uint64_t seed = 0;
        bool seed_set = false;
        int threads = 0; // 0 = keep config value
    };

    void apply_overrides(pcaloc::ExperimentConfig &cfg, const CliOptions &opt)
    {
        if (!opt.out_override.empty())
            cfg.output_dir = opt.out_override;
        if (opt.seed_set)
            cfg.scenario.rng_seed = opt.seed;
        if (opt.threads > 0)
            cfg.threads = opt.threads;
    }

    int cmd_run(const CliOptions &opt)
    {
        pcaloc::ExperimentConfig cfg = pcaloc::load_experiment_config(opt.config_path);
        apply_overrides(cfg, opt);
        const pcaloc::MonteCarloResult result = pcaloc::run_monte_carlo(cfg);
        std::cout << "wrote " << result.results_path << " (" << result.records.size() << " records)\n"
                  << "wrote " << result.summary_path << "\n"
                  << "wrote " << result.plot_path << "\n";
        for (const auto &row : result.summary)
            std::cout << pcaloc::to_string(cfg.sweep.axis) << "=" << row.sweep_value << "  "
                      << pcaloc::to_string(row.estimator) << "  rmse=" << row.rmse_m
                      << " m  fail=" << row.failure_rate << "  t=" << row.mean_time_s << " s\n";
        return 0;
    }

    int cmd_validate(const CliOptions &opt)
    {
        const pcaloc::ExperimentConfig cfg = pcaloc::load_experiment_config(opt.config_path);
        const auto &geom = cfg.scenario.geometry;
        std::cout << "config OK: L=" << geom.num_subarrays() << " subarrays, M=" << geom.total_sensors()
                  << " sensors, Q=" << cfg.scenario.signal.num_sources << " sources ("
                  << pcaloc::to_string(cfg.scenario.signal.kind) << "), D=" << geom.dim()
                  << ", grid points=" << cfg.grid.num_points() << ", sweep "
                  << pcaloc::to_string(cfg.sweep.axis) << " x" << cfg.sweep.values.size() << ", trials="
                  << cfg.trials << "\n";
        return 0;
    }

    int cmd_spectrum(const CliOptions &opt)
    {
        pcaloc::ExperimentConfig cfg = pcaloc::load_experiment_config(opt.config_path);
        apply_overrides(cfg, opt);

        std::mt19937_64 rng(cfg.scenario.rng_seed);
        const pcaloc::SynthesisResult truth = pcaloc::synthesize_snapshots(cfg.scenario, rng);
        const pcaloc::Snapshots normalized = pcaloc::normalize_power(truth.snapshots);
        const pcaloc::SampleCovariance cov = pcaloc::sample_covariance(normalized);
        const pcaloc::ArrayGeometry &geom = cfg.scenario.geometry;
        const int q = cfg.scenario.signal.num_sources;

        std::vector<double> values;
        if (opt.spectrum_estimator == "music")
            values = pcaloc::evaluate_grid(
                [&](const pcaloc::Location &p) { return pcaloc::music_spectrum(geom, cov, p, q); }, cfg.grid,
                cfg.threads);
        else
        {
            const pcaloc::MvdrInverse inv = pcaloc::mvdr_inverse_blocks(cov);
            values = pcaloc::evaluate_grid(
                [&](const pcaloc::Location &p) { return pcaloc::mvdr_spectrum(geom, inv, p); }, cfg.grid,
                cfg.threads);
        }
        pcaloc::write_spectrum_csv(opt.spectrum_out, cfg.grid, values,
                                   opt.spectrum_estimator == "music" ? "f_music" : "g_mvdr");
        std::cout << "wrote " << opt.spectrum_out << " (" << values.size() << " points)\n";
        return 0;
    }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"direct localization of multiple sources by partly calibrated arrays"};
    app.require_subcommand(1);

    CliOptions opt;

    CLI::App *run = app.add_subcommand("run", "run the configured Monte-Carlo experiment");
    run->add_option("config", opt.config_path, "experiment configuration (JSON)")->required();
    run->add_option("--out", opt.out_override, "override the output directory");
    run->add_option("--seed", opt.seed, "override the scenario RNG seed")->each([&](const std::string &) { opt.seed_set = true; });
    run->add_option("--threads", opt.threads, "worker threads for independent trials");

    CLI::App *validate = app.add_subcommand("validate", "check a configuration file and exit");
    validate->add_option("config", opt.config_path, "experiment configuration (JSON)")->required();

    CLI::App *spectrum = app.add_subcommand("spectrum", "dump a spectrum surface over the grid to CSV");
    spectrum->add_option("config", opt.config_path, "experiment configuration (JSON)")->required();
    spectrum->add_option("--estimator", opt.spectrum_estimator, "music or mvdr")
        ->required()
        ->check(CLI::IsMember({"music", "mvdr"}));
    spectrum->add_option("--out", opt.spectrum_out, "output CSV path")->required();
    spectrum->add_option("--threads", opt.threads, "worker threads for the grid evaluation");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1; // bad invocation counts as a config error
    }

    try
    {
        if (run->parsed())
            return cmd_run(opt);
        if (validate->parsed())
            return cmd_validate(opt);
        if (spectrum->parsed())
            return cmd_spectrum(opt);
        return 1;
    }
    catch (const pcaloc::ConfigError &e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
