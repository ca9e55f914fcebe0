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

#ifndef PCALOC_CONFIG_HPP
#define PCALOC_CONFIG_HPP

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcaloc/harness.hpp"

// JSON experiment configuration. See configs/example.json for the full
// schema; SI units throughout (meters, seconds, rad/s).

namespace pcaloc
{
    namespace detail
    {
        using nlohmann::json;

        inline const json &require(const json &j, const char *key, const char *where)
        {
            const auto it = j.find(key);
            if (it == j.end())
                throw ConfigError(std::string(where) + ": missing field '" + key + "'");
            return *it;
        }

        inline Eigen::VectorXd parse_vector(const json &j, const char *where)
        {
            if (!j.is_array() || j.empty())
                throw ConfigError(std::string(where) + ": expected a non-empty array of numbers");
            Eigen::VectorXd v(j.size());
            for (std::size_t i = 0; i < j.size(); ++i)
            {
                if (!j[i].is_number())
                    throw ConfigError(std::string(where) + ": expected numbers");
                v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
            }
            return v;
        }

        inline SubarrayGeometry parse_subarray(const json &j)
        {
            const json &pos = require(j, "sensor_positions", "subarray");
            if (!pos.is_array() || pos.empty())
                throw ConfigError("subarray: sensor_positions must be a non-empty array");
            const Eigen::VectorXd first = parse_vector(pos[0], "sensor_positions");
            Eigen::MatrixXd positions(first.size(), pos.size());
            positions.col(0) = first;
            for (std::size_t i = 1; i < pos.size(); ++i)
            {
                const Eigen::VectorXd p = parse_vector(pos[i], "sensor_positions");
                if (p.size() != positions.rows())
                    throw ConfigError("subarray: sensor positions disagree on dimension");
                positions.col(static_cast<Eigen::Index>(i)) = p;
            }
            if (j.contains("reference_position"))
                return make_subarray(positions, parse_vector(j["reference_position"], "reference_position"));
            return make_subarray(positions);
        }

        inline ArrayGeometry parse_geometry(const json &j)
        {
            const json &subs = require(j, "subarrays", "geometry");
            if (!subs.is_array())
                throw ConfigError("geometry: subarrays must be an array");
            std::vector<SubarrayGeometry> subarrays;
            for (const auto &s : subs)
                subarrays.push_back(parse_subarray(s));
            const double omega = require(j, "carrier_angular_frequency", "geometry").get<double>();
            const double speed = require(j, "propagation_speed", "geometry").get<double>();
            try
            {
                return make_array_geometry(std::move(subarrays), omega, speed);
            }
            catch (const std::invalid_argument &e)
            {
                throw ConfigError(std::string("geometry: ") + e.what());
            }
        }

        inline SignalModel parse_signal(const json &j)
        {
            SignalModel model;
            const std::string kind = require(j, "kind", "signal").get<std::string>();
            if (kind == "noncoherent")
                model.kind = SignalKind::Noncoherent;
            else if (kind == "coherent")
                model.kind = SignalKind::Coherent;
            else if (kind == "single")
                model.kind = SignalKind::Single;
            else
                throw ConfigError("signal.kind must be noncoherent, coherent or single");
            model.num_sources = require(j, "Q", "signal").get<int>();
            if (model.num_sources < 1)
                throw ConfigError("signal.Q must be >= 1");
            model.power = j.value("power", 1.0);
            if (j.contains("correlation"))
            {
                const json &c = j["correlation"];
                if (!c.is_array() || c.size() != static_cast<std::size_t>(model.num_sources))
                    throw ConfigError("signal.correlation must be a Q x Q matrix");
                Eigen::MatrixXcd corr(model.num_sources, model.num_sources);
                for (std::size_t r = 0; r < c.size(); ++r)
                {
                    const Eigen::VectorXd row = parse_vector(c[r], "signal.correlation");
                    if (row.size() != model.num_sources)
                        throw ConfigError("signal.correlation must be a Q x Q matrix");
                    corr.row(static_cast<Eigen::Index>(r)) = row.cast<cxd>();
                }
                model.correlation = corr;
            }
            return model;
        }

        inline ScenarioConfig parse_scenario(const json &j)
        {
            ScenarioConfig cfg;
            cfg.geometry = parse_geometry(require(j, "geometry", "scenario"));
            const json &locs = require(j, "true_locations", "scenario");
            if (!locs.is_array() || locs.empty())
                throw ConfigError("scenario.true_locations must be a non-empty array");
            for (const auto &p : locs)
                cfg.true_locations.push_back(Location{parse_vector(p, "true_locations")});
            cfg.signal = parse_signal(require(j, "signal", "scenario"));
            cfg.num_snapshots = require(j, "num_snapshots", "scenario").get<int>();
            cfg.noise_variance = j.value("noise_variance", 0.0);
            cfg.location_perturbation_std = j.value("location_perturbation_std", 0.0);
            if (j.contains("phase_offsets") && !j["phase_offsets"].is_string())
            {
                const Eigen::VectorXd v = parse_vector(j["phase_offsets"], "phase_offsets");
                cfg.phase_offsets.assign(v.data(), v.data() + v.size());
            } // a string (or absence) means "random"
            cfg.align_coherent_b = j.value("align_coherent_b", false);
            cfg.rng_seed = require(j, "rng_seed", "scenario").get<std::uint64_t>();
            return cfg;
        }

        inline SearchGrid parse_grid(const json &j)
        {
            const json &bounds = require(j, "bounds", "grid");
            if (!bounds.is_array() || bounds.empty())
                throw ConfigError("grid.bounds must be an array of [min, max] pairs");
            const int dim = static_cast<int>(bounds.size());
            Eigen::VectorXd lower(dim), upper(dim), step(dim);
            for (int d = 0; d < dim; ++d)
            {
                const Eigen::VectorXd pair = parse_vector(bounds[static_cast<std::size_t>(d)], "grid.bounds");
                if (pair.size() != 2)
                    throw ConfigError("grid.bounds entries must be [min, max] pairs");
                lower[d] = pair[0];
                upper[d] = pair[1];
            }
            const json &res = require(j, "resolution", "grid");
            if (res.is_number())
                step.setConstant(res.get<double>());
            else
            {
                const Eigen::VectorXd s = parse_vector(res, "grid.resolution");
                if (s.size() != dim)
                    throw ConfigError("grid.resolution must be a scalar or one step per dimension");
                step = s;
            }
            const std::size_t budget = j.value("budget", std::size_t{1000000});
            try
            {
                return SearchGrid::make(lower, upper, step, budget);
            }
            catch (const std::invalid_argument &e)
            {
                throw ConfigError(std::string("grid: ") + e.what());
            }
        }

        inline EstimatorKind parse_estimator(const std::string &name)
        {
            if (name == "RML") return EstimatorKind::RML;
            if (name == "RC") return EstimatorKind::RC;
            if (name == "MUSIC") return EstimatorKind::MUSIC;
            if (name == "MVDR") return EstimatorKind::MVDR;
            if (name == "ExactML" || name == "ExactML-oracle") return EstimatorKind::ExactML;
            throw ConfigError("unknown estimator '" + name + "'");
        }

        inline SweepSpec parse_sweep(const json &j)
        {
            SweepSpec sweep;
            const std::string axis = require(j, "axis", "sweep").get<std::string>();
            if (axis == "noise_variance")
                sweep.axis = SweepAxis::NoiseVariance;
            else if (axis == "N")
                sweep.axis = SweepAxis::SnapshotCount;
            else if (axis == "location_perturbation_std")
                sweep.axis = SweepAxis::LocationPerturbationStd;
            else
                throw ConfigError("sweep.axis must be noise_variance, N or location_perturbation_std");
            const Eigen::VectorXd v = parse_vector(require(j, "values", "sweep"), "sweep.values");
            sweep.values.assign(v.data(), v.data() + v.size());
            return sweep;
        }
    } // namespace detail

    inline ExperimentConfig experiment_from_json(const nlohmann::json &j)
    {
        ExperimentConfig cfg;
        cfg.scenario = detail::parse_scenario(detail::require(j, "scenario", "config"));
        const auto &ests = detail::require(j, "estimators", "config");
        if (!ests.is_array())
            throw ConfigError("estimators must be an array of names");
        for (const auto &e : ests)
            cfg.estimators.push_back(detail::parse_estimator(e.get<std::string>()));
        cfg.grid = detail::parse_grid(detail::require(j, "grid", "config"));
        cfg.sweep = detail::parse_sweep(detail::require(j, "sweep", "config"));
        cfg.trials = detail::require(j, "trials", "config").get<int>();
        cfg.output_dir = j.value("output_dir", std::string("out"));
        cfg.peak_min_separation = j.value("peak_min_separation", 0.0);
        cfg.failure_radius_cells = j.value("failure_radius_cells", 10.0);
        if (j.contains("ap"))
        {
            cfg.ap.tol = j["ap"].value("tol", cfg.ap.tol);
            cfg.ap.max_sweeps = j["ap"].value("max_sweeps", cfg.ap.max_sweeps);
        }
        validate(cfg);
        return cfg;
    }

    inline ExperimentConfig load_experiment_config(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open config file " + path);
        nlohmann::json j;
        try
        {
            in >> j;
        }
        catch (const nlohmann::json::exception &e)
        {
            throw ConfigError(path + ": " + e.what());
        }
        try
        {
            return experiment_from_json(j);
        }
        catch (const nlohmann::json::exception &e)
        {
            throw ConfigError(path + ": " + e.what());
        }
    }

} // namespace pcaloc

#endif // PCALOC_CONFIG_HPP
