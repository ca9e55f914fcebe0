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

#ifndef PCALOC_GEOMETRY_HPP
#define PCALOC_GEOMETRY_HPP

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <utility>
#include <vector>

#include "pcaloc/types.hpp"

namespace pcaloc
{
    // Distances below this count as "coincident" (meters).
    inline constexpr double kZeroDistanceTol = 1e-12;

    // Default minimum spacing between candidate locations handed to a
    // steering-matrix build; guards the Gram inversions downstream.
    inline constexpr double kDuplicateLocationEps = 1e-9;

    // Optional directional sensor response: complex gain of sensor
    // `sensor_index` of a subarray toward location p. Isotropic when empty.
    using SensorResponse = std::function<cxd(int sensor_index, const Location &p)>;

    // One fully calibrated subarray: sensor positions are exact in a common
    // frame; the reference position is the point the subarray delay is
    // measured to (sensor centroid unless stated otherwise).
    struct SubarrayGeometry
    {
        Eigen::MatrixXd sensor_positions; // D x M_l, one column per sensor (meters)
        Eigen::VectorXd reference_position; // D (meters)
        SensorResponse sensor_response;     // empty = isotropic unit gain

        int num_sensors() const { return static_cast<int>(sensor_positions.cols()); }
        int dim() const { return static_cast<int>(sensor_positions.rows()); }
    };

    // Reference at the sensor centroid.
    inline SubarrayGeometry make_subarray(Eigen::MatrixXd sensor_positions)
    {
        if (sensor_positions.cols() < 1)
            throw std::invalid_argument("subarray needs at least one sensor");
        Eigen::VectorXd centroid = sensor_positions.rowwise().mean();
        return SubarrayGeometry{std::move(sensor_positions), std::move(centroid), {}};
    }

    inline SubarrayGeometry make_subarray(Eigen::MatrixXd sensor_positions, Eigen::VectorXd reference)
    {
        if (sensor_positions.cols() < 1)
            throw std::invalid_argument("subarray needs at least one sensor");
        if (reference.size() != sensor_positions.rows())
            throw std::invalid_argument("reference dimension does not match sensor positions");
        return SubarrayGeometry{std::move(sensor_positions), std::move(reference), {}};
    }

    // The whole partly calibrated array: L fully calibrated subarrays with
    // no gain/phase/position calibration across them.
    struct ArrayGeometry
    {
        std::vector<SubarrayGeometry> subarrays;
        double carrier_angular_frequency = 0.0; // rad/s
        double propagation_speed = 0.0;         // m/s

        int num_subarrays() const { return static_cast<int>(subarrays.size()); }
        int dim() const { return subarrays.empty() ? 0 : subarrays.front().dim(); }

        int total_sensors() const
        {
            int m = 0;
            for (const auto &s : subarrays)
                m += s.num_sensors();
            return m;
        }

        std::vector<int> block_sizes() const
        {
            std::vector<int> sizes;
            sizes.reserve(subarrays.size());
            for (const auto &s : subarrays)
                sizes.push_back(s.num_sensors());
            return sizes;
        }
    };

    inline ArrayGeometry make_array_geometry(std::vector<SubarrayGeometry> subarrays,
                                             double carrier_angular_frequency,
                                             double propagation_speed)
    {
        if (subarrays.size() < 2)
            throw std::invalid_argument("a partly calibrated array needs at least 2 subarrays");
        if (!(carrier_angular_frequency > 0.0))
            throw std::invalid_argument("carrier_angular_frequency must be positive");
        if (!(propagation_speed > 0.0))
            throw std::invalid_argument("propagation_speed must be positive");
        const int d = subarrays.front().dim();
        for (const auto &s : subarrays)
            if (s.dim() != d)
                throw std::invalid_argument("all subarrays must share the scenario dimension");
        return ArrayGeometry{std::move(subarrays), carrier_angular_frequency, propagation_speed};
    }

    // --- steering operations --------------------------------------------

    // Propagation delay from p to the subarray reference point, spherical
    // wave model.
    inline double propagation_delay(const SubarrayGeometry &sub, const Location &p, double propagation_speed)
    {
        const double d = (p.coords - sub.reference_position).norm();
        if (d < kZeroDistanceTol)
            throw ZeroDistance("source coincides with the subarray reference position");
        return d / propagation_speed;
    }

    // Unit-norm subarray steering vector toward p. Entry m carries the
    // phase of the path-length difference between sensor m and the
    // reference point; a directional sensor response, when present, is
    // applied per entry and the vector renormalized to unit norm.
    inline Eigen::VectorXcd steering_vector(const SubarrayGeometry &sub, const Location &p,
                                            double carrier_angular_frequency, double propagation_speed)
    {
        const int m = sub.num_sensors();
        if (p.dim() != sub.dim())
            throw std::invalid_argument("location dimension does not match subarray");
        const double ref_dist = (p.coords - sub.reference_position).norm();
        Eigen::VectorXcd a(m);
        const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));
        for (int i = 0; i < m; ++i)
        {
            const double d = (p.coords - sub.sensor_positions.col(i)).norm();
            if (d < kZeroDistanceTol)
                throw ZeroDistance("source coincides with a sensor position");
            const double phase = -carrier_angular_frequency * (d - ref_dist) / propagation_speed;
            a[i] = std::polar(inv_sqrt_m, phase);
        }
        if (sub.sensor_response)
        {
            for (int i = 0; i < m; ++i)
                a[i] *= sub.sensor_response(i, p);
            const double n = a.norm();
            if (n < kZeroDistanceTol)
                throw ZeroDistance("sensor response annihilated the steering vector");
            a /= n;
        }
        return a;
    }

    // Steering vector scaled by the inter-subarray delay phase; still unit
    // norm.
    inline Eigen::VectorXcd composite_steering(const SubarrayGeometry &sub, const Location &p,
                                               double carrier_angular_frequency, double propagation_speed)
    {
        const double tau = propagation_delay(sub, p, propagation_speed);
        return steering_vector(sub, p, carrier_angular_frequency, propagation_speed) *
               std::polar(1.0, -carrier_angular_frequency * tau);
    }

    // Composite steering vectors toward all candidate locations, one column
    // per location.
    inline Eigen::MatrixXcd steering_matrix(const SubarrayGeometry &sub, const std::vector<Location> &locations,
                                            double carrier_angular_frequency, double propagation_speed,
                                            double duplicate_eps = kDuplicateLocationEps)
    {
        if (locations.empty())
            throw std::invalid_argument("steering_matrix needs at least one location");
        const int q = static_cast<int>(locations.size());
        for (int i = 0; i < q; ++i)
            for (int j = i + 1; j < q; ++j)
                if (distance(locations[i], locations[j]) < duplicate_eps)
                {
                    std::ostringstream msg;
                    msg << "candidate locations " << i << " and " << j << " closer than " << duplicate_eps << " m";
                    throw DuplicateLocation(msg.str());
                }
        Eigen::MatrixXcd a(sub.num_sensors(), q);
        for (int j = 0; j < q; ++j)
            a.col(j) = composite_steering(sub, locations[j], carrier_angular_frequency, propagation_speed);
        return a;
    }

    // Convenience overloads addressing a subarray of an ArrayGeometry.
    inline Eigen::VectorXcd composite_steering(const ArrayGeometry &geom, int subarray, const Location &p)
    {
        return composite_steering(geom.subarrays[static_cast<std::size_t>(subarray)], p,
                                  geom.carrier_angular_frequency, geom.propagation_speed);
    }

    inline Eigen::MatrixXcd steering_matrix(const ArrayGeometry &geom, int subarray, const std::vector<Location> &locations)
    {
        return steering_matrix(geom.subarrays[static_cast<std::size_t>(subarray)], locations,
                               geom.carrier_angular_frequency, geom.propagation_speed);
    }

} // namespace pcaloc

#endif // PCALOC_GEOMETRY_HPP
