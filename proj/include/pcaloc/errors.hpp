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

#ifndef PCALOC_ERRORS_HPP
#define PCALOC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pcaloc
{
    // Base class of all recoverable domain errors. The search layer treats
    // any Error thrown by a cost function as "candidate invalid" (-inf).
    class Error : public std::runtime_error
    {
    public:
        explicit Error(const std::string &msg) : std::runtime_error(msg) {}
    };

    // A candidate location coincides with a sensor or a delay reference.
    class ZeroDistance : public Error
    {
    public:
        explicit ZeroDistance(const std::string &msg) : Error(msg) {}
    };

    // Two candidate locations closer than the configured epsilon.
    class DuplicateLocation : public Error
    {
    public:
        explicit DuplicateLocation(const std::string &msg) : Error(msg) {}
    };

    // A steering Gram matrix is numerically rank deficient (near-coincident
    // candidates as seen by one subarray); whitening would be unstable.
    class RankDeficientSteering : public Error
    {
    public:
        explicit RankDeficientSteering(const std::string &msg) : Error(msg) {}
    };

    // Generic rank failure of a least-squares Gram matrix.
    class RankDeficient : public Error
    {
    public:
        explicit RankDeficient(const std::string &msg) : Error(msg) {}
    };

    // Signal correlation matrix is not Hermitian PSD (or rank deficient
    // where full rank is required).
    class InvalidCorrelation : public Error
    {
    public:
        explicit InvalidCorrelation(const std::string &msg) : Error(msg) {}
    };

    // A snapshot block is identically zero; power normalization undefined.
    class ZeroBlock : public Error
    {
    public:
        explicit ZeroBlock(const std::string &msg) : Error(msg) {}
    };

    // Sample covariance not invertible even after diagonal loading.
    class SingularCovariance : public Error
    {
    public:
        explicit SingularCovariance(const std::string &msg) : Error(msg) {}
    };

    // The Hadamard-product Gram matrix of the diagonal-constrained LS
    // problem is singular.
    class SingularHadamardGram : public Error
    {
    public:
        explicit SingularHadamardGram(const std::string &msg) : Error(msg) {}
    };

    // Every grid point raised an error; no valid candidate exists.
    class AllInvalid : public Error
    {
    public:
        explicit AllInvalid(const std::string &msg) : Error(msg) {}
    };

    // Alternating projection could not place a source in its first phase.
    class NoProgress : public Error
    {
    public:
        explicit NoProgress(const std::string &msg) : Error(msg) {}
    };

    // Configuration file is syntactically or semantically invalid.
    class ConfigError : public Error
    {
    public:
        explicit ConfigError(const std::string &msg) : Error(msg) {}
    };

    // Failure writing or reading result/snapshot files.
    class IoError : public Error
    {
    public:
        explicit IoError(const std::string &msg) : Error(msg) {}
    };

} // namespace pcaloc

#endif // PCALOC_ERRORS_HPP
