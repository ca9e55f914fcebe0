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

#ifndef PCALOC_SNAPSHOT_IO_HPP
#define PCALOC_SNAPSHOT_IO_HPP

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "pcaloc/scenario.hpp"

// Snapshot file format (little endian throughout):
//   16-byte header: magic "PCSN", uint32 M, uint32 N, uint32 L
//   L x uint32:     per-subarray row counts M_l (sum = M)
//   M*N complex:    stacked matrix, row major, each entry as two float64
//                   (real part then imaginary part)

namespace pcaloc
{
    static_assert(std::endian::native == std::endian::little,
                  "snapshot file writer assumes a little-endian host");

    inline constexpr char kSnapshotMagic[4] = {'P', 'C', 'S', 'N'};

    inline void save_snapshots_binary(const Snapshots &x, const std::string &path)
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot open " + path + " for writing");
        const std::uint32_t m = static_cast<std::uint32_t>(x.total_sensors());
        const std::uint32_t n = static_cast<std::uint32_t>(x.num_snapshots());
        const std::uint32_t l = static_cast<std::uint32_t>(x.num_subarrays());
        out.write(kSnapshotMagic, 4);
        out.write(reinterpret_cast<const char *>(&m), 4);
        out.write(reinterpret_cast<const char *>(&n), 4);
        out.write(reinterpret_cast<const char *>(&l), 4);
        for (const auto &blk : x.blocks)
        {
            const std::uint32_t ml = static_cast<std::uint32_t>(blk.rows());
            out.write(reinterpret_cast<const char *>(&ml), 4);
        }
        for (std::uint32_t i = 0; i < m; ++i)
            for (std::uint32_t j = 0; j < n; ++j)
            {
                const double re = x.stacked(i, j).real();
                const double im = x.stacked(i, j).imag();
                out.write(reinterpret_cast<const char *>(&re), 8);
                out.write(reinterpret_cast<const char *>(&im), 8);
            }
        if (!out)
            throw IoError("failed writing " + path);
    }

    inline Snapshots load_snapshots_binary(const std::string &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw IoError("cannot open " + path);
        char magic[4];
        std::uint32_t m = 0, n = 0, l = 0;
        in.read(magic, 4);
        in.read(reinterpret_cast<char *>(&m), 4);
        in.read(reinterpret_cast<char *>(&n), 4);
        in.read(reinterpret_cast<char *>(&l), 4);
        if (!in || std::memcmp(magic, kSnapshotMagic, 4) != 0)
            throw IoError(path + " is not a snapshot file");
        std::vector<std::uint32_t> sizes(l);
        std::uint32_t total = 0;
        for (auto &s : sizes)
        {
            in.read(reinterpret_cast<char *>(&s), 4);
            total += s;
        }
        if (!in || total != m || l == 0)
            throw IoError(path + ": inconsistent block table");
        Eigen::MatrixXcd stacked(m, n);
        for (std::uint32_t i = 0; i < m; ++i)
            for (std::uint32_t j = 0; j < n; ++j)
            {
                double re = 0, im = 0;
                in.read(reinterpret_cast<char *>(&re), 8);
                in.read(reinterpret_cast<char *>(&im), 8);
                stacked(i, j) = cxd(re, im);
            }
        if (!in)
            throw IoError(path + ": truncated payload");
        std::vector<Eigen::MatrixXcd> blocks;
        blocks.reserve(l);
        std::uint32_t row = 0;
        for (std::uint32_t s : sizes)
        {
            blocks.push_back(stacked.middleRows(row, s));
            row += s;
        }
        return Snapshots::from_blocks(std::move(blocks));
    }

    // Long-format CSV: one line per matrix entry of the stacked data.
    inline void save_snapshots_csv(const Snapshots &x, const std::string &path)
    {
        std::ofstream out(path, std::ios::trunc);
        if (!out)
            throw IoError("cannot open " + path + " for writing");
        out << "subarray,sensor,snapshot,re,im\n";
        char line[128];
        int row = 0;
        for (int l = 0; l < x.num_subarrays(); ++l)
        {
            const auto &blk = x.blocks[static_cast<std::size_t>(l)];
            for (int i = 0; i < blk.rows(); ++i, ++row)
                for (int j = 0; j < blk.cols(); ++j)
                {
                    std::snprintf(line, sizeof(line), "%d,%d,%d,%.17g,%.17g\n",
                                  l, row, j, blk(i, j).real(), blk(i, j).imag());
                    out << line;
                }
        }
        if (!out)
            throw IoError("failed writing " + path);
    }

} // namespace pcaloc

#endif // PCALOC_SNAPSHOT_IO_HPP
