// SPDX-License-Identifier: Apache-2.0
//
// thzdt - THz in-cabin channel modelling and wireless planning library
// Copyright (C) 2026 The thzdt Authors
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

#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "thzdt/geometry.hpp"
#include "thzdt/materials.hpp"
#include "thzdt/scene.hpp"
#include "thzdt/simd/kernels.hpp"

namespace thzdt
{
    // One specular interaction along a path.
    struct Bounce
    {
        std::uint32_t facet = 0;
        std::string material;
        Vec3 point;
        double incidence_rad = 0.0; // from the facet normal
        double loss_db = 0.0;

        bool operator==(const Bounce &) const = default;
    };

    // A multipath component arriving at the receiver.
    struct PathRecord
    {
        double tau_s = 0.0;
        double azimuth_deg = 0.0; // [0, 360), counterclockwise from +x, bearing towards the source
        double zenith_deg = 0.0;  // elevation above the horizontal plane
        double power_db = 0.0;
        std::complex<double> complex_gain{0.0, 0.0};
        std::vector<Bounce> bounce_chain;
        bool human_penetration = false;

        std::size_t order() const { return bounce_chain.size(); }
        std::string chain_label() const; // material names joined by ';', empty for LoS
        bool same_chain(const PathRecord &other) const; // identical facet sequence
    };

    struct HumanBox
    {
        Box box;
        double penetration_loss_db = 10.0;
    };

    struct TraceConfig
    {
        double frequency_hz = 300e9;
        int max_order = 2;
        double absorption_db_per_m = 0.005;
        std::vector<HumanBox> human_boxes;
        double tx_power_dbm = 0.0;
        double tx_gain_db = 0.0;
        double rx_gain_db = 0.0;
        std::optional<Polarization> polarization; // unset: polarization-averaged power

        void validate() const; // throws Error(range)
    };

    inline constexpr int max_trace_order = 3;

    // 20 log10(4 pi f tau)
    double fspl_db(double frequency_hz, double tau_s);

    // Image-method tracer for one transmitter. Mirror images of the source are
    // built once for every facet sequence up to max_order; each receiver query
    // then back-tracks through the cached tree. Immutable after construction
    // and safe to query from several threads.
    class Tracer
    {
    public:
        Tracer(const Scene &scene, const Vec3 &tx, const TraceConfig &cfg);

        // Paths sorted by delay. No bounds check on rx.
        std::vector<PathRecord> trace(const Vec3 &rx) const;

        const Vec3 &tx() const { return tx_; }
        std::size_t image_count() const;

    private:
        struct Level
        {
            std::vector<std::array<std::uint32_t, max_trace_order>> sequences;
            std::vector<std::uint32_t> parents; // index into the previous level
            simd::TriangleSoA last_facets;
            simd::PointSoA images;
        };

        std::optional<PathRecord> finish(const Vec3 &rx, std::vector<Vec3> points,
                                         const std::array<std::uint32_t, max_trace_order> &sequence, int order) const;

        const Scene *scene_;
        Vec3 tx_;
        TraceConfig cfg_;
        std::vector<Level> levels_; // levels_[k] holds order k + 1
    };

    // Paths between tx and rx. Throws Error(range) when either point lies
    // outside the scene bounds or the points coincide.
    std::vector<PathRecord> trace(const Scene &scene, const Vec3 &tx, const Vec3 &rx, const TraceConfig &cfg);

    // Keeps paths whose azimuth lies in the closed circular interval
    // [center - half_width, center + half_width].
    std::vector<PathRecord> sector_filter(const std::vector<PathRecord> &paths, double sector_center_deg,
                                          double half_width_deg);

    // Traces from four receivers displaced by `radius` at azimuths 0, 90, 180
    // and 270 degrees around rx_center, keeps each within its +/-45 degree
    // sector and merges them, keeping the strongest copy of each bounce chain.
    std::vector<PathRecord> four_sector_merge(const Scene &scene, const Vec3 &tx, const Vec3 &rx_center,
                                              const TraceConfig &cfg, double radius);

    // CSV `tau_ns,azimuth_deg,zenith_deg,power_db,order,chain`.
    void write_paths_csv(std::ostream &out, const std::vector<PathRecord> &paths);
    // Reads the CSV above. Gains get zero phase; bounce facets are unknown and
    // left as index 0 with the material name.
    std::vector<PathRecord> read_paths_csv(std::istream &in, std::string_view source = "<paths>");
}
