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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "thzdt/channel.hpp"
#include "thzdt/raytrace.hpp"
#include "thzdt/scene.hpp"

namespace thzdt
{
    // Right-continuous step CDF over a sorted sample.
    class EmpiricalCdf
    {
    public:
        EmpiricalCdf() = default;
        explicit EmpiricalCdf(std::vector<double> samples); // throws Error(empty_input)

        double eval(double x) const;    // #(s <= x) / n
        double inverse(double u) const; // s[ceil(u n) - 1], u in [0, 1]
        const std::vector<double> &samples() const { return samples_; }
        std::size_t size() const { return samples_.size(); }
        bool empty() const { return samples_.empty(); }

        bool operator==(const EmpiricalCdf &) const = default;

    private:
        std::vector<double> samples_;
    };

    EmpiricalCdf empirical_cdf(std::vector<double> samples);
    double cdf_eval(const EmpiricalCdf &cdf, double x);

    struct ClusterGates
    {
        double delay_s = 0.5e-9;
        double azimuth_deg = 20.0;
        double zenith_deg = 20.0;
    };

    struct Cluster
    {
        std::optional<PathRecord> anchor; // absent for non-RT clusters
        std::vector<Mpc> subpaths;
        EmpiricalCdf delay_cdf;
        EmpiricalCdf power_cdf;
        double mean_delay_s = 0.0;
        double mean_power_db = 0.0; // mean of the member dB values
        double azimuth_lo_deg = 0.0;   // observed arc starts here
        double azimuth_span_deg = 0.0; // and runs counterclockwise this far
        double zenith_lo_deg = 0.0;
        double zenith_hi_deg = 0.0;
        std::vector<std::string> identified_materials;

        // Recomputes CDFs, means and angular spans from the subpaths.
        void refresh();
    };

    struct HybridModel
    {
        std::vector<Cluster> rt_clusters;
        std::vector<Cluster> non_rt_clusters;
        std::vector<PathRecord> unmatched_anchors; // traced paths with no measured member
        double carrier_hz = 300e9;
        ClusterGates gates;
    };

    // Assigns each measured MPC to the nearest traced anchor inside all three
    // gates (Euclidean distance in gate units, ties to the earlier anchor);
    // leftovers are grouped greedily in delay order around seed MPCs.
    HybridModel cluster_mpcs(const MpcSet &measured, const std::vector<PathRecord> &traced,
                             const ClusterGates &gates = {}, double carrier_hz = 300e9);

    struct MaterialMatch
    {
        std::string label; // "Steel", "Glass+Rubber" or "unknown"
        std::vector<std::string> materials;
        double rl_db = 0.0;    // loss attributed to the bounces
        double delta_db = 0.0; // |rl - reference| of the best candidate
        bool known = false;
    };

    // Best single material or pair (i <= j in database order) whose reference
    // RL sum is closest to rl_db; unknown when the gap exceeds tolerance.
    MaterialMatch identify_material_rl(double rl_db, const MaterialDb &db, double tolerance_db = 3.0);

    // RL = (reference_db - FSPL(f, tau)) - cluster_mean_power_db, then as above.
    MaterialMatch identify_material(double cluster_mean_power_db, double tau_s, double frequency_hz, const MaterialDb &db,
                                    double tolerance_db = 3.0, double reference_db = 0.0);

    // Anchors verbatim plus n subpaths per cluster drawn from the delay and
    // power CDFs (independently) with angles uniform over the observed spans.
    MpcSet synthesize_realization(const HybridModel &model, std::size_t n_subpaths_per_cluster, std::uint64_t seed);

    inline constexpr std::string_view hybrid_model_version = "hybrid_model_v1";

    std::string save_hybrid_model(const HybridModel &model);
    HybridModel parse_hybrid_model(std::string_view json_text, std::string_view source = "<model>");
    HybridModel load_hybrid_model(const std::string &path);
}
