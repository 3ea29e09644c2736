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
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "thzdt/raytrace.hpp"
#include "thzdt/scene.hpp"

namespace thzdt
{
    enum class PathlossModel
    {
        raytraced,  // power sum over traced paths
        statistical // FSPL + absorption with a constant LoS/NLoS mixture
    };

    enum class Association
    {
        max_power,
        nearest
    };

    struct PlanConfig
    {
        double tx_power_dbm = 10.0;
        double tx_gain_db = 0.0;
        double rx_gain_db = 0.0;
        double noise_psd_dbm_per_hz = -174.0;
        double noise_figure_db = 0.0;
        double bandwidth_hz = 20e9;
        double frequency_hz = 300e9;
        double absorption_db_per_m = 0.005;
        int max_order = 2;
        std::vector<HumanBox> human_boxes;
        std::optional<Polarization> polarization;

        PathlossModel pathloss = PathlossModel::raytraced;
        double los_probability = 1.0;   // statistical mode
        double nlos_excess_db = 20.0;   // statistical mode
        double fading_sigma_db = 0.0;   // 0: deterministic unity fading
        std::uint64_t fading_seed = 0;
        Association association = Association::max_power;
        std::size_t workers = 0; // 0: all cores

        double noise_dbm() const; // N0 + 10 log10 B + NF
        TraceConfig trace_config() const;
        void validate() const; // throws Error(range)
    };

    // Received power for a fixed set of transmitters. Image trees are built
    // once per transmitter; queries are thread-safe.
    class LinkBudget
    {
    public:
        LinkBudget(const Scene &scene, std::vector<Vec3> txs, const PlanConfig &cfg);
        ~LinkBudget();
        LinkBudget(LinkBudget &&) noexcept;
        LinkBudget &operator=(LinkBudget &&) noexcept;

        std::size_t size() const { return txs_.size(); }
        const Scene &scene() const { return *scene_; }
        const std::vector<Vec3> &txs() const { return txs_; }
        const PlanConfig &config() const { return cfg_; }

        // dBm, or nothing when no path reaches rx.
        std::optional<double> received_power_db(std::size_t tx, const Vec3 &rx) const;

    private:
        const Scene *scene_;
        std::vector<Vec3> txs_;
        PlanConfig cfg_;
        std::vector<std::unique_ptr<Tracer>> tracers_;
    };

    std::optional<double> received_power_db(const Scene &scene, const Vec3 &tx, const Vec3 &rx, const PlanConfig &cfg);

    // Power sum of path powers in dB, nothing for an empty list.
    std::optional<double> power_sum_db(std::span<const double> powers_db);

    // S / (I + N) in dB for rx served by txs[serving]. Throws
    // Error(unreachable) when the serving transmitter has no path.
    double sinr_db(const Scene &scene, const std::vector<Vec3> &txs, std::size_t serving, const Vec3 &rx,
                   const PlanConfig &cfg);

    struct RxResult
    {
        std::optional<double> sinr_db;        // nothing when unreachable
        std::optional<std::size_t> serving;   // associated transmitter
    };

    // Association by cfg.association (or the fixed serving index) followed
    // by the SINR with every other transmitter interfering.
    RxResult evaluate_rx(const LinkBudget &links, const Vec3 &rx, std::optional<std::size_t> serving = std::nullopt);

    // Batch form, parallel over points, results in input order.
    std::vector<RxResult> evaluate_points(const LinkBudget &links, std::span<const Vec3> points,
                                          std::optional<std::size_t> serving = std::nullopt);

    // SINRs in dB with -inf for unreachable receivers.
    std::vector<double> sinr_values(std::span<const RxResult> results);

    // Weighted fraction with SINR > threshold; empty weights mean uniform.
    double coverage_probability(std::span<const double> sinrs_db, double threshold_db,
                                std::span<const double> weights = {});
    std::vector<double> coverage_curve(std::span<const double> sinrs_db, std::span<const double> thresholds_db,
                                       std::span<const double> weights = {});

    // B / (N ln 2) * integral_0^inf Pc(t) / (1 + t) dt, Pc over linear SINR t.
    // Evaluated in s = ln(1 + t) by the trapezoid rule with ds = 1e-3 until
    // Pc < 1e-6; Error(non_convergence) if Pc has not decayed by t = 1e9.
    double average_rate_bps(const std::function<double(double)> &coverage, double bandwidth_hz, std::size_t n_tx);

    // Same, with Pc taken from a SINR sample set.
    double average_rate_bps(std::span<const double> sinrs_db, double bandwidth_hz, std::size_t n_tx,
                            std::span<const double> weights = {});

    struct RxPopulation
    {
        std::vector<Vec3> points;
        std::vector<double> weights; // empty: uniform

        void validate(const Scene &scene) const;
    };

    // Truncated normal inside the scene bounds by rejection. Throws
    // Error(range) after 10^6 rejections.
    RxPopulation sample_rx_population(const Scene &scene, std::size_t n, const Vec3 &mean, const Vec3 &stddev,
                                      std::uint64_t seed);

    struct CoverageCell
    {
        double x = 0.0, y = 0.0;
        std::optional<double> sinr_db;
        std::optional<std::size_t> serving;
    };

    struct CoverageMap
    {
        double z = 0.0, resolution = 0.0;
        std::size_t nx = 0, ny = 0;
        std::vector<CoverageCell> cells; // row-major, y outer

        std::vector<double> sinr_values() const; // -inf where unreachable
    };

    // Cell centres of a regular grid over the bounds at height z.
    CoverageMap coverage_map(const Scene &scene, const std::vector<Vec3> &txs, const PlanConfig &cfg, double z_plane,
                             double resolution);
    CoverageMap coverage_map(const LinkBudget &links, double z_plane, double resolution);

    void write_coverage_map_csv(std::ostream &out, const CoverageMap &map);
    void write_coverage_curve_csv(std::ostream &out, std::span<const double> thresholds_db,
                                  std::span<const double> coverage);
}
