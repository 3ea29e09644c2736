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

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "thzdt/csv.hpp"
#include "thzdt/error.hpp"
#include "thzdt/parallel.hpp"
#include "thzdt/planning.hpp"
#include "thzdt/random.hpp"

namespace thzdt
{
    namespace
    {
        constexpr double neg_inf = -std::numeric_limits<double>::infinity();

        std::uint64_t splitmix(std::uint64_t x)
        {
            x += 0x9e3779b97f4a7c15ULL;
            x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
            x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
            return x ^ (x >> 31);
        }

        // Shadowing draw keyed by the link geometry, independent of
        // evaluation order.
        double fading_db(const PlanConfig &cfg, const Vec3 &tx, const Vec3 &rx)
        {
            if (cfg.fading_sigma_db == 0.0)
                return 0.0;
            std::uint64_t h = splitmix(cfg.fading_seed);
            for (double v : {tx.x, tx.y, tx.z, rx.x, rx.y, rx.z})
                h = splitmix(h ^ std::bit_cast<std::uint64_t>(v));
            Rng rng(h);
            return cfg.fading_sigma_db * rng.normal();
        }

        double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
        double lin_to_db(double lin) { return 10.0 * std::log10(lin); }

        double total_weight(std::span<const double> sinrs, std::span<const double> weights)
        {
            if (weights.empty())
                return static_cast<double>(sinrs.size());
            return std::accumulate(weights.begin(), weights.end(), 0.0);
        }

        void check_weights(std::span<const double> sinrs, std::span<const double> weights)
        {
            if (sinrs.empty())
                throw Error(Errc::empty_input, "coverage needs at least one SINR sample");
            if (!weights.empty() && weights.size() != sinrs.size())
                throw Error(Errc::range, "weights and SINR samples differ in length");
        }
    }

    // --- config ---

    double PlanConfig::noise_dbm() const
    {
        return noise_psd_dbm_per_hz + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
    }

    TraceConfig PlanConfig::trace_config() const
    {
        TraceConfig t;
        t.frequency_hz = frequency_hz;
        t.max_order = max_order;
        t.absorption_db_per_m = absorption_db_per_m;
        t.human_boxes = human_boxes;
        t.tx_power_dbm = tx_power_dbm;
        t.tx_gain_db = tx_gain_db;
        t.rx_gain_db = rx_gain_db;
        t.polarization = polarization;
        return t;
    }

    void PlanConfig::validate() const
    {
        if (!(bandwidth_hz > 0.0))
            throw Error(Errc::range, "bandwidth must be positive");
        if (!(fading_sigma_db >= 0.0))
            throw Error(Errc::range, "fading sigma must be >= 0");
        if (!(los_probability >= 0.0 && los_probability <= 1.0))
            throw Error(Errc::range, "LoS probability must lie in [0, 1]");
        trace_config().validate();
    }

    // --- link budget ---

    LinkBudget::LinkBudget(const Scene &scene, std::vector<Vec3> txs, const PlanConfig &cfg)
        : scene_(&scene), txs_(std::move(txs)), cfg_(cfg)
    {
        cfg_.validate();
        if (cfg_.pathloss == PathlossModel::raytraced)
        {
            const TraceConfig tc = cfg_.trace_config();
            for (const auto &tx : txs_)
                tracers_.push_back(std::make_unique<Tracer>(scene, tx, tc));
        }
    }

    LinkBudget::~LinkBudget() = default;
    LinkBudget::LinkBudget(LinkBudget &&) noexcept = default;
    LinkBudget &LinkBudget::operator=(LinkBudget &&) noexcept = default;

    std::optional<double> LinkBudget::received_power_db(std::size_t tx, const Vec3 &rx) const
    {
        const Vec3 &t = txs_.at(tx);
        if (distance(t, rx) <= self_hit_epsilon)
            return std::nullopt;
        std::optional<double> p;
        if (cfg_.pathloss == PathlossModel::raytraced)
        {
            std::vector<double> powers;
            for (const auto &path : tracers_[tx]->trace(rx))
                powers.push_back(path.power_db);
            p = power_sum_db(powers);
        }
        else
        {
            const double d = distance(t, rx);
            const double mixture = cfg_.los_probability + (1.0 - cfg_.los_probability) * db_to_lin(-cfg_.nlos_excess_db);
            if (mixture <= 0.0)
                return std::nullopt;
            p = cfg_.tx_power_dbm + cfg_.tx_gain_db + cfg_.rx_gain_db - fspl_db(cfg_.frequency_hz, d / speed_of_light) -
                cfg_.absorption_db_per_m * d + lin_to_db(mixture);
        }
        if (p)
            *p += fading_db(cfg_, t, rx);
        return p;
    }

    std::optional<double> received_power_db(const Scene &scene, const Vec3 &tx, const Vec3 &rx, const PlanConfig &cfg)
    {
        return LinkBudget(scene, {tx}, cfg).received_power_db(0, rx);
    }

    std::optional<double> power_sum_db(std::span<const double> powers_db)
    {
        if (powers_db.empty())
            return std::nullopt;
        double sum = 0.0;
        for (double p : powers_db)
            sum += db_to_lin(p);
        return lin_to_db(sum);
    }

    // --- SINR ---

    RxResult evaluate_rx(const LinkBudget &links, const Vec3 &rx, std::optional<std::size_t> serving)
    {
        const std::size_t n = links.size();
        std::vector<std::optional<double>> power(n);
        for (std::size_t i = 0; i < n; ++i)
            power[i] = links.received_power_db(i, rx);

        RxResult r;
        if (serving)
            r.serving = serving;
        else if (links.config().association == Association::nearest)
        {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i)
                if (const double d = distance(links.txs()[i], rx); d < best)
                    best = d, r.serving = i;
        }
        else
        {
            for (std::size_t i = 0; i < n; ++i)
                if (power[i] && (!r.serving || *power[i] > *power[*r.serving]))
                    r.serving = i;
        }
        if (!r.serving || !power[*r.serving])
            return r;

        double interference = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (i != *r.serving && power[i])
                interference += db_to_lin(*power[i]);
        r.sinr_db = *power[*r.serving] - lin_to_db(interference + db_to_lin(links.config().noise_dbm()));
        return r;
    }

    std::vector<RxResult> evaluate_points(const LinkBudget &links, std::span<const Vec3> points,
                                          std::optional<std::size_t> serving)
    {
        std::vector<RxResult> out(points.size());
        parallel_for(points.size(), links.config().workers,
                     [&](std::size_t i) { out[i] = evaluate_rx(links, points[i], serving); });
        return out;
    }

    double sinr_db(const Scene &scene, const std::vector<Vec3> &txs, std::size_t serving, const Vec3 &rx,
                   const PlanConfig &cfg)
    {
        if (serving >= txs.size())
            throw Error(Errc::range, "serving index out of range");
        const LinkBudget links(scene, txs, cfg);
        const RxResult r = evaluate_rx(links, rx, serving);
        if (!r.sinr_db)
            throw Error(Errc::unreachable, "the serving transmitter does not reach the receiver");
        return *r.sinr_db;
    }

    std::vector<double> sinr_values(std::span<const RxResult> results)
    {
        std::vector<double> out;
        out.reserve(results.size());
        for (const auto &r : results)
            out.push_back(r.sinr_db.value_or(neg_inf));
        return out;
    }

    // --- coverage and rate ---

    double coverage_probability(std::span<const double> sinrs_db, double threshold_db, std::span<const double> weights)
    {
        check_weights(sinrs_db, weights);
        double covered = 0.0;
        for (std::size_t i = 0; i < sinrs_db.size(); ++i)
            if (sinrs_db[i] > threshold_db)
                covered += weights.empty() ? 1.0 : weights[i];
        return covered / total_weight(sinrs_db, weights);
    }

    std::vector<double> coverage_curve(std::span<const double> sinrs_db, std::span<const double> thresholds_db,
                                       std::span<const double> weights)
    {
        std::vector<double> out;
        out.reserve(thresholds_db.size());
        for (double t : thresholds_db)
            out.push_back(coverage_probability(sinrs_db, t, weights));
        return out;
    }

    double average_rate_bps(const std::function<double(double)> &coverage, double bandwidth_hz, std::size_t n_tx)
    {
        if (!(bandwidth_hz > 0.0) || n_tx == 0)
            throw Error(Errc::range, "rate needs positive bandwidth and at least one transmitter");
        constexpr double ds = 1e-3;
        constexpr double cutoff = 1e-6;
        const double s_max = std::log1p(1e9);

        double integral = 0.0;
        double prev = coverage(0.0);
        for (std::size_t k = 1;; ++k)
        {
            if (prev < cutoff)
                break;
            const double s = static_cast<double>(k) * ds;
            if (s > s_max)
                throw Error(Errc::non_convergence, "coverage has not decayed by SINR 1e9");
            const double cur = coverage(std::expm1(s));
            integral += 0.5 * (prev + cur) * ds;
            prev = cur;
        }
        return bandwidth_hz / (static_cast<double>(n_tx) * std::log(2.0)) * integral;
    }

    double average_rate_bps(std::span<const double> sinrs_db, double bandwidth_hz, std::size_t n_tx,
                            std::span<const double> weights)
    {
        check_weights(sinrs_db, weights);
        if (!(bandwidth_hz > 0.0) || n_tx == 0)
            throw Error(Errc::range, "rate needs positive bandwidth and at least one transmitter");
        // For a sample set Pc(t) is a weighted sum of steps, and the integral
        // of each step [t < t_i] / (1 + t) is ln(1 + t_i).
        double integral = 0.0;
        for (std::size_t i = 0; i < sinrs_db.size(); ++i)
            if (sinrs_db[i] > neg_inf)
                integral += (weights.empty() ? 1.0 : weights[i]) * std::log1p(db_to_lin(sinrs_db[i]));
        integral /= total_weight(sinrs_db, weights);
        return bandwidth_hz / (static_cast<double>(n_tx) * std::log(2.0)) * integral;
    }

    // --- population ---

    void RxPopulation::validate(const Scene &scene) const
    {
        if (points.empty())
            throw Error(Errc::empty_input, "an Rx population needs at least one point");
        for (const auto &p : points)
            if (!scene.bounds().contains(p))
                throw Error(Errc::range, "Rx population point outside the scene bounds");
        if (!weights.empty())
        {
            if (weights.size() != points.size())
                throw Error(Errc::range, "Rx weights and points differ in length");
            const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
            if (std::abs(sum - 1.0) > 1e-9 || std::any_of(weights.begin(), weights.end(), [](double w) { return w < 0.0; }))
                throw Error(Errc::range, "Rx weights must be non-negative and sum to 1");
        }
    }

    RxPopulation sample_rx_population(const Scene &scene, std::size_t n, const Vec3 &mean, const Vec3 &stddev,
                                      std::uint64_t seed)
    {
        if (n == 0)
            throw Error(Errc::range, "population size must be >= 1");
        if (!(stddev.x >= 0.0 && stddev.y >= 0.0 && stddev.z >= 0.0))
            throw Error(Errc::range, "standard deviations must be >= 0");
        constexpr std::size_t max_rejections = 1000000;
        Rng rng(seed);
        RxPopulation pop;
        std::size_t rejections = 0;
        while (pop.points.size() < n)
        {
            const double x = mean.x + stddev.x * rng.normal();
            const double y = mean.y + stddev.y * rng.normal();
            const double z = mean.z + stddev.z * rng.normal();
            const Vec3 p{x, y, z};
            if (scene.bounds().contains(p))
                pop.points.push_back(p);
            else if (++rejections > max_rejections)
                throw Error(Errc::range, "Rx sampling rejected 10^6 draws; the bounds are too tight for the distribution");
        }
        return pop;
    }

    // --- maps ---

    std::vector<double> CoverageMap::sinr_values() const
    {
        std::vector<double> out;
        out.reserve(cells.size());
        for (const auto &c : cells)
            out.push_back(c.sinr_db.value_or(neg_inf));
        return out;
    }

    CoverageMap coverage_map(const LinkBudget &links, double z_plane, double resolution)
    {
        const Box &b = links.scene().bounds();
        if (!(resolution > 0.0))
            throw Error(Errc::range, "map resolution must be positive");
        if (!(z_plane >= b.min.z && z_plane <= b.max.z))
            throw Error(Errc::range, "map plane lies outside the scene bounds");
        CoverageMap map;
        map.z = z_plane;
        map.resolution = resolution;
        map.nx = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor((b.max.x - b.min.x) / resolution + 1e-9)));
        map.ny = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor((b.max.y - b.min.y) / resolution + 1e-9)));
        std::vector<Vec3> points;
        points.reserve(map.nx * map.ny);
        for (std::size_t j = 0; j < map.ny; ++j)
            for (std::size_t i = 0; i < map.nx; ++i)
                points.push_back({b.min.x + (static_cast<double>(i) + 0.5) * resolution,
                                  b.min.y + (static_cast<double>(j) + 0.5) * resolution, z_plane});
        const auto results = evaluate_points(links, points);
        map.cells.reserve(points.size());
        for (std::size_t k = 0; k < points.size(); ++k)
            map.cells.push_back({points[k].x, points[k].y, results[k].sinr_db,
                                 results[k].sinr_db ? results[k].serving : std::nullopt});
        return map;
    }

    CoverageMap coverage_map(const Scene &scene, const std::vector<Vec3> &txs, const PlanConfig &cfg, double z_plane,
                             double resolution)
    {
        return coverage_map(LinkBudget(scene, txs, cfg), z_plane, resolution);
    }

    void write_coverage_map_csv(std::ostream &out, const CoverageMap &map)
    {
        out << csv::version_line() << '\n';
        out << "x_m,y_m,sinr_db,assoc_tx\n";
        for (const auto &c : map.cells)
        {
            out << csv::fmt(c.x) << ',' << csv::fmt(c.y) << ',';
            if (c.sinr_db)
                out << csv::fmt(*c.sinr_db);
            out << ',';
            if (c.serving)
                out << *c.serving;
            out << '\n';
        }
    }

    void write_coverage_curve_csv(std::ostream &out, std::span<const double> thresholds_db,
                                  std::span<const double> coverage)
    {
        out << csv::version_line() << '\n';
        out << "threshold_db,coverage_prob\n";
        for (std::size_t i = 0; i < thresholds_db.size() && i < coverage.size(); ++i)
            out << csv::fmt(thresholds_db[i]) << ',' << csv::fmt(coverage[i]) << '\n';
    }
}
