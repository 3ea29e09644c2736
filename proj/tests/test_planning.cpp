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
#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"

#include "test_support.hpp"
#include "thzdt/planning.hpp"
#include "thzdt/random.hpp"

using namespace thzdt;

namespace
{
    const double neg_inf = -std::numeric_limits<double>::infinity();

    Scene empty_scene(Box bounds = test::wide_box()) { return test::make_scene({}, bounds); }

    PlanConfig bare_config()
    {
        PlanConfig cfg;
        cfg.tx_power_dbm = 0.0;
        cfg.absorption_db_per_m = 0.0;
        return cfg;
    }

    PlanConfig cabin_config()
    {
        PlanConfig cfg;
        cfg.tx_gain_db = 20.0;
        cfg.rx_gain_db = 20.0;
        cfg.noise_figure_db = 20.0;
        return cfg;
    }

    RxPopulation cabin_population(const Scene &cabin, std::uint64_t seed = 7)
    {
        return sample_rx_population(cabin, 80, {2.5, 0.0, 0.9}, {1.2, 0.5, 0.25}, seed);
    }
}

TEST_CASE("received power in free space")
{
    const Scene s = empty_scene();
    const auto p = received_power_db(s, {0, 0, 0}, {1, 0, 0}, bare_config());
    REQUIRE(p);
    CHECK(*p == doctest::Approx(-20.0 * std::log10(4.0 * pi * 3e11 / speed_of_light)).epsilon(1e-12));
    CHECK(std::abs(*p - (-81.98)) <= 0.015); // -81.99 with the exact speed of light

    PlanConfig stat = bare_config();
    stat.pathloss = PathlossModel::statistical;
    CHECK(*received_power_db(s, {0, 0, 0}, {1, 0, 0}, stat) == doctest::Approx(*p));
    stat.los_probability = 0.5;
    stat.nlos_excess_db = 20.0;
    CHECK(*received_power_db(s, {0, 0, 0}, {1, 0, 0}, stat) == doctest::Approx(*p + 10.0 * std::log10(0.505)));
}

TEST_CASE("power sum of paths")
{
    const std::vector<double> two{-90.0, -90.0};
    CHECK(*power_sum_db(two) == doctest::Approx(-86.9897).epsilon(1e-6));
    CHECK_FALSE(power_sum_db({}).has_value());
}

TEST_CASE("enclosed receiver is unreachable")
{
    std::vector<Facet> f;
    for (int axis = 0; axis < 3; ++axis)
        for (double v : {-1.0, 1.0})
            test::add_rect(f, axis, v, -1, 1, -1, 1, "steel");
    const Scene box = test::make_scene(f);
    PlanConfig cfg = bare_config();
    cfg.max_order = 0;
    CHECK_FALSE(received_power_db(box, {5, 0, 0}, {0, 0, 0}, cfg).has_value());
    CHECK(test::error_code_of([&] { sinr_db(box, {{5, 0, 0}}, 0, {0, 0, 0}, cfg); }) == "UNREACHABLE");
    CHECK(test::error_code_of([&] { sinr_db(box, {{5, 0, 0}}, 1, {0, 0, 0}, cfg); }) == "RANGE");
}

TEST_CASE("SINR arithmetic")
{
    const Scene s = empty_scene();
    PlanConfig cfg = bare_config();
    const Vec3 tx{0, 0, 0}, rx{1, 0, 0};
    const double pr = *received_power_db(s, tx, rx, cfg);
    // Place the noise 20 dB below the received power.
    cfg.bandwidth_hz = 1e9;
    cfg.noise_figure_db = (pr - 20.0) - (cfg.noise_psd_dbm_per_hz + 90.0);
    CHECK(cfg.noise_dbm() == doctest::Approx(pr - 20.0));
    CHECK(sinr_db(s, {tx}, 0, rx, cfg) == doctest::Approx(20.0));

    const double alone = sinr_db(s, {tx}, 0, rx, cfg);
    const double shared = sinr_db(s, {tx, {2, 0, 0}}, 0, rx, cfg);
    CHECK(shared < alone);

    // An interferer behind a wall leaves the SINR unchanged.
    std::vector<Facet> wall;
    test::add_rect(wall, 0, 3, -5, 5, -5, 5, "steel");
    const Scene w = test::make_scene(wall);
    PlanConfig los_only = cfg;
    los_only.max_order = 0;
    CHECK(sinr_db(w, {tx, {4, 0, 0}}, 0, rx, los_only) == doctest::Approx(sinr_db(w, {tx}, 0, rx, los_only)));
}

TEST_CASE("interference never helps")
{
    const Scene cabin = test::fixture_scene("cabin.json");
    const PlanConfig cfg = cabin_config();
    const RxPopulation pop = cabin_population(cabin);
    const LinkBudget one(cabin, {cabin.position("tx4")}, cfg);
    const LinkBudget two(cabin, {cabin.position("tx4"), cabin.position("tx7")}, cfg);
    const auto a = evaluate_points(one, pop.points, 0);
    const auto b = evaluate_points(two, pop.points, 0);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(sinr_values(b)[i] <= sinr_values(a)[i]);
}

TEST_CASE("coverage probability")
{
    const std::vector<double> s{25, 15, 5};
    CHECK(coverage_probability(s, 10) == doctest::Approx(2.0 / 3.0));
    CHECK(coverage_probability(s, 0) == 1.0);
    CHECK(coverage_probability(s, 30) == 0.0);
    CHECK(coverage_probability(s, 15) == doctest::Approx(1.0 / 3.0)); // strict comparison
    const std::vector<double> w{0.5, 0.25, 0.25};
    CHECK(coverage_probability(s, 10, w) == doctest::Approx(0.75));
    const std::vector<double> blocked{20, neg_inf};
    CHECK(coverage_probability(blocked, -1e300) == 0.5);
    CHECK(test::error_code_of([] { coverage_probability({}, 0); }) == "EMPTY");
    const std::vector<double> thresholds{0, 10, 20};
    CHECK(coverage_curve(s, thresholds) == std::vector<double>{1.0, 2.0 / 3.0, 1.0 / 3.0});
}

TEST_CASE("coverage is nonincreasing in the threshold")
{
    Rng rng(51);
    for (int set = 0; set < 100; ++set)
    {
        std::vector<double> s(1 + set % 37);
        for (double &x : s)
            x = rng.uniform() < 0.1 ? neg_inf : -20.0 + 60.0 * rng.uniform();
        double prev = 1.0;
        for (double t = -30.0; t <= 50.0; t += 0.25)
        {
            const double c = coverage_probability(s, t);
            CHECK(c <= prev);
            prev = c;
        }
    }
}

TEST_CASE("rate of a step coverage curve")
{
    for (double t0 : {1.0, 3.0, 10.0})
        for (double b : {1e9, 20e9})
            for (std::size_t n : {1u, 2u})
            {
                const double exact = b * std::log2(1.0 + t0) / static_cast<double>(n);
                const double r = average_rate_bps([t0](double t) { return t < t0 ? 1.0 : 0.0; }, b, n);
                CHECK(std::abs(r - exact) <= 1e-3 * exact);
                // The same curve as a one-sample population.
                const std::vector<double> s{10.0 * std::log10(t0)};
                CHECK(average_rate_bps(s, b, n) == doctest::Approx(exact).epsilon(1e-12));
            }
    CHECK(average_rate_bps([](double) { return 0.0; }, 20e9, 1) == 0.0);
    auto curve = [](double t) { return std::exp(-t / 5.0); };
    CHECK(average_rate_bps(curve, 10e9, 1) == doctest::Approx(0.5 * average_rate_bps(curve, 20e9, 1)));
    CHECK(test::error_code_of([] { average_rate_bps([](double) { return 1.0; }, 20e9, 1); }) == "NONCONVERGENCE");
    CHECK(test::error_code_of([] { average_rate_bps([](double) { return 0.0; }, 0.0, 1); }) == "RANGE");
}

TEST_CASE("receiver populations")
{
    const Scene cabin = test::fixture_scene("cabin.json");
    const RxPopulation a = cabin_population(cabin);
    REQUIRE(a.points.size() == 80);
    for (const auto &p : a.points)
        CHECK(cabin.bounds().contains(p));
    a.validate(cabin);
    CHECK(cabin_population(cabin).points == a.points);
    CHECK(cabin_population(cabin, 8).points != a.points);

    const RxPopulation fixed = sample_rx_population(cabin, 5, {1, 0, 1}, {0, 0, 0}, 3);
    for (const auto &p : fixed.points)
        CHECK(p == Vec3{1, 0, 1});
    CHECK(test::error_code_of([&] { sample_rx_population(cabin, 3, {50, 0, 1}, {0, 0, 0}, 3); }) == "RANGE");
    CHECK(test::error_code_of([&] { sample_rx_population(cabin, 0, {1, 0, 1}, {0, 0, 0}, 3); }) == "RANGE");
}

TEST_CASE("single transmitter map in free space")
{
    const Scene s = empty_scene(Box{{-2, -2, 0}, {2, 2, 2}});
    const CoverageMap m = coverage_map(s, {{0.05, 0.05, 1.5}}, bare_config(), 1.0, 0.1);
    CHECK(m.nx == 40);
    CHECK(m.ny == 40);
    std::vector<std::pair<double, double>> by_distance;
    for (const auto &c : m.cells)
    {
        REQUIRE(c.sinr_db);
        CHECK(c.serving == std::optional<std::size_t>(0));
        by_distance.emplace_back(std::hypot(c.x - 0.05, c.y - 0.05), *c.sinr_db);
    }
    std::sort(by_distance.begin(), by_distance.end());
    for (std::size_t i = 1; i < by_distance.size(); ++i)
        if (by_distance[i].first > by_distance[i - 1].first + 1e-12)
            CHECK(by_distance[i].second < by_distance[i - 1].second);
}

TEST_CASE("two transmitters split at the bisector")
{
    const Scene s = empty_scene(Box{{-4, -2, 0}, {4, 2, 2}});
    const CoverageMap m = coverage_map(s, {{-2, 0, 1}, {2, 0, 1}}, bare_config(), 1.0, 0.1);
    for (const auto &c : m.cells)
    {
        REQUIRE(c.serving);
        CHECK(*c.serving == (c.x < 0.0 ? 0u : 1u));
    }
}

TEST_CASE("map and population agree on coverage")
{
    const Scene cabin = test::fixture_scene("cabin.json");
    PlanConfig cfg = cabin_config();
    const LinkBudget links(cabin, {cabin.position("tx4")}, cfg);
    const CoverageMap map = coverage_map(links, 1.0, 0.05);
    const Box &b = cabin.bounds();
    Rng rng(52);
    std::vector<Vec3> pts(10000);
    for (auto &p : pts)
        p = {b.min.x + (b.max.x - b.min.x) * rng.uniform(), b.min.y + (b.max.y - b.min.y) * rng.uniform(), 1.0};
    const auto sinrs = sinr_values(evaluate_points(links, pts));
    for (double t : {0.0, 10.0, 20.0, 30.0})
    {
        CAPTURE(t);
        CHECK(std::abs(coverage_probability(sinrs, t) - coverage_probability(map.sinr_values(), t)) <= 0.02);
    }
}

TEST_CASE("worker count does not change results")
{
    const Scene cabin = test::fixture_scene("cabin.json");
    PlanConfig cfg = cabin_config();
    cfg.workers = 1;
    const std::vector<Vec3> txs{cabin.position("tx4"), cabin.position("tx7")};
    const CoverageMap serial = coverage_map(cabin, txs, cfg, 1.0, 0.1);
    cfg.workers = 4;
    const CoverageMap parallel = coverage_map(cabin, txs, cfg, 1.0, 0.1);
    std::ostringstream a, b;
    write_coverage_map_csv(a, serial);
    write_coverage_map_csv(b, parallel);
    CHECK(a.str() == b.str());
}

TEST_CASE("cabin coverage trends")
{
    const Scene cabin = test::fixture_scene("cabin.json");
    const PlanConfig cfg = cabin_config();
    const RxPopulation pop = cabin_population(cabin);
    auto sinrs = [&](std::vector<Vec3> txs) { return sinr_values(evaluate_points(LinkBudget(cabin, txs, cfg), pop.points)); };

    // Ceiling centre gives the best average rate among the front candidates.
    double best = -1.0;
    std::string best_name;
    for (const std::string name : {"tx1", "tx2", "tx3", "tx4"})
    {
        const double r = average_rate_bps(sinrs({cabin.position(name)}), cfg.bandwidth_hz, 1);
        if (r > best)
            best = r, best_name = name;
    }
    CHECK(best_name == "tx4");

    const auto one = sinrs({cabin.position("tx4")});
    const auto two = sinrs({cabin.position("tx4"), cabin.position("tx7")});
    const auto rear = sinrs({cabin.position("tx7")});
    // Reachability union at the lowest threshold.
    CHECK(coverage_probability(two, -1e300) >= coverage_probability(one, -1e300));
    CHECK(coverage_probability(two, -1e300) >= coverage_probability(rear, -1e300));
    // Crossover: the second transmitter helps at low thresholds and hurts above.
    CHECK(coverage_probability(two, -10.0) > coverage_probability(one, -10.0));
    CHECK(coverage_probability(two, 20.0) < coverage_probability(one, 20.0));

    // Knee of the single transmitter curve.
    bool knee = false;
    for (double t = -10.0; t <= 40.0; t += 1.0)
        knee = knee || coverage_probability(one, t) - coverage_probability(one, t + 10.0) >= 0.5;
    CHECK(knee);
    CHECK(coverage_probability(one, 40.0) == 0.0);
}

TEST_CASE("front and rear association")
{
    const Scene cabin = test::fixture_scene("cabin.json");
    const CoverageMap m = coverage_map(cabin, {cabin.position("tx4"), cabin.position("tx7")}, cabin_config(), 1.0, 0.1);
    int front4 = 0, front7 = 0, rear4 = 0, rear7 = 0;
    for (const auto &c : m.cells)
    {
        if (!c.serving)
            continue;
        if (c.x < 2.2)
            (*c.serving == 0 ? front4 : front7)++;
        else if (c.x > 3.5)
            (*c.serving == 1 ? rear7 : rear4)++;
    }
    CHECK(front4 > 10 * front7);
    CHECK(rear7 > 10 * rear4);
}

TEST_CASE("plan configuration checks")
{
    PlanConfig cfg;
    cfg.bandwidth_hz = 0;
    CHECK(test::error_code_of([&] { cfg.validate(); }) == "RANGE");
    cfg = PlanConfig{};
    cfg.fading_sigma_db = -1;
    CHECK(test::error_code_of([&] { cfg.validate(); }) == "RANGE");
    cfg = PlanConfig{};
    CHECK(cfg.noise_dbm() == doctest::Approx(-174.0 + 10.0 * std::log10(20e9)));

    // Log-normal fading is reproducible per seed and changes with it.
    const Scene s = empty_scene();
    PlanConfig f = bare_config();
    f.fading_sigma_db = 4.0;
    f.fading_seed = 5;
    const auto a = received_power_db(s, {0, 0, 0}, {1, 0, 0}, f);
    CHECK(a == received_power_db(s, {0, 0, 0}, {1, 0, 0}, f));
    f.fading_seed = 6;
    CHECK(a != received_power_db(s, {0, 0, 0}, {1, 0, 0}, f));
}

TEST_CASE("coverage CSV writers")
{
    const Scene s = empty_scene(Box{{0, 0, 0}, {0.2, 0.1, 1}});
    const CoverageMap m = coverage_map(s, {{0.05, 0.05, 0.9}}, bare_config(), 0.5, 0.1);
    std::ostringstream out;
    write_coverage_map_csv(out, m);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    CHECK(line == "x_m,y_m,sinr_db,assoc_tx");
    int rows = 0;
    while (std::getline(in, line))
        ++rows;
    CHECK(rows == 2);

    std::ostringstream curve;
    const std::vector<double> t{0, 5}, c{1, 0.5};
    write_coverage_curve_csv(curve, t, c);
    CHECK(curve.str().find("threshold_db,coverage_prob\n0,1\n5,0.5\n") != std::string::npos);
}
