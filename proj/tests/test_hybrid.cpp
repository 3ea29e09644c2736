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
#include <set>

#include "doctest.h"

#include "test_support.hpp"
#include "thzdt/hybrid.hpp"
#include "thzdt/random.hpp"

using namespace thzdt;

namespace
{
    PathRecord anchor(double tau_ns, double power_db, double az, double zen, std::uint32_t facet)
    {
        PathRecord p;
        p.tau_s = tau_ns * 1e-9;
        p.power_db = power_db;
        p.azimuth_deg = az;
        p.zenith_deg = zen;
        p.complex_gain = std::pow(10.0, power_db / 20.0);
        p.bounce_chain.push_back(Bounce{facet, "glass", {}, 0.0, 2.42});
        return p;
    }

    // Diffuse members scattered symmetrically around each anchor.
    MpcSet diffuse_around(const std::vector<PathRecord> &anchors, int per_anchor, std::uint64_t seed)
    {
        Rng rng(seed);
        MpcSet set;
        set.source = MpcSource::measured;
        for (const auto &a : anchors)
            for (int i = 0; i < per_anchor; ++i)
            {
                const double u = rng.uniform() - 0.5;
                set.paths.push_back(Mpc{a.tau_s + u * 0.4e-9, a.zenith_deg + 10.0 * (rng.uniform() - 0.5),
                                        std::fmod(a.azimuth_deg + 10.0 * (rng.uniform() - 0.5) + 360.0, 360.0),
                                        a.power_db - 3.0 - 6.0 * rng.uniform(), 0, ""});
            }
        std::sort(set.paths.begin(), set.paths.end(), [](const Mpc &x, const Mpc &y) { return x.tau_s < y.tau_s; });
        return set;
    }

    MaterialDb identify_db() { return load_material_db(test::data_path("materials_identify.csv")); }

    MaterialDb rl_db(std::vector<std::pair<std::string, double>> entries)
    {
        std::vector<Material> m;
        for (auto &[name, rl] : entries)
            m.push_back(Material{name, {4.0, -0.1}, 0.005, rl});
        return MaterialDb(std::move(m));
    }
}

TEST_CASE("empirical CDF")
{
    const EmpiricalCdf c = empirical_cdf({4.5, 4.1, 4.3});
    CHECK(cdf_eval(c, 4.3) == doctest::Approx(2.0 / 3.0));
    CHECK(c.eval(-std::numeric_limits<double>::infinity()) == 0.0);
    CHECK(c.eval(std::numeric_limits<double>::infinity()) == 1.0);
    CHECK(c.eval(std::nextafter(4.1, 0.0)) == 0.0);
    CHECK(c.eval(4.5) == 1.0);
    CHECK(c.inverse(0.0) == 4.1);
    CHECK(c.inverse(1.0) == 4.5);
    CHECK(c.inverse(0.5) == 4.3);
    CHECK(test::error_code_of([] { empirical_cdf({}); }) == "EMPTY");

    Rng rng(41);
    double prev = 0.0;
    for (double x = 4.0; x < 4.6; x += 0.01)
    {
        const double v = c.eval(x);
        CHECK(v >= prev);
        CHECK(v <= 1.0);
        prev = v;
    }
}

TEST_CASE("inverse-transform sampling reproduces the CDF")
{
    const EmpiricalCdf c({1.0, 2.0, 3.0});
    Rng rng(42);
    int counts[3] = {0, 0, 0};
    const int draws = 100000;
    for (int i = 0; i < draws; ++i)
        ++counts[static_cast<int>(c.inverse(rng.uniform())) - 1];
    for (int k : counts)
        CHECK(std::abs(static_cast<double>(k) / draws - 1.0 / 3.0) <= 0.01);
}

TEST_CASE("clustering of the anchors themselves")
{
    const std::vector<PathRecord> anchors{anchor(4.0, -80, 10, 0, 1), anchor(5.0, -90, 100, 10, 2),
                                          anchor(6.0, -95, 200, -10, 3)};
    const HybridModel m = cluster_mpcs(to_mpc_set(anchors, MpcSource::measured), anchors);
    REQUIRE(m.rt_clusters.size() == 3);
    CHECK(m.non_rt_clusters.empty());
    for (std::size_t i = 0; i < 3; ++i)
    {
        CHECK(m.rt_clusters[i].subpaths.size() == 1);
        CHECK(m.rt_clusters[i].mean_delay_s == anchors[i].tau_s);
    }
}

TEST_CASE("far MPC forms a non-RT cluster")
{
    const std::vector<PathRecord> anchors{anchor(4.0, -80, 10, 0, 1), anchor(5.0, -90, 100, 10, 2)};
    MpcSet measured = to_mpc_set(anchors, MpcSource::measured);
    measured.paths.push_back(Mpc{15.5e-9, 0.0, 10.0, -100.0, 0, ""});
    ClusterGates gates;
    gates.delay_s = 1e-9;
    const HybridModel m = cluster_mpcs(measured, anchors, gates);
    CHECK(m.rt_clusters.size() == 2);
    REQUIRE(m.non_rt_clusters.size() == 1);
    CHECK_FALSE(m.non_rt_clusters[0].anchor.has_value());
    CHECK(m.non_rt_clusters[0].mean_delay_s == 15.5e-9);
}

TEST_CASE("clustering errors")
{
    const std::vector<PathRecord> anchors{anchor(4.0, -80, 10, 0, 1), anchor(4.5, -80, 10, 0, 1)};
    CHECK(test::error_code_of([&] { cluster_mpcs(MpcSet{}, {}); }) == "EMPTY");
    CHECK(test::error_code_of([&] { cluster_mpcs(MpcSet{}, anchors); }) == "SCHEMA");
}

TEST_CASE("clusters around five anchors")
{
    const std::vector<double> means{4.34, 5.17, 5.75, 6.29, 8.07};
    std::vector<PathRecord> anchors;
    for (std::size_t i = 0; i < means.size(); ++i)
        anchors.push_back(anchor(means[i], -85.0 - 3.0 * static_cast<double>(i), 40.0 + 60.0 * static_cast<double>(i),
                                 0.0, static_cast<std::uint32_t>(i)));
    const MpcSet measured = diffuse_around(anchors, 30, 43);
    const HybridModel m = cluster_mpcs(measured, anchors);
    REQUIRE(m.rt_clusters.size() == 5);
    CHECK(m.non_rt_clusters.empty());
    std::size_t total = 0;
    for (std::size_t i = 0; i < 5; ++i)
    {
        const Cluster &c = m.rt_clusters[i];
        CHECK(std::abs(c.mean_delay_s * 1e9 - means[i]) <= 0.1);
        double sum = 0.0;
        for (const auto &s : c.subpaths)
        {
            sum += s.tau_s;
            CHECK(std::abs(s.tau_s - c.anchor->tau_s) <= m.gates.delay_s);
        }
        CHECK(std::abs(c.mean_delay_s - sum / static_cast<double>(c.subpaths.size())) <= 1e-12);
        total += c.subpaths.size();
    }
    CHECK(total == measured.paths.size());
}

TEST_CASE("clustering is a partition")
{
    Rng rng(44);
    for (int round = 0; round < 20; ++round)
    {
        std::vector<PathRecord> anchors;
        for (std::uint32_t i = 0; i < 4; ++i)
            anchors.push_back(anchor(3.0 + 6.0 * rng.uniform(), -90, 360 * rng.uniform(), -40 + 100 * rng.uniform(), i));
        MpcSet measured = diffuse_around(anchors, 5, 100 + static_cast<std::uint64_t>(round));
        for (int i = 0; i < 10; ++i)
            measured.paths.push_back(Mpc{(3.0 + 8.0 * rng.uniform()) * 1e-9, -40 + 100 * rng.uniform(),
                                         360 * rng.uniform(), -100, 0, ""});
        const HybridModel m = cluster_mpcs(measured, anchors);
        std::multiset<double> seen;
        for (const auto *list : {&m.rt_clusters, &m.non_rt_clusters})
            for (const auto &c : *list)
                for (const auto &s : c.subpaths)
                    seen.insert(s.tau_s);
        std::multiset<double> expect;
        for (const auto &p : measured.paths)
            expect.insert(p.tau_s);
        CHECK(seen == expect);
        CHECK(m.rt_clusters.size() + m.unmatched_anchors.size() == anchors.size());
    }
}

TEST_CASE("material identification")
{
    const MaterialMatch ab = identify_material_rl(12.3, rl_db({{"A", 2.0}, {"B", 10.0}}));
    CHECK(ab.label == "A+B");
    CHECK(ab.delta_db == doctest::Approx(0.3));
    CHECK(identify_material_rl(2.4, rl_db({{"glass", 2.42}})).label == "glass");
    const MaterialMatch far = identify_material_rl(50.0, rl_db({{"glass", 2.42}}));
    CHECK(far.label == "unknown");
    CHECK_FALSE(far.known);
    CHECK(test::error_code_of([] { identify_material_rl(1.0, MaterialDb{}); }) == "EMPTY");

    // Through cluster power: FSPL at the cluster delay plus the loss.
    const double tau = 5e-9, f = 300e9;
    const MaterialMatch g = identify_material(-fspl_db(f, tau) - 2.42, tau, f, test::fixture_db());
    CHECK(g.label == "glass");
    CHECK(g.rl_db == doctest::Approx(2.42));
}

TEST_CASE("material labels of the measured clusters")
{
    const MaterialDb db = identify_db();
    const std::vector<std::pair<double, std::string>> rx2{
        {3.80, "Steel"}, {14.62, "Rubber"}, {16.80, "Rubber"}, {22.70, "Glass+Rubber"}};
    const std::vector<std::pair<double, std::string>> rx3{
        {5.32, "Glass"}, {13.51, "Rubber"}, {20.73, "Glass+Rubber"}, {16.56, "Rubber"}, {23.54, "Glass+Rubber"}};
    for (const auto *table : {&rx2, &rx3})
        for (const auto &[rl, label] : *table)
        {
            CAPTURE(rl);
            const MaterialMatch m = identify_material_rl(rl, db);
            CHECK(m.label == label);
            CHECK(m.delta_db <= 3.0);
        }
}

TEST_CASE("synthesized realizations")
{
    const std::vector<PathRecord> anchors{anchor(4.34, -85, 40, 0, 1), anchor(6.29, -95, 160, 10, 2),
                                          anchor(9.0, -99, 300, 0, 3)};
    MpcSet measured = diffuse_around({anchors[0], anchors[1]}, 25, 45);
    measured.paths.push_back(Mpc{12e-9, 20, 90, -105, 0, ""});
    const HybridModel m = cluster_mpcs(measured, anchors);
    REQUIRE(m.rt_clusters.size() == 2);
    REQUIRE(m.unmatched_anchors.size() == 1);
    REQUIRE(m.non_rt_clusters.size() == 1);

    const MpcSet bare = synthesize_realization(m, 0, 1);
    CHECK(bare.paths == to_mpc_set(anchors).paths);

    const MpcSet a = synthesize_realization(m, 20, 7), b = synthesize_realization(m, 20, 7);
    CHECK(a == b);
    CHECK(a.paths.size() == 3 + 3 * 20);
    CHECK(synthesize_realization(m, 20, 8) != a);

    for (const auto &p : anchors)
    {
        const Mpc want = to_mpc(p);
        CHECK(std::count(a.paths.begin(), a.paths.end(), want) >= 1);
    }
    // Drawn angles stay inside the observed span of their cluster.
    const Cluster &c0 = m.rt_clusters[0];
    HybridModel only0 = m;
    only0.rt_clusters = {c0};
    only0.non_rt_clusters.clear();
    only0.unmatched_anchors.clear();
    for (const auto &s : synthesize_realization(only0, 200, 9).paths)
    {
        const double off = std::fmod(s.azimuth_deg - c0.azimuth_lo_deg + 360.0, 360.0);
        CHECK(off <= c0.azimuth_span_deg + 1e-9);
        CHECK(s.zenith_deg >= c0.zenith_lo_deg);
        CHECK(s.zenith_deg <= c0.zenith_hi_deg);
    }
    CHECK(test::error_code_of([] { synthesize_realization(HybridModel{}, 1, 1); }) == "EMPTY");
}

TEST_CASE("large draws match the cluster mean delay")
{
    const std::vector<PathRecord> anchors{anchor(5.17, -90, 80, 0, 1)};
    HybridModel m = cluster_mpcs(diffuse_around(anchors, 40, 46), anchors);
    REQUIRE(m.rt_clusters.size() == 1);
    const MpcSet s = synthesize_realization(m, 10000, 47);
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto &p : s.paths)
        if (p.order == 0)
        {
            sum += p.tau_s;
            ++n;
        }
    REQUIRE(n == 10000);
    CHECK(std::abs(sum / static_cast<double>(n) - m.rt_clusters[0].mean_delay_s) <= 0.01 * m.rt_clusters[0].mean_delay_s);
}

TEST_CASE("single glass bounce outpowers glass plus seat")
{
    const Scene cabin = test::fixture_scene("cabin.json");
    const auto paths = trace(cabin, cabin.position("tx1"), cabin.position("rx2"), TraceConfig{});
    const PathRecord *single = nullptr, *pair = nullptr;
    for (const auto &p : paths)
    {
        if (p.order() == 1 && p.bounce_chain[0].material == "glass" && (!single || p.power_db > single->power_db))
            single = &p;
        if (p.order() == 2 && p.chain_label().find("glass") != std::string::npos &&
            p.chain_label().find("leather") != std::string::npos && (!pair || p.power_db > pair->power_db))
            pair = &p;
    }
    REQUIRE(single);
    REQUIRE(pair);
    const std::vector<PathRecord> anchors{*single, *pair};
    const HybridModel m = cluster_mpcs(diffuse_around(anchors, 30, 48), anchors);
    REQUIRE(m.rt_clusters.size() == 2);
    const bool single_first = m.rt_clusters[0].anchor->same_chain(*single);
    HybridModel a = m, b = m;
    a.rt_clusters = {m.rt_clusters[single_first ? 0 : 1]};
    b.rt_clusters = {m.rt_clusters[single_first ? 1 : 0]};
    auto mean_drawn = [](const HybridModel &h, std::uint64_t seed) {
        double sum = 0.0;
        int n = 0;
        for (const auto &p : synthesize_realization(h, 50, seed).paths)
            if (p.chain.empty())
            {
                sum += p.power_db;
                ++n;
            }
        return sum / n;
    };
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
        CHECK(mean_drawn(a, seed) > mean_drawn(b, seed));
}

TEST_CASE("hybrid model JSON round trip")
{
    const std::vector<PathRecord> anchors{anchor(4.34, -85, 40, 0, 1), anchor(6.29, -95, 160, 10, 2),
                                          anchor(9.0, -99, 300, 0, 3)};
    MpcSet measured = diffuse_around({anchors[0], anchors[1]}, 10, 49);
    measured.paths.push_back(Mpc{12e-9, 20, 90, -105, 0, ""});
    HybridModel m = cluster_mpcs(measured, anchors);
    m.rt_clusters[0].identified_materials = {"glass"};
    const std::string text = save_hybrid_model(m);
    const HybridModel back = parse_hybrid_model(text);
    CHECK(save_hybrid_model(back) == text);
    CHECK(synthesize_realization(back, 5, 3) == synthesize_realization(m, 5, 3));
    CHECK(back.rt_clusters[0].identified_materials == std::vector<std::string>{"glass"});

    CHECK(test::error_code_of([] { parse_hybrid_model("{"); }) == "PARSE");
    CHECK(test::error_code_of([] { parse_hybrid_model(R"({"version":"other"})"); }) == "SCHEMA");
    CHECK(test::error_code_of([] { load_hybrid_model("/nonexistent.json"); }) == "ENOENT");
}
