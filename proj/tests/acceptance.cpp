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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "oracle_trace.hpp"
#include "test_support.hpp"
#include "thzdt/channel.hpp"
#include "thzdt/hybrid.hpp"
#include "thzdt/materials.hpp"
#include "thzdt/optimize.hpp"
#include "thzdt/planning.hpp"
#include "thzdt/random.hpp"

using namespace thzdt;
namespace fs = std::filesystem;

namespace
{
    struct Outcome
    {
        bool pass = true;
        std::string detail;

        void require(bool ok, const std::string &what)
        {
            if (!ok && pass)
            {
                pass = false;
                detail = what;
            }
        }
    };

    using Clock = std::chrono::steady_clock;

    double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

    std::string fmt(const char *f, double v)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, f, v);
        return buf;
    }

    PlanConfig cabin_config()
    {
        PlanConfig cfg;
        cfg.tx_gain_db = 20.0;
        cfg.rx_gain_db = 20.0;
        cfg.noise_figure_db = 20.0;
        return cfg;
    }

    RxPopulation cabin_population(const Scene &cabin)
    {
        return sample_rx_population(cabin, 80, {2.5, 0.0, 0.9}, {1.2, 0.5, 0.25}, 7);
    }

    Outcome tracer_oracle()
    {
        Outcome o;
        const Scene s = test::fixture_scene("shoebox.json");
        TraceConfig cfg;
        cfg.max_order = 2;
        cfg.absorption_db_per_m = 0.0;
        std::vector<std::pair<Vec3, Vec3>> links{{s.position("tx"), s.position("rx")}};
        Rng rng(1);
        for (int i = 0; i < 20; ++i)
            links.push_back({{0.2 + 4.6 * rng.uniform(), -0.8 + 1.6 * rng.uniform(), 0.2 + 1.1 * rng.uniform()},
                             {0.2 + 4.6 * rng.uniform(), -0.8 + 1.6 * rng.uniform(), 0.2 + 1.1 * rng.uniform()}});
        double traced_time = 0.0;
        std::size_t total = 0;
        for (const auto &[tx, rx] : links)
        {
            const auto t0 = Clock::now();
            const auto paths = trace(s, tx, rx, cfg);
            traced_time += seconds_since(t0);
            const auto ref = oracle::brute_force_paths(s, tx, rx, 2);
            o.require(paths.size() == ref.size(), "path count differs from brute force");
            std::vector<double> a, b;
            for (const auto &p : paths)
                a.push_back(p.tau_s);
            for (const auto &r : ref)
                b.push_back(r.length / speed_of_light);
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
                o.require(std::abs(a[i] - b[i]) <= 1e-12, "delay differs from brute force by more than 1 ps");
            total += paths.size();
        }
        o.require(traced_time < 5.0, "tracing took longer than 5 s");
        if (o.pass)
            o.detail = std::to_string(links.size()) + " links, " + std::to_string(total) + " paths identical, " +
                       fmt("%.3f s", traced_time);
        return o;
    }

    Outcome reflection_physics()
    {
        Outcome o;
        const double lambda = speed_of_light / 300e9;
        Rng rng(2);
        double worst = 0.0;
        for (int i = 0; i < 10000; ++i)
        {
            const std::complex<double> eta(1.0 + 30.0 * rng.uniform(), -10.0 * rng.uniform() * rng.uniform());
            const ReflectionQuery q{eta, 1e-5 + 0.05 * rng.uniform(), 0.5 * pi * 0.9999 * rng.uniform(),
                                    1e-4 + 1e-2 * rng.uniform(), (i % 2) ? Polarization::te : Polarization::tm};
            worst = std::max(worst, std::abs(slab_reflection(q)));
        }
        o.require(worst <= 1.0 + 1e-12, "|R| exceeded 1");
        double thick = 0.0, half = 0.0;
        for (auto p : {Polarization::te, Polarization::tm})
            for (double theta : {0.0, 0.4, 0.9, 1.3})
            {
                const ReflectionQuery q{{5.0, -3.0}, 0.5, theta, lambda, p};
                thick = std::max(thick, std::abs(slab_reflection(q) - fresnel_coefficient(q)));
                const double eta = 2.25;
                const double d = lambda / (2.0 * std::sqrt(eta - std::sin(theta) * std::sin(theta)));
                half = std::max(half, std::abs(slab_reflection(ReflectionQuery{eta, d, theta, lambda, p})));
            }
        o.require(thick <= 1e-9, "thick slab differs from the interface coefficient");
        o.require(half < 1e-9, "half-wave slab reflects");
        if (o.pass)
            o.detail = fmt("max|R| = %.15f", worst) + fmt(", thick-slab gap %.1e", thick) + fmt(", half-wave |R| %.1e", half);
        return o;
    }

    PathRecord planted(double tau_s, double power_db, double az, double zen, double phase)
    {
        PathRecord p;
        p.tau_s = tau_s;
        p.power_db = power_db;
        p.azimuth_deg = az;
        p.zenith_deg = zen;
        p.complex_gain = std::polar(std::pow(10.0, power_db / 20.0), phase);
        return p;
    }

    Outcome dsp_round_trip()
    {
        Outcome o;
        const FrequencyBand band;
        const double step = band.delay_step_s();
        Rng rng(3);
        double worst_tau = 0.0, worst_pow = 0.0;
        const int trials = 48;
        for (int t = 0; t < trials; ++t)
        {
            const std::size_t k = 1 + static_cast<std::size_t>(t) % 8;
            std::vector<std::size_t> bins;
            while (bins.size() < k)
            {
                const auto m = static_cast<std::size_t>(20 + rng.uniform() * 300);
                if (std::all_of(bins.begin(), bins.end(), [&](std::size_t b) { return (b > m ? b - m : m - b) >= 3; }))
                    bins.push_back(m);
            }
            std::vector<PathRecord> paths;
            for (std::size_t m : bins)
                paths.push_back(planted(static_cast<double>(m) * step, -70.0 - 25.0 * rng.uniform(),
                                        10.0 * std::floor(36.0 * rng.uniform()),
                                        -40.0 + 10.0 * std::floor(11.0 * rng.uniform()), 2.0 * pi * rng.uniform()));
            const MpcSet set = extract_mpcs(cfr_to_cir(synthesize_cfr(paths, band)));
            o.require(set.paths.size() == k, "extracted count differs from planted count");
            if (set.paths.size() != k)
                continue;
            std::sort(paths.begin(), paths.end(), [](const auto &a, const auto &b) { return a.tau_s < b.tau_s; });
            for (std::size_t i = 0; i < k; ++i)
            {
                worst_tau = std::max(worst_tau, std::abs(set.paths[i].tau_s - paths[i].tau_s));
                worst_pow = std::max(worst_pow, std::abs(set.paths[i].power_db - paths[i].power_db));
            }
        }
        o.require(worst_tau <= 0.05e-9, "delay error above 0.05 ns");
        o.require(worst_pow <= 0.5, "power error above 0.5 dB");
        if (o.pass)
            o.detail = std::to_string(trials) + " sets of 1-8 paths, max delay error " + fmt("%.2e ns", worst_tau * 1e9) +
                       ", max power error " + fmt("%.2e dB", worst_pow);
        return o;
    }

    Outcome material_labels()
    {
        Outcome o;
        const MaterialDb db = load_material_db(test::data_path("materials_identify.csv"));
        const std::vector<std::pair<double, std::string>> table{
            {3.80, "Steel"},         {14.62, "Rubber"}, {16.80, "Rubber"},        {22.70, "Glass+Rubber"},
            {5.32, "Glass"},         {13.51, "Rubber"}, {20.73, "Glass+Rubber"}, {16.56, "Rubber"},
            {23.54, "Glass+Rubber"}};
        int hits = 0;
        for (const auto &[rl, label] : table)
        {
            const MaterialMatch m = identify_material_rl(rl, db, 3.0);
            if (m.label == label)
                ++hits;
            else
                o.require(false, fmt("RL %.2f", rl) + " labelled " + m.label + ", expected " + label);
        }
        if (o.pass)
            o.detail = std::to_string(hits) + "/9 labels reproduced";
        return o;
    }

    Outcome rate_integral()
    {
        Outcome o;
        double worst = 0.0;
        for (double t0 : {1.0, 3.0, 10.0})
            for (double b : {1e9, 20e9})
                for (std::size_t n : {1u, 2u})
                {
                    const double exact = b * std::log2(1.0 + t0) / static_cast<double>(n);
                    const double r = average_rate_bps([t0](double t) { return t < t0 ? 1.0 : 0.0; }, b, n);
                    worst = std::max(worst, std::abs(r - exact) / exact);
                }
        o.require(worst <= 1e-3, "relative error above 0.1%");
        if (o.pass)
            o.detail = "12 cases, max relative error " + fmt("%.2e", worst);
        return o;
    }

    Outcome coverage_properties()
    {
        Outcome o;
        Rng rng(6);
        for (int set = 0; set < 100; ++set)
        {
            std::vector<double> s(1 + static_cast<std::size_t>(set) % 37);
            for (double &x : s)
                x = rng.uniform() < 0.1 ? -std::numeric_limits<double>::infinity() : -20.0 + 60.0 * rng.uniform();
            double prev = 1.0;
            for (double t = -30.0; t <= 50.0; t += 0.25)
            {
                const double c = coverage_probability(s, t);
                o.require(c <= prev, "coverage increased with the threshold");
                prev = c;
            }
        }
        const Scene cabin = test::fixture_scene("cabin.json");
        const RxPopulation pop = cabin_population(cabin);
        const PlanConfig cfg = cabin_config();
        auto low = [&](std::vector<Vec3> txs) {
            return coverage_probability(sinr_values(evaluate_points(LinkBudget(cabin, txs, cfg), pop.points)), -1e300);
        };
        const double a = low({cabin.position("tx4")}), b = low({cabin.position("tx7")});
        const double ab = low({cabin.position("tx4"), cabin.position("tx7")});
        o.require(ab >= a && ab >= b, "two-transmitter coverage below a single transmitter");
        if (o.pass)
            o.detail = "100 sets monotone; reachability tx4 " + fmt("%.4f", a) + ", tx7 " + fmt("%.4f", b) +
                       ", both " + fmt("%.4f", ab);
        return o;
    }

    Outcome cabin_trends()
    {
        Outcome o;
        const Scene cabin = test::fixture_scene("cabin.json");
        const RxPopulation pop = cabin_population(cabin);
        const PlanConfig cfg = cabin_config();
        auto sinrs = [&](std::vector<Vec3> txs) {
            return sinr_values(evaluate_points(LinkBudget(cabin, txs, cfg), pop.points));
        };
        std::string best;
        double best_rate = -1.0;
        for (const std::string name : {"tx1", "tx2", "tx3", "tx4"})
        {
            const double r = average_rate_bps(sinrs({cabin.position(name)}), cfg.bandwidth_hz, 1);
            if (r > best_rate)
                best_rate = r, best = name;
        }
        o.require(best == "tx4", "(a) " + best + " ranks first instead of tx4");

        const auto one = sinrs({cabin.position("tx4")});
        const auto two = sinrs({cabin.position("tx4"), cabin.position("tx7")});
        std::optional<double> crossover;
        bool higher_low = coverage_probability(two, -10.0) > coverage_probability(one, -10.0);
        for (double t = -10.0; t <= 40.0 && !crossover; t += 1.0)
            if (coverage_probability(two, t) < coverage_probability(one, t))
                crossover = t;
        bool stays_lower = crossover.has_value();
        for (double t = crossover.value_or(0.0); crossover && t <= 40.0; t += 1.0)
            stays_lower = stays_lower && coverage_probability(two, t) <= coverage_probability(one, t);
        o.require(higher_low && stays_lower, "(b) no low-threshold gain followed by a crossover");

        const CoverageMap map = coverage_map(cabin, {cabin.position("tx4"), cabin.position("tx7")}, cfg, 1.0, 0.05);
        int front4 = 0, front7 = 0, rear4 = 0, rear7 = 0;
        for (const auto &c : map.cells)
        {
            if (!c.serving)
                continue;
            if (c.x < 2.2)
                (*c.serving == 0 ? front4 : front7)++;
            else if (c.x > 3.5)
                (*c.serving == 1 ? rear7 : rear4)++;
        }
        o.require(front4 > 10 * front7 && rear7 > 10 * rear4, "(c) association is not split front/rear");
        if (o.pass)
            o.detail = "(a) tx4 first at " + fmt("%.1f Gbps", best_rate / 1e9) + "; (b) crossover at " +
                       fmt("%.0f dB", *crossover) + "; (c) front " + std::to_string(front4) + ":" + std::to_string(front7) +
                       ", rear " + std::to_string(rear7) + ":" + std::to_string(rear4);
        return o;
    }

    std::string slurp(const std::string &path)
    {
        std::ifstream in(path, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    }

    std::string without_version(const std::string &text)
    {
        std::istringstream in(text);
        std::string line, out;
        while (std::getline(in, line))
            if (line.find("version") == std::string::npos)
                out += line + '\n';
        return out;
    }

    int run_cli(const std::vector<std::string> &args)
    {
        std::ostringstream out, err;
        return cli::run_subcommand(args, out, err);
    }

    Outcome optimizer(const fs::path &dir)
    {
        Outcome o;
        const std::vector<double> lo1{0.0}, hi1{2.0}, lo2{-2.0, -2.0}, hi2{2.0, 2.0};
        const auto a = powell_maximize([](std::span<const double> x) { return -(x[0] - 1) * (x[0] - 1); }, {0.2}, lo1,
                                       hi1, 1e-9);
        const auto b = powell_maximize(
            [](std::span<const double> x) { return -(x[0] - 1) * (x[0] - 1) - 10 * (x[1] + 0.5) * (x[1] + 0.5); },
            {-1.5, 1.5}, lo2, hi2, 1e-10);
        const auto c = powell_maximize([](std::span<const double> x) { return x[0]; }, {0.3}, lo1, hi1, 1e-9);
        const double powell_err = std::max({std::abs(a.x[0] - 1), std::abs(b.x[0] - 1), std::abs(b.x[1] + 0.5),
                                            std::abs(c.x[0] - 2)});
        o.require(powell_err <= 1e-5, "Powell missed an analytic maximum");

        // Free-space box with a symmetric receiver grid.
        const Scene box = test::make_scene({}, Box{{-2, -2, 0}, {2, 2, 2}});
        OptProblem p;
        p.scene = &box;
        p.cfg.tx_gain_db = p.cfg.rx_gain_db = 20.0;
        for (double x : {-0.3, 0.0, 0.3})
            for (double y : {-0.3, 0.0, 0.3})
                p.rx_pop.points.push_back({x + 0.2, y - 0.1, 0.5});
        p.bounds = Box{{-1, -1, 1.5}, {1, 1, 1.9}};
        p.gamma_db = 0.0;
        p.p_th = 0.0;
        p.thresholds_db = default_thresholds();
        p.tol = 1e-6;
        const std::vector<Vec3> corner{{-0.9, -0.9, 1.5}};
        const OptResult free = stage2_refine(p, corner);
        double grid = -std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 100; ++i)
            for (int j = 0; j <= 100; ++j)
                for (int k = 0; k <= 20; ++k)
                {
                    const std::vector<Vec3> x{{-1.0 + 0.02 * i, -1.0 + 0.02 * j, 1.5 + 0.02 * k}};
                    grid = std::max(grid, objective(p, x));
                }
        o.require(free.eval.value >= free.start_eval.value, "free-space refinement lost ground");
        o.require(free.eval.value >= 0.99 * grid, "free-space result more than 1% below the grid search");

        // Full cabin run through the command line.
        const auto t0 = Clock::now();
        const std::string out = (dir / "opt.json").string();
        const int code = run_cli({"optimize", "--scene", test::data_path("cabin.json"), "--candidates", "tx1,tx2,tx3,tx4",
                                  "--n", "1", "--rx-seed", "7", "--rx-count", "80", "--config",
                                  test::data_path("plan_config.json"), "--map", (dir / "map.csv").string(), "--res",
                                  "0.05", "--out", out});
        const double elapsed = seconds_since(t0);
        o.require(code == 0, "cabin optimize run failed");
        o.require(elapsed < 60.0, "cabin optimize run took longer than 60 s");
        double cabin_gain = 0.0;
        if (code == 0)
        {
            const std::string json = slurp(out);
            const Scene cabin = test::fixture_scene("cabin.json");
            OptProblem q;
            q.scene = &cabin;
            q.cfg = cabin_config();
            q.rx_pop = cabin_population(cabin);
            q.bounds = cabin.bounds();
            q.thresholds_db = default_thresholds();
            const OptResult r = stage2_refine(q, std::vector<Vec3>{cabin.position("tx4")});
            o.require(r.eval.value >= r.start_eval.value, "cabin refinement lost ground");
            cabin_gain = r.eval.value - r.start_eval.value;
            o.require(json.find("\"start\"") != std::string::npos, "cabin result JSON incomplete");
        }
        if (o.pass)
            o.detail = "Powell error " + fmt("%.1e", powell_err) + ", free-space gap to grid " +
                       fmt("%.3f%%", 100.0 * (grid - free.eval.value) / grid) + ", cabin gain " +
                       fmt("%.3g bps", cabin_gain) + ", cabin run " + fmt("%.1f s", elapsed);
        return o;
    }

    Outcome determinism(const fs::path &dir)
    {
        Outcome o;
        const std::string cabin = test::data_path("cabin.json"), cfg = test::data_path("plan_config.json");
        auto f = [&](const std::string &n) { return (dir / n).string(); };
        // Prepare shared inputs once.
        run_cli({"trace", "--scene", cabin, "--tx", "tx1", "--rx", "rx2", "--out", f("in_paths.csv")});
        run_cli({"synth", "--paths", f("in_paths.csv"), "--out", f("in_cfr.csv")});
        run_cli({"extract", "--cfr", f("in_cfr.csv"), "--out", f("in_mpc.csv")});
        run_cli({"fit", "--mpc", f("in_mpc.csv"), "--scene", cabin, "--tx", "tx1", "--rx", "rx2", "--out", f("in_model.json")});

        const std::vector<std::vector<std::string>> commands{
            {"trace", "--scene", cabin, "--tx", "tx1", "--rx", "rx2", "--sector-radius", "0.1"},
            {"synth", "--paths", f("in_paths.csv")},
            {"synth", "--model", f("in_model.json"), "--seed", "11", "--n", "20"},
            {"extract", "--cfr", f("in_cfr.csv")},
            {"fit", "--mpc", f("in_mpc.csv"), "--scene", cabin, "--tx", "tx1", "--rx", "rx2"},
            {"identify", "--model", f("in_model.json"), "--materials", test::data_path("materials.csv")},
            {"covermap", "--scene", cabin, "--tx", "tx4,tx7", "--res", "0.1", "--config", cfg},
            {"plan", "--scene", cabin, "--tx", "tx4", "--rx-seed", "7", "--config", cfg, "--fading-sigma", "3",
             "--fading-seed", "5"},
            {"optimize", "--scene", cabin, "--candidates", "tx1,tx4", "--rx-seed", "7", "--rx-count", "40", "--config",
             cfg, "--tol", "1e-3"},
        };
        int i = 0;
        for (auto cmd : commands)
        {
            std::string runs[2];
            for (int r = 0; r < 2; ++r)
            {
                const std::string out = f("det_" + std::to_string(i) + "_" + std::to_string(r));
                auto args = cmd;
                args.insert(args.end(), {"--out", out});
                o.require(run_cli(args) == 0, cmd[0] + " failed");
                runs[r] = without_version(slurp(out));
            }
            o.require(!runs[0].empty() && runs[0] == runs[1], cmd[0] + " output differs between runs");
            ++i;
        }
        if (o.pass)
            o.detail = std::to_string(commands.size()) + " commands across all 8 subcommands byte-identical";
        return o;
    }
}

int main()
{
    const fs::path dir = fs::temp_directory_path() / ("thzdt_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const std::vector<std::pair<const char *, std::function<Outcome()>>> criteria{
        {"ray tracer matches brute force", tracer_oracle},
        {"reflection physics", reflection_physics},
        {"DSP round trip", dsp_round_trip},
        {"material identification", material_labels},
        {"rate integral", rate_integral},
        {"coverage monotonicity and union", coverage_properties},
        {"cabin trends", cabin_trends},
        {"optimizer", [&] { return optimizer(dir); }},
        {"CLI determinism", [&] { return determinism(dir); }},
    };
    int failures = 0, index = 0;
    for (const auto &[name, fn] : criteria)
    {
        ++index;
        Outcome o;
        try
        {
            o = fn();
        }
        catch (const std::exception &e)
        {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failures += o.pass ? 0 : 1;
        std::printf("criterion %d: %s  %s: %s\n", index, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
    }
    fs::remove_all(dir);
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
