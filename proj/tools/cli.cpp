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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cli.hpp"
#include "thzdt/channel.hpp"
#include "thzdt/csv.hpp"
#include "thzdt/error.hpp"
#include "thzdt/hybrid.hpp"
#include "thzdt/optimize.hpp"
#include "thzdt/planning.hpp"
#include "thzdt/raytrace.hpp"
#include "thzdt/scene.hpp"
#include "thzdt/version.hpp"

namespace thzdt::cli
{
    namespace
    {
        // JSON config: top-level keys mirror long flag names of the active
        // subcommand; an object keyed by a subcommand name scopes its keys
        // to that subcommand.
        class JsonConfig : public CLI::Config
        {
        public:
            explicit JsonConfig(std::string section) : section_(std::move(section)) {}

            std::string to_config(const CLI::App *, bool, bool, std::string) const override { return "{}"; }

            std::vector<CLI::ConfigItem> from_config(std::istream &in) const override
            {
                nlohmann::json doc;
                try
                {
                    doc = nlohmann::json::parse(in);
                }
                catch (const nlohmann::json::parse_error &e)
                {
                    throw CLI::ConversionError("config", e.what());
                }
                if (!doc.is_object())
                    throw CLI::ConversionError("config", "top level must be an object");
                std::vector<CLI::ConfigItem> items;
                for (const auto &[key, value] : doc.items())
                {
                    if (value.is_object())
                    {
                        for (const auto &[k, v] : value.items())
                            items.push_back(item({key}, k, v));
                    }
                    else if (!section_.empty())
                        items.push_back(item({section_}, key, value));
                }
                return items;
            }

        private:
            static CLI::ConfigItem item(std::vector<std::string> parents, const std::string &name,
                                        const nlohmann::json &v)
            {
                CLI::ConfigItem it;
                it.parents = std::move(parents);
                it.name = name;
                auto text = [](const nlohmann::json &x) { return x.is_string() ? x.get<std::string>() : x.dump(); };
                if (v.is_array())
                    for (const auto &e : v)
                        it.inputs.push_back(text(e));
                else
                    it.inputs.push_back(text(v));
                return it;
            }

            std::string section_;
        };

        struct UsageError : std::runtime_error
        {
            using std::runtime_error::runtime_error;
        };

        std::vector<double> split_doubles(const std::string &text, char sep, const std::string &what)
        {
            std::vector<double> out;
            std::stringstream ss(text);
            std::string part;
            while (std::getline(ss, part, sep))
                out.push_back(csv::parse_double(part, 0, what));
            return out;
        }

        Vec3 parse_point(const std::string &text, const std::string &what)
        {
            const auto v = split_doubles(text, ':', what);
            if (v.size() != 3)
                throw UsageError(what + ": expected x:y:z, got '" + text + "'");
            return {v[0], v[1], v[2]};
        }

        // A terminal is a named position in the scene or a literal x:y:z.
        Vec3 resolve_point(const Scene &scene, const std::string &text)
        {
            if (text.find(':') != std::string::npos)
                return parse_point(text, "point");
            return scene.position(text);
        }

        std::vector<Vec3> resolve_points(const Scene &scene, const std::vector<std::string> &names)
        {
            std::vector<Vec3> out;
            for (const auto &n : names)
                out.push_back(resolve_point(scene, n));
            return out;
        }

        std::vector<HumanBox> parse_humans(const std::vector<std::string> &specs)
        {
            std::vector<HumanBox> out;
            for (const auto &s : specs)
            {
                const auto v = split_doubles(s, ':', "human");
                if (v.size() != 6 && v.size() != 7)
                    throw UsageError("--human expects x0:y0:z0:x1:y1:z1[:loss_db], got '" + s + "'");
                HumanBox h{Box{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}}, v.size() == 7 ? v[6] : 10.0};
                out.push_back(h);
            }
            return out;
        }

        std::vector<double> parse_range(const std::string &text)
        {
            const auto v = split_doubles(text, ':', "thresholds");
            if (v.size() != 3 || !(v[2] > 0.0) || v[1] < v[0])
                throw UsageError("--thresholds expects start:stop:step with step > 0");
            std::vector<double> out;
            const auto n = static_cast<long long>(std::floor((v[1] - v[0]) / v[2] + 1e-9));
            for (long long i = 0; i <= n; ++i)
                out.push_back(v[0] + static_cast<double>(i) * v[2]);
            return out;
        }

        void emit(const std::string &path, std::ostream &fallback, const std::function<void(std::ostream &)> &write)
        {
            if (path.empty() || path == "-")
            {
                write(fallback);
                return;
            }
            std::ofstream f(path, std::ios::binary);
            if (!f)
                throw Error(Errc::io, "cannot write '" + path + "'");
            write(f);
            if (!f)
                throw Error(Errc::io, "write to '" + path + "' failed");
        }

        const std::map<std::string, Polarization> polarization_map{{"te", Polarization::te}, {"tm", Polarization::tm}};
        const std::map<std::string, PathlossModel> pathloss_map{{"raytraced", PathlossModel::raytraced},
                                                                {"statistical", PathlossModel::statistical}};
        const std::map<std::string, Association> association_map{{"max_power", Association::max_power},
                                                                 {"nearest", Association::nearest}};
        const std::map<std::string, Window> window_map{{"rect", Window::rectangular}, {"hann", Window::hann}};

        struct Options
        {
            std::string scene, materials, out;
            std::string tx, rx;
            std::vector<std::string> txs, candidates, humans;
            std::string polarization = "avg";
            std::optional<double> sector_radius;

            TraceConfig trace;
            PlanConfig plan;

            // synth / extract
            std::string paths, model, cfr, padp;
            std::string band = "290e9:310e9:2001";
            std::optional<std::uint64_t> seed;
            std::size_t n_subpaths = 20;
            double az_step = 10.0, zen_start = -40.0, zen_stop = 60.0, zen_step = 10.0;
            std::optional<double> floor_db;
            std::size_t min_sep = 3, angular_radius = 1;
            Window window = Window::rectangular;

            // fit / identify
            std::string mpc;
            double gate_delay_ns = 0.5, gate_az = 20.0, gate_zen = 20.0;
            std::optional<double> rl;
            double tolerance = 3.0, reference_db = 0.0;

            // planning
            double z = 1.0, res = 0.05;
            std::uint64_t rx_seed = 0;
            std::size_t rx_count = 80;
            std::string rx_mean, rx_std, bounds, summary, screen, map;
            std::string thresholds = "-10:40:1";

            // optimize
            std::vector<std::size_t> n_values{1};
            double gamma = 10.0, pth = 0.9, tol = 1e-4, mount = 0.05;
            int max_iter = 100;
        };

        void add_scene(CLI::App *sub, Options &o, bool required = true)
        {
            auto *s = sub->add_option("--scene", o.scene, "Scene JSON file");
            if (required)
                s->required();
            sub->add_option("--materials", o.materials, "Material database CSV (default: materials.csv next to the scene)");
        }

        void add_trace_options(CLI::App *sub, Options &o, TraceConfig &t)
        {
            sub->add_option("--freq", t.frequency_hz, "Carrier frequency in Hz")->capture_default_str();
            sub->add_option("--max-order", t.max_order, "Maximum reflection order (0-3)")->capture_default_str();
            sub->add_option("--absorption", t.absorption_db_per_m, "Molecular absorption in dB/m")->capture_default_str();
            sub->add_option("--tx-power", t.tx_power_dbm, "Transmit power in dBm")->capture_default_str();
            sub->add_option("--tx-gain", t.tx_gain_db, "Transmit antenna gain in dB")->capture_default_str();
            sub->add_option("--rx-gain", t.rx_gain_db, "Receive antenna gain in dB")->capture_default_str();
            sub->add_option("--human", o.humans, "Human blocker x0:y0:z0:x1:y1:z1[:loss_db], repeatable");
            sub->add_option("--polarization", o.polarization, "te, tm or avg (power average)")
                ->check(CLI::IsMember({"te", "tm", "avg"}))
                ->capture_default_str();
        }

        void add_plan_options(CLI::App *sub, Options &o)
        {
            PlanConfig &p = o.plan;
            sub->add_option("--freq", p.frequency_hz, "Carrier frequency in Hz")->capture_default_str();
            sub->add_option("--max-order", p.max_order, "Maximum reflection order (0-3)")->capture_default_str();
            sub->add_option("--absorption", p.absorption_db_per_m, "Molecular absorption in dB/m")->capture_default_str();
            sub->add_option("--tx-power", p.tx_power_dbm, "Transmit power in dBm")->capture_default_str();
            sub->add_option("--tx-gain", p.tx_gain_db, "Transmit antenna gain in dB")->capture_default_str();
            sub->add_option("--rx-gain", p.rx_gain_db, "Receive antenna gain in dB")->capture_default_str();
            sub->add_option("--noise-psd", p.noise_psd_dbm_per_hz, "Noise PSD in dBm/Hz")->capture_default_str();
            sub->add_option("--noise-figure", p.noise_figure_db, "Receiver noise figure in dB")->capture_default_str();
            sub->add_option("--bandwidth", p.bandwidth_hz, "Bandwidth in Hz")->capture_default_str();
            sub->add_option("--pathloss", p.pathloss, "raytraced or statistical")
                ->transform(CLI::CheckedTransformer(pathloss_map))
                ->default_str("raytraced");
            sub->add_option("--los-prob", p.los_probability, "LoS probability (statistical mode)")->capture_default_str();
            sub->add_option("--nlos-excess", p.nlos_excess_db, "NLoS excess loss in dB (statistical mode)")
                ->capture_default_str();
            sub->add_option("--fading-sigma", p.fading_sigma_db, "Log-normal fading sigma in dB, 0 disables")
                ->capture_default_str();
            sub->add_option("--fading-seed", p.fading_seed, "Seed for the fading draws");
            sub->add_option("--association", p.association, "max_power or nearest")
                ->transform(CLI::CheckedTransformer(association_map))
                ->default_str("max_power");
            sub->add_option("--workers", p.workers, "Worker threads, 0 = all cores")->capture_default_str();
            sub->add_option("--human", o.humans, "Human blocker x0:y0:z0:x1:y1:z1[:loss_db], repeatable");
            sub->add_option("--polarization", o.polarization, "te, tm or avg (power average)")
                ->check(CLI::IsMember({"te", "tm", "avg"}))
                ->capture_default_str();
        }

        void add_population(CLI::App *sub, Options &o)
        {
            sub->add_option("--rx-seed", o.rx_seed, "Seed for the Rx population")->required();
            sub->add_option("--rx-count", o.rx_count, "Number of Rx samples")->capture_default_str();
            sub->add_option("--rx-mean", o.rx_mean, "Population mean x:y:z (default: bounds centre)");
            sub->add_option("--rx-std", o.rx_std, "Population standard deviation x:y:z (default: extent / 4)");
        }

        Scene load_scene_opts(const Options &o)
        {
            std::string mat = o.materials;
            if (mat.empty())
                mat = (std::filesystem::path(o.scene).parent_path() / "materials.csv").string();
            if (!std::filesystem::exists(o.scene))
                throw Error(Errc::not_found, "cannot open scene '" + o.scene + "'");
            return load_scene(o.scene, load_material_db(mat));
        }

        std::optional<Polarization> polarization(const Options &o)
        {
            if (o.polarization == "avg")
                return std::nullopt;
            return polarization_map.at(o.polarization);
        }

        TraceConfig trace_config(const Options &o)
        {
            TraceConfig t = o.trace;
            t.human_boxes = parse_humans(o.humans);
            t.polarization = polarization(o);
            return t;
        }

        PlanConfig plan_config(const Options &o, const CLI::App *sub)
        {
            PlanConfig p = o.plan;
            p.human_boxes = parse_humans(o.humans);
            p.polarization = polarization(o);
            if (p.fading_sigma_db > 0.0 && sub->count("--fading-seed") == 0)
                throw UsageError("--fading-sigma > 0 requires --fading-seed");
            return p;
        }

        RxPopulation population(const Scene &scene, const Options &o)
        {
            const Box &b = scene.bounds();
            const Vec3 mean = o.rx_mean.empty() ? (b.min + b.max) * 0.5 : parse_point(o.rx_mean, "--rx-mean");
            const Vec3 std = o.rx_std.empty() ? (b.max - b.min) * 0.25 : parse_point(o.rx_std, "--rx-std");
            return sample_rx_population(scene, o.rx_count, mean, std, o.rx_seed);
        }

        // --- subcommands ---

        void cmd_trace(const Options &o, std::ostream &out)
        {
            const Scene scene = load_scene_opts(o);
            const Vec3 tx = resolve_point(scene, o.tx), rx = resolve_point(scene, o.rx);
            const TraceConfig cfg = trace_config(o);
            const auto paths = o.sector_radius ? four_sector_merge(scene, tx, rx, cfg, *o.sector_radius)
                                               : trace(scene, tx, rx, cfg);
            emit(o.out, out, [&](std::ostream &s) { write_paths_csv(s, paths); });
        }

        void cmd_synth(const Options &o, std::ostream &out)
        {
            if (!o.model.empty())
            {
                if (!o.seed)
                    throw UsageError("synth --model requires --seed");
                const HybridModel model = load_hybrid_model(o.model);
                const MpcSet set = synthesize_realization(model, o.n_subpaths, *o.seed);
                emit(o.out, out, [&](std::ostream &s) { write_mpc_csv(s, set); });
                return;
            }
            std::ifstream in(o.paths);
            if (!in)
                throw Error(Errc::not_found, "cannot open MPC file '" + o.paths + "'");
            const MpcSet set = read_mpc_csv(in, o.paths);
            const FrequencyBand band = parse_band(o.band);
            if (!(o.az_step > 0.0) || !(o.zen_step > 0.0) || o.zen_stop < o.zen_start)
                throw UsageError("angle steps must be positive and zenith stop >= start");
            const auto n_az = static_cast<std::size_t>(std::llround(360.0 / o.az_step));
            const auto n_zen = static_cast<std::size_t>(std::floor((o.zen_stop - o.zen_start) / o.zen_step + 1e-9)) + 1;
            const AngleAxis az{0.0, o.az_step, std::max<std::size_t>(1, n_az), true};
            const AngleAxis zen{o.zen_start, o.zen_step, n_zen, false};
            const CfrTensor cfr = synthesize_cfr(set, band, zen, az);
            emit(o.out, out, [&](std::ostream &s) { write_cfr_csv(s, cfr); });
        }

        void cmd_extract(const Options &o, std::ostream &out, std::ostream &err)
        {
            const CfrTensor cfr = load_cfr_csv(o.cfr);
            const AngleDelayGrid grid = cfr_to_cir(cfr, o.window);
            ExtractConfig ec;
            ec.noise_floor_db = o.floor_db;
            ec.min_separation = o.min_sep;
            ec.angular_radius = o.angular_radius;
            const MpcSet set = extract_mpcs(grid, ec);
            if (set.degenerate)
                err << "warning: no grid cell above the noise floor\n";
            emit(o.out, out, [&](std::ostream &s) { write_mpc_csv(s, set); });
            if (!o.padp.empty())
                emit(o.padp, out, [&](std::ostream &s) { write_padp_csv(s, grid); });
        }

        void cmd_fit(const Options &o, std::ostream &out)
        {
            std::ifstream in(o.mpc);
            if (!in)
                throw Error(Errc::not_found, "cannot open MPC file '" + o.mpc + "'");
            const MpcSet measured = read_mpc_csv(in, o.mpc);
            const Scene scene = load_scene_opts(o);
            const Vec3 tx = resolve_point(scene, o.tx), rx = resolve_point(scene, o.rx);
            const TraceConfig cfg = trace_config(o);
            const auto anchors = o.sector_radius ? four_sector_merge(scene, tx, rx, cfg, *o.sector_radius)
                                                 : trace(scene, tx, rx, cfg);
            const HybridModel model =
                cluster_mpcs(measured, anchors, ClusterGates{o.gate_delay_ns * 1e-9, o.gate_az, o.gate_zen}, cfg.frequency_hz);
            emit(o.out, out, [&](std::ostream &s) { s << save_hybrid_model(model) << '\n'; });
        }

        void cmd_identify(const Options &o, std::ostream &out)
        {
            const MaterialDb db = load_material_db(o.materials);
            if (o.rl)
            {
                const MaterialMatch m = identify_material_rl(*o.rl, db, o.tolerance);
                emit(o.out, out, [&](std::ostream &s) {
                    s << csv::version_line() << '\n' << "rl_db,delta_db,label\n";
                    s << csv::fmt(m.rl_db) << ',' << csv::fmt(m.delta_db) << ',' << m.label << '\n';
                });
                return;
            }
            const HybridModel model = load_hybrid_model(o.model);
            emit(o.out, out, [&](std::ostream &s) {
                s << csv::version_line() << '\n' << "cluster,kind,mean_delay_ns,mean_power_db,rl_db,delta_db,label\n";
                std::size_t index = 0;
                auto row = [&](const Cluster &c, const char *kind) {
                    const MaterialMatch m = identify_material(c.mean_power_db, c.mean_delay_s, model.carrier_hz, db,
                                                              o.tolerance, o.reference_db);
                    s << index++ << ',' << kind << ',' << csv::fmt(c.mean_delay_s * 1e9) << ','
                      << csv::fmt(c.mean_power_db) << ',' << csv::fmt(m.rl_db) << ',' << csv::fmt(m.delta_db) << ','
                      << m.label << '\n';
                };
                for (const auto &c : model.rt_clusters)
                    row(c, "rt");
                for (const auto &c : model.non_rt_clusters)
                    row(c, "non_rt");
            });
        }

        void cmd_covermap(const Options &o, const CLI::App *sub, std::ostream &out)
        {
            const Scene scene = load_scene_opts(o);
            const PlanConfig cfg = plan_config(o, sub);
            const CoverageMap map = coverage_map(scene, resolve_points(scene, o.txs), cfg, o.z, o.res);
            emit(o.out, out, [&](std::ostream &s) { write_coverage_map_csv(s, map); });
        }

        void cmd_plan(const Options &o, const CLI::App *sub, std::ostream &out)
        {
            const Scene scene = load_scene_opts(o);
            const PlanConfig cfg = plan_config(o, sub);
            const auto txs = resolve_points(scene, o.txs);
            const RxPopulation pop = population(scene, o);
            const LinkBudget links(scene, txs, cfg);
            const auto sinrs = sinr_values(evaluate_points(links, pop.points));
            const auto thresholds = parse_range(o.thresholds);
            const auto curve = coverage_curve(sinrs, thresholds, pop.weights);
            emit(o.out, out, [&](std::ostream &s) { write_coverage_curve_csv(s, thresholds, curve); });
            if (!o.summary.empty())
            {
                nlohmann::json doc;
                doc["version"] = std::string(version);
                doc["n_tx"] = txs.size();
                doc["rx_count"] = pop.points.size();
                doc["rate_bps"] = average_rate_bps(sinrs, cfg.bandwidth_hz, txs.size(), pop.weights);
                doc["noise_dbm"] = cfg.noise_dbm();
                std::size_t reachable = 0;
                for (double v : sinrs)
                    reachable += std::isfinite(v) ? 1 : 0;
                doc["reachable"] = reachable;
                emit(o.summary, out, [&](std::ostream &s) { s << doc.dump(1) << '\n'; });
            }
        }

        void cmd_optimize(const Options &o, const CLI::App *sub, std::ostream &out)
        {
            const Scene scene = load_scene_opts(o);
            OptProblem p;
            p.scene = &scene;
            p.cfg = plan_config(o, sub);
            p.rx_pop = population(scene, o);
            if (o.bounds.empty())
                p.bounds = scene.bounds();
            else
            {
                const auto v = split_doubles(o.bounds, ':', "--bounds");
                if (v.size() != 6)
                    throw UsageError("--bounds expects x0:y0:z0:x1:y1:z1");
                p.bounds = Box{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
            }
            p.gamma_db = o.gamma;
            p.p_th = o.pth;
            p.tol = o.tol;
            p.max_iter = o.max_iter;
            p.mount_distance = o.mount;
            p.thresholds_db = parse_range(o.thresholds);
            for (const auto &c : o.candidates)
                p.candidates.push_back({c, resolve_point(scene, c)});

            const ScreenReport report = stage1_screen(p, o.n_values);
            const ScreenEntry &best = report.ranking.front();
            p.n_tx = best.coords.size();
            const OptResult result = stage2_refine(p, best.coords);

            nlohmann::json doc = nlohmann::json::parse(opt_result_json(result, p));
            doc["version"] = std::string(version);
            doc["start"] = best.names;
            nlohmann::json ranking = nlohmann::json::array();
            for (const auto &e : report.ranking)
                ranking.push_back({{"names", e.names},
                                   {"objective", e.eval.value},
                                   {"rate_bps", e.eval.rate_bps},
                                   {"coverage_at_gamma", e.eval.coverage_at_gamma},
                                   {"feasible", e.eval.feasible}});
            doc["stage1"] = ranking;
            emit(o.out, out, [&](std::ostream &s) { s << doc.dump(1) << '\n'; });

            if (!o.screen.empty())
                emit(o.screen, out, [&](std::ostream &s) {
                    s << csv::version_line() << '\n' << "rank,names,n_tx,objective,rate_bps,min_coverage_at_gamma,feasible\n";
                    for (std::size_t i = 0; i < report.ranking.size(); ++i)
                    {
                        const auto &e = report.ranking[i];
                        std::string names;
                        for (const auto &n : e.names)
                            names += (names.empty() ? "" : ";") + n;
                        double min_cov = 1.0;
                        for (double c : e.eval.coverage_at_gamma)
                            min_cov = std::min(min_cov, c);
                        s << i + 1 << ',' << names << ',' << e.names.size() << ',' << csv::fmt(e.eval.value) << ','
                          << csv::fmt(e.eval.rate_bps) << ',' << csv::fmt(min_cov) << ',' << (e.eval.feasible ? 1 : 0)
                          << '\n';
                    }
                });
            if (!o.map.empty())
            {
                const CoverageMap map = coverage_map(scene, result.coords, p.cfg, o.z, o.res);
                emit(o.map, out, [&](std::ostream &s) { write_coverage_map_csv(s, map); });
            }
        }
    }

    int run_subcommand(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
    {
        CLI::App app{"thzdt - THz in-cabin ray tracing, channel modelling and wireless planning", "thzdt"};
        app.set_version_flag("--version", std::string(version));
        app.require_subcommand(1);
        app.fallthrough();
        app.allow_config_extras(CLI::config_extras_mode::ignore);
        app.set_config("--config", "", "JSON file with option values; command-line flags take precedence");
        app.config_formatter(std::make_shared<JsonConfig>(args.empty() ? std::string() : args.front()));

        Options o;

        auto *trace_cmd = app.add_subcommand("trace", "Trace paths between a transmitter and a receiver");
        add_scene(trace_cmd, o);
        trace_cmd->add_option("--tx", o.tx, "Transmitter name or x:y:z")->required();
        trace_cmd->add_option("--rx", o.rx, "Receiver name or x:y:z")->required();
        trace_cmd->add_option("--sector-radius", o.sector_radius, "Merge four sector receivers at this radius (m)");
        add_trace_options(trace_cmd, o, o.trace);
        trace_cmd->add_option("--out", o.out, "Output MPC CSV (default stdout)");

        auto *synth_cmd = app.add_subcommand("synth", "Synthesize a CFR sweep from paths, or a realization from a model");
        auto *paths_opt = synth_cmd->add_option("--paths", o.paths, "MPC CSV to synthesize a CFR from");
        auto *model_opt = synth_cmd->add_option("--model", o.model, "Hybrid model JSON to draw a realization from");
        paths_opt->excludes(model_opt);
        synth_cmd->add_option("--band", o.band, "Frequency sweep start:stop:n in Hz")->capture_default_str();
        synth_cmd->add_option("--az-step", o.az_step, "Azimuth bin width in degrees")->capture_default_str();
        synth_cmd->add_option("--zen-start", o.zen_start, "First zenith bin in degrees")->capture_default_str();
        synth_cmd->add_option("--zen-stop", o.zen_stop, "Last zenith bin in degrees")->capture_default_str();
        synth_cmd->add_option("--zen-step", o.zen_step, "Zenith bin width in degrees")->capture_default_str();
        synth_cmd->add_option("--seed", o.seed, "Seed for model realizations (required with --model)");
        synth_cmd->add_option("--n", o.n_subpaths, "Subpaths drawn per cluster")->capture_default_str();
        synth_cmd->add_option("--out", o.out, "Output CSV (default stdout)");

        auto *extract_cmd = app.add_subcommand("extract", "Extract MPCs from a CFR sweep");
        extract_cmd->add_option("--cfr", o.cfr, "CFR CSV azimuth_deg,zenith_deg,freq_hz,re,im")->required();
        extract_cmd->add_option("--floor", o.floor_db, "Noise floor in dB (default: max - 40 dB)");
        extract_cmd->add_option("--min-sep", o.min_sep, "Minimum peak separation in delay bins")->capture_default_str();
        extract_cmd->add_option("--angular-radius", o.angular_radius, "Angular neighbourhood in bins")
            ->capture_default_str();
        extract_cmd->add_option("--window", o.window, "rect or hann")
            ->transform(CLI::CheckedTransformer(window_map))
            ->default_str("rect");
        extract_cmd->add_option("--padp", o.padp, "Also write the PADP CSV here");
        extract_cmd->add_option("--out", o.out, "Output MPC CSV (default stdout)");

        auto *fit_cmd = app.add_subcommand("fit", "Cluster measured MPCs around traced anchors into a hybrid model");
        fit_cmd->add_option("--mpc", o.mpc, "Measured MPC CSV")->required();
        add_scene(fit_cmd, o);
        fit_cmd->add_option("--tx", o.tx, "Transmitter name or x:y:z")->required();
        fit_cmd->add_option("--rx", o.rx, "Receiver name or x:y:z")->required();
        fit_cmd->add_option("--sector-radius", o.sector_radius, "Merge four sector receivers at this radius (m)");
        add_trace_options(fit_cmd, o, o.trace);
        fit_cmd->add_option("--gate-delay-ns", o.gate_delay_ns, "Cluster delay gate in ns")->capture_default_str();
        fit_cmd->add_option("--gate-az", o.gate_az, "Cluster azimuth gate in degrees")->capture_default_str();
        fit_cmd->add_option("--gate-zen", o.gate_zen, "Cluster zenith gate in degrees")->capture_default_str();
        fit_cmd->add_option("--out", o.out, "Output model JSON (default stdout)");

        auto *identify_cmd = app.add_subcommand("identify", "Identify bounce materials from reflection loss");
        auto *imodel = identify_cmd->add_option("--model", o.model, "Hybrid model JSON");
        auto *irl = identify_cmd->add_option("--rl", o.rl, "Identify a single reflection loss in dB");
        imodel->excludes(irl);
        identify_cmd->add_option("--materials", o.materials, "Material database CSV with reference RL")->required();
        identify_cmd->add_option("--tolerance", o.tolerance, "Maximum RL mismatch in dB")->capture_default_str();
        identify_cmd->add_option("--reference-db", o.reference_db, "Tx power plus gains in dB")->capture_default_str();
        identify_cmd->add_option("--out", o.out, "Output CSV (default stdout)");

        auto *covermap_cmd = app.add_subcommand("covermap", "SINR coverage map on a horizontal plane");
        add_scene(covermap_cmd, o);
        covermap_cmd->add_option("--tx", o.txs, "Transmitter names or x:y:z, comma separated")->required()->delimiter(',');
        covermap_cmd->add_option("--z", o.z, "Plane height in m")->capture_default_str();
        covermap_cmd->add_option("--res", o.res, "Cell size in m")->capture_default_str();
        add_plan_options(covermap_cmd, o);
        covermap_cmd->add_option("--out", o.out, "Output map CSV (default stdout)");

        auto *plan_cmd = app.add_subcommand("plan", "Coverage curve and rate over a random Rx population");
        add_scene(plan_cmd, o);
        plan_cmd->add_option("--tx", o.txs, "Transmitter names or x:y:z, comma separated")->required()->delimiter(',');
        add_population(plan_cmd, o);
        plan_cmd->add_option("--thresholds", o.thresholds, "Threshold axis start:stop:step in dB")->capture_default_str();
        add_plan_options(plan_cmd, o);
        plan_cmd->add_option("--summary", o.summary, "Also write a JSON summary with the rate here");
        plan_cmd->add_option("--out", o.out, "Output coverage curve CSV (default stdout)");

        auto *opt_cmd = app.add_subcommand("optimize", "Two-stage transmitter placement optimization");
        add_scene(opt_cmd, o);
        opt_cmd->add_option("--candidates", o.candidates, "Candidate names or x:y:z, comma separated")
            ->required()
            ->delimiter(',');
        opt_cmd->add_option("--n", o.n_values, "Transmitter counts to screen, comma separated")
            ->delimiter(',')
            ->capture_default_str();
        opt_cmd->add_option("--gamma", o.gamma, "Coverage threshold in dB")->capture_default_str();
        opt_cmd->add_option("--pth", o.pth, "Required coverage probability at gamma")->capture_default_str();
        opt_cmd->add_option("--tol", o.tol, "Powell tolerance")->capture_default_str();
        opt_cmd->add_option("--max-iter", o.max_iter, "Powell iteration limit")->capture_default_str();
        opt_cmd->add_option("--bounds", o.bounds, "Placement box x0:y0:z0:x1:y1:z1 (default: scene bounds)");
        opt_cmd->add_option("--mount-distance", o.mount, "Facet distance for the deployable alternative in m")
            ->capture_default_str();
        add_population(opt_cmd, o);
        opt_cmd->add_option("--thresholds", o.thresholds, "Coverage curve axis start:stop:step in dB")
            ->capture_default_str();
        add_plan_options(opt_cmd, o);
        opt_cmd->add_option("--screen", o.screen, "Also write the stage-1 ranking CSV here");
        opt_cmd->add_option("--map", o.map, "Also write a coverage map of the result here");
        opt_cmd->add_option("--z", o.z, "Map plane height in m")->capture_default_str();
        opt_cmd->add_option("--res", o.res, "Map cell size in m")->capture_default_str();
        opt_cmd->add_option("--out", o.out, "Output result JSON (default stdout)");

        std::vector<std::string> reversed(args.rbegin(), args.rend());
        try
        {
            app.parse(reversed);
        }
        catch (const CLI::ParseError &e)
        {
            const int code = app.exit(e, out, err);
            return code == 0 ? 0 : 2;
        }

        try
        {
            if (trace_cmd->parsed())
                cmd_trace(o, out);
            else if (synth_cmd->parsed())
            {
                if (o.paths.empty() && o.model.empty())
                    throw UsageError("synth needs --paths or --model");
                cmd_synth(o, out);
            }
            else if (extract_cmd->parsed())
                cmd_extract(o, out, err);
            else if (fit_cmd->parsed())
                cmd_fit(o, out);
            else if (identify_cmd->parsed())
            {
                if (o.model.empty() && !o.rl)
                    throw UsageError("identify needs --model or --rl");
                cmd_identify(o, out);
            }
            else if (covermap_cmd->parsed())
                cmd_covermap(o, covermap_cmd, out);
            else if (plan_cmd->parsed())
                cmd_plan(o, plan_cmd, out);
            else if (opt_cmd->parsed())
                cmd_optimize(o, opt_cmd, out);
        }
        catch (const UsageError &e)
        {
            err << "usage error: " << e.what() << '\n';
            return 2;
        }
        catch (const Error &e)
        {
            err << "ERR:" << errc_name(e.code()) << ": " << e.what() << '\n';
            return 1;
        }
        catch (const std::exception &e)
        {
            err << "ERR:INTERNAL: " << e.what() << '\n';
            return 1;
        }
        return 0;
    }

    int run_subcommand(int argc, char **argv)
    {
        std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);
        return run_subcommand(args, std::cout, std::cerr);
    }
}
