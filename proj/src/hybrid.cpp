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
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "thzdt/error.hpp"
#include "thzdt/hybrid.hpp"
#include "thzdt/random.hpp"

namespace thzdt
{
    using nlohmann::json;

    // --- empirical CDF ---

    EmpiricalCdf::EmpiricalCdf(std::vector<double> samples) : samples_(std::move(samples))
    {
        if (samples_.empty())
            throw Error(Errc::empty_input, "an empirical CDF needs at least one sample");
        std::sort(samples_.begin(), samples_.end());
    }

    double EmpiricalCdf::eval(double x) const
    {
        const auto it = std::upper_bound(samples_.begin(), samples_.end(), x);
        return static_cast<double>(it - samples_.begin()) / static_cast<double>(samples_.size());
    }

    double EmpiricalCdf::inverse(double u) const
    {
        const auto n = static_cast<double>(samples_.size());
        const auto k = static_cast<long long>(std::ceil(u * n)) - 1;
        return samples_[static_cast<std::size_t>(std::clamp<long long>(k, 0, static_cast<long long>(samples_.size()) - 1))];
    }

    EmpiricalCdf empirical_cdf(std::vector<double> samples) { return EmpiricalCdf(std::move(samples)); }

    double cdf_eval(const EmpiricalCdf &cdf, double x) { return cdf.eval(x); }

    // --- clustering ---

    namespace
    {
        double circular_gap(double a, double b)
        {
            const double d = std::fmod(std::abs(a - b), 360.0);
            return std::min(d, 360.0 - d);
        }

        bool within_gates(const Mpc &m, double tau, double az, double zen, const ClusterGates &g)
        {
            return std::abs(m.tau_s - tau) <= g.delay_s && circular_gap(m.azimuth_deg, az) <= g.azimuth_deg &&
                   std::abs(m.zenith_deg - zen) <= g.zenith_deg;
        }

        double gate_distance(const Mpc &m, double tau, double az, double zen, const ClusterGates &g)
        {
            const double a = (m.tau_s - tau) / g.delay_s;
            const double b = circular_gap(m.azimuth_deg, az) / g.azimuth_deg;
            const double c = (m.zenith_deg - zen) / g.zenith_deg;
            return std::sqrt(a * a + b * b + c * c);
        }

        double wrap360(double deg)
        {
            double w = std::fmod(deg, 360.0);
            if (w < 0.0)
                w += 360.0;
            return w >= 360.0 ? 0.0 : w;
        }
    }

    void Cluster::refresh()
    {
        if (subpaths.empty())
            throw Error(Errc::empty_input, "a cluster needs at least one subpath");
        std::vector<double> delays, powers, azs;
        for (const auto &s : subpaths)
        {
            delays.push_back(s.tau_s);
            powers.push_back(s.power_db);
            azs.push_back(wrap360(s.azimuth_deg));
        }
        const double n = static_cast<double>(subpaths.size());
        mean_delay_s = std::accumulate(delays.begin(), delays.end(), 0.0) / n;
        mean_power_db = std::accumulate(powers.begin(), powers.end(), 0.0) / n;
        delay_cdf = EmpiricalCdf(delays);
        power_cdf = EmpiricalCdf(powers);

        // Smallest arc holding every azimuth: it starts after the widest gap.
        std::sort(azs.begin(), azs.end());
        double widest = 360.0 - (azs.back() - azs.front());
        std::size_t start = 0;
        for (std::size_t i = 1; i < azs.size(); ++i)
            if (azs[i] - azs[i - 1] > widest)
            {
                widest = azs[i] - azs[i - 1];
                start = i;
            }
        azimuth_lo_deg = azs[start];
        azimuth_span_deg = 360.0 - widest;

        const auto [zlo, zhi] = std::minmax_element(subpaths.begin(), subpaths.end(),
                                                    [](const Mpc &a, const Mpc &b) { return a.zenith_deg < b.zenith_deg; });
        zenith_lo_deg = zlo->zenith_deg;
        zenith_hi_deg = zhi->zenith_deg;
    }

    HybridModel cluster_mpcs(const MpcSet &measured, const std::vector<PathRecord> &traced, const ClusterGates &gates,
                             double carrier_hz)
    {
        if (traced.empty())
            throw Error(Errc::empty_input, "clustering needs at least one traced anchor");
        if (!(gates.delay_s > 0.0 && gates.azimuth_deg > 0.0 && gates.zenith_deg > 0.0))
            throw Error(Errc::range, "cluster gates must be positive");
        for (std::size_t i = 0; i < traced.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (traced[i].same_chain(traced[j]))
                    throw Error(Errc::schema, "traced anchors must have distinct bounce chains");

        HybridModel model;
        model.carrier_hz = carrier_hz;
        model.gates = gates;

        std::vector<std::vector<Mpc>> members(traced.size());
        std::vector<Mpc> leftovers;
        for (const auto &m : measured.paths)
        {
            std::optional<std::size_t> best;
            double best_dist = std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < traced.size(); ++a)
            {
                const auto &p = traced[a];
                if (!within_gates(m, p.tau_s, p.azimuth_deg, p.zenith_deg, gates))
                    continue;
                const double d = gate_distance(m, p.tau_s, p.azimuth_deg, p.zenith_deg, gates);
                if (d < best_dist || (d == best_dist && best && p.tau_s < traced[*best].tau_s))
                {
                    best = a;
                    best_dist = d;
                }
            }
            if (best)
                members[*best].push_back(m);
            else
                leftovers.push_back(m);
        }

        for (std::size_t a = 0; a < traced.size(); ++a)
        {
            if (members[a].empty())
            {
                model.unmatched_anchors.push_back(traced[a]);
                continue;
            }
            Cluster c;
            c.anchor = traced[a];
            c.subpaths = std::move(members[a]);
            c.refresh();
            model.rt_clusters.push_back(std::move(c));
        }

        std::stable_sort(leftovers.begin(), leftovers.end(), [](const Mpc &a, const Mpc &b) { return a.tau_s < b.tau_s; });
        std::vector<char> taken(leftovers.size(), 0);
        for (std::size_t i = 0; i < leftovers.size(); ++i)
        {
            if (taken[i])
                continue;
            const Mpc &seed = leftovers[i];
            Cluster c;
            for (std::size_t j = i; j < leftovers.size(); ++j)
                if (!taken[j] && within_gates(leftovers[j], seed.tau_s, seed.azimuth_deg, seed.zenith_deg, gates))
                {
                    taken[j] = 1;
                    c.subpaths.push_back(leftovers[j]);
                }
            c.refresh();
            model.non_rt_clusters.push_back(std::move(c));
        }
        return model;
    }

    // --- material identification ---

    MaterialMatch identify_material_rl(double rl_db, const MaterialDb &db, double tolerance_db)
    {
        if (db.empty())
            throw Error(Errc::empty_input, "material identification needs a non-empty database");
        if (!(tolerance_db > 0.0))
            throw Error(Errc::range, "identification tolerance must be positive");

        MaterialMatch best;
        best.rl_db = rl_db;
        best.delta_db = std::numeric_limits<double>::infinity();
        const auto &e = db.entries();
        auto consider = [&](double reference, std::vector<std::string> names) {
            const double delta = std::abs(rl_db - reference);
            if (delta < best.delta_db)
            {
                best.delta_db = delta;
                best.materials = std::move(names);
            }
        };
        for (const auto &m : e)
            if (m.reference_rl_db)
                consider(*m.reference_rl_db, {m.name});
        for (std::size_t i = 0; i < e.size(); ++i)
            for (std::size_t j = i; j < e.size(); ++j)
                if (e[i].reference_rl_db && e[j].reference_rl_db)
                    consider(*e[i].reference_rl_db + *e[j].reference_rl_db, {e[i].name, e[j].name});

        best.known = best.delta_db <= tolerance_db;
        if (best.known)
        {
            for (std::size_t i = 0; i < best.materials.size(); ++i)
                best.label += (i ? "+" : "") + best.materials[i];
        }
        else
        {
            best.label = "unknown";
            best.materials.clear();
        }
        return best;
    }

    MaterialMatch identify_material(double cluster_mean_power_db, double tau_s, double frequency_hz, const MaterialDb &db,
                                    double tolerance_db, double reference_db)
    {
        if (!(tau_s > 0.0) || !(frequency_hz > 0.0))
            throw Error(Errc::range, "identification needs positive delay and frequency");
        const double rl = (reference_db - fspl_db(frequency_hz, tau_s)) - cluster_mean_power_db;
        return identify_material_rl(rl, db, tolerance_db);
    }

    // --- synthesis ---

    MpcSet synthesize_realization(const HybridModel &model, std::size_t n_subpaths_per_cluster, std::uint64_t seed)
    {
        if (model.rt_clusters.empty() && model.non_rt_clusters.empty())
            throw Error(Errc::empty_input, "the hybrid model has no clusters");
        MpcSet out;
        out.source = MpcSource::synthetic;
        for (const auto &c : model.rt_clusters)
            out.paths.push_back(to_mpc(*c.anchor));
        for (const auto &a : model.unmatched_anchors)
            out.paths.push_back(to_mpc(a));

        Rng rng(seed);
        auto draw = [&](const Cluster &c) {
            for (std::size_t i = 0; i < n_subpaths_per_cluster; ++i)
            {
                Mpc m;
                m.tau_s = c.delay_cdf.inverse(rng.uniform());
                m.power_db = c.power_cdf.inverse(rng.uniform());
                m.azimuth_deg = wrap360(c.azimuth_lo_deg + rng.uniform() * c.azimuth_span_deg);
                m.zenith_deg = c.zenith_lo_deg + rng.uniform() * (c.zenith_hi_deg - c.zenith_lo_deg);
                out.paths.push_back(m);
            }
        };
        for (const auto &c : model.rt_clusters)
            draw(c);
        for (const auto &c : model.non_rt_clusters)
            draw(c);
        std::stable_sort(out.paths.begin(), out.paths.end(), [](const Mpc &a, const Mpc &b) { return a.tau_s < b.tau_s; });
        return out;
    }

    // --- persistence ---

    namespace
    {
        json vec_json(const Vec3 &v) { return json::array({v.x, v.y, v.z}); }
        Vec3 json_vec(const json &j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

        json path_json(const PathRecord &p)
        {
            json bounces = json::array();
            for (const auto &b : p.bounce_chain)
                bounces.push_back({{"facet", b.facet},
                                   {"material", b.material},
                                   {"point", vec_json(b.point)},
                                   {"incidence_rad", b.incidence_rad},
                                   {"loss_db", b.loss_db}});
            return {{"tau_s", p.tau_s},
                    {"azimuth_deg", p.azimuth_deg},
                    {"zenith_deg", p.zenith_deg},
                    {"power_db", p.power_db},
                    {"gain", {p.complex_gain.real(), p.complex_gain.imag()}},
                    {"human_penetration", p.human_penetration},
                    {"bounces", bounces}};
        }

        PathRecord json_path(const json &j)
        {
            PathRecord p;
            p.tau_s = j.at("tau_s").get<double>();
            p.azimuth_deg = j.at("azimuth_deg").get<double>();
            p.zenith_deg = j.at("zenith_deg").get<double>();
            p.power_db = j.at("power_db").get<double>();
            p.complex_gain = {j.at("gain").at(0).get<double>(), j.at("gain").at(1).get<double>()};
            p.human_penetration = j.at("human_penetration").get<bool>();
            for (const auto &b : j.at("bounces"))
                p.bounce_chain.push_back(Bounce{b.at("facet").get<std::uint32_t>(), b.at("material").get<std::string>(),
                                                json_vec(b.at("point")), b.at("incidence_rad").get<double>(),
                                                b.at("loss_db").get<double>()});
            return p;
        }

        json mpc_json(const Mpc &m)
        {
            return {{"tau_s", m.tau_s}, {"zenith_deg", m.zenith_deg}, {"azimuth_deg", m.azimuth_deg},
                    {"power_db", m.power_db}, {"order", m.order}, {"chain", m.chain}};
        }

        Mpc json_mpc(const json &j)
        {
            return Mpc{j.at("tau_s").get<double>(), j.at("zenith_deg").get<double>(), j.at("azimuth_deg").get<double>(),
                       j.at("power_db").get<double>(), j.value("order", 0), j.value("chain", std::string())};
        }

        json cluster_json(const Cluster &c)
        {
            json subs = json::array();
            for (const auto &s : c.subpaths)
                subs.push_back(mpc_json(s));
            return {{"anchor", c.anchor ? path_json(*c.anchor) : json(nullptr)},
                    {"subpaths", subs},
                    {"delay_cdf", c.delay_cdf.samples()},
                    {"power_cdf", c.power_cdf.samples()},
                    {"mean_delay_s", c.mean_delay_s},
                    {"mean_power_db", c.mean_power_db},
                    {"identified_materials", c.identified_materials}};
        }

        Cluster json_cluster(const json &j)
        {
            Cluster c;
            if (!j.at("anchor").is_null())
                c.anchor = json_path(j.at("anchor"));
            for (const auto &s : j.at("subpaths"))
                c.subpaths.push_back(json_mpc(s));
            c.refresh();
            // Stored CDFs must agree with the subpaths they summarize.
            if (EmpiricalCdf(j.at("delay_cdf").get<std::vector<double>>()) != c.delay_cdf ||
                EmpiricalCdf(j.at("power_cdf").get<std::vector<double>>()) != c.power_cdf)
                throw Error(Errc::schema, "cluster CDF samples do not match its subpaths");
            c.identified_materials = j.value("identified_materials", std::vector<std::string>{});
            return c;
        }
    }

    std::string save_hybrid_model(const HybridModel &model)
    {
        json doc;
        doc["version"] = hybrid_model_version;
        doc["carrier_hz"] = model.carrier_hz;
        doc["gates"] = {{"delay_s", model.gates.delay_s},
                        {"azimuth_deg", model.gates.azimuth_deg},
                        {"zenith_deg", model.gates.zenith_deg}};
        doc["rt_clusters"] = json::array();
        for (const auto &c : model.rt_clusters)
            doc["rt_clusters"].push_back(cluster_json(c));
        doc["non_rt_clusters"] = json::array();
        for (const auto &c : model.non_rt_clusters)
            doc["non_rt_clusters"].push_back(cluster_json(c));
        doc["unmatched_anchors"] = json::array();
        for (const auto &a : model.unmatched_anchors)
            doc["unmatched_anchors"].push_back(path_json(a));
        return doc.dump(1);
    }

    HybridModel parse_hybrid_model(std::string_view json_text, std::string_view source)
    {
        json doc;
        try
        {
            doc = json::parse(json_text);
        }
        catch (const json::parse_error &e)
        {
            throw Error(Errc::parse, std::string(source) + ": " + e.what());
        }
        try
        {
            if (doc.value("version", std::string()) != hybrid_model_version)
                throw Error(Errc::schema, std::string(source) + ": expected version " + std::string(hybrid_model_version));
            HybridModel model;
            model.carrier_hz = doc.at("carrier_hz").get<double>();
            const auto &g = doc.at("gates");
            model.gates = {g.at("delay_s").get<double>(), g.at("azimuth_deg").get<double>(), g.at("zenith_deg").get<double>()};
            for (const auto &c : doc.at("rt_clusters"))
            {
                model.rt_clusters.push_back(json_cluster(c));
                if (!model.rt_clusters.back().anchor)
                    throw Error(Errc::schema, std::string(source) + ": ray-traced cluster without anchor");
            }
            for (const auto &c : doc.at("non_rt_clusters"))
                model.non_rt_clusters.push_back(json_cluster(c));
            for (const auto &a : doc.at("unmatched_anchors"))
                model.unmatched_anchors.push_back(json_path(a));
            return model;
        }
        catch (const json::exception &e)
        {
            throw Error(Errc::schema, std::string(source) + ": " + e.what());
        }
    }

    HybridModel load_hybrid_model(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw Error(Errc::not_found, "cannot open hybrid model '" + path + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        return parse_hybrid_model(buf.str(), path);
    }
}
