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
#include <istream>
#include <ostream>
#include <sstream>

#include "thzdt/csv.hpp"
#include "thzdt/error.hpp"
#include "thzdt/raytrace.hpp"

namespace thzdt
{
    namespace
    {
        constexpr double rad_to_deg = 180.0 / pi;

        double wrap_degrees(double deg)
        {
            double w = std::fmod(deg, 360.0);
            if (w < 0.0)
                w += 360.0;
            return w >= 360.0 ? 0.0 : w;
        }

        bool coplanar(const Scene &scene, std::uint32_t a, std::uint32_t b)
        {
            const Vec3 &na = scene.normal(a);
            if (std::abs(std::abs(dot(na, scene.normal(b))) - 1.0) > 1e-12)
                return false;
            return std::abs(dot(na, scene.facets()[b].vertices[0]) - scene.plane_offset(a)) < self_hit_epsilon;
        }

        bool same_points(const PathRecord &a, const PathRecord &b)
        {
            if (a.order() != b.order())
                return false;
            for (std::size_t i = 0; i < a.order(); ++i)
                if (distance(a.bounce_chain[i].point, b.bounce_chain[i].point) > self_hit_epsilon)
                    return false;
            return true;
        }

        bool delay_order(const PathRecord &a, const PathRecord &b)
        {
            if (a.tau_s != b.tau_s)
                return a.tau_s < b.tau_s;
            if (a.order() != b.order())
                return a.order() < b.order();
            for (std::size_t i = 0; i < a.order(); ++i)
                if (a.bounce_chain[i].facet != b.bounce_chain[i].facet)
                    return a.bounce_chain[i].facet < b.bounce_chain[i].facet;
            return false;
        }
    }

    std::string PathRecord::chain_label() const
    {
        std::string out;
        for (std::size_t i = 0; i < bounce_chain.size(); ++i)
        {
            if (i > 0)
                out += ';';
            out += bounce_chain[i].material;
        }
        return out;
    }

    bool PathRecord::same_chain(const PathRecord &other) const
    {
        if (order() != other.order())
            return false;
        for (std::size_t i = 0; i < order(); ++i)
            if (bounce_chain[i].facet != other.bounce_chain[i].facet ||
                bounce_chain[i].material != other.bounce_chain[i].material)
                return false;
        return true;
    }

    void TraceConfig::validate() const
    {
        if (!(frequency_hz > 0.0))
            throw Error(Errc::range, "frequency must be positive");
        if (max_order < 0 || max_order > max_trace_order)
            throw Error(Errc::range, "max_order must lie in [0, 3]");
        if (!(absorption_db_per_m >= 0.0))
            throw Error(Errc::range, "absorption coefficient must be >= 0");
        for (const auto &h : human_boxes)
            if (!(h.box.volume() > 0.0) || !(h.penetration_loss_db >= 0.0))
                throw Error(Errc::range, "human box needs positive volume and non-negative loss");
    }

    double fspl_db(double frequency_hz, double tau_s)
    {
        return 20.0 * std::log10(4.0 * pi * frequency_hz * tau_s);
    }

    // --- Tracer ---

    Tracer::Tracer(const Scene &scene, const Vec3 &tx, const TraceConfig &cfg) : scene_(&scene), tx_(tx), cfg_(cfg)
    {
        cfg_.validate();
        const auto &soa = scene.triangles();
        const auto nf = static_cast<std::uint32_t>(scene.facets().size());
        levels_.resize(static_cast<std::size_t>(cfg_.max_order));

        for (std::size_t k = 0; k < levels_.size(); ++k)
        {
            Level &level = levels_[k];
            const std::size_t parents = k == 0 ? 1 : levels_[k - 1].sequences.size();
            for (std::size_t p = 0; p < parents; ++p)
            {
                const Vec3 source = k == 0 ? tx_ : Vec3{levels_[k - 1].images.x[p], levels_[k - 1].images.y[p],
                                                       levels_[k - 1].images.z[p]};
                std::array<std::uint32_t, max_trace_order> seq{};
                if (k > 0)
                    seq = levels_[k - 1].sequences[p];
                for (std::uint32_t f = 0; f < nf; ++f)
                {
                    if (k > 0 && (f == seq[k - 1] || coplanar(scene, seq[k - 1], f)))
                        continue;
                    const Vec3 &n = scene.normal(f);
                    const double d = dot(n, source) - scene.plane_offset(f);
                    if (std::abs(d) < self_hit_epsilon)
                        continue;
                    seq[k] = f;
                    level.sequences.push_back(seq);
                    level.parents.push_back(static_cast<std::uint32_t>(p));
                    level.images.push_back(source - n * (2.0 * d));
                    level.last_facets.v0x.push_back(soa.v0x[f]);
                    level.last_facets.v0y.push_back(soa.v0y[f]);
                    level.last_facets.v0z.push_back(soa.v0z[f]);
                    level.last_facets.e1x.push_back(soa.e1x[f]);
                    level.last_facets.e1y.push_back(soa.e1y[f]);
                    level.last_facets.e1z.push_back(soa.e1z[f]);
                    level.last_facets.e2x.push_back(soa.e2x[f]);
                    level.last_facets.e2y.push_back(soa.e2y[f]);
                    level.last_facets.e2z.push_back(soa.e2z[f]);
                    level.last_facets.area2.push_back(soa.area2[f]);
                }
            }
            level.last_facets.count = level.sequences.size();
            level.last_facets.pad();
            while (level.images.size() < level.last_facets.padded_size())
                level.images.push_back(Vec3{});
        }
    }

    std::size_t Tracer::image_count() const
    {
        std::size_t n = 0;
        for (const auto &l : levels_)
            n += l.sequences.size();
        return n;
    }

    std::vector<PathRecord> Tracer::trace(const Vec3 &rx) const
    {
        const Scene &scene = *scene_;
        const auto &soa = scene.triangles();
        std::vector<PathRecord> paths;

        if (!is_occluded(tx_, rx, scene))
            if (auto p = finish(rx, {}, {}, 0))
                paths.push_back(std::move(*p));

        std::vector<double> t_out;
        for (std::size_t k = 0; k < levels_.size(); ++k)
        {
            const Level &level = levels_[k];
            t_out.assign(level.last_facets.padded_size(), -1.0);
            simd::segment_hits(level.last_facets, rx, level.images, t_out);

            for (std::size_t i = 0; i < level.sequences.size(); ++i)
            {
                const double t = t_out[i];
                if (t < 0.0)
                    continue;
                const Vec3 image{level.images.x[i], level.images.y[i], level.images.z[i]};
                const Vec3 hit = rx + (image - rx) * t;
                if (distance(hit, rx) <= self_hit_epsilon)
                    continue;

                const auto &seq = level.sequences[i];
                std::vector<Vec3> points(k + 1);
                points[k] = hit;
                std::size_t node = i;
                bool ok = true;
                for (std::size_t j = k; j-- > 0;)
                {
                    node = levels_[j + 1].parents[node];
                    const Level &prev = levels_[j];
                    const Vec3 target{prev.images.x[node], prev.images.y[node], prev.images.z[node]};
                    const Vec3 dir = target - points[j + 1];
                    const double len = norm(dir);
                    const std::uint32_t f = seq[j];
                    const double s = simd::scalar::intersect_one(soa.v0x[f], soa.v0y[f], soa.v0z[f], soa.e1x[f],
                                                                 soa.e1y[f], soa.e1z[f], soa.e2x[f], soa.e2y[f],
                                                                 soa.e2z[f], soa.area2[f], points[j + 1], dir, len);
                    if (!(s * len > self_hit_epsilon) || !(s < 1.0))
                    {
                        ok = false;
                        break;
                    }
                    points[j] = points[j + 1] + dir * s;
                }
                if (!ok)
                    continue;
                if (auto p = finish(rx, std::move(points), seq, static_cast<int>(k + 1)))
                    paths.push_back(std::move(*p));
            }
        }

        std::sort(paths.begin(), paths.end(), delay_order);
        std::vector<PathRecord> unique;
        unique.reserve(paths.size());
        for (auto &p : paths)
        {
            const bool dup = std::any_of(unique.begin(), unique.end(), [&](const PathRecord &u) {
                return std::abs(u.tau_s - p.tau_s) * speed_of_light <= 1e-6 && same_points(u, p);
            });
            if (!dup)
                unique.push_back(std::move(p));
        }
        return unique;
    }

    std::optional<PathRecord> Tracer::finish(const Vec3 &rx, std::vector<Vec3> points,
                                             const std::array<std::uint32_t, max_trace_order> &sequence,
                                             int order) const
    {
        const Scene &scene = *scene_;
        const auto n = static_cast<std::size_t>(order);

        // Occlusion of the unfolded segments; the facets a segment starts or
        // ends on are excluded.
        double length = 0.0;
        double penetration_db = 0.0;
        bool penetrated = false;
        for (std::size_t s = 0; s <= n; ++s)
        {
            const Vec3 a = s == 0 ? tx_ : points[s - 1];
            const Vec3 b = s == n ? rx : points[s];
            if (n > 0)
            {
                std::array<std::uint32_t, 2> ignore{};
                std::size_t count = 0;
                if (s > 0)
                    ignore[count++] = sequence[s - 1];
                if (s < n)
                    ignore[count++] = sequence[s];
                if (is_occluded(a, b, scene, std::span<const std::uint32_t>(ignore.data(), count)))
                    return std::nullopt;
            }
            length += distance(a, b);
            for (const auto &h : cfg_.human_boxes)
                if (segment_crosses_box(a, b, h.box))
                {
                    penetration_db += h.penetration_loss_db;
                    penetrated = true;
                }
        }

        PathRecord rec;
        rec.tau_s = length / speed_of_light;
        rec.human_penetration = penetrated;

        const double wavelength = speed_of_light / cfg_.frequency_hz;
        double reflection_db = 0.0;
        double phase = 0.0;
        for (std::size_t j = 0; j < n; ++j)
        {
            const std::uint32_t f = sequence[j];
            const Vec3 prev = j == 0 ? tx_ : points[j - 1];
            const Vec3 d_in = normalized(points[j] - prev);
            const double cos_i = std::min(1.0, std::abs(dot(d_in, scene.normal(f))));
            const Material &m = scene.material_of(f);
            ReflectionQuery q{m.eta, scene.thickness_of(f), std::acos(cos_i), wavelength,
                              cfg_.polarization.value_or(Polarization::te)};
            const std::complex<double> r = slab_reflection(q);
            double loss;
            if (cfg_.polarization)
            {
                if (std::abs(r) == 0.0)
                    return std::nullopt;
                loss = -20.0 * std::log10(std::abs(r));
            }
            else
            {
                const double p = unpolarized_power_coefficient(q);
                if (p == 0.0)
                    return std::nullopt;
                loss = -10.0 * std::log10(p);
            }
            reflection_db += loss;
            phase += std::arg(r);
            rec.bounce_chain.push_back(Bounce{f, m.name, points[j], q.theta0, loss});
        }

        rec.power_db = cfg_.tx_power_dbm + cfg_.tx_gain_db + cfg_.rx_gain_db - fspl_db(cfg_.frequency_hz, rec.tau_s) -
                       reflection_db - cfg_.absorption_db_per_m * length - penetration_db;
        rec.complex_gain = std::polar(std::pow(10.0, rec.power_db / 20.0), phase);

        const Vec3 arrival = (n == 0 ? tx_ : points[n - 1]) - rx;
        rec.azimuth_deg = wrap_degrees(std::atan2(arrival.y, arrival.x) * rad_to_deg);
        rec.zenith_deg = std::asin(std::clamp(arrival.z / norm(arrival), -1.0, 1.0)) * rad_to_deg;
        return rec;
    }

    std::vector<PathRecord> trace(const Scene &scene, const Vec3 &tx, const Vec3 &rx, const TraceConfig &cfg)
    {
        if (!scene.bounds().contains(tx) || !scene.bounds().contains(rx))
            throw Error(Errc::range, "trace endpoints must lie inside the scene bounds");
        if (distance(tx, rx) <= self_hit_epsilon)
            throw Error(Errc::range, "trace endpoints coincide");
        return Tracer(scene, tx, cfg).trace(rx);
    }

    std::vector<PathRecord> sector_filter(const std::vector<PathRecord> &paths, double sector_center_deg,
                                          double half_width_deg)
    {
        if (!(half_width_deg > 0.0 && half_width_deg <= 180.0))
            throw Error(Errc::range, "sector half width must lie in (0, 180]");
        std::vector<PathRecord> out;
        for (const auto &p : paths)
        {
            const double diff = std::abs(wrap_degrees(p.azimuth_deg - sector_center_deg + 180.0) - 180.0);
            if (diff <= half_width_deg + 1e-9)
                out.push_back(p);
        }
        return out;
    }

    std::vector<PathRecord> four_sector_merge(const Scene &scene, const Vec3 &tx, const Vec3 &rx_center,
                                              const TraceConfig &cfg, double radius)
    {
        if (!(radius >= 0.0))
            throw Error(Errc::range, "azimuthal radius must be >= 0");
        const Tracer tracer(scene, tx, cfg);
        std::vector<PathRecord> merged;
        for (int s = 0; s < 4; ++s)
        {
            const double az = 90.0 * s;
            const double c = s == 1 || s == 3 ? 0.0 : (s == 0 ? 1.0 : -1.0);
            const double sn = s == 0 || s == 2 ? 0.0 : (s == 1 ? 1.0 : -1.0);
            const Vec3 rx = rx_center + Vec3{radius * c, radius * sn, 0.0};
            for (auto &p : sector_filter(tracer.trace(rx), az, 45.0))
            {
                auto it = std::find_if(merged.begin(), merged.end(), [&](const PathRecord &m) { return m.same_chain(p); });
                if (it == merged.end())
                    merged.push_back(std::move(p));
                else if (p.power_db > it->power_db)
                    *it = std::move(p);
            }
        }
        std::sort(merged.begin(), merged.end(), delay_order);
        return merged;
    }

    void write_paths_csv(std::ostream &out, const std::vector<PathRecord> &paths)
    {
        out << csv::version_line() << '\n';
        out << "tau_ns,azimuth_deg,zenith_deg,power_db,order,chain\n";
        for (const auto &p : paths)
            out << csv::fmt(p.tau_s * 1e9) << ',' << csv::fmt(p.azimuth_deg) << ',' << csv::fmt(p.zenith_deg) << ','
                << csv::fmt(p.power_db) << ',' << p.order() << ',' << p.chain_label() << '\n';
    }

    std::vector<PathRecord> read_paths_csv(std::istream &in, std::string_view source)
    {
        static constexpr std::string_view header[] = {"tau_ns", "azimuth_deg", "zenith_deg", "power_db", "order", "chain"};
        const auto rows = csv::read(in);
        if (rows.empty())
            throw Error(Errc::schema, std::string(source) + ": missing header");
        // Extra trailing columns (e.g. `source`) are tolerated.
        const auto &head = rows.front();
        if (head.fields.size() < 6)
            throw Error(Errc::schema, std::string(source) + ": expected header tau_ns,azimuth_deg,zenith_deg,power_db,order,chain");
        csv::Row trimmed{head.line, std::vector<std::string>(head.fields.begin(), head.fields.begin() + 6)};
        csv::expect_header(trimmed, header, source);

        std::vector<PathRecord> paths;
        for (std::size_t r = 1; r < rows.size(); ++r)
        {
            const auto &row = rows[r];
            if (row.fields.size() < 6)
                throw Error(Errc::parse, std::string(source) + ":" + std::to_string(row.line) + ": expected 6 fields");
            PathRecord p;
            p.tau_s = csv::parse_double(row.fields[0], row.line, source) * 1e-9;
            p.azimuth_deg = wrap_degrees(csv::parse_double(row.fields[1], row.line, source));
            p.zenith_deg = csv::parse_double(row.fields[2], row.line, source);
            p.power_db = csv::parse_double(row.fields[3], row.line, source);
            const long long order = csv::parse_int(row.fields[4], row.line, source);
            if (!(p.tau_s > 0.0) || !std::isfinite(p.power_db) || order < 0)
                throw Error(Errc::schema, std::string(source) + ":" + std::to_string(row.line) +
                                              ": need tau > 0, finite power and order >= 0");
            p.complex_gain = std::pow(10.0, p.power_db / 20.0);
            std::stringstream chain(row.fields[5]);
            std::string material;
            while (std::getline(chain, material, ';'))
                if (!material.empty())
                    p.bounce_chain.push_back(Bounce{0, material, {}, 0.0, 0.0});
            if (static_cast<long long>(p.order()) != order)
                throw Error(Errc::schema, std::string(source) + ":" + std::to_string(row.line) +
                                              ": order does not match the chain length");
            paths.push_back(std::move(p));
        }
        return paths;
    }
}
