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
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "thzdt/csv.hpp"
#include "thzdt/error.hpp"
#include "thzdt/scene.hpp"

namespace thzdt
{
    namespace
    {
        constexpr std::string_view material_header[] = {"name", "eta_re", "eta_im", "thickness_m", "reference_rl_db"};

        void validate_material(const Material &m, const std::string &where)
        {
            if (m.name.empty())
                throw Error(Errc::schema, where + ": empty material name");
            if (!(m.eta.real() >= 1.0))
                throw Error(Errc::schema, where + ": material '" + m.name + "' has Re(eta) < 1");
            if (m.eta.imag() > 0.0)
                throw Error(Errc::schema, where + ": material '" + m.name + "' is active (Im(eta) > 0)");
            if (!(m.thickness_m > 0.0) || !std::isfinite(m.thickness_m))
                throw Error(Errc::schema, where + ": material '" + m.name + "' needs thickness > 0");
            if (m.reference_rl_db && !(*m.reference_rl_db >= 0.0))
                throw Error(Errc::schema, where + ": material '" + m.name + "' has negative reference RL");
        }

        // Closest point on triangle abc to p (Ericson, Real-Time Collision Detection 5.1.5).
        Vec3 closest_on_triangle(const Vec3 &p, const Vec3 &a, const Vec3 &b, const Vec3 &c)
        {
            const Vec3 ab = b - a, ac = c - a, ap = p - a;
            const double d1 = dot(ab, ap), d2 = dot(ac, ap);
            if (d1 <= 0.0 && d2 <= 0.0)
                return a;
            const Vec3 bp = p - b;
            const double d3 = dot(ab, bp), d4 = dot(ac, bp);
            if (d3 >= 0.0 && d4 <= d3)
                return b;
            const double vc = d1 * d4 - d3 * d2;
            if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0)
                return a + ab * (d1 / (d1 - d3));
            const Vec3 cp = p - c;
            const double d5 = dot(ab, cp), d6 = dot(ac, cp);
            if (d6 >= 0.0 && d5 <= d6)
                return c;
            const double vb = d5 * d2 - d1 * d6;
            if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0)
                return a + ac * (d2 / (d2 - d6));
            const double va = d3 * d6 - d5 * d4;
            if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
                return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
            const double denom = 1.0 / (va + vb + vc);
            return a + ab * (vb * denom) + ac * (vc * denom);
        }

        std::size_t line_of(std::string_view text, std::size_t byte)
        {
            byte = std::min(byte, text.size());
            return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
        }

        Vec3 to_vec3(const nlohmann::json &j, const std::string &what)
        {
            if (!j.is_array() || j.size() != 3)
                throw Error(Errc::schema, what + ": expected [x, y, z]");
            Vec3 v{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
            if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z))
                throw Error(Errc::schema, what + ": non-finite coordinate");
            return v;
        }

        nlohmann::json from_vec3(const Vec3 &v) { return nlohmann::json::array({v.x, v.y, v.z}); }
    }

    // --- MaterialDb ---

    MaterialDb::MaterialDb(std::vector<Material> entries) : entries_(std::move(entries))
    {
        for (std::size_t i = 0; i < entries_.size(); ++i)
        {
            validate_material(entries_[i], "material " + std::to_string(i));
            for (std::size_t j = 0; j < i; ++j)
                if (entries_[j].name == entries_[i].name)
                    throw Error(Errc::schema, "duplicate material '" + entries_[i].name + "'");
        }
    }

    const Material *MaterialDb::find(std::string_view name) const
    {
        for (const auto &m : entries_)
            if (m.name == name)
                return &m;
        return nullptr;
    }

    MaterialDb parse_material_db(std::istream &in, std::string_view source)
    {
        const auto rows = csv::read(in);
        if (rows.empty())
            throw Error(Errc::schema, std::string(source) + ": missing header");
        csv::expect_header(rows.front(), material_header, source);

        std::vector<Material> entries;
        for (std::size_t r = 1; r < rows.size(); ++r)
        {
            const auto &row = rows[r];
            const std::string where = std::string(source) + ":" + std::to_string(row.line);
            if (row.fields.size() != 5)
                throw Error(Errc::parse, where + ": expected 5 fields, got " + std::to_string(row.fields.size()));
            Material m;
            m.name = row.fields[0];
            const double eta_re = csv::parse_double(row.fields[1], row.line, source);
            const double eta_loss = csv::parse_double(row.fields[2], row.line, source);
            if (eta_loss < 0.0)
                throw Error(Errc::schema, where + ": eta_im is the loss part and must be >= 0");
            m.eta = {eta_re, -eta_loss};
            m.thickness_m = csv::parse_double(row.fields[3], row.line, source);
            if (!row.fields[4].empty())
                m.reference_rl_db = csv::parse_double(row.fields[4], row.line, source);
            validate_material(m, where);
            entries.push_back(std::move(m));
        }
        return MaterialDb(std::move(entries));
    }

    MaterialDb load_material_db(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw Error(Errc::not_found, "cannot open material database '" + path + "'");
        return parse_material_db(in, path);
    }

    void write_material_db(std::ostream &out, const MaterialDb &db)
    {
        out << "name,eta_re,eta_im,thickness_m,reference_rl_db\n";
        out.precision(17);
        for (const auto &m : db.entries())
        {
            out << m.name << ',' << m.eta.real() << ',' << -m.eta.imag() << ',' << m.thickness_m << ',';
            if (m.reference_rl_db)
                out << *m.reference_rl_db;
            out << '\n';
        }
    }

    // --- Facet ---

    double Facet::area() const
    {
        return 0.5 * norm(cross(vertices[1] - vertices[0], vertices[2] - vertices[0]));
    }

    Vec3 Facet::unit_normal() const
    {
        return normalized(cross(vertices[1] - vertices[0], vertices[2] - vertices[0]));
    }

    std::optional<Hit> ray_facet_intersect(const Vec3 &origin, const Vec3 &dir, const Facet &facet)
    {
        const Vec3 &v0 = facet.vertices[0];
        const Vec3 e1 = facet.vertices[1] - v0, e2 = facet.vertices[2] - v0;
        const double t = simd::scalar::intersect_one(v0.x, v0.y, v0.z, e1.x, e1.y, e1.z, e2.x, e2.y, e2.z,
                                                     norm(cross(e1, e2)), origin, dir, norm(dir));
        if (!(t > self_hit_epsilon))
            return std::nullopt;
        return Hit{t, origin + dir * t};
    }

    // --- Scene ---

    Scene::Scene(std::vector<Facet> facets, std::map<std::string, Vec3> tx, std::map<std::string, Vec3> rx,
                 Box bounds, MaterialDb materials)
        : facets_(std::move(facets)), tx_(std::move(tx)), rx_(std::move(rx)), bounds_(bounds),
          materials_(std::move(materials))
    {
        if (!(bounds_.volume() > 0.0))
            throw Error(Errc::schema, "scene bounds must have positive volume");
        for (const auto *terminals : {&tx_, &rx_})
            for (const auto &[name, p] : *terminals)
                if (!bounds_.contains(p))
                    throw Error(Errc::range, "terminal '" + name + "' lies outside the scene bounds");

        material_index_.reserve(facets_.size());
        soa_.reserve(facets_.size());
        for (std::size_t i = 0; i < facets_.size(); ++i)
        {
            const Facet &f = facets_[i];
            if (!(f.area() > min_facet_area))
                throw Error(Errc::degenerate_facet, "facet " + std::to_string(i) + " is degenerate (area <= 1e-12 m^2)");
            const Material *m = materials_.find(f.material);
            if (m == nullptr)
                throw Error(Errc::dangling_material,
                            "facet " + std::to_string(i) + " references unknown material '" + f.material + "'");
            if (f.thickness_override && !(*f.thickness_override > 0.0))
                throw Error(Errc::schema, "facet " + std::to_string(i) + " has non-positive thickness");
            material_index_.push_back(static_cast<std::size_t>(m - materials_.entries().data()));
            normals_.push_back(f.unit_normal());
            offsets_.push_back(dot(normals_.back(), f.vertices[0]));
            soa_.push_back(f.vertices[0], f.vertices[1], f.vertices[2]);
        }
        soa_.pad();
    }

    double Scene::thickness_of(std::size_t facet) const
    {
        return facets_[facet].thickness_override.value_or(material_of(facet).thickness_m);
    }

    Vec3 Scene::position(std::string_view name) const
    {
        if (auto it = tx_.find(std::string(name)); it != tx_.end())
            return it->second;
        if (auto it = rx_.find(std::string(name)); it != rx_.end())
            return it->second;
        throw Error(Errc::range, "no terminal named '" + std::string(name) + "'");
    }

    Scene Scene::with_materials(MaterialDb materials) const
    {
        return Scene(facets_, tx_, rx_, bounds_, std::move(materials));
    }

    bool is_occluded(const Vec3 &a, const Vec3 &b, const Scene &scene, std::span<const std::uint32_t> ignore)
    {
        const Vec3 d = b - a;
        const double len = norm(d);
        if (len <= 2.0 * self_hit_epsilon)
            return false;
        const double eps = self_hit_epsilon / len;
        return simd::first_hit(scene.triangles(), a, d, eps, 1.0 - eps, ignore) >= 0;
    }

    double distance_to_nearest_facet(const Scene &scene, const Vec3 &p)
    {
        double best = std::numeric_limits<double>::infinity();
        for (const auto &f : scene.facets())
            best = std::min(best, distance(p, closest_on_triangle(p, f.vertices[0], f.vertices[1], f.vertices[2])));
        return best;
    }

    // --- JSON ---

    Scene parse_scene(std::string_view json_text, const MaterialDb &materials, std::string_view source)
    {
        nlohmann::json doc;
        try
        {
            doc = nlohmann::json::parse(json_text);
        }
        catch (const nlohmann::json::parse_error &e)
        {
            throw Error(Errc::parse, std::string(source) + ":" + std::to_string(line_of(json_text, e.byte)) + ": " +
                                         e.what());
        }

        try
        {
            if (!doc.is_object())
                throw Error(Errc::schema, std::string(source) + ": top level must be an object");
            for (const char *key : {"facets", "tx", "rx", "bounds"})
                if (!doc.contains(key))
                    throw Error(Errc::schema, std::string(source) + ": missing key '" + key + "'");

            std::vector<Facet> facets;
            std::size_t index = 0;
            for (const auto &jf : doc.at("facets"))
            {
                const std::string what = std::string(source) + ": facet " + std::to_string(index++);
                const auto &jv = jf.at("v");
                if (!jv.is_array() || (jv.size() != 3 && jv.size() != 4))
                    throw Error(Errc::schema, what + ": 'v' must hold 3 or 4 vertices");
                std::vector<Vec3> vs;
                for (const auto &p : jv)
                    vs.push_back(to_vec3(p, what));
                Facet f;
                f.material = jf.at("material").get<std::string>();
                if (jf.contains("thickness"))
                    f.thickness_override = jf.at("thickness").get<double>();
                f.vertices = {vs[0], vs[1], vs[2]};
                facets.push_back(f);
                if (vs.size() == 4)
                {
                    f.vertices = {vs[0], vs[2], vs[3]};
                    facets.push_back(f);
                }
            }

            std::map<std::string, Vec3> tx, rx;
            for (const auto &[name, p] : doc.at("tx").items())
                tx[name] = to_vec3(p, std::string(source) + ": tx '" + name + "'");
            for (const auto &[name, p] : doc.at("rx").items())
                rx[name] = to_vec3(p, std::string(source) + ": rx '" + name + "'");
            const auto &jb = doc.at("bounds");
            const Box bounds{to_vec3(jb.at("min"), "bounds.min"), to_vec3(jb.at("max"), "bounds.max")};
            return Scene(std::move(facets), std::move(tx), std::move(rx), bounds, materials);
        }
        catch (const nlohmann::json::exception &e)
        {
            throw Error(Errc::schema, std::string(source) + ": " + e.what());
        }
    }

    Scene load_scene(const std::string &path, const MaterialDb &materials)
    {
        std::ifstream in(path);
        if (!in)
            throw Error(Errc::not_found, "cannot open scene '" + path + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        return parse_scene(buf.str(), materials, path);
    }

    std::string save_scene(const Scene &scene)
    {
        nlohmann::json doc;
        doc["facets"] = nlohmann::json::array();
        for (const auto &f : scene.facets())
        {
            nlohmann::json jf;
            jf["v"] = nlohmann::json::array({from_vec3(f.vertices[0]), from_vec3(f.vertices[1]), from_vec3(f.vertices[2])});
            jf["material"] = f.material;
            if (f.thickness_override)
                jf["thickness"] = *f.thickness_override;
            doc["facets"].push_back(jf);
        }
        doc["tx"] = nlohmann::json::object();
        for (const auto &[name, p] : scene.tx())
            doc["tx"][name] = from_vec3(p);
        doc["rx"] = nlohmann::json::object();
        for (const auto &[name, p] : scene.rx())
            doc["rx"][name] = from_vec3(p);
        doc["bounds"] = {{"min", from_vec3(scene.bounds().min)}, {"max", from_vec3(scene.bounds().max)}};
        return doc.dump(1);
    }
}
