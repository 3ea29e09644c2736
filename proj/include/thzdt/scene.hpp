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

#include <array>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "thzdt/geometry.hpp"
#include "thzdt/simd/kernels.hpp"

namespace thzdt
{
    // A reflecting material. `eta` is the complex relative permittivity in the
    // e^{+j omega t} convention, eta = eta' - j eta'' with eta'' >= 0 for lossy
    // media. The CSV stores eta'' as a non-negative number and the loader
    // negates it.
    struct Material
    {
        std::string name;
        std::complex<double> eta{1.0, 0.0};
        double thickness_m = 0.0;
        std::optional<double> reference_rl_db; // measured reflection loss, if known

        bool operator==(const Material &) const = default;
    };

    class MaterialDb
    {
    public:
        MaterialDb() = default;
        explicit MaterialDb(std::vector<Material> entries); // validates

        const Material *find(std::string_view name) const;
        const std::vector<Material> &entries() const { return entries_; }
        std::size_t size() const { return entries_.size(); }
        bool empty() const { return entries_.empty(); }

        bool operator==(const MaterialDb &) const = default;

    private:
        std::vector<Material> entries_;
    };

    // CSV with header `name,eta_re,eta_im,thickness_m,reference_rl_db`.
    MaterialDb load_material_db(const std::string &path);
    MaterialDb parse_material_db(std::istream &in, std::string_view source = "<materials>");
    void write_material_db(std::ostream &out, const MaterialDb &db);

    struct Facet
    {
        std::array<Vec3, 3> vertices;
        std::string material;
        std::optional<double> thickness_override; // m

        double area() const;
        Vec3 unit_normal() const; // right-handed from the vertex order

        bool operator==(const Facet &) const = default;
    };

    inline constexpr double min_facet_area = 1e-12; // m^2

    struct Hit
    {
        double distance; // m, along the unit direction
        Vec3 point;
    };

    // Closed-triangle Moller-Trumbore test. `dir` must be a unit vector;
    // hits closer than self_hit_epsilon are ignored.
    std::optional<Hit> ray_facet_intersect(const Vec3 &origin, const Vec3 &dir, const Facet &facet);

    // Immutable digital twin: triangle facets with resolved materials, named
    // terminal positions and the cabin bounding box. Construction validates
    // every invariant and throws thzdt::Error on violation.
    class Scene
    {
    public:
        Scene(std::vector<Facet> facets, std::map<std::string, Vec3> tx, std::map<std::string, Vec3> rx, Box bounds,
              MaterialDb materials);

        const std::vector<Facet> &facets() const { return facets_; }
        const std::map<std::string, Vec3> &tx() const { return tx_; }
        const std::map<std::string, Vec3> &rx() const { return rx_; }
        const Box &bounds() const { return bounds_; }
        const MaterialDb &materials() const { return materials_; }

        const Material &material_of(std::size_t facet) const { return materials_.entries()[material_index_[facet]]; }
        double thickness_of(std::size_t facet) const;
        const Vec3 &normal(std::size_t facet) const { return normals_[facet]; }
        double plane_offset(std::size_t facet) const { return offsets_[facet]; } // normal . p for p on the plane

        // SoA copy of the facets, padded, for the SIMD kernels.
        const simd::TriangleSoA &triangles() const { return soa_; }

        // Looks up a named position in tx() then rx(). Throws Error(range).
        Vec3 position(std::string_view name) const;

        Scene with_materials(MaterialDb materials) const;

    private:
        std::vector<Facet> facets_;
        std::map<std::string, Vec3> tx_, rx_;
        Box bounds_;
        MaterialDb materials_;
        std::vector<std::size_t> material_index_;
        std::vector<Vec3> normals_;
        std::vector<double> offsets_;
        simd::TriangleSoA soa_;
    };

    // True if any facet not listed in `ignore` intersects the open segment
    // (a, b). Points within self_hit_epsilon of either endpoint do not count.
    bool is_occluded(const Vec3 &a, const Vec3 &b, const Scene &scene, std::span<const std::uint32_t> ignore = {});

    // Shortest distance from p to any facet, +inf for an empty scene.
    double distance_to_nearest_facet(const Scene &scene, const Vec3 &p);

    // Scene JSON: `facets` [{v: [[x,y,z] x3 or x4], material, thickness?}],
    // `tx`/`rx` {name: [x,y,z]}, `bounds` {min, max}. Quads are split into two
    // triangles (0,1,2) and (0,2,3).
    Scene load_scene(const std::string &path, const MaterialDb &materials);
    Scene parse_scene(std::string_view json_text, const MaterialDb &materials, std::string_view source = "<scene>");
    std::string save_scene(const Scene &scene);
}
