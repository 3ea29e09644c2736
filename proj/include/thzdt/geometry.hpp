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

#include <algorithm>
#include <cmath>

namespace thzdt
{
    inline constexpr double speed_of_light = 299792458.0; // m/s
    inline constexpr double pi = 3.14159265358979323846;

    // Minimum travel distance along a ray before a surface counts as hit. Keeps
    // bounce points from re-intersecting the facet they lie on.
    inline constexpr double self_hit_epsilon = 1e-9; // m

    struct Vec3
    {
        double x = 0.0, y = 0.0, z = 0.0;

        constexpr Vec3 operator+(const Vec3 &o) const { return {x + o.x, y + o.y, z + o.z}; }
        constexpr Vec3 operator-(const Vec3 &o) const { return {x - o.x, y - o.y, z - o.z}; }
        constexpr Vec3 operator-() const { return {-x, -y, -z}; }
        constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
        constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
        constexpr Vec3 &operator+=(const Vec3 &o)
        {
            x += o.x, y += o.y, z += o.z;
            return *this;
        }
        constexpr bool operator==(const Vec3 &) const = default;
    };

    constexpr Vec3 operator*(double s, const Vec3 &v) { return v * s; }

    constexpr double dot(const Vec3 &a, const Vec3 &b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

    constexpr Vec3 cross(const Vec3 &a, const Vec3 &b)
    {
        return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
    }

    inline double norm(const Vec3 &v) { return std::sqrt(dot(v, v)); }

    inline Vec3 normalized(const Vec3 &v) { return v / norm(v); }

    inline double distance(const Vec3 &a, const Vec3 &b) { return norm(a - b); }

    // Axis-aligned box, closed on all faces.
    struct Box
    {
        Vec3 min, max;

        constexpr bool contains(const Vec3 &p) const
        {
            return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z && p.z <= max.z;
        }
        constexpr double volume() const
        {
            return std::max(0.0, max.x - min.x) * std::max(0.0, max.y - min.y) * std::max(0.0, max.z - min.z);
        }
        // Euclidean distance from p to the box, 0 inside.
        double outside_distance(const Vec3 &p) const
        {
            const double dx = std::max({min.x - p.x, 0.0, p.x - max.x});
            const double dy = std::max({min.y - p.y, 0.0, p.y - max.y});
            const double dz = std::max({min.z - p.z, 0.0, p.z - max.z});
            return std::sqrt(dx * dx + dy * dy + dz * dz);
        }
        constexpr bool operator==(const Box &) const = default;
    };

    // True if the open segment (a, b) passes through the interior or boundary of
    // the box. Slab test.
    inline bool segment_crosses_box(const Vec3 &a, const Vec3 &b, const Box &box)
    {
        double t0 = 0.0, t1 = 1.0;
        const double o[3] = {a.x, a.y, a.z};
        const double d[3] = {b.x - a.x, b.y - a.y, b.z - a.z};
        const double lo[3] = {box.min.x, box.min.y, box.min.z};
        const double hi[3] = {box.max.x, box.max.y, box.max.z};
        for (int k = 0; k < 3; ++k)
        {
            if (d[k] == 0.0)
            {
                if (o[k] < lo[k] || o[k] > hi[k])
                    return false;
                continue;
            }
            double ta = (lo[k] - o[k]) / d[k];
            double tb = (hi[k] - o[k]) / d[k];
            if (ta > tb)
                std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
            if (t0 > t1)
                return false;
        }
        return t1 > 0.0 && t0 < 1.0;
    }
}
