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

#include "thzdt/simd/kernels.hpp"

namespace thzdt::simd
{
    void TriangleSoA::reserve(std::size_t n)
    {
        for (auto *v : {&v0x, &v0y, &v0z, &e1x, &e1y, &e1z, &e2x, &e2y, &e2z, &area2})
            v->reserve(n + lane_width);
    }

    void TriangleSoA::push_back(const Vec3 &v0, const Vec3 &v1, const Vec3 &v2)
    {
        // Drop any padding first so logical and physical indices coincide.
        for (auto *v : {&v0x, &v0y, &v0z, &e1x, &e1y, &e1z, &e2x, &e2y, &e2z, &area2})
            v->resize(count);
        const Vec3 e1 = v1 - v0, e2 = v2 - v0;
        v0x.push_back(v0.x), v0y.push_back(v0.y), v0z.push_back(v0.z);
        e1x.push_back(e1.x), e1y.push_back(e1.y), e1z.push_back(e1.z);
        e2x.push_back(e2.x), e2y.push_back(e2.y), e2z.push_back(e2.z);
        area2.push_back(norm(cross(e1, e2)));
        ++count;
    }

    void TriangleSoA::pad()
    {
        const std::size_t n = (count + lane_width - 1) / lane_width * lane_width;
        for (auto *v : {&v0x, &v0y, &v0z, &e1x, &e1y, &e1z, &e2x, &e2y, &e2z, &area2})
            v->resize(n, 0.0);
    }

    void TriangleSoA::clear()
    {
        for (auto *v : {&v0x, &v0y, &v0z, &e1x, &e1y, &e1z, &e2x, &e2y, &e2z, &area2})
            v->clear();
        count = 0;
    }
}

namespace thzdt::simd::scalar
{
    double intersect_one(double v0x, double v0y, double v0z, double e1x, double e1y, double e1z, double e2x,
                         double e2y, double e2z, double area2, const Vec3 &origin, const Vec3 &dir, double dir_norm)
    {
        const double px = dir.y * e2z - dir.z * e2y;
        const double py = dir.z * e2x - dir.x * e2z;
        const double pz = dir.x * e2y - dir.y * e2x;
        double det = e1x * px + e1y * py + e1z * pz;
        const double limit = parallel_tolerance * dir_norm * area2;
        if (!(std::abs(det) > limit))
            return -1.0;

        const double sx = origin.x - v0x, sy = origin.y - v0y, sz = origin.z - v0z;
        double u = sx * px + sy * py + sz * pz;
        const double qx = sy * e1z - sz * e1y;
        const double qy = sz * e1x - sx * e1z;
        const double qz = sx * e1y - sy * e1x;
        double v = dir.x * qx + dir.y * qy + dir.z * qz;
        double tn = e2x * qx + e2y * qy + e2z * qz;
        if (det < 0.0)
            det = -det, u = -u, v = -v, tn = -tn;

        // Closed triangle: barycentric tests are inclusive.
        if (u < 0.0 || v < 0.0 || u + v > det)
            return -1.0;
        return tn / det;
    }

    std::ptrdiff_t first_hit(const TriangleSoA &tris, const Vec3 &origin, const Vec3 &dir, double tmin, double tmax,
                             std::span<const std::uint32_t> skip)
    {
        const double dn = std::sqrt(dir.x * dir.x + dir.y * dir.y + dir.z * dir.z);
        for (std::size_t i = 0; i < tris.count; ++i)
        {
            const double t = intersect_one(tris.v0x[i], tris.v0y[i], tris.v0z[i], tris.e1x[i], tris.e1y[i],
                                           tris.e1z[i], tris.e2x[i], tris.e2y[i], tris.e2z[i], tris.area2[i], origin,
                                           dir, dn);
            if (t > tmin && t < tmax && std::find(skip.begin(), skip.end(), i) == skip.end())
                return static_cast<std::ptrdiff_t>(i);
        }
        return -1;
    }

    void segment_hits(const TriangleSoA &tris, const Vec3 &origin, const PointSoA &targets, std::span<double> t_out)
    {
        const std::size_t n = std::min(tris.padded_size(), targets.size());
        for (std::size_t i = 0; i < n; ++i)
        {
            const Vec3 dir{targets.x[i] - origin.x, targets.y[i] - origin.y, targets.z[i] - origin.z};
            const double dn = std::sqrt(dir.x * dir.x + dir.y * dir.y + dir.z * dir.z);
            const double t = intersect_one(tris.v0x[i], tris.v0y[i], tris.v0z[i], tris.e1x[i], tris.e1y[i],
                                           tris.e1z[i], tris.e2x[i], tris.e2y[i], tris.e2z[i], tris.area2[i], origin,
                                           dir, dn);
            t_out[i] = (t > 0.0 && t < 1.0) ? t : -1.0;
        }
    }

    void accumulate_phasors(std::span<std::complex<double>> out, std::complex<double> alpha, double f0, double df,
                            double tau)
    {
        // Work in cycles and keep only the fractional part so the trig argument
        // stays in [0, 2 pi) no matter how large f*tau gets.
        const double base = f0 * tau, step = df * tau;
        for (std::size_t k = 0; k < out.size(); ++k)
        {
            const double c = base + static_cast<double>(k) * step;
            const double angle = 2.0 * pi * (c - std::floor(c));
            out[k] += alpha * std::complex<double>(std::cos(angle), -std::sin(angle));
        }
    }

    void abs2(std::span<const std::complex<double>> in, std::span<double> out)
    {
        for (std::size_t k = 0; k < in.size(); ++k)
            out[k] = in[k].real() * in[k].real() + in[k].imag() * in[k].imag();
    }
}
