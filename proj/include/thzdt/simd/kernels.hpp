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

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "thzdt/geometry.hpp"

// Data-parallel inner loops. Every kernel has a scalar reference in
// thzdt::simd::scalar and, on x86-64, an AVX2 variant in thzdt::simd::avx2.
// The free functions in thzdt::simd dispatch at runtime to the widest
// variant the CPU supports.
//
// The triangle kernels use only IEEE add/sub/mul/div/sqrt without FMA, in the
// same order as the scalar code, so both variants return bit-identical
// results. accumulate_phasors evaluates sin/cos with a polynomial in the
// vector path and agrees with the std::sin/std::cos reference to ~1e-14.

namespace thzdt::simd
{
    enum class Isa
    {
        scalar,
        avx2
    };

    std::string_view isa_name(Isa isa);

    // Best ISA available on this CPU.
    Isa detected_isa();

    // ISA the dispatching functions currently use. Defaults to detected_isa(),
    // or scalar when the environment variable THZDT_SIMD=scalar is set.
    Isa active_isa();

    // Override the dispatch target; requesting avx2 on a CPU without it falls
    // back to scalar. Returns the ISA actually selected.
    Isa set_active_isa(Isa isa);

    inline constexpr std::size_t lane_width = 4;

    // Structure-of-arrays triangle storage: vertex 0, edges e1 = v1 - v0 and
    // e2 = v2 - v0, and |e1 x e2| (twice the area). Size is padded to a
    // multiple of lane_width with zero-area triangles that never hit.
    struct TriangleSoA
    {
        std::vector<double> v0x, v0y, v0z;
        std::vector<double> e1x, e1y, e1z;
        std::vector<double> e2x, e2y, e2z;
        std::vector<double> area2;
        std::size_t count = 0; // logical (unpadded) size

        void reserve(std::size_t n);
        void push_back(const Vec3 &v0, const Vec3 &v1, const Vec3 &v2);
        void pad();                        // append degenerate lanes up to a multiple of lane_width
        std::size_t padded_size() const { return v0x.size(); }
        void clear();
    };

    struct PointSoA
    {
        std::vector<double> x, y, z;
        void push_back(const Vec3 &p)
        {
            x.push_back(p.x), y.push_back(p.y), z.push_back(p.z);
        }
        std::size_t size() const { return x.size(); }
        void clear() { x.clear(), y.clear(), z.clear(); }
    };

    // Relative threshold on the Moller-Trumbore determinant below which a ray
    // is treated as parallel to the triangle plane.
    inline constexpr double parallel_tolerance = 1e-12;

    // --- kernel signatures, identical across variants ---

    // Index of the lowest-numbered triangle hit by origin + t*dir with
    // tmin < t < tmax (closed triangle: edges and vertices count), ignoring the
    // indices listed in `skip`. Returns -1 when nothing is hit. `dir` need not
    // be normalized; t is in units of |dir|.
    using FirstHitFn = std::ptrdiff_t (*)(const TriangleSoA &tris, const Vec3 &origin, const Vec3 &dir, double tmin,
                                          double tmax, std::span<const std::uint32_t> skip);

    // Lane-wise: segment from `origin` to targets[i] against tris[i]. Writes the
    // segment parameter t in (0, 1) of the hit into t_out[i], or -1 for a miss.
    // tris and targets must have the same padded length; t_out at least that.
    using SegmentHitsFn = void (*)(const TriangleSoA &tris, const Vec3 &origin, const PointSoA &targets,
                                   std::span<double> t_out);

    // out[k] += alpha * exp(-j 2 pi (f0 + k df) tau) for k in [0, out.size()).
    using AccumulatePhasorsFn = void (*)(std::span<std::complex<double>> out, std::complex<double> alpha, double f0,
                                         double df, double tau);

    // out[k] = |in[k]|^2
    using Abs2Fn = void (*)(std::span<const std::complex<double>> in, std::span<double> out);

    struct KernelTable
    {
        FirstHitFn first_hit;
        SegmentHitsFn segment_hits;
        AccumulatePhasorsFn accumulate_phasors;
        Abs2Fn abs2;
    };

    // Direct access to a variant; mainly for equivalence tests.
    const KernelTable &kernels(Isa isa);

    namespace scalar
    {
        std::ptrdiff_t first_hit(const TriangleSoA &tris, const Vec3 &origin, const Vec3 &dir, double tmin, double tmax,
                                 std::span<const std::uint32_t> skip);
        void segment_hits(const TriangleSoA &tris, const Vec3 &origin, const PointSoA &targets, std::span<double> t_out);
        void accumulate_phasors(std::span<std::complex<double>> out, std::complex<double> alpha, double f0, double df,
                                double tau);
        void abs2(std::span<const std::complex<double>> in, std::span<double> out);

        // Single-lane Moller-Trumbore shared by the scalar kernels and the
        // scene API. Returns t (units of |dir|) or -1 on a miss; no range test
        // beyond the triangle itself.
        double intersect_one(double v0x, double v0y, double v0z, double e1x, double e1y, double e1z, double e2x,
                             double e2y, double e2z, double area2, const Vec3 &origin, const Vec3 &dir,
                             double dir_norm);
    }

#if defined(__x86_64__) || defined(_M_X64)
    namespace avx2
    {
        std::ptrdiff_t first_hit(const TriangleSoA &tris, const Vec3 &origin, const Vec3 &dir, double tmin, double tmax,
                                 std::span<const std::uint32_t> skip);
        void segment_hits(const TriangleSoA &tris, const Vec3 &origin, const PointSoA &targets, std::span<double> t_out);
        void accumulate_phasors(std::span<std::complex<double>> out, std::complex<double> alpha, double f0, double df,
                                double tau);
        void abs2(std::span<const std::complex<double>> in, std::span<double> out);
    }
#endif

    // --- dispatching entry points ---

    std::ptrdiff_t first_hit(const TriangleSoA &tris, const Vec3 &origin, const Vec3 &dir, double tmin, double tmax,
                             std::span<const std::uint32_t> skip = {});
    void segment_hits(const TriangleSoA &tris, const Vec3 &origin, const PointSoA &targets, std::span<double> t_out);
    void accumulate_phasors(std::span<std::complex<double>> out, std::complex<double> alpha, double f0, double df,
                            double tau);
    void abs2(std::span<const std::complex<double>> in, std::span<double> out);
}
