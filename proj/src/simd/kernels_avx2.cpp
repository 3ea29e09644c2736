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

#include "thzdt/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <algorithm>
#include <cmath>
#include <immintrin.h>

// Functions here carry a target attribute instead of the translation unit
// being built with -mavx2, so nothing AVX-encoded can leak into inline
// functions shared with the rest of the library.
#define THZDT_AVX2 __attribute__((target("avx2")))

namespace thzdt::simd::avx2
{
    namespace
    {
        struct Lanes
        {
            __m256d t;    // t_num / det
            __m256d hit;  // all-ones where inside the closed triangle and not parallel
        };

        // Four Moller-Trumbore tests. Operation order mirrors
        // scalar::intersect_one exactly.
        THZDT_AVX2 inline Lanes intersect4(const TriangleSoA &tris, std::size_t i, __m256d ox, __m256d oy,
                                           __m256d oz, __m256d dx, __m256d dy, __m256d dz, __m256d dn)
        {
            const __m256d v0x = _mm256_loadu_pd(&tris.v0x[i]);
            const __m256d v0y = _mm256_loadu_pd(&tris.v0y[i]);
            const __m256d v0z = _mm256_loadu_pd(&tris.v0z[i]);
            const __m256d e1x = _mm256_loadu_pd(&tris.e1x[i]);
            const __m256d e1y = _mm256_loadu_pd(&tris.e1y[i]);
            const __m256d e1z = _mm256_loadu_pd(&tris.e1z[i]);
            const __m256d e2x = _mm256_loadu_pd(&tris.e2x[i]);
            const __m256d e2y = _mm256_loadu_pd(&tris.e2y[i]);
            const __m256d e2z = _mm256_loadu_pd(&tris.e2z[i]);
            const __m256d area2 = _mm256_loadu_pd(&tris.area2[i]);

            const __m256d px = _mm256_sub_pd(_mm256_mul_pd(dy, e2z), _mm256_mul_pd(dz, e2y));
            const __m256d py = _mm256_sub_pd(_mm256_mul_pd(dz, e2x), _mm256_mul_pd(dx, e2z));
            const __m256d pz = _mm256_sub_pd(_mm256_mul_pd(dx, e2y), _mm256_mul_pd(dy, e2x));
            __m256d det = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(e1x, px), _mm256_mul_pd(e1y, py)),
                                        _mm256_mul_pd(e1z, pz));
            const __m256d limit = _mm256_mul_pd(_mm256_mul_pd(_mm256_set1_pd(parallel_tolerance), dn), area2);
            const __m256d sign_mask = _mm256_set1_pd(-0.0);
            const __m256d abs_det = _mm256_andnot_pd(sign_mask, det);
            const __m256d not_parallel = _mm256_cmp_pd(abs_det, limit, _CMP_GT_OQ);

            const __m256d sx = _mm256_sub_pd(ox, v0x);
            const __m256d sy = _mm256_sub_pd(oy, v0y);
            const __m256d sz = _mm256_sub_pd(oz, v0z);
            __m256d u = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(sx, px), _mm256_mul_pd(sy, py)),
                                      _mm256_mul_pd(sz, pz));
            const __m256d qx = _mm256_sub_pd(_mm256_mul_pd(sy, e1z), _mm256_mul_pd(sz, e1y));
            const __m256d qy = _mm256_sub_pd(_mm256_mul_pd(sz, e1x), _mm256_mul_pd(sx, e1z));
            const __m256d qz = _mm256_sub_pd(_mm256_mul_pd(sx, e1y), _mm256_mul_pd(sy, e1x));
            __m256d v = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(dx, qx), _mm256_mul_pd(dy, qy)),
                                      _mm256_mul_pd(dz, qz));
            __m256d tn = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(e2x, qx), _mm256_mul_pd(e2y, qy)),
                                       _mm256_mul_pd(e2z, qz));

            // Flip signs where det < 0 (xor with the sign bit is exact negation).
            const __m256d flip = _mm256_and_pd(_mm256_cmp_pd(det, _mm256_setzero_pd(), _CMP_LT_OQ), sign_mask);
            det = _mm256_xor_pd(det, flip);
            u = _mm256_xor_pd(u, flip);
            v = _mm256_xor_pd(v, flip);
            tn = _mm256_xor_pd(tn, flip);

            const __m256d zero = _mm256_setzero_pd();
            __m256d inside = _mm256_and_pd(_mm256_cmp_pd(u, zero, _CMP_GE_OQ), _mm256_cmp_pd(v, zero, _CMP_GE_OQ));
            inside = _mm256_and_pd(inside, _mm256_cmp_pd(_mm256_add_pd(u, v), det, _CMP_LE_OQ));
            return {_mm256_div_pd(tn, det), _mm256_and_pd(inside, not_parallel)};
        }
    }

    THZDT_AVX2 std::ptrdiff_t first_hit(const TriangleSoA &tris, const Vec3 &origin, const Vec3 &dir, double tmin,
                                        double tmax, std::span<const std::uint32_t> skip)
    {
        const double dn_s = std::sqrt(dir.x * dir.x + dir.y * dir.y + dir.z * dir.z);
        const __m256d ox = _mm256_set1_pd(origin.x), oy = _mm256_set1_pd(origin.y), oz = _mm256_set1_pd(origin.z);
        const __m256d dx = _mm256_set1_pd(dir.x), dy = _mm256_set1_pd(dir.y), dz = _mm256_set1_pd(dir.z);
        const __m256d dn = _mm256_set1_pd(dn_s);
        const __m256d lo = _mm256_set1_pd(tmin), hi = _mm256_set1_pd(tmax);

        const std::size_t n = tris.padded_size();
        for (std::size_t i = 0; i + lane_width <= n; i += lane_width)
        {
            const Lanes r = intersect4(tris, i, ox, oy, oz, dx, dy, dz, dn);
            __m256d ok = _mm256_and_pd(r.hit, _mm256_cmp_pd(r.t, lo, _CMP_GT_OQ));
            ok = _mm256_and_pd(ok, _mm256_cmp_pd(r.t, hi, _CMP_LT_OQ));
            int mask = _mm256_movemask_pd(ok);
            while (mask != 0)
            {
                const int lane = __builtin_ctz(mask);
                mask &= mask - 1;
                const std::size_t idx = i + static_cast<std::size_t>(lane);
                if (idx >= tris.count)
                    break;
                if (std::find(skip.begin(), skip.end(), idx) == skip.end())
                    return static_cast<std::ptrdiff_t>(idx);
            }
        }
        // Unpadded tail, if the caller did not pad.
        for (std::size_t i = n / lane_width * lane_width; i < tris.count; ++i)
        {
            const double t = scalar::intersect_one(tris.v0x[i], tris.v0y[i], tris.v0z[i], tris.e1x[i], tris.e1y[i],
                                                   tris.e1z[i], tris.e2x[i], tris.e2y[i], tris.e2z[i],
                                                   tris.area2[i], origin, dir, dn_s);
            if (t > tmin && t < tmax && std::find(skip.begin(), skip.end(), i) == skip.end())
                return static_cast<std::ptrdiff_t>(i);
        }
        return -1;
    }

    THZDT_AVX2 void segment_hits(const TriangleSoA &tris, const Vec3 &origin, const PointSoA &targets,
                                 std::span<double> t_out)
    {
        const std::size_t n = std::min(tris.padded_size(), targets.size());
        const __m256d ox = _mm256_set1_pd(origin.x), oy = _mm256_set1_pd(origin.y), oz = _mm256_set1_pd(origin.z);
        const __m256d zero = _mm256_setzero_pd(), one = _mm256_set1_pd(1.0), miss = _mm256_set1_pd(-1.0);
        std::size_t i = 0;
        for (; i + lane_width <= n; i += lane_width)
        {
            const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(&targets.x[i]), ox);
            const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(&targets.y[i]), oy);
            const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(&targets.z[i]), oz);
            const __m256d dn = _mm256_sqrt_pd(
                _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)), _mm256_mul_pd(dz, dz)));
            const Lanes r = intersect4(tris, i, ox, oy, oz, dx, dy, dz, dn);
            __m256d ok = _mm256_and_pd(r.hit, _mm256_cmp_pd(r.t, zero, _CMP_GT_OQ));
            ok = _mm256_and_pd(ok, _mm256_cmp_pd(r.t, one, _CMP_LT_OQ));
            _mm256_storeu_pd(&t_out[i], _mm256_blendv_pd(miss, r.t, ok));
        }
        for (; i < n; ++i)
        {
            const Vec3 dir{targets.x[i] - origin.x, targets.y[i] - origin.y, targets.z[i] - origin.z};
            const double dn = std::sqrt(dir.x * dir.x + dir.y * dir.y + dir.z * dir.z);
            const double t = scalar::intersect_one(tris.v0x[i], tris.v0y[i], tris.v0z[i], tris.e1x[i], tris.e1y[i],
                                                   tris.e1z[i], tris.e2x[i], tris.e2y[i], tris.e2z[i],
                                                   tris.area2[i], origin, dir, dn);
            t_out[i] = (t > 0.0 && t < 1.0) ? t : -1.0;
        }
    }

    namespace
    {
        // sin and cos of theta for |theta| <= pi/4, Taylor series through the
        // 17th / 18th order terms (truncation < 1e-19).
        THZDT_AVX2 inline void sincos_reduced(__m256d theta, __m256d &s, __m256d &c)
        {
            const __m256d t2 = _mm256_mul_pd(theta, theta);
            // sin: theta * (1 - t2/3! + t2^2/5! - ... - t2^8/17!)
            __m256d ps = _mm256_set1_pd(-1.0 / 355687428096000.0); // -1/17!
            ps = _mm256_add_pd(_mm256_mul_pd(ps, t2), _mm256_set1_pd(1.0 / 1307674368000.0));
            ps = _mm256_add_pd(_mm256_mul_pd(ps, t2), _mm256_set1_pd(-1.0 / 6227020800.0));
            ps = _mm256_add_pd(_mm256_mul_pd(ps, t2), _mm256_set1_pd(1.0 / 39916800.0));
            ps = _mm256_add_pd(_mm256_mul_pd(ps, t2), _mm256_set1_pd(-1.0 / 362880.0));
            ps = _mm256_add_pd(_mm256_mul_pd(ps, t2), _mm256_set1_pd(1.0 / 5040.0));
            ps = _mm256_add_pd(_mm256_mul_pd(ps, t2), _mm256_set1_pd(-1.0 / 120.0));
            ps = _mm256_add_pd(_mm256_mul_pd(ps, t2), _mm256_set1_pd(1.0 / 6.0));
            // theta - theta^3 * (1/6 - ...)
            s = _mm256_sub_pd(theta, _mm256_mul_pd(_mm256_mul_pd(theta, t2), ps));

            __m256d pc = _mm256_set1_pd(1.0 / 6402373705728000.0); // 1/18!
            pc = _mm256_add_pd(_mm256_mul_pd(pc, t2), _mm256_set1_pd(-1.0 / 20922789888000.0));
            pc = _mm256_add_pd(_mm256_mul_pd(pc, t2), _mm256_set1_pd(1.0 / 87178291200.0));
            pc = _mm256_add_pd(_mm256_mul_pd(pc, t2), _mm256_set1_pd(-1.0 / 479001600.0));
            pc = _mm256_add_pd(_mm256_mul_pd(pc, t2), _mm256_set1_pd(1.0 / 3628800.0));
            pc = _mm256_add_pd(_mm256_mul_pd(pc, t2), _mm256_set1_pd(-1.0 / 40320.0));
            pc = _mm256_add_pd(_mm256_mul_pd(pc, t2), _mm256_set1_pd(1.0 / 720.0));
            pc = _mm256_add_pd(_mm256_mul_pd(pc, t2), _mm256_set1_pd(-1.0 / 24.0));
            pc = _mm256_add_pd(_mm256_mul_pd(pc, t2), _mm256_set1_pd(1.0 / 2.0));
            c = _mm256_sub_pd(_mm256_set1_pd(1.0), _mm256_mul_pd(t2, pc));
        }
    }

    THZDT_AVX2 void accumulate_phasors(std::span<std::complex<double>> out, std::complex<double> alpha, double f0,
                                       double df, double tau)
    {
        const double base_s = f0 * tau, step_s = df * tau;
        const __m256d base = _mm256_set1_pd(base_s), step = _mm256_set1_pd(step_s);
        const __m256d four = _mm256_set1_pd(4.0), quarter = _mm256_set1_pd(0.25);
        const __m256d half_pi = _mm256_set1_pd(0.5 * pi);
        const __m256d sign_mask = _mm256_set1_pd(-0.0);
        // (ar, -ar, ar, -ar) and (ai, ai, ai, ai) for the interleaved complex multiply
        const __m256d a_re = _mm256_setr_pd(alpha.real(), -alpha.real(), alpha.real(), -alpha.real());
        const __m256d a_im = _mm256_set1_pd(alpha.imag());
        __m256d k = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
        double *dst = reinterpret_cast<double *>(out.data());

        std::size_t i = 0;
        for (; i + lane_width <= out.size(); i += lane_width, k = _mm256_add_pd(k, four))
        {
            const __m256d cyc = _mm256_add_pd(base, _mm256_mul_pd(k, step));
            const __m256d frac = _mm256_sub_pd(cyc, _mm256_floor_pd(cyc));
            // angle = 2 pi frac = q * pi/2 + theta with q integer, |theta| <= pi/4
            const __m256d x = _mm256_mul_pd(frac, four);
            const __m256d q = _mm256_round_pd(x, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
            const __m256d theta = _mm256_mul_pd(_mm256_sub_pd(x, q), half_pi);
            const __m256d qm = _mm256_sub_pd(q, _mm256_mul_pd(four, _mm256_floor_pd(_mm256_mul_pd(q, quarter))));

            __m256d s, c;
            sincos_reduced(theta, s, c);
            const __m256d q1 = _mm256_cmp_pd(qm, _mm256_set1_pd(1.0), _CMP_EQ_OQ);
            const __m256d q2 = _mm256_cmp_pd(qm, _mm256_set1_pd(2.0), _CMP_EQ_OQ);
            const __m256d q3 = _mm256_cmp_pd(qm, _mm256_set1_pd(3.0), _CMP_EQ_OQ);
            const __m256d odd = _mm256_or_pd(q1, q3);
            __m256d cos_a = _mm256_blendv_pd(c, s, odd);
            __m256d sin_a = _mm256_blendv_pd(s, c, odd);
            cos_a = _mm256_xor_pd(cos_a, _mm256_and_pd(_mm256_or_pd(q1, q2), sign_mask));
            sin_a = _mm256_xor_pd(sin_a, _mm256_and_pd(_mm256_or_pd(q2, q3), sign_mask));

            // Interleave into (c0, s0, c1, s1) and (c2, s2, c3, s3).
            const __m256d lo = _mm256_unpacklo_pd(cos_a, sin_a); // c0 s0 c2 s2
            const __m256d hi = _mm256_unpackhi_pd(cos_a, sin_a); // c1 s1 c3 s3
            const __m256d p01 = _mm256_permute2f128_pd(lo, hi, 0x20);
            const __m256d p23 = _mm256_permute2f128_pd(lo, hi, 0x31);

            // alpha * (c - j s): re = ar c + ai s, im = ai c - ar s
            for (int h = 0; h < 2; ++h)
            {
                const __m256d p = h == 0 ? p01 : p23;
                const __m256d swapped = _mm256_permute_pd(p, 0b0101);
                const __m256d prod = _mm256_add_pd(_mm256_mul_pd(p, a_re), _mm256_mul_pd(swapped, a_im));
                double *slot = dst + 2 * (i + 2 * static_cast<std::size_t>(h));
                _mm256_storeu_pd(slot, _mm256_add_pd(_mm256_loadu_pd(slot), prod));
            }
        }
        for (; i < out.size(); ++i)
        {
            const double cyc = base_s + static_cast<double>(i) * step_s;
            const double angle = 2.0 * pi * (cyc - std::floor(cyc));
            out[i] += alpha * std::complex<double>(std::cos(angle), -std::sin(angle));
        }
    }

    THZDT_AVX2 void abs2(std::span<const std::complex<double>> in, std::span<double> out)
    {
        const double *src = reinterpret_cast<const double *>(in.data());
        std::size_t i = 0;
        for (; i + lane_width <= in.size(); i += lane_width)
        {
            const __m256d a = _mm256_loadu_pd(src + 2 * i);
            const __m256d b = _mm256_loadu_pd(src + 2 * i + 4);
            const __m256d h = _mm256_hadd_pd(_mm256_mul_pd(a, a), _mm256_mul_pd(b, b)); // z0 z2 z1 z3
            _mm256_storeu_pd(&out[i], _mm256_permute4x64_pd(h, 0xD8));
        }
        for (; i < in.size(); ++i)
            out[i] = in[i].real() * in[i].real() + in[i].imag() * in[i].imag();
    }
}

#endif
