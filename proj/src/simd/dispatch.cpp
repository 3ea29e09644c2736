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

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "thzdt/simd/kernels.hpp"

namespace thzdt::simd
{
    namespace
    {
        const KernelTable scalar_table{&scalar::first_hit, &scalar::segment_hits, &scalar::accumulate_phasors,
                                       &scalar::abs2};
#if defined(__x86_64__) || defined(_M_X64)
        const KernelTable avx2_table{&avx2::first_hit, &avx2::segment_hits, &avx2::accumulate_phasors, &avx2::abs2};
#endif

        Isa initial_isa()
        {
            const char *env = std::getenv("THZDT_SIMD");
            if (env != nullptr && std::strcmp(env, "scalar") == 0)
                return Isa::scalar;
            return detected_isa();
        }

        std::atomic<Isa> &active()
        {
            static std::atomic<Isa> isa{initial_isa()};
            return isa;
        }
    }

    std::string_view isa_name(Isa isa)
    {
        return isa == Isa::avx2 ? "avx2" : "scalar";
    }

    Isa detected_isa()
    {
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
        static const Isa isa = __builtin_cpu_supports("avx2") ? Isa::avx2 : Isa::scalar;
        return isa;
#else
        return Isa::scalar;
#endif
    }

    Isa active_isa() { return active().load(std::memory_order_relaxed); }

    Isa set_active_isa(Isa isa)
    {
        if (isa == Isa::avx2 && detected_isa() != Isa::avx2)
            isa = Isa::scalar;
        active().store(isa, std::memory_order_relaxed);
        return isa;
    }

    const KernelTable &kernels(Isa isa)
    {
#if defined(__x86_64__) || defined(_M_X64)
        if (isa == Isa::avx2 && detected_isa() == Isa::avx2)
            return avx2_table;
#endif
        (void)isa;
        return scalar_table;
    }

    std::ptrdiff_t first_hit(const TriangleSoA &tris, const Vec3 &origin, const Vec3 &dir, double tmin, double tmax,
                             std::span<const std::uint32_t> skip)
    {
        return kernels(active_isa()).first_hit(tris, origin, dir, tmin, tmax, skip);
    }

    void segment_hits(const TriangleSoA &tris, const Vec3 &origin, const PointSoA &targets, std::span<double> t_out)
    {
        kernels(active_isa()).segment_hits(tris, origin, targets, t_out);
    }

    void accumulate_phasors(std::span<std::complex<double>> out, std::complex<double> alpha, double f0, double df,
                            double tau)
    {
        kernels(active_isa()).accumulate_phasors(out, alpha, f0, df, tau);
    }

    void abs2(std::span<const std::complex<double>> in, std::span<double> out)
    {
        kernels(active_isa()).abs2(in, out);
    }
}
