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

#include "thzdt/error.hpp"
#include "thzdt/geometry.hpp"
#include "thzdt/materials.hpp"

namespace thzdt
{
    namespace
    {
        // sqrt(eta - sin^2 theta0), principal branch. With Im(eta) <= 0 the
        // root lies in the fourth quadrant, so the transmitted field decays.
        std::complex<double> cos_t(const ReflectionQuery &q)
        {
            const double s = std::sin(q.theta0);
            return std::sqrt(q.eta - s * s);
        }
    }

    std::complex<double> fresnel_coefficient(const ReflectionQuery &q)
    {
        const double c = std::cos(q.theta0);
        const std::complex<double> root = cos_t(q);
        if (q.polarization == Polarization::te)
            return (c - root) / (c + root);
        return (q.eta * c - root) / (q.eta * c + root);
    }

    std::complex<double> slab_reflection(const ReflectionQuery &q)
    {
        const std::complex<double> r = fresnel_coefficient(q);
        const std::complex<double> phase = 2.0 * pi * q.thickness_m / q.wavelength_m * cos_t(q);
        const std::complex<double> e = std::exp(std::complex<double>(0.0, -2.0) * phase);
        return r * (1.0 - e) / (1.0 - r * r * e);
    }

    double reflection_loss_db(const ReflectionQuery &q)
    {
        const double mag = std::abs(slab_reflection(q));
        if (mag == 0.0)
            throw Error(Errc::infinite_loss, "reflection coefficient vanishes; loss is infinite");
        return -20.0 * std::log10(mag);
    }

    double unpolarized_power_coefficient(ReflectionQuery q)
    {
        q.polarization = Polarization::te;
        const double te = std::norm(slab_reflection(q));
        q.polarization = Polarization::tm;
        const double tm = std::norm(slab_reflection(q));
        return 0.5 * (te + tm);
    }

    double unpolarized_reflection_loss_db(const ReflectionQuery &q)
    {
        const double p = unpolarized_power_coefficient(q);
        if (p == 0.0)
            throw Error(Errc::infinite_loss, "reflection coefficient vanishes; loss is infinite");
        return -10.0 * std::log10(p);
    }
}
