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

namespace thzdt
{
    enum class Polarization
    {
        te,
        tm
    };

    // Geometry of a single specular bounce on a homogeneous slab.
    struct ReflectionQuery
    {
        std::complex<double> eta{1.0, 0.0}; // relative permittivity, eta' - j eta''
        double thickness_m = 0.0;
        double theta0 = 0.0;                // incidence angle from the surface normal, rad
        double wavelength_m = 0.0;
        Polarization polarization = Polarization::te;
    };

    // Interface (half-space) Fresnel coefficient R'.
    std::complex<double> fresnel_coefficient(const ReflectionQuery &q);

    // Finite-thickness slab coefficient R = R'(1 - e^{-j2q}) / (1 - R'^2 e^{-j2q}),
    // q = 2 pi d / lambda * sqrt(eta - sin^2 theta0).
    std::complex<double> slab_reflection(const ReflectionQuery &q);

    // -20 log10 |R|. Throws Error(infinite_loss) when R vanishes.
    double reflection_loss_db(const ReflectionQuery &q);

    // (|R_TE|^2 + |R_TM|^2) / 2, the polarization-averaged power coefficient.
    double unpolarized_power_coefficient(ReflectionQuery q);

    // -10 log10 of the unpolarized power coefficient.
    double unpolarized_reflection_loss_db(const ReflectionQuery &q);
}
