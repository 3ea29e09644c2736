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

#include <cmath>
#include <cstdint>
#include <random>

namespace thzdt
{
    // Seeded generator with portable uniform and normal draws. The standard
    // distributions are implementation-defined, so they are not used.
    class Rng
    {
    public:
        explicit Rng(std::uint64_t seed) : engine_(seed) {}

        // [0, 1) with 53 random bits
        double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

        // Box-Muller, one value per call
        double normal()
        {
            if (spare_)
            {
                spare_ = false;
                return cached_;
            }
            double u1 = uniform();
            while (u1 <= 0.0)
                u1 = uniform();
            const double u2 = uniform();
            const double r = std::sqrt(-2.0 * std::log(u1));
            const double a = 2.0 * 3.14159265358979323846 * u2;
            cached_ = r * std::sin(a);
            spare_ = true;
            return r * std::cos(a);
        }

    private:
        std::mt19937_64 engine_;
        double cached_ = 0.0;
        bool spare_ = false;
    };
}
