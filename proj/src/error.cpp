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

#include "thzdt/error.hpp"

namespace thzdt
{
    std::string_view errc_name(Errc code)
    {
        switch (code)
        {
        case Errc::not_found:
            return "ENOENT";
        case Errc::parse:
            return "PARSE";
        case Errc::schema:
            return "SCHEMA";
        case Errc::dangling_material:
            return "DANGLING_MATERIAL";
        case Errc::degenerate_facet:
            return "DEGENERATE_FACET";
        case Errc::lattice:
            return "LATTICE";
        case Errc::unreachable:
            return "UNREACHABLE";
        case Errc::range:
            return "RANGE";
        case Errc::non_convergence:
            return "NONCONVERGENCE";
        case Errc::empty_input:
            return "EMPTY";
        case Errc::infinite_loss:
            return "INFINITE_LOSS";
        case Errc::io:
            return "IO";
        }
        return "UNKNOWN";
    }
}
