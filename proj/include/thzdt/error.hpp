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

#include <stdexcept>
#include <string>
#include <string_view>

namespace thzdt
{
    // Error categories. The CLI prints these as `ERR:<name>:` so scripts can
    // match on them.
    enum class Errc
    {
        not_found,         // ENOENT
        parse,             // PARSE
        schema,            // SCHEMA
        dangling_material, // DANGLING_MATERIAL
        degenerate_facet,  // DEGENERATE_FACET
        lattice,           // LATTICE
        unreachable,       // UNREACHABLE
        range,             // RANGE
        non_convergence,   // NONCONVERGENCE
        empty_input,       // EMPTY
        infinite_loss,     // INFINITE_LOSS
        io                 // IO
    };

    std::string_view errc_name(Errc code);

    class Error : public std::runtime_error
    {
    public:
        Error(Errc code, const std::string &message)
            : std::runtime_error(message), code_(code) {}

        Errc code() const noexcept { return code_; }

    private:
        Errc code_;
    };
}
