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

#include <iosfwd>
#include <string>
#include <vector>

namespace thzdt::cli
{
    // Runs one subcommand. args excludes the program name. Returns 0 on
    // success, 2 on usage errors and 1 on data errors, which are reported on
    // `err` as a single `ERR:<code>:` line.
    int run_subcommand(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);
    int run_subcommand(int argc, char **argv);
}
