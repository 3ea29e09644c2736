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

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Minimal CSV plumbing shared by the file formats: comma separated, no
// quoting, `#` starts a comment line.

namespace thzdt::csv
{
    struct Row
    {
        std::size_t line = 0; // 1-based line number in the source
        std::vector<std::string> fields;
    };

    // Reads all non-empty, non-comment lines. The first returned row is the
    // header.
    std::vector<Row> read(std::istream &in);
    std::vector<Row> read_file(const std::string &path);

    // Throws Error(schema) naming `source` when the header does not match.
    void expect_header(const Row &header, std::span<const std::string_view> names, std::string_view source);

    double parse_double(const std::string &field, std::size_t line, std::string_view source);
    long long parse_int(const std::string &field, std::size_t line, std::string_view source);

    // %.6g, the precision used by every CSV the library writes.
    std::string fmt(double value);

    // `# version: thzdt <version>` line written at the top of every artifact.
    std::string version_line();
}
