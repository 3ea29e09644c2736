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

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>

#include "thzdt/csv.hpp"
#include "thzdt/error.hpp"
#include "thzdt/version.hpp"

namespace thzdt::csv
{
    namespace
    {
        std::string trim(std::string_view s)
        {
            const auto b = s.find_first_not_of(" \t\r\n");
            if (b == std::string_view::npos)
                return {};
            const auto e = s.find_last_not_of(" \t\r\n");
            return std::string(s.substr(b, e - b + 1));
        }
    }

    std::vector<Row> read(std::istream &in)
    {
        std::vector<Row> rows;
        std::string line;
        std::size_t number = 0;
        while (std::getline(in, line))
        {
            ++number;
            const std::string t = trim(line);
            if (t.empty() || t.front() == '#')
                continue;
            Row row;
            row.line = number;
            std::size_t start = 0;
            while (true)
            {
                const auto comma = t.find(',', start);
                row.fields.push_back(trim(std::string_view(t).substr(start, comma - start)));
                if (comma == std::string::npos)
                    break;
                start = comma + 1;
            }
            rows.push_back(std::move(row));
        }
        return rows;
    }

    std::vector<Row> read_file(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw Error(Errc::not_found, "cannot open '" + path + "'");
        return read(in);
    }

    void expect_header(const Row &header, std::span<const std::string_view> names, std::string_view source)
    {
        bool ok = header.fields.size() == names.size();
        for (std::size_t i = 0; ok && i < names.size(); ++i)
            ok = header.fields[i] == names[i];
        if (!ok)
        {
            std::string want;
            for (std::size_t i = 0; i < names.size(); ++i)
                want += (i ? "," : "") + std::string(names[i]);
            throw Error(Errc::schema, std::string(source) + ":" + std::to_string(header.line) +
                                          ": expected header '" + want + "'");
        }
    }

    double parse_double(const std::string &field, std::size_t line, std::string_view source)
    {
        double value = 0.0;
        const char *first = field.data(), *last = field.data() + field.size();
        if (!field.empty() && *first == '+')
            ++first;
        const auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last || field.empty())
            throw Error(Errc::parse, std::string(source) + ":" + std::to_string(line) + ": not a number: '" + field +
                                         "'");
        return value;
    }

    long long parse_int(const std::string &field, std::size_t line, std::string_view source)
    {
        long long value = 0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
        if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
            throw Error(Errc::parse, std::string(source) + ":" + std::to_string(line) + ": not an integer: '" +
                                         field + "'");
        return value;
    }

    std::string fmt(double value)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", value);
        return buf;
    }

    std::string version_line()
    {
        return std::string("# version: thzdt ") + std::string(version);
    }
}
