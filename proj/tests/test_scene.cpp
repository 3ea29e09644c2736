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
#include <sstream>

#include "doctest.h"

#include "test_support.hpp"
#include "thzdt/random.hpp"
#include "thzdt/scene.hpp"

using namespace thzdt;
using thzdt::test::error_code_of;

namespace
{
    const char *minimal_scene = R"({
  "bounds": {"min": [-1, -1, -1], "max": [1, 1, 1]},
  "tx": {"a": [0, 0, 0.5]},
  "rx": {"b": [0, 0, -0.5]},
  "facets": [{"v": [[-1, -1, 0], [1, -1, 0], [0, 1, 0]], "material": "glass"}]
})";

    Facet floor_triangle(double z)
    {
        return {{Vec3{-2, -2, z}, Vec3{2, -2, z}, Vec3{0, 3, z}}, "glass", std::nullopt};
    }
}

TEST_CASE("material database loads the fixture")
{
    const MaterialDb db = test::fixture_db();
    REQUIRE(db.size() == 4);
    const Material *glass = db.find("glass");
    REQUIRE(glass != nullptr);
    CHECK(glass->eta.imag() < 0.0); // stored as a positive loss term
    CHECK(glass->thickness_m == doctest::Approx(0.004));
    REQUIRE(glass->reference_rl_db.has_value());
    CHECK(*glass->reference_rl_db == doctest::Approx(2.42));
    CHECK(db.find("unobtainium") == nullptr);
}

TEST_CASE("material database validation")
{
    auto parse = [](const std::string &text) {
        std::istringstream in(text);
        return parse_material_db(in);
    };
    const std::string header = "name,eta_re,eta_im,thickness_m,reference_rl_db\n";
    CHECK(error_code_of([&] { parse(header + "a,0.5,0,0.01,\n"); }) == "SCHEMA");
    CHECK(error_code_of([&] { parse(header + "a,2,-1,0.01,\n"); }) == "SCHEMA");
    CHECK(error_code_of([&] { parse(header + "a,2,0,0,\n"); }) == "SCHEMA");
    CHECK(error_code_of([&] { parse(header + "a,2,0,0.01,-1\n"); }) == "SCHEMA");
    CHECK(error_code_of([&] { parse(header + "a,2,0,0.01,\na,3,0,0.01,\n"); }) == "SCHEMA");
    CHECK(error_code_of([&] { parse("name,eta\n"); }) != "none");
    CHECK(error_code_of([&] { parse(header + "a,abc,0,0.01,\n"); }) == "PARSE");
    const MaterialDb db = parse(header + "a,2,0.5,0.01,\n");
    CHECK_FALSE(db.entries()[0].reference_rl_db.has_value());

    std::ostringstream out;
    write_material_db(out, test::fixture_db());
    std::istringstream back(out.str());
    CHECK(parse_material_db(back) == test::fixture_db());
}

TEST_CASE("minimal scene loads")
{
    const Scene s = parse_scene(minimal_scene, test::fixture_db());
    CHECK(s.facets().size() == 1);
    CHECK(s.tx().size() == 1);
    CHECK(s.rx().size() == 1);
    CHECK(s.position("a").z == 0.5);
    CHECK(s.position("b").z == -0.5);
    CHECK(error_code_of([&] { s.position("nobody"); }) == "RANGE");
}

TEST_CASE("scene load errors")
{
    const MaterialDb db = test::fixture_db();
    std::string dangling = minimal_scene;
    dangling.replace(dangling.find("\"glass\""), 7, "\"unobtainium\"");
    CHECK(error_code_of([&] { parse_scene(dangling, db); }) == "DANGLING_MATERIAL");

    std::string degenerate = minimal_scene;
    degenerate.replace(degenerate.find("[0, 1, 0]"), 9, "[0, -1, 0]");
    CHECK(error_code_of([&] { parse_scene(degenerate, db); }) == "DEGENERATE_FACET");

    std::string outside = minimal_scene;
    outside.replace(outside.find("[0, 0, 0.5]"), 11, "[0, 0, 1.5]");
    CHECK(error_code_of([&] { parse_scene(outside, db); }) == "RANGE");

    std::string flat = minimal_scene;
    flat.replace(flat.find("\"max\": [1, 1, 1]"), 16, "\"max\": [1, 1, -1]");
    CHECK(error_code_of([&] { parse_scene(flat, db); }) == "SCHEMA");

    std::string missing = minimal_scene;
    missing.replace(missing.find("\"bounds\""), 8, "\"bound\"");
    CHECK(error_code_of([&] { parse_scene(missing, db); }) == "SCHEMA");

    CHECK(error_code_of([&] { load_scene("/nonexistent/scene.json", db); }) == "ENOENT");
}

TEST_CASE("parse errors carry the line number")
{
    const std::string text = "{\n  \"bounds\": {\n    \"min\": [0, 0, 0],,\n  }\n}\n";
    try
    {
        parse_scene(text, test::fixture_db(), "broken.json");
        FAIL("no error raised");
    }
    catch (const Error &e)
    {
        CHECK(e.code() == Errc::parse);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("shoebox fixture bounds")
{
    const Scene s = test::fixture_scene("shoebox.json");
    CHECK(s.facets().size() == 12);
    CHECK(s.bounds().min == Vec3{0, -1, 0});
    CHECK(s.bounds().max == Vec3{5, 1, 1.5});
    CHECK(s.bounds().volume() == doctest::Approx(15.0));
}

TEST_CASE("quads are split into triangles")
{
    const std::string text = R"({
  "bounds": {"min": [-1, -1, -1], "max": [1, 1, 1]},
  "tx": {}, "rx": {},
  "facets": [{"v": [[-1, -1, 0], [1, -1, 0], [1, 1, 0], [-1, 1, 0]], "material": "steel", "thickness": 0.02}]
})";
    const Scene s = parse_scene(text, test::fixture_db());
    REQUIRE(s.facets().size() == 2);
    CHECK(s.facets()[0].area() + s.facets()[1].area() == doctest::Approx(4.0));
    CHECK(s.thickness_of(1) == doctest::Approx(0.02));
    CHECK(s.facets()[1].vertices[1] == Vec3{1, 1, 0});
}

TEST_CASE("ray facet intersection")
{
    const Facet floor = floor_triangle(-1.0);
    auto hit = ray_facet_intersect({0, 0, 0}, {0, 0, -1}, floor);
    REQUIRE(hit);
    CHECK(hit->distance == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(hit->point.z == doctest::Approx(-1.0));

    CHECK_FALSE(ray_facet_intersect({0, 0, 0}, {1, 0, 0}, floor));  // parallel
    CHECK_FALSE(ray_facet_intersect({0, 0, 0}, {0, 0, 1}, floor));  // pointing away
    CHECK_FALSE(ray_facet_intersect({0, 0, -1}, {0, 0, -1}, floor)); // starts on the facet

    // Edge from (-2,-2) to (2,-2): barycentric v = 0 along it.
    auto edge = ray_facet_intersect({0.5, -2.0, 1.0}, {0, 0, -1}, floor);
    REQUIRE(edge);
    CHECK(edge->distance == doctest::Approx(2.0));
    // Vertex hit.
    CHECK(ray_facet_intersect({2.0, -2.0, 0.0}, {0, 0, -1}, floor));
    // Just outside the edge.
    CHECK_FALSE(ray_facet_intersect({0.5, -2.0 - 1e-9, 1.0}, {0, 0, -1}, floor));
}

TEST_CASE("intersection distance is translation consistent")
{
    Rng rng(5);
    const Facet f{{Vec3{0.3, -1.1, 0.2}, Vec3{1.7, 0.4, -0.5}, Vec3{-0.6, 1.2, 0.9}}, "glass", std::nullopt};
    int both = 0;
    for (int i = 0; i < 2000; ++i)
    {
        const Vec3 o{4.0 * rng.uniform() - 2.0, 4.0 * rng.uniform() - 2.0, 3.0 + rng.uniform()};
        const Vec3 target{2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0, 0.0};
        const Vec3 d = normalized(target - o);
        const double s = 0.5 * rng.uniform();
        auto a = ray_facet_intersect(o, d, f);
        auto b = ray_facet_intersect(o + s * d, d, f);
        if (a && b)
        {
            ++both;
            CHECK(a->distance - b->distance == doctest::Approx(s).epsilon(1e-9));
        }
    }
    CHECK(both > 100);
}

TEST_CASE("occlusion queries")
{
    const Scene empty = test::make_scene({});
    CHECK_FALSE(is_occluded({0, 0, 1}, {0, 0, -1}, empty));

    const Scene one = test::make_scene({floor_triangle(0.0)});
    CHECK(is_occluded({0, 0, 1}, {0, 0, -1}, one));
    CHECK(is_occluded({0, 0, -1}, {0, 0, 1}, one));
    // Receiver resting on the facet: the endpoint does not count.
    CHECK_FALSE(is_occluded({0, 0, 1}, {0, 0, 0}, one));
    CHECK_FALSE(is_occluded({0, 0, 0}, {0, 0, 1}, one));
    const std::uint32_t ignore[] = {0};
    CHECK_FALSE(is_occluded({0, 0, 1}, {0, 0, -1}, one, ignore));
}

TEST_CASE("occlusion is symmetric")
{
    const Scene s = test::fixture_scene("cabin.json");
    Rng rng(9);
    const Box &b = s.bounds();
    auto draw = [&] {
        return Vec3{b.min.x + rng.uniform() * (b.max.x - b.min.x), b.min.y + rng.uniform() * (b.max.y - b.min.y),
                    b.min.z + rng.uniform() * (b.max.z - b.min.z)};
    };
    int blocked = 0;
    for (int i = 0; i < 3000; ++i)
    {
        const Vec3 p = draw(), q = draw();
        const bool ab = is_occluded(p, q, s), ba = is_occluded(q, p, s);
        REQUIRE(ab == ba);
        blocked += ab ? 1 : 0;
    }
    CHECK(blocked > 0);
    CHECK(blocked < 3000);
}

TEST_CASE("save and load round trip")
{
    const Scene s = test::fixture_scene("cabin.json");
    const Scene back = parse_scene(save_scene(s), s.materials());
    REQUIRE(back.facets().size() == s.facets().size());
    for (std::size_t i = 0; i < s.facets().size(); ++i)
    {
        for (int k = 0; k < 3; ++k)
            CHECK(distance(back.facets()[i].vertices[k], s.facets()[i].vertices[k]) < 1e-9);
        CHECK(back.facets()[i].material == s.facets()[i].material);
        CHECK(back.facets()[i].thickness_override == s.facets()[i].thickness_override);
    }
    CHECK(back.tx() == s.tx());
    CHECK(back.rx() == s.rx());
    CHECK(back.bounds() == s.bounds());
}

TEST_CASE("distance to nearest facet")
{
    const Scene empty = test::make_scene({});
    CHECK(std::isinf(distance_to_nearest_facet(empty, {0, 0, 0})));
    const Scene one = test::make_scene({floor_triangle(0.0)});
    CHECK(distance_to_nearest_facet(one, {0, 0, 0.7}) == doctest::Approx(0.7));
    // Beyond the (-2,-2)-(2,-2) edge: nearest point lies on the edge.
    CHECK(distance_to_nearest_facet(one, {0, -3, 0}) == doctest::Approx(1.0));
    // Beyond vertex (2,-2,0).
    CHECK(distance_to_nearest_facet(one, {3, -3, 0}) == doctest::Approx(std::sqrt(2.0)));
}
