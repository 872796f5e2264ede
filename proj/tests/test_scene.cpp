// Copyright 2026 The yeefield Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include "yeefield/scene.hpp"

#include <algorithm>
#include <set>
#include <sstream>

using namespace yeefield;
using Catch::Approx;

namespace {

std::multiset<std::string> primitive_lines(const Scene &sc, bool skip_shared) {
    std::multiset<std::string> out;
    for (const Primitive &p : sc.primitives) {
        if (skip_shared && (p.tag == "substrate" || p.tag == "ground")) continue;
        out.insert(detail::primitive_line(sc, p));
    }
    return out;
}

Primitive translated(Primitive p, double dx, double dy) {
    std::visit(
        [&](auto &s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Box>) {
                s.lo[0] += dx, s.hi[0] += dx, s.lo[1] += dy, s.hi[1] += dy;
            } else if constexpr (std::is_same_v<T, Cylinder>) {
                s.cx += dx, s.cy += dy;
            } else {
                s.x0 += dx, s.x1 += dx, s.y0 += dy, s.y1 += dy;
            }
        },
        p.shape);
    return p;
}

const Primitive &by_tag(const Scene &sc, const std::string &tag) {
    return *std::find_if(sc.primitives.begin(), sc.primitives.end(), [&](const Primitive &p) { return p.tag == tag; });
}

} // namespace

TEST_CASE("Single element with frame has the published footprint and two ports") {
    const Scene sc = build_single_element(ElementParams{}, true);
    const Box sub = std::get<Box>(by_tag(sc, "substrate").shape);
    CHECK(sub.hi[0] - sub.lo[0] == Approx(7.089e-3).epsilon(1e-12));
    CHECK(sub.hi[1] - sub.lo[1] == Approx(7.089e-3).epsilon(1e-12));
    CHECK(sub.hi[2] - sub.lo[2] == Approx(2.5e-3).epsilon(1e-12));
    REQUIRE(sc.ports.size() == 2);
    CHECK(sc.ports[0].polarization == Polarization::x);
    CHECK(sc.ports[1].polarization == Polarization::y);
    CHECK(sc.count_tag("via") > 0);
    CHECK(validate_scene(sc).empty());
}

TEST_CASE("Single element without frame keeps footprint and ports, drops vias") {
    const Scene framed = build_single_element(ElementParams{}, true);
    const Scene bare = build_single_element(ElementParams{}, false);
    CHECK(bare.count_tag("via") == 0);
    CHECK(bare.count_tag("frame") == 0);
    CHECK(bare.footprint.x0 == framed.footprint.x0);
    CHECK(bare.footprint.x1 == framed.footprint.x1);
    REQUIRE(bare.ports.size() == framed.ports.size());
    for (std::size_t n = 0; n < bare.ports.size(); ++n) {
        CHECK(bare.ports[n].x == framed.ports[n].x);
        CHECK(bare.ports[n].y == framed.ports[n].y);
    }
}

TEST_CASE("Every via sits at the center of its frame plate") {
    const Scene sc = build_single_element(ElementParams{}, true);
    std::vector<Plate> plates;
    std::vector<Cylinder> vias;
    for (const Primitive &p : sc.primitives) {
        if (p.tag == "frame") plates.push_back(std::get<Plate>(p.shape));
        if (p.tag == "via") vias.push_back(std::get<Cylinder>(p.shape));
    }
    REQUIRE(plates.size() == vias.size());
    for (const Cylinder &v : vias) {
        const bool centered = std::any_of(plates.begin(), plates.end(), [&](const Plate &pl) {
            return std::abs(0.5 * (pl.x0 + pl.x1) - v.cx) < 1e-15 && std::abs(0.5 * (pl.y0 + pl.y1) - v.cy) < 1e-15;
        });
        CHECK(centered);
        CHECK(v.radius == Approx(0.1e-3));
        CHECK(v.z0 == 0.0);
        CHECK(v.z1 == Approx(2.5e-3));
    }
}

TEST_CASE("Frame layout tiles the inner side span") {
    const FrameLayout f = FrameLayout::of(ElementParams{});
    CHECK(f.cells_per_side == 1);
    CHECK(f.span == Approx(5.089e-3));
    CHECK(f.gap == Approx(5.089e-3 - 2.65e-3));
    CHECK(f.neighbor_gap == Approx(0.2e-3));
}

TEST_CASE("Array footprint, ports and polarization layout") {
    const ElementParams p;
    const Scene sc = build_array_2x2(p, true);
    const Box sub = std::get<Box>(by_tag(sc, "substrate").shape);
    CHECK(sub.hi[0] - sub.lo[0] == Approx(14.178e-3).epsilon(1e-12));
    CHECK(sub.hi[1] - sub.lo[1] == Approx(14.178e-3).epsilon(1e-12));
    REQUIRE(sc.ports.size() == 8);
    for (const PortDef &pd : sc.ports)
        CHECK((pd.index % 2 == 1) == (pd.polarization == Polarization::x));
    // element (row, col) owns ports 2k-1, 2k with k = 2 row + col + 1
    for (int row = 0; row < 2; ++row)
        for (int col = 0; col < 2; ++col) {
            const int k = 2 * row + col + 1;
            const auto c = array_element_center(p, row, col);
            CHECK(sc.ports[2 * k - 2].x == Approx(c[0] + p.l_f));
            CHECK(sc.ports[2 * k - 2].y == Approx(c[1]));
            CHECK(sc.ports[2 * k - 1].x == Approx(c[0]));
            CHECK(sc.ports[2 * k - 1].y == Approx(c[1] + p.l_f));
        }
    CHECK(build_array_2x2(p, false).count_tag("via") == 0);
    CHECK(validate_scene(sc).empty());
}

TEST_CASE("Frame overflow is rejected naming the dimension") {
    ElementParams p;
    p.w_ebg = 0.95e-3;
    p.frame_margin = 0.9e-3;
    try {
        (void)build_single_element(p, true);
        FAIL("expected GeometryError");
    } catch (const GeometryError &e) {
        CHECK(e.dimension() == "w_ebg");
    }
    p = ElementParams{};
    p.w_ebg = 3.0e-3;
    CHECK_THROWS_AS(build_single_element(p, true), GeometryError);
    p = ElementParams{};
    p.s = 0.02e-3;  // below g
    try {
        (void)build_single_element(p, false);
        FAIL("expected GeometryError");
    } catch (const GeometryError &e) {
        CHECK(e.dimension() == "s");
    }
}

TEST_CASE("validate_scene diagnostics") {
    Scene sc = build_single_element(ElementParams{}, true);
    CHECK(validate_scene(sc).empty());

    SECTION("port outside footprint") {
        sc.ports[1].x = sc.footprint.x1 + 1e-3;
        const auto d = validate_scene(sc);
        REQUIRE(d.size() == 1);
        CHECK(d[0].port == 2);
        CHECK(d[0].rule == "port-footprint");
    }
    SECTION("frame cell widened to twice the frame margin") {
        const ElementParams p;
        auto it = std::find_if(sc.primitives.begin(), sc.primitives.end(), [&](const Primitive &pr) {
            if (pr.tag != "frame") return false;
            const Plate &pl = std::get<Plate>(pr.shape);
            return pl.x1 - pl.x0 < pl.y1 - pl.y0;  // a cell on an x side: radial width along x
        });
        REQUIRE(it != sc.primitives.end());
        Plate &pl = std::get<Plate>(it->shape);
        const double c = 0.5 * (pl.x0 + pl.x1);
        pl.x0 = c - p.frame_margin;
        pl.x1 = c + p.frame_margin;
        const auto d = validate_scene(sc);
        const int idx = static_cast<int>(it - sc.primitives.begin());
        CHECK(std::any_of(d.begin(), d.end(),
                          [&](const Diagnostic &x) { return x.rule == "frame-overlap" && x.primitive == idx; }));
    }
    SECTION("invalid material") {
        sc.materials[0].eps_r = 0.5;
        CHECK(validate_scene(sc).size() == 1);
    }
}

TEST_CASE("Framed and bare elements differ only by frame primitives") {
    const ElementParams p;
    const auto framed = primitive_lines(build_single_element(p, true), false);
    const auto bare = primitive_lines(build_single_element(p, false), false);
    std::vector<std::string> diff;
    std::set_difference(framed.begin(), framed.end(), bare.begin(), bare.end(), std::back_inserter(diff));
    CHECK(diff.size() == framed.size() - bare.size());
    for (const std::string &l : diff)
        CHECK((l.find("tag=frame") != std::string::npos || l.find("tag=via") != std::string::npos));
    std::vector<std::string> extra;
    std::set_difference(bare.begin(), bare.end(), framed.begin(), framed.end(), std::back_inserter(extra));
    CHECK(extra.empty());
}

TEST_CASE("Array is the union of four translated elements plus shared substrate and ground") {
    const ElementParams p;
    for (bool frame : {false, true}) {
        const Scene single = build_single_element(p, frame);
        const Scene arr = build_array_2x2(p, frame);
        Scene expected = arr;
        expected.primitives.clear();
        for (int row = 0; row < 2; ++row)
            for (int col = 0; col < 2; ++col) {
                const auto c = array_element_center(p, row, col);
                for (const Primitive &pr : single.primitives)
                    if (pr.tag != "substrate" && pr.tag != "ground")
                        expected.primitives.push_back(translated(pr, c[0], c[1]));
            }
        CHECK(primitive_lines(expected, false) == primitive_lines(arr, true));
        CHECK(arr.count_tag("substrate") == 1);
        CHECK(arr.count_tag("ground") == 1);
    }
}

TEST_CASE("Scene construction is deterministic") {
    const ElementParams p;
    CHECK(dump_scene(build_array_2x2(p, true)) == dump_scene(build_array_2x2(p, true)));
    CHECK(dump_scene(build_single_element(p, false)) == dump_scene(build_single_element(p, false)));
}

TEST_CASE("Array maps to itself under x<->y reflection with odd/even relabeling") {
    for (bool frame : {false, true}) {
        const Scene sc = build_array_2x2(ElementParams{}, frame);
        const Scene m = mirror_xy(sc);
        CHECK(primitive_lines(m, false) == primitive_lines(sc, false));
        for (const PortDef &mp : m.ports) {
            auto it = std::find_if(sc.ports.begin(), sc.ports.end(), [&](const PortDef &q) {
                return std::abs(q.x - mp.x) < 1e-15 && std::abs(q.y - mp.y) < 1e-15;
            });
            REQUIRE(it != sc.ports.end());
            CHECK(it->polarization == mp.polarization);
            CHECK((it->index % 2) != (mp.index % 2));
        }
    }
}
