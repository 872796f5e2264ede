// Copyright 2026 The yeefield Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include "yeefield/mesh.hpp"

using namespace yeefield;
using Catch::Approx;

namespace {

Scene vacuum_box_10mm() {
    Scene sc;
    sc.name = "vacuum";
    sc.materials.push_back(Material::vacuum());
    sc.bounds = {{0, 0, 0}, {10e-3, 10e-3, 10e-3}};
    sc.footprint = {0, 0, 10e-3, 10e-3};
    return sc;
}

MeshPolicy uniform_policy(double cell) {
    MeshPolicy p;
    p.max_cell = cell;
    p.min_cell = cell;
    return p;
}

} // namespace

TEST_CASE("Empty vacuum box divides uniformly") {
    const YeeGrid g = generate_mesh(vacuum_box_10mm(), uniform_policy(0.5e-3));
    // CPML on five faces, PEC ground plane at zlo
    CHECK(g.cells(0) == 20 + 20);
    CHECK(g.cells(1) == 20 + 20);
    CHECK(g.cells(2) == 20 + 10);
    for (int a = 0; a < 3; ++a)
        for (int n = 0; n < g.cells(a); ++n) CHECK(g.cell(a, n) == Approx(0.5e-3).epsilon(1e-9));
}

TEST_CASE("CFL timestep closed form") {
    const YeeGrid g = generate_mesh(vacuum_box_10mm(), uniform_policy(0.5e-3));
    const double dt = cfl_timestep(g, 0.99);
    const double oracle = 0.99 / (c0 * std::sqrt(3.0) / 0.5e-3);
    CHECK(dt == Approx(oracle).epsilon(1e-12));
    CHECK(dt == Approx(9.53e-13).epsilon(1e-3));

    const YeeGrid half = generate_mesh(vacuum_box_10mm(), uniform_policy(0.25e-3));
    CHECK(cfl_timestep(half, 0.99) == Approx(dt / 2).epsilon(1e-9));

    MeshPolicy bad = uniform_policy(0.5e-3);
    bad.courant = 0.0;
    CHECK_THROWS_AS(bad.check(), MeshError);
}

TEST_CASE("Conductivity from loss tangent") {
    CHECK(conductivity_from_tan_delta(3.5, 0.0041, 28e9) == Approx(0.02235).epsilon(1e-3));
    CHECK(conductivity_from_tan_delta(3.5, 0.0, 28e9) == 0.0);
    CHECK(conductivity_from_tan_delta(3.5, 0.0041, 56e9) ==
          Approx(2 * conductivity_from_tan_delta(3.5, 0.0041, 28e9)).epsilon(1e-14));
}

TEST_CASE("Coarse mesh maps every via onto vertical PEC edge columns") {
    const Scene sc = build_single_element(ElementParams{}, true);
    const YeeGrid g = generate_mesh(sc, MeshPolicy::for_scene(sc, MeshMode::coarse));
    const int k_top = g.nearest_line(2, 2.5e-3);
    int vias = 0;
    for (const Primitive &p : sc.primitives) {
        if (p.tag != "via") continue;
        ++vias;
        const Cylinder &c = std::get<Cylinder>(p.shape);
        // independent oracle: scan every vertical edge column for a node inside the cylinder
        int columns = 0;
        for (int i = 0; i < g.nodes(0); ++i)
            for (int j = 0; j < g.nodes(1); ++j) {
                const double dx = g.lines[0][i] - c.cx, dy = g.lines[1][j] - c.cy;
                if (dx * dx + dy * dy > c.radius * c.radius) continue;
                bool full = true;
                for (int k = 0; k < k_top; ++k) full = full && g.is_pec(2, i, j, k);
                columns += full;
            }
        CHECK(columns >= 1);
    }
    CHECK(vias == 4);
}

TEST_CASE("Fine mode rejects sub-cell features") {
    const Scene sc = build_single_element(ElementParams{}, false);
    MeshPolicy p = MeshPolicy::for_scene(sc, MeshMode::fine);
    p.min_cell = 0.05e-3;
    try {
        (void)generate_mesh(sc, p);
        FAIL("expected MeshError");
    } catch (const MeshError &e) {
        CHECK(std::string(e.what()).find("unmeshable feature") != std::string::npos);
        CHECK(std::string(e.what()).find("patch") != std::string::npos);
    }
}

TEST_CASE("Coarse mesh line invariants") {
    for (bool frame : {false, true}) {
        const Scene sc = build_single_element(ElementParams{}, frame);
        const MeshPolicy pol = MeshPolicy::for_scene(sc, MeshMode::coarse);
        const YeeGrid g = generate_mesh(sc, pol);
        for (int a = 0; a < 3; ++a) {
            for (int n = 0; n < g.cells(a); ++n) REQUIRE(g.cell(a, n) > 0);
            for (int n = 0; n + 1 < g.cells(a); ++n) {
                const double r = g.cell(a, n + 1) / g.cell(a, n);
                CHECK(std::max(r, 1 / r) <= pol.grading_ratio * (1 + 1e-9));
            }
        }
        // x and y lines mirror about the center and coincide with each other (diagonal symmetry)
        for (int a = 0; a < 2; ++a) {
            const auto &l = g.lines[a];
            for (std::size_t n = 0; n < l.size(); ++n) CHECK(l[n] == -l[l.size() - 1 - n]);
        }
        CHECK(g.lines[0] == g.lines[1]);
        for (const SnapReport &s : g.snaps) {
            const Box bb = sc.primitives[s.primitive].bounding_box();
            for (int a = 0; a < 3; ++a)
                for (double x : {bb.lo[a], bb.hi[a]}) {
                    const int n = g.nearest_line(a, x);
                    const double local = std::max(n > 0 ? g.cell(a, n - 1) : 0.0, n < g.cells(a) ? g.cell(a, n) : 0.0);
                    CHECK(std::abs(g.lines[a][n] - x) <= 0.5 * local + 1e-12);
                }
        }
    }
}

TEST_CASE("Sub-cell gaps are widened to one open cell in coarse mode") {
    const ElementParams p;
    const Scene sc = build_single_element(p, false);
    const YeeGrid g = generate_mesh(sc, MeshPolicy::for_scene(sc, MeshMode::coarse));
    const int k = g.nearest_line(2, p.h);
    // the arm on the +y side is split at x = 0 by g; some Ex edge across x = 0 must stay open
    const double y_arm = p.w_pa / 2 + p.s + p.w_p / 2;
    const int j = g.nearest_line(1, y_arm);
    const int i0 = g.nearest_line(0, 0.0);
    CHECK((!g.is_pec(0, i0, j, k) || !g.is_pec(0, i0 - 1, j, k)));
    // while the arm halves themselves are metal
    CHECK(g.is_pec(0, g.nearest_line(0, 0.8e-3), j, k));
    CHECK(g.is_pec(0, g.nearest_line(0, -0.8e-3) - 1, j, k));
}

TEST_CASE("Ports map to a wire above a lumped gap") {
    const Scene sc = build_single_element(ElementParams{}, true);
    const YeeGrid g = generate_mesh(sc, MeshPolicy::for_scene(sc, MeshMode::coarse));
    REQUIRE(g.ports.size() == 2);
    for (const GridPort &p : g.ports) {
        CHECK(p.k_gap == 0);
        CHECK_FALSE(g.is_pec(2, p.i, p.j, p.k_gap));
        for (int k = p.k_gap + 1; k < p.k_top; ++k) CHECK(g.is_pec(2, p.i, p.j, k));
    }
}

TEST_CASE("Refinement never loses metal and meshing is deterministic") {
    const Scene sc = build_single_element(ElementParams{}, true);
    MeshPolicy pol = MeshPolicy::for_scene(sc, MeshMode::coarse);
    std::size_t prev = 0;
    for (double scale : {1.0, 0.8, 0.6}) {
        MeshPolicy p = pol;
        p.max_cell = pol.max_cell * scale;
        const YeeGrid g = generate_mesh(sc, p);
        const std::size_t n = g.pec_edge_count();
        CHECK(n >= prev);
        prev = n;
    }
    CHECK(dump_mesh(generate_mesh(sc, pol)) == dump_mesh(generate_mesh(sc, pol)));
}
