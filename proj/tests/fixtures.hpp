// Copyright 2026 The yeefield Authors
// SPDX-License-Identifier: Apache-2.0

// Small grids and helpers shared by the solver-level tests.

#ifndef YEEFIELD_TESTS_FIXTURES_HPP
#define YEEFIELD_TESTS_FIXTURES_HPP

#include "yeefield/solver.hpp"

#include <array>
#include <vector>

namespace yeefield::testing {

inline constexpr BoundarySet closed_box = {Boundary::pec, Boundary::pec, Boundary::pec,
                                    Boundary::pec, Boundary::pec, Boundary::pec};

inline YeeGrid uniform_box(int n, double cell, const BoundarySet &b = closed_box, int nz = -1) {
    if (nz < 0) nz = n;
    return make_vacuum_grid({uniform_lines(0, n * cell, cell), uniform_lines(0, n * cell, cell),
                             uniform_lines(0, nz * cell, cell)},
                            b, 10);
}

// An 8x8x3-cell PEC box of 5 um cells: gap at k = 0, wire at k = 1, optional load at k = 2.
// At this scale the loop inductance is negligible, so the feed behaves as an ideal circuit.
inline constexpr double micro = 5e-6;

inline YeeGrid micro_box(double load_ohm, std::vector<std::array<int, 2>> feeds = {{4, 4}}) {
    YeeGrid g = uniform_box(8, micro, closed_box, 3);
    const std::uint16_t pec = 1;
    int index = 1;
    for (auto [i, j] : feeds) {
        g.edge_material[2][g.index(i, j, 1)] = pec;
        if (load_ohm > 0) {
            const double sigma = micro / (load_ohm * micro * micro);
            g.table.push_back({1.0, sigma, false});
            g.edge_material[2][g.index(i, j, 2)] = static_cast<std::uint16_t>(g.table.size() - 1);
        }
        GridPort p;
        p.index = index++;
        p.i = i, p.j = j, p.k_gap = 0, p.k_top = 2;
        g.ports.push_back(p);
    }
    return g;
}

inline cplx dft(const std::vector<double> &x, double t0, double dt, double f) {
    cplx s = 0;
    for (std::size_t n = 0; n < x.size(); ++n) s += x[n] * std::polar(dt, -2 * pi * f * (t0 + n * dt));
    return s;
}

inline Excitation baseband() {
    Excitation e;
    e.f0 = 0;
    e.tau = 50e-12;
    e.t0 = 300e-12;
    return e;
}

} // namespace yeefield::testing

#endif
