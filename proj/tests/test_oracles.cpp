// Copyright 2026 The yeefield Authors
// SPDX-License-Identifier: Apache-2.0

#include "yeefield/oracles.hpp"

#include <catch_amalgamated.hpp>

using namespace yeefield;
using Catch::Approx;

TEST_CASE("cavity model tends to the no-fringing limit on thin substrates") {
    oracles::PatchSpec p;
    p.h = 1e-9;
    CHECK(oracles::eps_eff(p) == Approx(p.eps_r).epsilon(1e-5));
    CHECK(oracles::cavity_resonance(p) == Approx(c0 / (2 * p.L * std::sqrt(p.eps_r))).epsilon(1e-5));
}

TEST_CASE("cavity model for the reference patch") {
    const oracles::PatchSpec p;
    // Hammerstad values worked by hand: eps_eff 3.1917, dL 0.1205 mm
    CHECK(oracles::eps_eff(p) == Approx(3.1917).epsilon(1e-4));
    CHECK(oracles::length_extension(p) == Approx(0.1205e-3).epsilon(1e-3));
    CHECK(oracles::cavity_resonance(p) == Approx(25.89e9).epsilon(2e-3));
}

TEST_CASE("closed box conserves energy") { CHECK(oracles::closed_box_energy_drift(10, 0.5e-3, 300) < 1e-6); }
