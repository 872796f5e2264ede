// Copyright 2026 The yeefield Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "yeefield/solver.hpp"

#include <filesystem>
#include <fstream>
#include <random>

using namespace yeefield;
using Catch::Approx;
using namespace yeefield::testing;

namespace {

void randomize_interior_e(Simulation<double> &sim, unsigned seed) {
    const YeeGrid &g = sim.grid();
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int c = 0; c < 3; ++c)
        for (int i = 1; i < g.cells(0); ++i)
            for (int j = 1; j < g.cells(1); ++j)
                for (int k = 1; k < g.cells(2); ++k) sim.e(c)[g.index(i, j, k)] = u(rng);
}

} // namespace

TEST_CASE("Zero fields and zero sources stay zero") {
    const YeeGrid g = uniform_box(6, 1e-3);
    Simulation<float> sim(g, cfl_timestep(g, 0.99));
    sim.advance(50);
    for (int c = 0; c < 3; ++c) {
        for (float x : sim.e(c)) REQUIRE(x == 0.0f);
        for (float x : sim.h(c)) REQUIRE(x == 0.0f);
    }
}

TEST_CASE("Closed PEC box conserves the discrete energy after the source turns off") {
    const YeeGrid g = uniform_box(16, 0.5e-3);
    Simulation<double> sim(g, cfl_timestep(g, 0.99));
    const Excitation pulse;
    sim.add_source({2, {g.index(8, 8, 8)}, [pulse](double t) { return pulse(t); }, 1e6});
    const long off = static_cast<long>(pulse.end_time() / sim.dt()) + 1;
    sim.advance(off);
    const double w0 = sim.field_energy();
    REQUIRE(w0 > 0);
    double drift = 0;
    for (int n = 0; n < 1000; ++n) {
        sim.step();
        drift = std::max(drift, std::abs(sim.field_energy() - w0) / w0);
    }
    CHECK(drift < 1e-3);
}

TEST_CASE("Leapfrog is time reversible in a closed lossless box") {
    const YeeGrid g = uniform_box(10, 1e-3);
    Simulation<double> sim(g, cfl_timestep(g, 0.9));
    randomize_interior_e(sim, 7);
    std::array<std::vector<double>, 3> e0 = {sim.e(0), sim.e(1), sim.e(2)};
    const int n = 300;
    sim.advance(n);
    sim.half_step_h();
    for (int c = 0; c < 3; ++c)
        for (double &x : sim.h(c)) x = -x;
    sim.advance(n);
    double err = 0, ref = 0;
    for (int c = 0; c < 3; ++c)
        for (std::size_t idx = 0; idx < e0[c].size(); ++idx) {
            err = std::max(err, std::abs(sim.e(c)[idx] - e0[c][idx]));
            ref = std::max(ref, std::abs(e0[c][idx]));
        }
    CHECK(err < 1e-9 * ref);
}

TEST_CASE("Courant factor above one diverges and reports the step") {
    const YeeGrid g = uniform_box(10, 1e-3);
    Simulation<double> sim(g, 1.05 * cfl_timestep(g, 1.0));
    randomize_interior_e(sim, 3);
    try {
        sim.advance(2000, 50);
        FAIL("expected divergence");
    } catch (const DivergenceError &e) {
        CHECK(e.step() > 0);
        CHECK(e.step() <= 2000);
    }
    // the same grid at 0.99 stays bounded
    Simulation<double> ok(g, cfl_timestep(g, 0.99));
    randomize_interior_e(ok, 3);
    CHECK_NOTHROW(ok.advance(2000, 50));
}

TEST_CASE("Lumped resistive load forms the expected DC divider") {
    for (double r : {25.0, 100.0}) {
        const YeeGrid g = micro_box(r);
        Simulation<double> sim(g, cfl_timestep(g, 0.99));
        const Excitation src = baseband();
        sim.add_port(g.ports[0], true, src);
        RunControl rc;
        rc.max_steps = 200000;
        const Recordings rec = sim.run(rc);
        CHECK(rec.converged);
        std::vector<double> vs(rec.steps);
        for (long n = 0; n < rec.steps; ++n) vs[n] = src((n + 0.5) * rec.dt);
        const double f = 1e9;
        const cplx ratio = dft(rec.ports[0].v, 0, rec.dt, f) / dft(vs, 0.5 * rec.dt, rec.dt, f);
        CHECK(std::abs(ratio) == Approx(r / (r + 50)).epsilon(0.01));
    }
}

TEST_CASE("Port recordings scale linearly with the source amplitude") {
    const YeeGrid g = micro_box(75.0);
    auto run = [&](double amp) {
        Simulation<float> sim(g, cfl_timestep(g, 0.99));
        Excitation e;
        e.amplitude = amp;
        sim.add_port(g.ports[0], true, e);
        sim.advance(20000);
        RunControl rc;
        rc.max_steps = sim.step_index() + 1;
        return sim.run(rc);
    };
    const Recordings a = run(1.0), b = run(2.0);
    REQUIRE(a.ports[0].v.size() == b.ports[0].v.size());
    for (std::size_t n = 0; n < a.ports[0].i.size(); ++n) {
        REQUIRE(b.ports[0].v[n] == 2 * a.ports[0].v[n]);
        REQUIRE(b.ports[0].i[n] == 2 * a.ports[0].i[n]);
    }
}

TEST_CASE("Passive port with zero source stays silent and port on a conductor is rejected") {
    YeeGrid g = micro_box(50.0);
    Simulation<float> sim(g, cfl_timestep(g, 0.99));
    Excitation quiet;
    quiet.amplitude = 0;
    sim.add_port(g.ports[0], true, quiet);
    sim.advance(500);
    for (float x : sim.e(2)) REQUIRE(x == 0.0f);

    g.edge_material[2][g.index(4, 4, 0)] = 1;
    Simulation<float> bad(g, cfl_timestep(g, 0.99));
    CHECK_THROWS_AS(bad.add_port(g.ports[0], true, quiet), ConfigError);
}

TEST_CASE("Mirror-symmetric two-port gives reciprocal waveforms") {
    const YeeGrid g = micro_box(0.0, {{2, 4}, {6, 4}});
    auto run = [&](int excited) {
        Simulation<double> sim(g, cfl_timestep(g, 0.99));
        for (const GridPort &p : g.ports) sim.add_port(p, p.index == excited, Excitation{});
        RunControl rc;
        rc.max_steps = 40000;
        return sim.run(rc);
    };
    const Recordings r1 = run(1), r2 = run(2);
    REQUIRE(r1.steps == r2.steps);
    double err = 0, ref = 0;
    for (std::size_t n = 0; n < r1.ports[1].v.size(); ++n) {
        err = std::max(err, std::abs(r1.ports[1].v[n] - r2.ports[0].v[n]));
        ref = std::max(ref, std::abs(r1.ports[1].v[n]));
    }
    REQUIRE(ref > 0);
    CHECK(err < 1e-9 * ref);
}

TEST_CASE("Recordings are bitwise identical for any worker count") {
    MeshPolicy pol;
    const Scene sc = build_single_element(ElementParams{}, true);
    pol = MeshPolicy::for_scene(sc, MeshMode::coarse);
    const YeeGrid g = generate_mesh(sc, pol);
    auto run = [&](int threads) {
        Simulation<float> sim(g, cfl_timestep(g, 0.99), CpmlSpec{}, threads);
        for (const GridPort &p : g.ports) sim.add_port(p, p.index == 1, Excitation{});
        sim.add_huygens(default_huygens_box(g, {28e9}));
        RunControl rc;
        rc.max_steps = 300;
        return sim.run(rc);
    };
    const Recordings a = run(1), b = run(3);
    for (std::size_t p = 0; p < a.ports.size(); ++p) {
        CHECK(a.ports[p].v == b.ports[p].v);
        CHECK(a.ports[p].i == b.ports[p].i);
    }
    const auto &fa = a.huygens->faces, &fb = b.huygens->faces;
    for (std::size_t f = 0; f < fa.size(); ++f) CHECK(fa[f].e1 == fb[f].e1);
}

TEST_CASE("Normal-incidence CPML reflection stays below -60 dB across 22-34 GHz") {
    // Plane wave in a 2x2-cell periodic column; the reflected wave is the difference
    // between the probe signal and that of a column long enough to keep the far end silent.
    const double dz = 0.1e-3;
    const BoundarySet b = {Boundary::periodic, Boundary::periodic, Boundary::periodic,
                           Boundary::periodic, Boundary::pec,      Boundary::cpml};
    const double dt = 0.99 * dz / (c0 * std::sqrt(3.0));
    auto probe_run = [&](int nz, long steps) {
        const YeeGrid g = make_vacuum_grid(
            {uniform_lines(0, 2 * dz, dz), uniform_lines(0, 2 * dz, dz), uniform_lines(0, nz * dz, dz)}, b, 10);
        Simulation<double> sim(g, dt);
        Excitation pulse;
        pulse.tau = 30e-12;
        pulse.t0 = 180e-12;
        sim.add_source({0, sheet_edges(g, 0, 20), [pulse](double t) { return pulse(t); }, 1.0 / dz});
        sim.add_probe({0, 0, 1, 60});
        sim.advance(steps);
        return sim.probe_data()[0];
    };
    const long steps = 9000;
    const std::vector<double> short_col = probe_run(100, steps), long_col = probe_run(2000, steps);
    std::vector<double> refl(steps), inc(steps);
    for (long n = 0; n < steps; ++n) {
        refl[n] = short_col[n] - long_col[n];
        inc[n] = long_col[n];
    }
    double worst = -1e9;
    for (double f = 22e9; f <= 34e9 + 1; f += 0.5e9)
        worst = std::max(worst, db20(std::abs(dft(refl, 0, dt, f)) / std::abs(dft(inc, 0, dt, f))));
    INFO("worst reflection " << worst << " dB");
    CHECK(worst < -60.0);
}

TEST_CASE("Raw recording dump has the documented header") {
    Recordings r;
    r.dt = 1e-13;
    r.steps = 2;
    r.ports.push_back({1, 50.0, {0.0, 1.0, 2.0}, {0.5, 1.5}});
    const std::string path = (std::filesystem::temp_directory_path() / "yeefield_raw_dump_test.bin").string();
    write_raw_recordings(path, r);
    std::ifstream is(path, std::ios::binary);
    char magic[8];
    is.read(magic, 8);
    CHECK(std::string(magic, 8) == "YFRAWREC");
    std::uint32_t version = 0, ports = 0;
    std::uint64_t steps = 0;
    double dt = 0;
    is.read(reinterpret_cast<char *>(&version), 4);
    is.read(reinterpret_cast<char *>(&ports), 4);
    is.read(reinterpret_cast<char *>(&steps), 8);
    is.read(reinterpret_cast<char *>(&dt), 8);
    CHECK(version == 1);
    CHECK(ports == 1);
    CHECK(steps == 2);
    CHECK(dt == 1e-13);
    std::vector<double> body(5);
    is.read(reinterpret_cast<char *>(body.data()), 40);
    CHECK(body == std::vector<double>{0.0, 1.0, 2.0, 0.5, 1.5});
    std::ifstream m(path + ".manifest");
    CHECK(m.good());
}
