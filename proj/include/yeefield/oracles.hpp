// Copyright 2026 The yeefield Authors
// SPDX-License-Identifier: Apache-2.0

// Small reference experiments with known answers: Hertzian dipole, closed cavity,
// absorbing-layer reflection and a rectangular probe-fed patch.

#ifndef YEEFIELD_ORACLES_HPP
#define YEEFIELD_ORACLES_HPP

#include "farfield.hpp"
#include "mesh.hpp"
#include "network.hpp"
#include "scene.hpp"
#include "solver.hpp"

#include <cmath>
#include <vector>

namespace yeefield::oracles {

inline constexpr BoundarySet all_cpml = {Boundary::cpml, Boundary::cpml, Boundary::cpml,
                                         Boundary::cpml, Boundary::cpml, Boundary::cpml};

struct DipoleResult {
    double directivity_dbi = 0;
    double null_depth_db = 0;      // pattern at theta = 0 relative to the peak
    double flux_to_integral = 0;   // Huygens Poynting flux / pattern integral
};

/// Single z-directed current element in free space, far field at 28 GHz via the full
/// six-face Huygens box. The exact directivity is 1.5 (1.761 dBi).
inline DipoleResult hertzian_dipole(double cell = 0.5e-3, int n = 50, int margin = 3, int threads = 1) {
    const auto lines = uniform_lines(0, n * cell, cell);
    const YeeGrid g = make_vacuum_grid({lines, lines, lines}, all_cpml, CpmlSpec{}.thickness);
    const double dt = cfl_timestep(g, 0.99);
    Simulation<float> sim(g, dt, CpmlSpec{}, threads);
    const int c = g.cells(0) / 2;
    const Excitation e;
    sim.add_source({2, {g.index(c, c, c)}, [e](double t) { return e(t); }, 1e6});
    HuygensSpec h;
    const int lo = g.pml[0][0] + margin, hi = g.cells(0) - g.pml[0][1] - margin;
    h.box = {lo, hi, lo, hi, lo, hi};
    h.ground_image = false;
    h.freqs = {28e9};
    sim.add_huygens(h);
    // source duration plus three transits of the domain
    sim.advance(static_cast<long>((e.end_time() + 3 * n * cell / c0) / dt));
    const FarField ff = ntff(*sim.huygens(), 28e9, AngleGrid{}, threads);
    const double p = integrate_power(ff);
    const auto d = gain_pattern(ff, p);
    const Direction pk = pattern_peak(ff, d);
    return {pk.value, d[ff.at(0, 0)] - pk.value, ff.radiated_power / p};
}

/// Largest relative drift of the discrete field energy over `steps` steps after a pulse
/// has turned off inside a closed lossless PEC box.
inline double closed_box_energy_drift(int n = 16, double cell = 0.5e-3, int steps = 1000) {
    const auto lines = uniform_lines(0, n * cell, cell);
    const BoundarySet pec = {Boundary::pec, Boundary::pec, Boundary::pec, Boundary::pec, Boundary::pec, Boundary::pec};
    const YeeGrid g = make_vacuum_grid({lines, lines, lines}, pec, CpmlSpec{}.thickness);
    Simulation<double> sim(g, cfl_timestep(g, 0.99));
    const Excitation pulse;
    sim.add_source({2, {g.index(n / 2, n / 2, n / 2)}, [pulse](double t) { return pulse(t); }, 1e6});
    sim.advance(static_cast<long>(pulse.end_time() / sim.dt()) + 1);
    const double w0 = sim.field_energy();
    double drift = 0;
    for (int s = 0; s < steps; ++s) {
        sim.step();
        drift = std::max(drift, std::abs(sim.field_energy() - w0) / w0);
    }
    return drift;
}

/// Worst normal-incidence reflection (dB) of a 10-cell CPML over [f_lo, f_hi]. A plane wave
/// in a 2x2-cell periodic column is recorded in a short column ending in the CPML and in a
/// column long enough that nothing returns in time; their difference is the reflection.
inline double cpml_reflection_db(double f_lo = 22e9, double f_hi = 34e9, double df = 0.5e9) {
    const double dz = 0.1e-3;
    const BoundarySet b = {Boundary::periodic, Boundary::periodic, Boundary::periodic,
                           Boundary::periodic, Boundary::pec,      Boundary::cpml};
    const double dt = 0.99 * dz / (c0 * std::sqrt(3.0));
    const long steps = 9000;
    auto probe_run = [&](int nz) {
        const YeeGrid g = make_vacuum_grid(
            {uniform_lines(0, 2 * dz, dz), uniform_lines(0, 2 * dz, dz), uniform_lines(0, nz * dz, dz)}, b,
            CpmlSpec{}.thickness);
        Simulation<double> sim(g, dt);
        Excitation pulse;
        pulse.tau = 30e-12;
        pulse.t0 = 180e-12;
        sim.add_source({0, sheet_edges(g, 0, 20), [pulse](double t) { return pulse(t); }, 1.0 / dz});
        sim.add_probe({0, 0, 1, 60});
        sim.advance(steps);
        return sim.probe_data()[0];
    };
    const auto short_col = probe_run(100), long_col = probe_run(2000);
    std::vector<double> refl(steps);
    for (long n = 0; n < steps; ++n) refl[n] = short_col[n] - long_col[n];
    double worst = -1e9;
    for (double f = f_lo; f <= f_hi * (1 + 1e-12); f += df)
        worst = std::max(worst, db20(std::abs(detail::dft_at(refl, 0, dt, f)) / std::abs(detail::dft_at(long_col, 0, dt, f))));
    return worst;
}

// ------------------------------------------------------------------------------------------------
// Rectangular patch
// ------------------------------------------------------------------------------------------------

/// Probe-fed rectangular patch resonating along x (length L), width W, on a grounded slab.
struct PatchSpec {
    double L = 3.0e-3;
    double W = 4.0e-3;
    double h = 0.254e-3;
    double eps_r = 3.5;
    double feed_offset = 0.75e-3;   // probe at x = -feed_offset from the patch centre
    double substrate_side = 8e-3;
};

/// Hammerstad effective permittivity and open-end extension; f = c / (2 (L + 2 dL) sqrt(eps_eff)).
inline double eps_eff(const PatchSpec &p) {
    return (p.eps_r + 1) / 2 + (p.eps_r - 1) / 2 / std::sqrt(1 + 12 * p.h / p.W);
}

inline double length_extension(const PatchSpec &p) {
    const double e = eps_eff(p), u = p.W / p.h;
    return 0.412 * p.h * (e + 0.3) * (u + 0.264) / ((e - 0.258) * (u + 0.8));
}

inline double cavity_resonance(const PatchSpec &p) {
    return c0 / (2 * (p.L + 2 * length_extension(p)) * std::sqrt(eps_eff(p)));
}

inline Scene build_rect_patch(const PatchSpec &p) {
    Scene sc;
    sc.name = "rect_patch";
    sc.f0 = 28e9;
    sc.materials = {{"substrate", MaterialKind::dielectric, p.eps_r, 0.0}, Material::pec()};
    const double a = p.substrate_side / 2;
    sc.primitives = {{Box{{-a, -a, 0.0}, {a, a, p.h}}, 0, 0, "substrate"},
                     {Plate{-a, -a, a, a, 0.0}, 1, 10, "ground"},
                     {Plate{-p.L / 2, -p.W / 2, p.L / 2, p.W / 2, p.h}, 1, 20, "patch"}};
    sc.ports = {{1, -p.feed_offset, 0.0, 0.0, p.h, Polarization::x, 50.0}};
    sc.footprint = {-a, -a, a, a};
    const double margin = std::ceil(wavelength(sc.f0) / 4 / 1e-4) * 1e-4;
    sc.bounds = {{-a - margin, -a - margin, 0.0}, {a + margin, a + margin, p.h + margin}};
    return sc;
}

struct PatchResult {
    double resonance = 0;   // Hz, peak of Re(Zin)
    double oracle = 0;      // Hz
    long steps = 0;
};

/// Resonance of the patch as the frequency of maximum input resistance (parabolic refinement).
inline PatchResult rect_patch_resonance(const PatchSpec &p, MeshMode mode = MeshMode::coarse, int threads = 1) {
    const Scene sc = build_rect_patch(p);
    const YeeGrid g = generate_mesh(sc, MeshPolicy::for_scene(sc, mode));
    RunControl rc;
    rc.threshold = 1e-6;
    rc.max_steps = 200000;
    Excitation exc;
    exc.f0 = 26e9;
    RunOptions opt;
    opt.threads = threads;
    const Recordings r = run_excitation<float>(g, 1, exc, rc, opt);
    std::vector<double> f;
    for (double x = 20e9; x <= 32e9 + 1; x += 0.02e9) f.push_back(x);
    const SMatrix S = extract_sparams({r}, f);
    std::vector<double> rin;
    for (const auto &s : S.s) rin.push_back((S.z0 * (1.0 + s(0, 0)) / (1.0 - s(0, 0))).real());
    std::size_t k = static_cast<std::size_t>(std::max_element(rin.begin(), rin.end()) - rin.begin());
    double fr = f[k];
    if (k > 0 && k + 1 < f.size()) {
        const double a = rin[k - 1], b = rin[k], c = rin[k + 1];
        const double den = a - 2 * b + c;
        if (den != 0) fr += 0.5 * (a - c) / den * (f[1] - f[0]);
    }
    return {fr, cavity_resonance(p), r.steps};
}

} // namespace yeefield::oracles

#endif
