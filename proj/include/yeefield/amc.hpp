// Copyright 2026 The yeefield Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef YEEFIELD_AMC_HPP
#define YEEFIELD_AMC_HPP

#include "constants.hpp"
#include "error.hpp"
#include "mesh.hpp"
#include "solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace yeefield {

/// Mushroom unit cell: square patch w on a grounded slab h, separated from its
/// neighbours by `gap` (period w + gap), with a centred via.
struct AmcCellParams {
    double w = 2.65e-3;
    double gap = 0.2e-3;
    double h = 2.5e-3;
    double eps_r = 3.5;
    double via_radius = 0.1e-3;

    double period() const { return w + gap; }
    double inductance() const { return mu0 * h; }
    double capacitance() const { return w * eps0 * (1 + eps_r) / pi * std::acosh((w + gap) / gap); }
    double resonance() const { return 1.0 / (2 * pi * std::sqrt(inductance() * capacitance())); }

    void check() const {
        if (!(gap > 0)) throw GeometryError("gap", "must be positive");
        if (!(w > gap)) throw GeometryError("w", "must exceed the gap");
        if (!(h > 0)) throw GeometryError("h", "must be positive");
        if (!(eps_r >= 1)) throw GeometryError("eps_r", "must be >= 1");
        if (!(via_radius > 0) || 2 * via_radius >= w) throw GeometryError("via_radius", "must fit inside the patch");
    }
};

/// Zs = jwL / (1 - w^2 LC); exactly at resonance the result is j*inf.
inline cplx surface_impedance(const AmcCellParams &p, double f) {
    const double w = 2 * pi * f, L = p.inductance(), C = p.capacitance();
    const double den = 1 - w * w * L * C;
    if (den == 0) return {0, std::numeric_limits<double>::infinity()};
    return {0, w * L / den};
}

/// Phase of (Zs - eta0)/(Zs + eta0) in (-180, 180] deg; infinite |Zs| gives 0.
inline double reflection_phase(cplx zs) {
    if (std::isinf(zs.real()) || std::isinf(zs.imag())) return 0.0;
    double ph = std::arg((zs - eta0) / (zs + eta0)) * 180 / pi;
    if (ph <= -180.0) ph += 360.0;
    return ph;
}

struct PhaseCurve {
    std::vector<double> freqs;      // Hz
    std::vector<double> phase_deg;  // wrapped to (-180, 180]
    std::string model;              // "analytic" or "fdtd"
};

inline PhaseCurve analytic_phase(const AmcCellParams &p, const std::vector<double> &freqs) {
    PhaseCurve c{freqs, {}, "analytic"};
    for (double f : freqs) c.phase_deg.push_back(reflection_phase(surface_impedance(p, f)));
    return c;
}

/// Interval around the downward 0 deg crossing where |phase| <= 90, edges interpolated;
/// edges clip to the sampled range when the band runs past it.
inline std::optional<std::array<double, 2>> amc_band(const PhaseCurve &c) {
    const auto &f = c.freqs;
    const auto &p = c.phase_deg;
    if (f.size() < 2 || f.size() != p.size()) throw ConfigError("phase curve needs at least two samples");
    auto lerp = [&](std::size_t a, std::size_t b, double target) {
        return f[a] + (target - p[a]) / (p[b] - p[a]) * (f[b] - f[a]);
    };
    for (std::size_t i = 0; i + 1 < f.size(); ++i) {
        if (!(p[i] > 0 && p[i + 1] <= 0 && p[i] - p[i + 1] < 180)) continue;
        std::size_t a = i;
        while (a > 0 && p[a - 1] <= 90 && p[a - 1] >= p[a]) --a;
        std::size_t b = i + 1;
        while (b + 1 < f.size() && p[b + 1] >= -90 && p[b + 1] <= p[b]) ++b;
        const double lo = (a > 0 && p[a - 1] > 90) ? lerp(a - 1, a, 90.0) : f[a];
        const double hi = (b + 1 < f.size() && p[b + 1] < -90) ? lerp(b, b + 1, -90.0) : f[b];
        return std::array<double, 2>{lo, hi};
    }
    return std::nullopt;
}

inline std::optional<std::array<double, 2>> amc_band(const AmcCellParams &p, const std::vector<double> &freqs) {
    return amc_band(analytic_phase(p, freqs));
}

inline void write_phase_csv(const std::vector<PhaseCurve> &curves, std::ostream &os) {
    os << "freq_ghz,phase_deg,model\n";
    char buf[96];
    for (const PhaseCurve &c : curves)
        for (std::size_t n = 0; n < c.freqs.size(); ++n) {
            std::snprintf(buf, sizeof buf, "%.9g,%.9g,", c.freqs[n] / 1e9, c.phase_deg[n] == 0 ? 0.0 : c.phase_deg[n]);
            os << buf << c.model << '\n';
        }
}

// ------------------------------------------------------------------------------------------------
// Periodic-cell FDTD
// ------------------------------------------------------------------------------------------------

enum class AmcCellKind { pec_sheet, grounded_slab, mushroom };

struct AmcFdtdOptions {
    double lateral_cell = 0.2e-3;  // target lateral cell (mushroom only; uniform cases use 2x2)
    double dz = 0.1e-3;
    double probe_height = 5e-3;    // above the reference plane
    double source_height = 7e-3;
    double top_height = 9e-3;
    double f0 = 9e9;
    double tau = 60e-12;
    double max_time = 40e-9;
    double threshold = 1e-7;       // trailing-window energy of the probe signal vs its peak
    int threads = 1;
};

namespace detail {

// Lines on [lo, hi] through every breakpoint, each interval split evenly at <= cell.
inline std::vector<double> lines_through(std::vector<double> br, double cell) {
    std::sort(br.begin(), br.end());
    std::vector<double> out = {br.front()};
    for (std::size_t n = 1; n < br.size(); ++n) {
        const double a = br[n - 1], b = br[n];
        if (b - a < 1e-12) continue;
        const int m = std::max(1, static_cast<int>(std::ceil((b - a) / cell - 1e-9)));
        for (int k = 1; k <= m; ++k) out.push_back(k == m ? b : a + (b - a) * k / m);
    }
    return out;
}

struct CellRun {
    std::vector<double> probe;  // Ex at the probe, one sample per step at n dt
    double dt = 0;
};

inline CellRun run_cell(const YeeGrid &g, std::size_t source_k, std::size_t probe_k, const AmcFdtdOptions &o) {
    const double dt = cfl_timestep(g, 0.99);
    Simulation<double> sim(g, dt, CpmlSpec{}, o.threads);
    CurrentSource s;
    s.comp = 0;
    s.edges = sheet_edges(g, 0, static_cast<int>(source_k));
    Excitation e;
    e.f0 = o.f0;
    e.tau = o.tau;
    e.t0 = 4.5 * o.tau;
    s.waveform = e;
    s.scale = 1.0 / o.dz;  // unit surface current density
    sim.add_source(s);
    const int ci = g.cells(0) / 2, cj = g.cells(1) / 2;
    sim.add_probe({0, ci == g.cells(0) ? 0 : ci, cj, static_cast<int>(probe_k)});
    const long max_steps = static_cast<long>(o.max_time / dt);
    const int window = 2000;
    double peak = 0;
    while (sim.step_index() < max_steps) {
        sim.advance(200, 200);
        const auto &p = sim.probe_data()[0];
        if (p.size() < static_cast<std::size_t>(window)) continue;
        double w = 0;
        for (std::size_t n = p.size() - window; n < p.size(); ++n) w += p[n] * p[n];
        peak = std::max(peak, w);
        if (sim.time() > e.end_time() && w < o.threshold * peak) break;
    }
    return {sim.probe_data()[0], dt};
}

inline cplx dft_samples(const std::vector<double> &x, double dt, double f) {
    cplx s = 0;
    for (std::size_t n = 0; n < x.size(); ++n) s += x[n] * std::polar(1.0, -2 * pi * f * n * dt);
    return s;
}

} // namespace detail

/// Normal-incidence reflection phase of a periodic cell, referenced to the patch plane
/// z = h. The reflected field is the probe signal minus an incident-only run; the path
/// from probe to reference plane is removed with the grid's own 1-D dispersion relation.
inline PhaseCurve reflection_phase_fdtd(AmcCellKind kind, const AmcCellParams &p, const std::vector<double> &freqs,
                                        const AmcFdtdOptions &o = {}) {
    p.check();
    const bool uniform = kind != AmcCellKind::mushroom;
    const double P = p.period();
    std::vector<double> lat;
    if (uniform) lat = {-P / 2, 0.0, P / 2};
    else lat = detail::lines_through({-P / 2, -p.w / 2, 0.0, p.w / 2, P / 2}, o.lateral_cell);
    const std::vector<double> zl = uniform_lines(0.0, p.h + o.top_height, o.dz);
    const double zref = p.h;
    auto kline = [&](const YeeGrid &g, double z) { return static_cast<std::size_t>(g.nearest_line(2, z)); };

    // structure run: PEC ground, CPML above
    YeeGrid gs = make_vacuum_grid({lat, lat, zl}, {Boundary::periodic, Boundary::periodic, Boundary::periodic,
                                                   Boundary::periodic, Boundary::pec, Boundary::cpml},
                                  CpmlSpec{}.thickness);
    const std::size_t kref = kline(gs, zref);
    if (kind != AmcCellKind::pec_sheet) {
        std::vector<EdgeMaterial> cm(static_cast<std::size_t>(gs.cells(0)) * gs.cells(1) * gs.cells(2),
                                     EdgeMaterial{1.0, 0.0, false});
        for (int i = 0; i < gs.cells(0); ++i)
            for (int j = 0; j < gs.cells(1); ++j)
                for (int k = 0; k < static_cast<int>(kref); ++k)
                    cm[(static_cast<std::size_t>(i) * gs.cells(1) + j) * gs.cells(2) + k] = {p.eps_r, 0.0, false};
        std::map<EdgeMaterial, std::uint16_t> lookup;
        gs.table.clear();
        detail::assign_dielectric_edges(gs, cm, lookup);
        gs.table.push_back({1.0, 0.0, true});
    }
    const auto pec = static_cast<std::uint16_t>(kind == AmcCellKind::pec_sheet ? 1 : gs.table.size() - 1);
    if (kind == AmcCellKind::pec_sheet) {
        for (int c = 0; c < 2; ++c)
            for (std::size_t idx : sheet_edges(gs, c, static_cast<int>(kref))) gs.edge_material[c][idx] = pec;
    } else if (kind == AmcCellKind::mushroom) {
        const int i0 = gs.nearest_line(0, -p.w / 2), i1 = gs.nearest_line(0, p.w / 2);
        const int j0 = gs.nearest_line(1, -p.w / 2), j1 = gs.nearest_line(1, p.w / 2);
        for (int i = i0; i <= i1; ++i)
            for (int j = j0; j <= j1; ++j) {
                if (i < i1) gs.edge_material[0][gs.index(i, j, static_cast<int>(kref))] = pec;
                if (j < j1) gs.edge_material[1][gs.index(i, j, static_cast<int>(kref))] = pec;
            }
        const int ic = gs.nearest_line(0, 0.0), jc = gs.nearest_line(1, 0.0);
        for (int k = 0; k < static_cast<int>(kref); ++k) gs.edge_material[2][gs.index(ic, jc, k)] = pec;
    }
    const auto rs = detail::run_cell(gs, kline(gs, zref + o.source_height), kline(gs, zref + o.probe_height), o);

    // incident-only run: vacuum with absorbing layers on both z faces
    const YeeGrid gi = make_vacuum_grid({lat, lat, zl}, {Boundary::periodic, Boundary::periodic, Boundary::periodic,
                                                         Boundary::periodic, Boundary::cpml, Boundary::cpml},
                                        CpmlSpec{}.thickness);
    const auto ri = detail::run_cell(gi, kline(gi, zref + o.source_height), kline(gi, zref + o.probe_height), o);
    if (rs.dt != ri.dt) throw Error("reflection-phase runs disagree on the timestep");

    const double zp = gs.lines[2][kline(gs, zref + o.probe_height)] - gs.lines[2][kref];
    PhaseCurve c{freqs, {}, "fdtd"};
    for (double f : freqs) {
        const double w = 2 * pi * f;
        const double kn = 2 / o.dz * std::asin(o.dz / (c0 * rs.dt) * std::sin(w * rs.dt / 2));
        const cplx inc = detail::dft_samples(ri.probe, ri.dt, f);
        const cplx tot = detail::dft_samples(rs.probe, rs.dt, f);
        const cplx gam = (tot - inc) / inc * std::polar(1.0, 2 * kn * zp);
        double ph = std::arg(gam) * 180 / pi;
        if (ph <= -180.0) ph += 360.0;
        c.phase_deg.push_back(ph);
    }
    return c;
}

/// Closed-form phase of a grounded slab seen from its top face: Zin = j eta_d tan(k_d h).
inline double slab_phase(const AmcCellParams &p, double f) {
    const double kd = 2 * pi * f / c0 * std::sqrt(p.eps_r);
    return reflection_phase(cplx(0, eta0 / std::sqrt(p.eps_r) * std::tan(kd * p.h)));
}

} // namespace yeefield

#endif
