// Copyright 2026 The yeefield Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef YEEFIELD_SOLVER_HPP
#define YEEFIELD_SOLVER_HPP

#include "constants.hpp"
#include "error.hpp"
#include "huygens.hpp"
#include "mesh.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace yeefield {

struct CpmlSpec {
    int thickness = 10;
    double order = 3.0;
    double sigma_scale = 1.0;  // relative to 0.8 (m + 1) / (eta0 * cell)
    double kappa_max = 5.0;
    double alpha_max = 0.05;   // S/m

    void check() const {
        if (thickness < 4) throw ConfigError("CPML thickness must be at least 4 cells");
        if (order < 1) throw ConfigError("CPML polynomial order must be >= 1");
        if (kappa_max < 1 || sigma_scale < 0 || alpha_max < 0) throw ConfigError("bad CPML profile parameters");
    }
};

/// Gaussian-modulated sinusoid v(t) = A exp(-((t - t0)/tau)^2) sin(2 pi f0 (t - t0)).
/// With f0 = 0 it degenerates to a plain Gaussian pulse (cosine carrier).
struct Excitation {
    double f0 = 28e9;
    double tau = 48e-12;   // keeps 24.25 and 29.5 GHz above -3 dB of the peak
    double t0 = 4.5 * 48e-12;
    double amplitude = 1.0;  // V
    double resistance = 50.0;

    double operator()(double t) const {
        const double x = (t - t0) / tau;
        if (std::abs(x) > 6.0) return 0.0;
        const double env = amplitude * std::exp(-x * x);
        return f0 > 0 ? env * std::sin(2 * pi * f0 * (t - t0)) : env;
    }
    /// Time after which the waveform is numerically zero.
    double end_time() const { return t0 + 6.0 * tau; }

    /// Analytic spectrum magnitude relative to its peak, in dB.
    double spectrum_db(double f) const {
        auto g = [&](double df) { return std::exp(-std::pow(pi * tau * df, 2)); };
        auto mag = [&](double x) { return f0 > 0 ? std::abs(g(x - f0) - g(x + f0)) : g(x); };
        return db20(mag(f) / mag(f0));
    }
};

struct RunControl {
    long max_steps = 60000;
    double threshold = 1e-5;   // trailing-window port energy relative to its peak
    int window = 1000;
    int nan_check_interval = 50;
};

/// Point observer; comp 0..2 are Ex..Ez, 3..5 are Hx..Hz.
struct FieldProbe {
    int comp = 0;
    int i = 0, j = 0, k = 0;
};

/// Soft current source: E -= Cb * scale * waveform(t) on every listed edge.
/// `scale` converts the waveform into a volume current density (A/m^2).
struct CurrentSource {
    int comp = 0;
    std::vector<std::size_t> edges;
    std::function<double(double)> waveform;
    double scale = 1.0;
};

/// Closed box of node indices on which tangential fields are Fourier-transformed.
struct HuygensSpec {
    std::array<int, 6> box{};  // i0, i1, j0, j1, k0, k1
    bool ground_image = true;  // omit the bottom face and mirror in the ground plane
    std::vector<double> freqs;
    int stride = 0;            // 0 picks >= 20 samples per period of the highest frequency
};

struct PortRecord {
    int index = 0;
    double resistance = 50.0;
    std::vector<double> v;  // at n dt, n = 0..steps
    std::vector<double> i;  // at (n + 1/2) dt, n = 0..steps-1
};

struct Recordings {
    double dt = 0.0;
    long steps = 0;
    int excited = 0;  // port index, 0 if none
    bool converged = false;
    Excitation excitation;
    std::vector<PortRecord> ports;
    std::vector<std::vector<double>> probes;
    std::optional<HuygensRecord> huygens;
};

/// Default Huygens box: `margin` cells inside the absorbing layers, bottom on the ground.
inline HuygensSpec default_huygens_box(const YeeGrid &g, std::vector<double> freqs, int margin = 3) {
    HuygensSpec h;
    h.box = {g.pml[0][0] + margin, g.cells(0) - g.pml[0][1] - margin, g.pml[1][0] + margin,
             g.cells(1) - g.pml[1][1] - margin, 0, g.cells(2) - g.pml[2][1] - margin};
    h.ground_image = g.boundary[4] == Boundary::pec;
    h.freqs = std::move(freqs);
    return h;
}

/// All edges of component `comp` lying on the node plane k (z = lines[2][k]).
inline std::vector<std::size_t> sheet_edges(const YeeGrid &g, int comp, int k) {
    std::vector<std::size_t> out;
    const int ni = comp == 0 ? g.cells(0) : g.nodes(0), nj = comp == 1 ? g.cells(1) : g.nodes(1);
    for (int i = 0; i < ni; ++i)
        for (int j = 0; j < nj; ++j) out.push_back(g.index(i, j, k));
    return out;
}

template <class Real = float>
class Simulation {
public:
    Simulation(const YeeGrid &grid, double dt, const CpmlSpec &cpml = {}, int threads = 1)
        : g_(grid), dt_(dt), pool_(threads) {
        cpml.check();
        for (int a = 0; a < 3; ++a)
            for (int s = 0; s < 2; ++s)
                if (g_.pml[a][s] != 0 && g_.pml[a][s] != cpml.thickness)
                    throw ConfigError("grid absorbing padding does not match the CPML thickness");
        // no upper bound on dt here: Courant factors above 1 are allowed for stability studies
        if (!(dt > 0)) throw ConfigError("timestep must be positive");
        n_ = {g_.cells(0), g_.cells(1), g_.cells(2)};
        stride_ = {static_cast<std::size_t>(g_.nodes(1)) * g_.nodes(2), static_cast<std::size_t>(g_.nodes(2)), 1};
        const std::size_t sz = g_.node_count();
        for (int c = 0; c < 3; ++c) {
            e_[c].assign(sz, Real(0));
            h_[c].assign(sz, Real(0));
            ca_[c].assign(sz, Real(0));
            cb_[c].assign(sz, Real(0));
            periodic_[c] = g_.boundary[2 * c] == Boundary::periodic;
        }
        build_spacing();
        build_materials();
        ch_ = static_cast<Real>(dt_ / mu0);
        build_cpml(cpml);
        build_folded();
    }

    const YeeGrid &grid() const { return g_; }
    double dt() const { return dt_; }
    long step_index() const { return step_; }
    double time() const { return step_ * dt_; }

    std::vector<Real> &e(int c) { return e_[c]; }
    std::vector<Real> &h(int c) { return h_[c]; }
    const std::vector<Real> &e(int c) const { return e_[c]; }
    const std::vector<Real> &h(int c) const { return h_[c]; }

    /// Stamps a lumped port; `excitation` drives it when `active`, otherwise it is a
    /// passive termination of the same resistance.
    void add_port(const GridPort &gp, bool active, const Excitation &exc) {
        if (gp.i < 0 || gp.i > n_[0] || gp.j < 0 || gp.j > n_[1] || gp.k_gap < 0 || gp.k_gap >= n_[2])
            throw ConfigError("port " + std::to_string(gp.index) + " lies outside the grid");
        if (g_.is_pec(2, gp.i, gp.j, gp.k_gap))
            throw ConfigError("port " + std::to_string(gp.index) + " gap edge is shorted by a conductor");
        if (!(gp.resistance > 0)) throw ConfigError("port resistance must be positive");
        Port p;
        p.gp = gp;
        p.gap = g_.index(gp.i, gp.j, gp.k_gap);
        p.dz = g_.cell(2, gp.k_gap);
        p.area = dual(0, gp.i) * dual(1, gp.j);
        p.active = active;
        p.exc = exc;
        p.k_loop = gp.k_top > gp.k_gap + 1 ? gp.k_gap + 1 : gp.k_gap;
        const EdgeMaterial &m = g_.table[g_.edge_material[2][p.gap]];
        const double eps = eps0 * m.eps_r, s = m.sigma * dt_ / (2 * eps);
        const double beta = dt_ * p.dz / (2 * gp.resistance * p.area * eps);
        ca_[2][p.gap] = static_cast<Real>((1 - s - beta) / (1 + s + beta));
        p.cb = (dt_ / eps) / (1 + s + beta);
        cb_[2][p.gap] = static_cast<Real>(p.cb);
        refresh_e(2, p.gap);
        ports_.push_back(p);
    }

    void add_source(CurrentSource src) { sources_.push_back(std::move(src)); }
    void add_probe(const FieldProbe &p) {
        probes_.push_back(p);
        probe_data_.emplace_back();
    }

    void add_huygens(const HuygensSpec &spec) {
        HuygensSpec s = spec;
        const auto &b = s.box;
        if (b[0] < 1 || b[1] >= n_[0] || b[2] < 1 || b[3] >= n_[1] || b[4] < 0 || b[5] >= n_[2] || b[0] >= b[1] ||
            b[2] >= b[3] || b[4] >= b[5])
            throw ConfigError("Huygens box outside the grid interior");
        if (!s.ground_image && b[4] < 1) throw ConfigError("free-space Huygens box needs a bottom face above z-lo");
        double fmax = 0;
        for (double f : s.freqs) fmax = std::max(fmax, f);
        if (s.freqs.empty() || !(fmax > 0)) throw ConfigError("Huygens box needs frequencies");
        if (s.stride <= 0) s.stride = std::max(1, static_cast<int>(1.0 / (20.0 * fmax * dt_)));
        hspec_ = s;
        HuygensRecord rec;
        rec.freqs = s.freqs;
        rec.ground_image = s.ground_image;
        rec.ground_z = g_.lines[2][0];
        const int lo[3] = {b[0], b[2], b[4]}, hi[3] = {b[1], b[3], b[5]};
        for (int a = 0; a < 3; ++a)
            for (int side = 0; side < 2; ++side) {
                if (a == 2 && side == 0 && s.ground_image) continue;
                HuygensFace f;
                f.axis = a;
                f.normal = side ? +1 : -1;
                f.position = g_.lines[a][side ? hi[a] : lo[a]];
                const int t1 = (a + 1) % 3, t2 = (a + 2) % 3;
                for (int p = lo[t1]; p < hi[t1]; ++p) {
                    f.u.push_back(0.5 * (g_.lines[t1][p] + g_.lines[t1][p + 1]));
                    f.du.push_back(g_.cell(t1, p));
                }
                for (int q = lo[t2]; q < hi[t2]; ++q) {
                    f.v.push_back(0.5 * (g_.lines[t2][q] + g_.lines[t2][q + 1]));
                    f.dv.push_back(g_.cell(t2, q));
                }
                const std::vector<cplx> zero(f.cells());
                f.e1.assign(s.freqs.size(), zero);
                f.e2 = f.h1 = f.h2 = f.e1;
                rec.faces.push_back(std::move(f));
            }
        huygens_ = std::move(rec);
    }

    /// One leapfrog step: H to n+1/2, then E to n+1.
    void step() {
        const FlushDenormals ftz;
        const double th = (step_ + 0.5) * dt_;
        pool_.for_range(0, n_[0], [&](int b, int e) {
            update_h<0>(b, e);
            update_h<1>(b, e);
            update_h<2>(b, e);
        });
        cpml_h();
        periodic_h();
        for (Port &p : ports_) p.i.push_back(loop_current(p));
        if (huygens_ && step_ % hspec_.stride == 0) accumulate_huygens(false, th);

        pool_.for_range(0, n_[0] + 1, [&](int b, int e) {
            update_e<0>(b, e);
            update_e<1>(b, e);
            update_e<2>(b, e);
        });
        cpml_e();
        for (Port &p : ports_)
            if (p.active) {
                const double vs = p.exc(th);
                e_[2][p.gap] -= static_cast<Real>(p.cb * vs / (p.gp.resistance * p.area));
            }
        for (const CurrentSource &s : sources_) {
            const double j = s.scale * s.waveform(th);
            if (j == 0.0) continue;
            for (std::size_t idx : s.edges) e_[s.comp][idx] -= cb_[s.comp][idx] * static_cast<Real>(j);
        }
        periodic_e();
        ++step_;
        record_e();
        if (huygens_ && (step_ - 1) % hspec_.stride == 0) accumulate_huygens(true, step_ * dt_);
    }

    /// Only the H half-step (used to close the leapfrog for time reversal and energy).
    void half_step_h() {
        const FlushDenormals ftz;
        pool_.for_range(0, n_[0], [&](int b, int e) {
            update_h<0>(b, e);
            update_h<1>(b, e);
            update_h<2>(b, e);
        });
        cpml_h();
        periodic_h();
    }

    /// Throws DivergenceError when any field value is NaN or infinite.
    void check_finite() const {
        for (int c = 0; c < 3; ++c)
            for (const auto *arr : {&e_[c], &h_[c]}) {
                double s = 0;
                for (Real x : *arr) s += std::abs(static_cast<double>(x));
                if (!std::isfinite(s)) throw DivergenceError(step_);
            }
    }

    /// Discrete energy 1/2 sum(eps E^2 dV) + 1/2 sum(mu H^(n-1/2) H^(n+1/2) dV); this is the exact
    /// invariant of the leapfrog scheme in a closed lossless box. H^(n+1/2) is computed on the side.
    double field_energy() const {
        double we = 0, wh = 0;
        for (int c = 0; c < 3; ++c) {
            const int a1 = (c + 1) % 3, a2 = (c + 2) % 3;
            for (int i = 0; i <= n_[0]; ++i)
                for (int j = 0; j <= n_[1]; ++j)
                    for (int k = 0; k <= n_[2]; ++k) {
                        const int n[3] = {i, j, k};
                        const std::size_t idx = g_.index(i, j, k);
                        if (n[c] < n_[c]) {
                            const EdgeMaterial &m = g_.table[g_.edge_material[c][idx]];
                            const double v = g_.cell(c, n[c]) * dual(a1, n[a1]) * dual(a2, n[a2]);
                            const double x = e_[c][idx];
                            we += 0.5 * eps0 * m.eps_r * x * x * v;
                        }
                        if (n[a1] < n_[a1] && n[a2] < n_[a2]) {
                            const double v = dual(c, n[c]) * g_.cell(a1, n[a1]) * g_.cell(a2, n[a2]);
                            const double curl = (e_at(a2, n, a1, 1) - e_at(a2, n, a1, 0)) / g_.cell(a1, n[a1]) -
                                                (e_at(a1, n, a2, 1) - e_at(a1, n, a2, 0)) / g_.cell(a2, n[a2]);
                            const double hn = h_[c][idx];
                            const double hp = hn - static_cast<double>(ch_) * curl;
                            wh += 0.5 * mu0 * hn * hp * v;
                        }
                    }
        }
        return we + wh;
    }

    /// Voltage across port n's gap at the current step.
    double port_voltage(std::size_t n) const { return -static_cast<double>(e_[2][ports_[n].gap]) * ports_[n].dz; }

    /// Runs until the trailing-window port energy decays below the threshold or max_steps.
    Recordings run(const RunControl &rc) {
        if (rc.window < 1 || rc.max_steps < 1) throw ConfigError("bad run control");
        Recordings r;
        r.dt = dt_;
        for (const Port &p : ports_)
            if (p.active) {
                r.excited = p.gp.index;
                r.excitation = p.exc;
            }
        for (Port &p : ports_) p.v.push_back(port_voltage(&p - ports_.data()));
        std::vector<double> energy;
        double peak = 0;
        double source_end = 0;
        for (const Port &p : ports_)
            if (p.active) source_end = std::max(source_end, p.exc.end_time());
        while (step_ < rc.max_steps) {
            step();
            if (rc.nan_check_interval > 0 && step_ % rc.nan_check_interval == 0) check_finite();
            double w = 0;
            for (const Port &p : ports_) {
                const double v = p.v.back(), i = p.i.back() * p.gp.resistance;
                w += v * v + i * i;
            }
            energy.push_back(w);
            if (energy.size() >= static_cast<std::size_t>(rc.window) && step_ % 100 == 0) {
                double win = 0;
                for (std::size_t n = energy.size() - rc.window; n < energy.size(); ++n) win += energy[n];
                peak = std::max(peak, win);
                if (time() > source_end && peak > 0 && win < rc.threshold * peak) {
                    r.converged = true;
                    break;
                }
            }
        }
        if (ports_.empty() && !sources_.empty()) r.converged = true;  // fixed-length source runs
        r.steps = step_;
        for (const Port &p : ports_) r.ports.push_back({p.gp.index, p.gp.resistance, p.v, p.i});
        r.probes = probe_data_;
        if (huygens_) r.huygens = huygens_;
        return r;
    }

    /// Steps without convergence control (probes and Huygens still record).
    void advance(long steps, int nan_check_interval = 50) {
        for (long n = 0; n < steps; ++n) {
            step();
            if (nan_check_interval > 0 && step_ % nan_check_interval == 0) check_finite();
        }
    }

    const std::vector<std::vector<double>> &probe_data() const { return probe_data_; }
    const std::optional<HuygensRecord> &huygens() const { return huygens_; }

private:
    struct Port {
        GridPort gp;
        std::size_t gap = 0;
        double dz = 0, area = 0, cb = 0;
        bool active = false;
        Excitation exc;
        int k_loop = 0;
        std::vector<double> v, i;
    };

    // dual spacing around node n on axis a (half cells at non-periodic ends)
    double dual(int a, int n) const {
        const int N = n_[a];
        double lo = n > 0 ? g_.cell(a, n - 1) : (periodic_[a] ? g_.cell(a, N - 1) : 0.0);
        double hi = n < N ? g_.cell(a, n) : (periodic_[a] ? g_.cell(a, 0) : 0.0);
        return 0.5 * (lo + hi);
    }

    double e_at(int comp, const int *n, int axis, int off) const {
        int m[3] = {n[0], n[1], n[2]};
        m[axis] += off;
        return e_[comp][g_.index(m[0], m[1], m[2])];
    }

    void build_spacing() {
        for (int a = 0; a < 3; ++a) {
            const int N = n_[a];
            idd_[a].assign(N + 1, 0.0);
            id_[a].assign(N + 1, 0.0);
            for (int n = 0; n <= N; ++n) {
                const double d = dual(a, n);
                idd_[a][n] = d > 0 ? 1.0 / d : 0.0;
                if (n < N) id_[a][n] = 1.0 / g_.cell(a, n);
            }
        }
    }

    void build_materials() {
        std::vector<std::array<Real, 2>> coef(g_.table.size());
        for (std::size_t m = 0; m < g_.table.size(); ++m) {
            const EdgeMaterial &em = g_.table[m];
            if (em.pec) {
                coef[m] = {Real(0), Real(0)};
                continue;
            }
            const double eps = eps0 * em.eps_r, s = em.sigma * dt_ / (2 * eps);
            coef[m] = {static_cast<Real>((1 - s) / (1 + s)), static_cast<Real>((dt_ / eps) / (1 + s))};
        }
        // Edges outside a component's update range (walls, unused slots) keep zero
        // coefficients so the flat kernels can sweep whole planes.
        for (int c = 0; c < 3; ++c) {
            const auto rx = e_range(c, 0), ry = e_range(c, 1), rz = e_range(c, 2);
            for (int i = rx[0]; i < rx[1]; ++i)
                for (int j = ry[0]; j < ry[1]; ++j)
                    for (int k = rz[0]; k < rz[1]; ++k) {
                        const std::size_t idx = g_.index(i, j, k);
                        const auto &m = coef[g_.edge_material[c][idx]];
                        ca_[c][idx] = m[0];
                        cb_[c][idx] = m[1];
                    }
        }
    }

    // Folded coefficients for the flat kernels: Cb/(kappa d) for E, dt/(mu kappa d) for H.
    void build_folded() {
        for (int c = 0; c < 3; ++c) {
            const int a1 = (c + 1) % 3, a2 = (c + 2) % 3;
            ce1_[c].assign(g_.node_count(), Real(0));
            ce2_[c].assign(g_.node_count(), Real(0));
            ch1_[c].assign(g_.node_count(), Real(0));
            ch2_[c].assign(g_.node_count(), Real(0));
            for (int i = 0; i <= n_[0]; ++i)
                for (int j = 0; j <= n_[1]; ++j)
                    for (int k = 0; k <= n_[2]; ++k) {
                        const int n[3] = {i, j, k};
                        const std::size_t idx = g_.index(i, j, k);
                        refresh_e(c, idx);
                        if (i < n_[0] && j < n_[1] && k < n_[2]) {
                            ch1_[c][idx] = ch_ * ih_[a1][n[a1]];
                            ch2_[c][idx] = ch_ * ih_[a2][n[a2]];
                        }
                    }
        }
    }

    void refresh_e(int c, std::size_t idx) {
        const int a1 = (c + 1) % 3, a2 = (c + 2) % 3;
        const std::size_t nz = g_.nodes(2), ny = g_.nodes(1);
        const int n[3] = {static_cast<int>(idx / (ny * nz)), static_cast<int>(idx / nz % ny), static_cast<int>(idx % nz)};
        ce1_[c][idx] = cb_[c][idx] * ide_[a1][n[a1]];
        ce2_[c][idx] = cb_[c][idx] * ide_[a2][n[a2]];
    }

    // Roden-Gedney CPML. Profiles are evaluated at nodes (E) and cell centers (H);
    // 1/kappa is folded into the inverse spacings used by the main update.
    void build_cpml(const CpmlSpec &cp) {
        for (int a = 0; a < 3; ++a) {
            const int N = n_[a];
            ide_[a].resize(N + 1);
            ih_[a].resize(N + 1);
            be_[a].assign(N + 1, 0.0);
            ce_[a].assign(N + 1, 0.0);
            bh_[a].assign(N + 1, 0.0);
            chh_[a].assign(N + 1, 0.0);
            for (int n = 0; n <= N; ++n) {
                ide_[a][n] = static_cast<Real>(idd_[a][n]);
                ih_[a][n] = static_cast<Real>(id_[a][n]);
            }
            const int plo = g_.pml[a][0], phi = g_.pml[a][1];
            const auto &x = g_.lines[a];
            auto profile = [&](double rho, double d, double cell, double &kappa, double &b, double &c) {
                const double r = std::clamp(rho / d, 0.0, 1.0);
                const double smax = cp.sigma_scale * 0.8 * (cp.order + 1) / (eta0 * cell);
                const double sigma = smax * std::pow(r, cp.order);
                kappa = 1 + (cp.kappa_max - 1) * std::pow(r, cp.order);
                const double alpha = cp.alpha_max * (1 - r);
                b = std::exp(-(sigma / kappa + alpha) * dt_ / eps0);
                c = sigma > 0 ? sigma * (b - 1) / (sigma * kappa + kappa * kappa * alpha) : 0.0;
            };
            pml_lo_[a] = plo;
            pml_hi_[a] = N - phi;
            if (plo > 0) {
                const double d = x[plo] - x[0], cell = g_.cell(a, 0);
                for (int n = 0; n <= plo; ++n) {
                    double k, b, c;
                    profile(x[plo] - x[n], d, cell, k, b, c);
                    ide_[a][n] = static_cast<Real>(idd_[a][n] / k);
                    be_[a][n] = b, ce_[a][n] = c;
                }
                for (int n = 0; n < plo; ++n) {
                    double k, b, c;
                    profile(x[plo] - 0.5 * (x[n] + x[n + 1]), d, cell, k, b, c);
                    ih_[a][n] = static_cast<Real>(id_[a][n] / k);
                    bh_[a][n] = b, chh_[a][n] = c;
                }
            }
            if (phi > 0) {
                const int q = N - phi;
                const double d = x[N] - x[q], cell = g_.cell(a, N - 1);
                for (int n = q; n <= N; ++n) {
                    double k, b, c;
                    profile(x[n] - x[q], d, cell, k, b, c);
                    ide_[a][n] = static_cast<Real>(idd_[a][n] / k);
                    be_[a][n] = b, ce_[a][n] = c;
                }
                for (int n = q; n < N; ++n) {
                    double k, b, c;
                    profile(0.5 * (x[n] + x[n + 1]) - x[q], d, cell, k, b, c);
                    ih_[a][n] = static_cast<Real>(id_[a][n] / k);
                    bh_[a][n] = b, chh_[a][n] = c;
                }
            }
            pbe_[a].resize(N + 1), pce_[a].resize(N + 1), pbh_[a].resize(N + 1), pch_[a].resize(N + 1);
            for (int n = 0; n <= N; ++n) {
                pbe_[a][n] = static_cast<Real>(be_[a][n]);
                pce_[a][n] = static_cast<Real>(ce_[a][n] * idd_[a][n]);
                pbh_[a][n] = static_cast<Real>(bh_[a][n]);
                pch_[a][n] = static_cast<Real>(chh_[a][n] * id_[a][n]);
            }
            for (int s = 0; s < 2; ++s) {
                if (g_.pml[a][s] == 0) continue;
                // psi arrays for every (component, derivative axis = a) pair
                for (int c = 0; c < 3; ++c) {
                    if (c == a) continue;
                    psi_e_[c][slot(c, a)].assign(g_.node_count(), Real(0));
                    psi_h_[c][slot(c, a)].assign(g_.node_count(), Real(0));
                }
            }
        }
    }

    template <int A>
    static int pick(int i, int j, int k) {
        if constexpr (A == 0) return i;
        else if constexpr (A == 1) return j;
        else return k;
    }

    static int slot(int c, int a) { return a == (c + 1) % 3 ? 0 : 1; }

    // Update range of E component c along axis a: [lo, hi).
    std::array<int, 2> e_range(int c, int a) const {
        if (a == c) return {0, n_[a]};
        return {1, periodic_[a] ? n_[a] + 1 : n_[a]};
    }

    // Flat kernels: each worker sweeps whole i-planes as one contiguous run; the
    // folded coefficients vanish wherever a slot must not change.
    template <int C>
    void update_h(int i0, int i1) {
        constexpr int A1 = (C + 1) % 3, A2 = (C + 2) % 3;
        Real *__restrict h = h_[C].data();
        const Real *__restrict ea2 = e_[A2].data();
        const Real *__restrict ea1 = e_[A1].data();
        const Real *__restrict c1 = ch1_[C].data();
        const Real *__restrict c2 = ch2_[C].data();
        const std::size_t s1 = stride_[A1], s2 = stride_[A2];
        const std::size_t begin = g_.index(i0, 0, 0), end = g_.index(std::min(i1, n_[0]), 0, 0);
        for (std::size_t x = begin; x < end; ++x)
            h[x] -= c1[x] * (ea2[x + s1] - ea2[x]) - c2[x] * (ea1[x + s2] - ea1[x]);
    }

    template <int C>
    void update_e(int i0, int i1) {
        constexpr int A1 = (C + 1) % 3, A2 = (C + 2) % 3;
        Real *__restrict e = e_[C].data();
        const Real *__restrict ca = ca_[C].data();
        const Real *__restrict c1 = ce1_[C].data();
        const Real *__restrict c2 = ce2_[C].data();
        const Real *__restrict ha2 = h_[A2].data();
        const Real *__restrict ha1 = h_[A1].data();
        const std::size_t s1 = stride_[A1], s2 = stride_[A2];
        const auto rx = e_range(C, 0);
        const int ib = std::max(i0, rx[0]), ie = std::min(i1, rx[1]);
        if (ib >= ie) return;
        const std::size_t begin = std::max({g_.index(ib, 0, 0), s1, s2}), end = g_.index(ie, 0, 0);
        for (std::size_t x = begin; x < end; ++x)
            e[x] = ca[x] * e[x] + c1[x] * (ha2[x] - ha2[x - s1]) - c2[x] * (ha1[x] - ha1[x - s2]);
    }

    // CPML auxiliary update for target component c and derivative axis a over both
    // absorbing slabs of a:  psi = b psi + c dF;  T += w psi.
    template <bool Magnetic>
    void cpml_apply(int c, int a) {
        auto &psi = Magnetic ? psi_h_[c][slot(c, a)] : psi_e_[c][slot(c, a)];
        if (psi.empty()) return;
        const int f = 3 - c - a;
        const Real sign = a == (c + 1) % 3 ? Real(1) : Real(-1);
        const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(stride_[a]);
        const std::ptrdiff_t d1 = Magnetic ? s : 0, d0 = Magnetic ? 0 : -s;
        Real *P = psi.data();
        Real *T = Magnetic ? h_[c].data() : e_[c].data();
        const Real *F = Magnetic ? e_[f].data() : h_[f].data();
        const Real *W = cb_[c].data();
        const Real hscale = -ch_ * sign;
        const Real *B = Magnetic ? pbh_[a].data() : pbe_[a].data();
        const Real *K = Magnetic ? pch_[a].data() : pce_[a].data();
        std::array<std::array<int, 2>, 3> range;
        for (int ax = 0; ax < 3; ++ax) range[ax] = Magnetic ? std::array<int, 2>{0, n_[ax]} : e_range(c, ax);
        for (int side = 0; side < 2; ++side) {
            if (g_.pml[a][side] == 0) continue;
            auto r = range;
            if (side == 0)
                r[a] = {r[a][0], std::min(r[a][1], Magnetic ? pml_lo_[a] : pml_lo_[a] + 1)};
            else
                r[a] = {std::max(r[a][0], pml_hi_[a]), r[a][1]};
            if (r[a][0] >= r[a][1]) continue;
            pool_.for_range(r[0][0], r[0][1], [&](int ib, int ie) {
                for (int i = ib; i < ie; ++i)
                    for (int j = r[1][0]; j < r[1][1]; ++j) {
                        const std::size_t base = g_.index(i, j, 0);
                        Real *__restrict p = P + base;
                        Real *__restrict t = T + base;
                        const Real *__restrict fb = F + base;
                        const Real *__restrict w = W + base;
                        if (a == 2) {
                            for (int k = r[2][0]; k < r[2][1]; ++k) {
                                p[k] = B[k] * p[k] + K[k] * (fb[k + d1] - fb[k + d0]);
                                t[k] += (Magnetic ? hscale : sign * w[k]) * p[k];
                            }
                        } else {
                            const int n = a == 0 ? i : j;
                            const Real bb = B[n], kk = K[n];
                            for (int k = r[2][0]; k < r[2][1]; ++k) {
                                p[k] = bb * p[k] + kk * (fb[k + d1] - fb[k + d0]);
                                t[k] += (Magnetic ? hscale : sign * w[k]) * p[k];
                            }
                        }
                    }
            });
        }
    }

    void cpml_h() {
        for (int c = 0; c < 3; ++c) {
            cpml_apply<true>(c, (c + 1) % 3);
            cpml_apply<true>(c, (c + 2) % 3);
        }
    }

    void cpml_e() {
        for (int c = 0; c < 3; ++c) {
            cpml_apply<false>(c, (c + 1) % 3);
            cpml_apply<false>(c, (c + 2) % 3);
        }
    }

    // Periodic wrap: H plane 0 feeds ghost plane N; E plane N (updated) feeds plane 0.
    void periodic_h() {
        for (int a = 0; a < 3; ++a) {
            if (!periodic_[a]) continue;
            for (int c = 0; c < 3; ++c) copy_plane(h_[c], a, 0, n_[a]);
        }
    }
    void periodic_e() {
        for (int a = 0; a < 3; ++a) {
            if (!periodic_[a]) continue;
            for (int c = 0; c < 3; ++c)
                if (c != a) copy_plane(e_[c], a, n_[a], 0);
        }
    }
    void copy_plane(std::vector<Real> &f, int a, int from, int to) {
        const int b = (a + 1) % 3, c = (a + 2) % 3;
        for (int p = 0; p <= n_[b]; ++p)
            for (int q = 0; q <= n_[c]; ++q) {
                int s[3], d[3];
                s[a] = from, d[a] = to, s[b] = d[b] = p, s[c] = d[c] = q;
                f[g_.index(d[0], d[1], d[2])] = f[g_.index(s[0], s[1], s[2])];
            }
    }

    // Ampere loop of H around the vertical edge above the gap.
    double loop_current(const Port &p) const {
        const int i = p.gp.i, j = p.gp.j, k = p.k_loop;
        const double hy = static_cast<double>(h_[1][g_.index(i, j, k)]) - (i > 0 ? h_[1][g_.index(i - 1, j, k)] : 0);
        const double hx = (j > 0 ? static_cast<double>(h_[0][g_.index(i, j - 1, k)]) : 0.0) - h_[0][g_.index(i, j, k)];
        return hy * dual(1, j) + hx * dual(0, i);
    }

    void record_e() {
        for (std::size_t n = 0; n < ports_.size(); ++n) ports_[n].v.push_back(port_voltage(n));
        for (std::size_t n = 0; n < probes_.size(); ++n) {
            const FieldProbe &p = probes_[n];
            const auto &arr = p.comp < 3 ? e_[p.comp] : h_[p.comp - 3];
            probe_data_[n].push_back(arr[g_.index(p.i, p.j, p.k)]);
        }
    }

    // Tangential field at the center of face cell (p, q); E on the plane, H averaged
    // across it with linear weights along the normal.
    void accumulate_huygens(bool electric, double t) {
        HuygensRecord &rec = *huygens_;
        const auto &b = hspec_.box;
        const int lo[3] = {b[0], b[2], b[4]}, hi[3] = {b[1], b[3], b[5]};
        std::vector<cplx> phase(rec.freqs.size());
        for (std::size_t f = 0; f < rec.freqs.size(); ++f)
            phase[f] = std::polar(hspec_.stride * dt_, -2 * pi * rec.freqs[f] * t);
        for (HuygensFace &face : rec.faces) {
            const int a = face.axis, t1 = (a + 1) % 3, t2 = (a + 2) % 3;
            const int n0 = face.normal > 0 ? hi[a] : lo[a];
            const double c_lo = 0.5 * (g_.lines[a][n0 - 1] + g_.lines[a][n0]);
            const double c_hi = 0.5 * (g_.lines[a][n0] + g_.lines[a][n0 + 1]);
            const double w_hi = (g_.lines[a][n0] - c_lo) / (c_hi - c_lo), w_lo = 1 - w_hi;
            auto at = [&](const std::vector<Real> &arr, int na, int p, int q) {
                int m[3];
                m[a] = na, m[t1] = p, m[t2] = q;
                return static_cast<double>(arr[g_.index(m[0], m[1], m[2])]);
            };
            const std::size_t nq = face.v.size();
            for (int p = lo[t1]; p < hi[t1]; ++p)
                for (int q = lo[t2]; q < hi[t2]; ++q) {
                    const std::size_t cell = static_cast<std::size_t>(p - lo[t1]) * nq + (q - lo[t2]);
                    double x1, x2;
                    if (electric) {
                        x1 = 0.5 * (at(e_[t1], n0, p, q) + at(e_[t1], n0, p, q + 1));
                        x2 = 0.5 * (at(e_[t2], n0, p, q) + at(e_[t2], n0, p + 1, q));
                    } else {
                        auto hmix = [&](int comp, int p2, int q2) {
                            return w_lo * at(h_[comp], n0 - 1, p2, q2) + w_hi * at(h_[comp], n0, p2, q2);
                        };
                        x1 = 0.5 * (hmix(t1, p, q) + hmix(t1, p + 1, q));
                        x2 = 0.5 * (hmix(t2, p, q) + hmix(t2, p, q + 1));
                    }
                    for (std::size_t f = 0; f < phase.size(); ++f) {
                        if (electric) {
                            face.e1[f][cell] += x1 * phase[f];
                            face.e2[f][cell] += x2 * phase[f];
                        } else {
                            face.h1[f][cell] += x1 * phase[f];
                            face.h2[f][cell] += x2 * phase[f];
                        }
                    }
                }
        }
    }

    const YeeGrid &g_;
    double dt_;
    WorkerPool pool_;
    long step_ = 0;
    std::array<int, 3> n_{};
    std::array<std::size_t, 3> stride_{};
    std::array<bool, 3> periodic_{};
    std::array<std::vector<Real>, 3> e_, h_, ca_, cb_;
    std::array<std::vector<double>, 3> idd_, id_;        // raw inverse dual / primal spacings
    std::array<std::vector<Real>, 3> ide_, ih_;          // kappa-scaled
    std::array<std::vector<double>, 3> be_, ce_, bh_, chh_;
    std::array<std::vector<Real>, 3> pbe_, pce_, pbh_, pch_;
    std::array<std::vector<Real>, 3> ce1_, ce2_, ch1_, ch2_;  // folded kernel coefficients
    std::array<int, 3> pml_lo_{}, pml_hi_{};
    std::array<std::array<std::vector<Real>, 2>, 3> psi_e_, psi_h_;
    Real ch_{};
    std::vector<Port> ports_;
    std::vector<CurrentSource> sources_;
    std::vector<FieldProbe> probes_;
    std::vector<std::vector<double>> probe_data_;
    HuygensSpec hspec_;
    std::optional<HuygensRecord> huygens_;
};

struct RunOptions {
    CpmlSpec cpml;
    double courant = 0.99;
    int threads = 1;
    std::optional<HuygensSpec> huygens;
};

/// One excitation: port `excited` driven, every other port a matched termination.
template <class Real = float>
Recordings run_excitation(const YeeGrid &g, int excited, const Excitation &exc, const RunControl &rc,
                          const RunOptions &opt = {}) {
    Simulation<Real> sim(g, cfl_timestep(g, opt.courant), opt.cpml, opt.threads);
    int active = 0;
    for (const GridPort &p : g.ports) {
        sim.add_port(p, p.index == excited, exc);
        active += p.index == excited;
    }
    if (active != 1) throw ConfigError("excited port " + std::to_string(excited) + " does not exist");
    if (opt.huygens) sim.add_huygens(*opt.huygens);
    return sim.run(rc);
}

namespace detail {

template <class T>
void put_le(std::ostream &os, T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    os.write(reinterpret_cast<const char *>(b), sizeof(T));
}

} // namespace detail

/// Raw dump: "YFRAWREC" magic, u32 version (1), u32 port count, u64 step count, f64 dt,
/// then per port its f64 v[steps+1] followed by f64 i[steps]; all little-endian.
/// A text manifest `<path>.manifest` describes the layout.
inline void write_raw_recordings(const std::string &path, const Recordings &r) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path);
    os.write("YFRAWREC", 8);
    detail::put_le<std::uint32_t>(os, 1);
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(r.ports.size()));
    detail::put_le<std::uint64_t>(os, static_cast<std::uint64_t>(r.steps));
    detail::put_le<double>(os, r.dt);
    for (const PortRecord &p : r.ports) {
        for (double x : p.v) detail::put_le<double>(os, x);
        for (double x : p.i) detail::put_le<double>(os, x);
    }
    std::ofstream m(path + ".manifest");
    m << "format yeefield raw recordings\nversion 1\nendianness little\n"
      << "header magic[8]=YFRAWREC u32 version, u32 ports, u64 steps, f64 dt\n"
      << "body per port: f64 v[steps+1] at t=n*dt, f64 i[steps] at t=(n+0.5)*dt\n";
    m.precision(17);
    m << "ports " << r.ports.size() << "\nsteps " << r.steps << "\ndt " << r.dt << "\nexcited " << r.excited
      << "\nconverged " << (r.converged ? 1 : 0) << "\n";
    for (const PortRecord &p : r.ports) m << "port " << p.index << " resistance " << p.resistance << "\n";
}

} // namespace yeefield

#endif
