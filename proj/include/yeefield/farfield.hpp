// Copyright 2026 The yeefield Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef YEEFIELD_FARFIELD_HPP
#define YEEFIELD_FARFIELD_HPP

#include "constants.hpp"
#include "error.hpp"
#include "huygens.hpp"
#include "network.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace yeefield {

/// Regular (theta, phi) grid; theta covers [0, 90] with a ground plane, else [0, 180].
struct AngleGrid {
    double step_deg = 1.0;
    bool upper_only = false;

    std::vector<double> thetas() const { return ramp(upper_only ? 90.0 : 180.0); }
    std::vector<double> phis() const {
        auto p = ramp(360.0);
        p.pop_back();  // 360 == 0
        return p;
    }

private:
    std::vector<double> ramp(double hi) const {
        const int n = static_cast<int>(std::lround(hi / step_deg));
        if (n < 1 || std::abs(n * step_deg - hi) > 1e-9) throw ConfigError("angle step must divide " + std::to_string(hi));
        std::vector<double> v(n + 1);
        for (int i = 0; i <= n; ++i) v[i] = i * step_deg;
        return v;
    }
};

/// Far-zone field r E(theta, phi) with the exp(-jkr) factor removed (V), stored at
/// [it * phi.size() + ip]. Powers are time averages for peak-amplitude phasors (W).
struct FarField {
    double freq = 0;
    std::vector<double> theta, phi;  // deg
    std::vector<cplx> e_theta, e_phi;
    double accepted_power = 0;
    double radiated_power = 0;   // Huygens-surface Poynting flux, or pattern integral
    bool upper_only = false;

    std::size_t at(std::size_t it, std::size_t ip) const { return it * phi.size() + ip; }
    double intensity(std::size_t n) const { return (std::norm(e_theta[n]) + std::norm(e_phi[n])) / (2 * eta0); }

    /// Closest grid index of an angle; throws if it is off-grid.
    std::size_t phi_index(double phi_deg) const { return find(phi, std::fmod(std::fmod(phi_deg, 360.0) + 360.0, 360.0), "phi"); }
    std::size_t theta_index(double theta_deg) const { return find(theta, theta_deg, "theta"); }

    void scale(cplx a) {
        for (auto &x : e_theta) x *= a;
        for (auto &x : e_phi) x *= a;
        radiated_power *= std::norm(a);
        accepted_power *= std::norm(a);
    }

private:
    static std::size_t find(const std::vector<double> &v, double x, const char *what) {
        for (std::size_t i = 0; i < v.size(); ++i)
            if (std::abs(v[i] - x) < 1e-9) return i;
        throw ConfigError(std::string(what) + " = " + std::to_string(x) + " is not on the angle grid");
    }
};

namespace detail {

// Equivalent currents of one face in structure-of-arrays form, pre-multiplied by the
// cell area: J = n x H, M = -n x E.
struct CurrentSheet {
    int axis = 2;
    double position = 0;
    std::vector<double> u, v;
    std::array<std::vector<double>, 6> jre, jim;  // Jx Jy Jz Mx My Mz
};

inline CurrentSheet sheet_of(const HuygensFace &face, int f) {
    CurrentSheet s;
    s.axis = face.axis;
    s.position = face.position;
    s.u = face.u;
    s.v = face.v;
    const int a = face.axis, t1 = (a + 1) % 3, t2 = (a + 2) % 3;
    const std::size_t n = face.cells(), nq = face.v.size();
    for (auto &x : s.jre) x.assign(n, 0.0);
    for (auto &x : s.jim) x.assign(n, 0.0);
    const double sg = face.normal;
    for (std::size_t c = 0; c < n; ++c) {
        const double area = face.du[c / nq] * face.dv[c % nq];
        const cplx j1 = -sg * face.h2[f][c] * area, j2 = sg * face.h1[f][c] * area;
        const cplx m1 = sg * face.e2[f][c] * area, m2 = -sg * face.e1[f][c] * area;
        s.jre[t1][c] = j1.real(), s.jim[t1][c] = j1.imag();
        s.jre[t2][c] = j2.real(), s.jim[t2][c] = j2.imag();
        s.jre[3 + t1][c] = m1.real(), s.jim[3 + t1][c] = m1.imag();
        s.jre[3 + t2][c] = m2.real(), s.jim[3 + t2][c] = m2.imag();
    }
    return s;
}

// Image in a PEC plane z = zg: J -> (-Jx, -Jy, Jz), M -> (Mx, My, -Mz).
inline CurrentSheet image_of(CurrentSheet s, double zg) {
    auto mirror = [&](double z) { return 2 * zg - z; };
    if (s.axis == 2) s.position = mirror(s.position);
    else if (s.axis == 0) std::transform(s.v.begin(), s.v.end(), s.v.begin(), mirror);
    else std::transform(s.u.begin(), s.u.end(), s.u.begin(), mirror);
    for (int c : {0, 1, 5})
        for (std::size_t n = 0; n < s.jre[c].size(); ++n) s.jre[c][n] = -s.jre[c][n], s.jim[c][n] = -s.jim[c][n];
    return s;
}

} // namespace detail

/// Time-averaged power leaving the recorded surface, 1/2 Re of the integral of E x H* . n.
inline double huygens_flux(const HuygensRecord &rec, double freq) {
    const int f = rec.find(freq);
    if (f < 0) throw ConfigError("frequency not recorded on the Huygens surface");
    double p = 0;
    for (const HuygensFace &face : rec.faces) {
        const std::size_t nq = face.v.size();
        for (std::size_t c = 0; c < face.cells(); ++c) {
            const cplx s = face.e1[f][c] * std::conj(face.h2[f][c]) - face.e2[f][c] * std::conj(face.h1[f][c]);
            p += 0.5 * face.normal * s.real() * face.du[c / nq] * face.dv[c % nq];
        }
    }
    return p;
}

/// Near-to-far-field transform of the Huygens record at `freq`.
/// Eθ = -jk/(4π)(Lφ + η Nθ), Eφ = jk/(4π)(Lθ - η Nφ).
inline FarField ntff(const HuygensRecord &rec, double freq, AngleGrid grid = {}, int threads = 1) {
    const int fi = rec.find(freq);
    if (fi < 0) {
        std::ostringstream os;
        os << "frequency " << freq / 1e9 << " GHz not recorded; available (GHz):";
        for (double f : rec.freqs) os << " " << f / 1e9;
        throw ConfigError(os.str());
    }
    if (rec.ground_image) grid.upper_only = true;
    std::vector<detail::CurrentSheet> sheets;
    for (const HuygensFace &face : rec.faces) {
        sheets.push_back(detail::sheet_of(face, fi));
        if (rec.ground_image) sheets.push_back(detail::image_of(sheets.back(), rec.ground_z));
    }

    FarField ff;
    ff.freq = rec.freqs[fi];
    ff.theta = grid.thetas();
    ff.phi = grid.phis();
    ff.upper_only = grid.upper_only;
    const std::size_t nt = ff.theta.size(), np = ff.phi.size();
    ff.e_theta.assign(nt * np, 0.0);
    ff.e_phi.assign(nt * np, 0.0);
    const double k = 2 * pi * ff.freq / c0;

    WorkerPool pool(threads);
    pool.for_range(0, static_cast<int>(nt), [&](int tb, int te) {
        std::vector<double> are, aim, bre, bim;
        for (int it = tb; it < te; ++it) {
            const double th = ff.theta[it] * pi / 180;
            for (std::size_t ip = 0; ip < np; ++ip) {
                const double ph = ff.phi[ip] * pi / 180;
                const double r[3] = {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
                double nre[6] = {}, nim[6] = {};
                for (const auto &s : sheets) {
                    const int t1 = (s.axis + 1) % 3, t2 = (s.axis + 2) % 3;
                    const std::size_t nu = s.u.size(), nv = s.v.size();
                    are.resize(nu), aim.resize(nu), bre.resize(nv), bim.resize(nv);
                    for (std::size_t p = 0; p < nu; ++p) are[p] = std::cos(k * r[t1] * s.u[p]), aim[p] = std::sin(k * r[t1] * s.u[p]);
                    for (std::size_t q = 0; q < nv; ++q) bre[q] = std::cos(k * r[t2] * s.v[q]), bim[q] = std::sin(k * r[t2] * s.v[q]);
                    const cplx cph = std::polar(1.0, k * r[s.axis] * s.position);
                    for (int c = 0; c < 6; ++c) {
                        const double *xr = s.jre[c].data(), *xi = s.jim[c].data();
                        double sre = 0, sim = 0;
                        for (std::size_t p = 0; p < nu; ++p) {
                            double qre = 0, qim = 0;
                            const double *yr = xr + p * nv, *yi = xi + p * nv;
                            for (std::size_t q = 0; q < nv; ++q) {
                                qre += yr[q] * bre[q] - yi[q] * bim[q];
                                qim += yr[q] * bim[q] + yi[q] * bre[q];
                            }
                            sre += qre * are[p] - qim * aim[p];
                            sim += qre * aim[p] + qim * are[p];
                        }
                        nre[c] += sre * cph.real() - sim * cph.imag();
                        nim[c] += sre * cph.imag() + sim * cph.real();
                    }
                }
                const cplx N[3] = {{nre[0], nim[0]}, {nre[1], nim[1]}, {nre[2], nim[2]}};
                const cplx L[3] = {{nre[3], nim[3]}, {nre[4], nim[4]}, {nre[5], nim[5]}};
                const double ct = std::cos(th), st = std::sin(th), cp = std::cos(ph), sp = std::sin(ph);
                const cplx nth = N[0] * ct * cp + N[1] * ct * sp - N[2] * st, nph = -N[0] * sp + N[1] * cp;
                const cplx lth = L[0] * ct * cp + L[1] * ct * sp - L[2] * st, lph = -L[0] * sp + L[1] * cp;
                const cplx jk4 = cplx(0, k / (4 * pi));
                ff.e_theta[ff.at(it, ip)] = -jk4 * (lph + eta0 * nth);
                ff.e_phi[ff.at(it, ip)] = jk4 * (lth - eta0 * nph);
            }
        }
    });
    ff.radiated_power = huygens_flux(rec, ff.freq);
    return ff;
}

/// Integral of the radiation intensity over the grid's solid angle: trapezoid in theta,
/// periodic rectangle rule in phi.
inline double integrate_power(const FarField &ff) {
    const std::size_t nt = ff.theta.size(), np = ff.phi.size();
    if (nt < 2 || np < 1) return 0.0;
    const double dphi = 2 * pi / static_cast<double>(np);
    double p = 0;
    for (std::size_t it = 0; it < nt; ++it) {
        double w = 0;
        const double th = ff.theta[it] * pi / 180;
        if (it > 0) w += 0.5 * (ff.theta[it] - ff.theta[it - 1]) * pi / 180;
        if (it + 1 < nt) w += 0.5 * (ff.theta[it + 1] - ff.theta[it]) * pi / 180;
        double ring = 0;
        for (std::size_t ip = 0; ip < np; ++ip) ring += ff.intensity(ff.at(it, ip));
        p += ring * std::sin(th) * w * dphi;
    }
    return p;
}

/// G = 4 pi U / P in dBi over the grid. Pass radiated power for directivity.
inline std::vector<double> gain_pattern(const FarField &ff, double accepted_power) {
    if (!(accepted_power > 0)) throw ConfigError("accepted power must be positive");
    std::vector<double> g(ff.e_theta.size());
    for (std::size_t n = 0; n < g.size(); ++n) g[n] = db10(4 * pi * ff.intensity(n) / accepted_power);
    return g;
}

struct Direction {
    double theta = 0, phi = 0;
    double value = -std::numeric_limits<double>::infinity();
};

inline Direction pattern_peak(const FarField &ff, const std::vector<double> &g) {
    Direction d;
    for (std::size_t it = 0; it < ff.theta.size(); ++it)
        for (std::size_t ip = 0; ip < ff.phi.size(); ++ip)
            if (g[ff.at(it, ip)] > d.value) d = {ff.theta[it], ff.phi[ip], g[ff.at(it, ip)]};
    return d;
}

/// Principal-plane cut through the zenith: angle in (-theta_max, theta_max], negative
/// angles taken from phi + 180.
struct Cut {
    double phi = 0;
    std::vector<double> angle;  // deg
    std::vector<std::size_t> index;  // grid index of each sample
};

inline Cut principal_cut(const FarField &ff, double phi_deg) {
    Cut c;
    c.phi = phi_deg;
    const std::size_t ip = ff.phi_index(phi_deg), iq = ff.phi_index(phi_deg + 180.0);
    const std::size_t nt = ff.theta.size();
    const bool full = ff.theta.back() >= 180.0 - 1e-9;
    // the back half of a full-sphere grid is reached through theta > 90 on both sides
    for (std::size_t it = nt; it-- > 1;) {
        if (full && ff.theta[it] > 180.0 - 1e-9) continue;
        c.angle.push_back(-ff.theta[it]);
        c.index.push_back(ff.at(it, iq));
    }
    for (std::size_t it = 0; it < nt; ++it) {
        c.angle.push_back(ff.theta[it]);
        c.index.push_back(ff.at(it, ip));
    }
    return c;
}

class OneSidedBeamError : public Error {
public:
    using Error::Error;
};

/// Half-power beamwidth of a cut (level in dB vs angle in deg), crossings interpolated in dB.
inline double hpbw(const std::vector<double> &angle, const std::vector<double> &level_db) {
    if (angle.size() != level_db.size() || angle.size() < 3) throw ConfigError("HPBW needs a cut of >= 3 samples");
    const auto pk = static_cast<std::size_t>(std::max_element(level_db.begin(), level_db.end()) - level_db.begin());
    const double target = level_db[pk] + db10(0.5);
    auto cross = [&](std::size_t a, std::size_t b) {
        const double t = (target - level_db[a]) / (level_db[b] - level_db[a]);
        return angle[a] + t * (angle[b] - angle[a]);
    };
    std::optional<double> lo, hi;
    for (std::size_t i = pk; i-- > 0;)
        if (level_db[i] < target) {
            lo = cross(i + 1, i);
            break;
        }
    for (std::size_t i = pk + 1; i < level_db.size(); ++i)
        if (level_db[i] < target) {
            hi = cross(i - 1, i);
            break;
        }
    if (!lo || !hi) throw OneSidedBeamError("no half-power crossing on the " + std::string(lo ? "upper" : "lower") + " side of the beam");
    return *hi - *lo;
}

inline double hpbw(const FarField &ff, const std::vector<double> &gain_db, double phi_deg) {
    const Cut c = principal_cut(ff, phi_deg);
    std::vector<double> lv;
    for (std::size_t n : c.index) lv.push_back(gain_db[n]);
    return hpbw(c.angle, lv);
}

/// eta = G lambda^2 / (4 pi A).
inline double aperture_efficiency(double peak_gain_dbi, double area, double freq) {
    if (!(area > 0)) throw ConfigError("aperture area must be positive");
    const double lam = wavelength(freq);
    return std::pow(10.0, peak_gain_dbi / 10) * lam * lam / (4 * pi * area);
}


/// Ludwig-3 co/cross components for an x- or y-polarized reference.
inline std::array<cplx, 2> ludwig3(cplx eth, cplx eph, double phi_deg, Polarization pol) {
    const double p = phi_deg * pi / 180, c = std::cos(p), s = std::sin(p);
    const cplx a = eth * c - eph * s, b = eth * s + eph * c;
    return pol == Polarization::x ? std::array<cplx, 2>{a, b} : std::array<cplx, 2>{b, a};
}

/// Co/cross ratio in dB at the co-pol peak of the principal cut, capped at 60 dB.
inline double xpd(const FarField &ff, double phi_deg, Polarization pol, double cap_db = 60.0) {
    const Cut c = principal_cut(ff, phi_deg);
    double best = -1, cross = 0;
    for (std::size_t m = 0; m < c.index.size(); ++m) {
        const std::size_t n = c.index[m];
        const double ph = c.angle[m] < 0 ? phi_deg + 180.0 : phi_deg;
        const auto cc = ludwig3(ff.e_theta[n], ff.e_phi[n], ph, pol);
        if (std::abs(cc[0]) > best) best = std::abs(cc[0]), cross = std::abs(cc[1]);
    }
    if (!(best > 0)) throw ConfigError("co-polar field is zero on the cut; XPD undefined");
    if (cross == 0) return cap_db;
    return std::min(cap_db, db20(best / cross));
}

/// Weighted sum of per-port far fields, each normalized to a unit incident wave at its
/// port. Accepted power 1/2 (|w|^2 - |S w|^2) comes from the S-matrix at ff.freq.
inline FarField superpose_excitations(const std::vector<FarField> &per_port, const std::vector<cplx> &weights,
                                      const SMatrix &S) {
    if (weights.size() != per_port.size() || static_cast<int>(weights.size()) != S.ports())
        throw ConfigError("weight count " + std::to_string(weights.size()) + " does not match the port count " +
                          std::to_string(S.ports()));
    if (per_port.empty()) throw ConfigError("no far fields to superpose");
    FarField out = per_port.front();
    std::fill(out.e_theta.begin(), out.e_theta.end(), 0.0);
    std::fill(out.e_phi.begin(), out.e_phi.end(), 0.0);
    for (std::size_t n = 0; n < per_port.size(); ++n) {
        const FarField &f = per_port[n];
        if (f.e_theta.size() != out.e_theta.size() || f.freq != out.freq)
            throw ConfigError("far fields do not share a grid and frequency");
        if (weights[n] == 0.0) continue;
        for (std::size_t k = 0; k < out.e_theta.size(); ++k) {
            out.e_theta[k] += weights[n] * f.e_theta[k];
            out.e_phi[k] += weights[n] * f.e_phi[k];
        }
    }
    std::size_t fi = S.freqs.size();
    for (std::size_t k = 0; k < S.freqs.size(); ++k)
        if (std::abs(S.freqs[k] - out.freq) <= 1e-6 * out.freq) fi = k;
    if (fi == S.freqs.size()) throw ConfigError("S-matrix lacks the far-field frequency");
    Eigen::VectorXcd w(weights.size());
    for (std::size_t n = 0; n < weights.size(); ++n) w(n) = weights[n];
    out.accepted_power = 0.5 * (w.squaredNorm() - (S.s[fi] * w).squaredNorm());
    out.radiated_power = integrate_power(out);
    return out;
}

/// Default weights: "odd" / "even" / "all" or a comma list of numbers.
inline std::vector<cplx> parse_weights(const std::string &spec, int ports) {
    std::vector<cplx> w(ports, 0.0);
    if (spec == "odd" || spec == "even" || spec == "all") {
        for (int p = 1; p <= ports; ++p)
            if (spec == "all" || (spec == "odd") == (p % 2 == 1)) w[p - 1] = 1.0;
        return w;
    }
    std::vector<cplx> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.emplace_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception &) {
            throw ConfigError("bad weight '" + item + "'");
        }
    }
    if (static_cast<int>(out.size()) != ports)
        throw ConfigError("weight count " + std::to_string(out.size()) + " does not match the port count " +
                          std::to_string(ports));
    return out;
}

// ------------------------------------------------------------------------------------------------
// Export
// ------------------------------------------------------------------------------------------------

inline constexpr const char *pattern_csv_header = "theta_deg,phi_deg,re_etheta,im_etheta,re_ephi,im_ephi,gain_dbi";

namespace detail {

inline std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v == 0.0 ? 0.0 : v);
    return buf;
}

inline void csv_row(std::ostream &os, double th, double ph, cplx et, cplx ep, double g) {
    os << csv_num(th) << ',' << csv_num(ph) << ',' << csv_num(et.real()) << ',' << csv_num(et.imag()) << ','
       << csv_num(ep.real()) << ',' << csv_num(ep.imag()) << ',' << csv_num(g) << '\n';
}

} // namespace detail

inline void write_pattern_csv(const FarField &ff, const std::vector<double> &gain_db, std::ostream &os) {
    os << pattern_csv_header << '\n';
    for (std::size_t it = 0; it < ff.theta.size(); ++it)
        for (std::size_t ip = 0; ip < ff.phi.size(); ++ip) {
            const std::size_t n = ff.at(it, ip);
            detail::csv_row(os, ff.theta[it], ff.phi[ip], ff.e_theta[n], ff.e_phi[n], gain_db[n]);
        }
}

/// A principal cut resampled at `step` degrees by linear interpolation (fields complex-linear,
/// gain linear in dB). Angle runs over (-theta_max, theta_max]; the theta column holds it signed.
struct CutSample {
    double angle;
    cplx e_theta, e_phi;
    double gain_db;
};

inline std::vector<CutSample> resample_cut(const FarField &ff, const std::vector<double> &gain_db, double phi_deg,
                                           double step = 0.5) {
    const Cut c = principal_cut(ff, phi_deg);
    std::vector<CutSample> out;
    const double a0 = c.angle.front(), a1 = c.angle.back();
    const int n = static_cast<int>(std::floor((a1 - a0) / step + 1e-9));
    std::size_t seg = 0;
    for (int m = 0; m <= n; ++m) {
        const double a = a0 + m * step;
        while (seg + 2 < c.angle.size() && c.angle[seg + 1] < a - 1e-12) ++seg;
        const double t = (a - c.angle[seg]) / (c.angle[seg + 1] - c.angle[seg]);
        const std::size_t i0 = c.index[seg], i1 = c.index[seg + 1];
        out.push_back({a, (1 - t) * ff.e_theta[i0] + t * ff.e_theta[i1], (1 - t) * ff.e_phi[i0] + t * ff.e_phi[i1],
                       (1 - t) * gain_db[i0] + t * gain_db[i1]});
    }
    return out;
}

inline void write_cut_csv(const std::vector<CutSample> &cut, double phi_deg, std::ostream &os) {
    os << pattern_csv_header << '\n';
    for (const CutSample &s : cut) detail::csv_row(os, s.angle, phi_deg, s.e_theta, s.e_phi, s.gain_db);
}

/// Gnuplot-ready two-column polar data: angle (deg), gain (dBi).
inline void write_polar_cut(const std::vector<CutSample> &cut, double phi_deg, std::ostream &os) {
    os << "# polar cut phi = " << detail::csv_num(phi_deg) << " deg\n# angle_deg gain_dbi\n";
    for (const CutSample &s : cut) os << detail::csv_num(s.angle) << ' ' << detail::csv_num(s.gain_db) << '\n';
}

/// Reads the pattern CSV written by write_pattern_csv back into a FarField (gain column
/// is returned separately).
inline FarField read_pattern_csv(std::istream &is, std::vector<double> &gain_db) {
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(is, line)) throw ParseError(1, "empty pattern file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != pattern_csv_header) throw ParseError(1, "unexpected pattern header");
    struct Row {
        double th, ph;
        cplx et, ep;
        double g;
    };
    std::vector<Row> rows;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        double v[7];
        int n = 0;
        while (std::getline(ss, cell, ',')) {
            if (n >= 7) throw ParseError(lineno, "too many columns");
            try {
                std::size_t used = 0;
                v[n] = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception &) {
                throw ParseError(lineno, "bad number '" + cell + "'");
            }
            ++n;
        }
        if (n != 7) throw ParseError(lineno, "expected 7 columns");
        rows.push_back({v[0], v[1], {v[2], v[3]}, {v[4], v[5]}, v[6]});
    }
    if (rows.empty()) throw ParseError(lineno, "pattern file has no samples");
    FarField ff;
    for (const Row &r : rows) {
        if (std::find(ff.theta.begin(), ff.theta.end(), r.th) == ff.theta.end()) ff.theta.push_back(r.th);
        if (std::find(ff.phi.begin(), ff.phi.end(), r.ph) == ff.phi.end()) ff.phi.push_back(r.ph);
    }
    if (ff.theta.size() * ff.phi.size() != rows.size()) throw ParseError(lineno, "pattern samples do not form a grid");
    ff.e_theta.resize(rows.size());
    ff.e_phi.resize(rows.size());
    gain_db.resize(rows.size());
    for (std::size_t n = 0; n < rows.size(); ++n) {
        const std::size_t it = n / ff.phi.size(), ip = n % ff.phi.size();
        if (rows[n].th != ff.theta[it] || rows[n].ph != ff.phi[ip])
            throw ParseError(n + 2, "pattern rows are not in theta-major order");
        ff.e_theta[n] = rows[n].et;
        ff.e_phi[n] = rows[n].ep;
        gain_db[n] = rows[n].g;
    }
    ff.upper_only = ff.theta.back() <= 90.0 + 1e-9;
    return ff;
}

} // namespace yeefield

#endif
