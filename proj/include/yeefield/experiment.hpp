// Copyright 2026 The yeefield Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end experiments: scenario -> per-port FDTD runs -> S-matrix, far field, metrics.

#ifndef YEEFIELD_EXPERIMENT_HPP
#define YEEFIELD_EXPERIMENT_HPP

#include "amc.hpp"
#include "config.hpp"
#include "farfield.hpp"
#include "mesh.hpp"
#include "network.hpp"
#include "solver.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace yeefield {

inline constexpr const char *coarse_disclaimer =
    "coarse mesh: values show trends only; reference-exact numbers need fine mode, beyond desk resources";
inline constexpr const char *fine_disclaimer = "fine mode: geometry resolved to 2 cells per feature";

/// Frequencies lo:hi:step in GHz, endpoints inclusive when hit to within 1e-9 of a step.
inline std::vector<double> parse_freq_range(const std::string &spec) {
    std::vector<double> v;
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ':')) v.push_back(detail::parse_double("--freqs", part));
    if (v.size() != 3) throw ConfigError("--freqs expects GHZ_START:GHZ_STOP:GHZ_STEP");
    if (!(v[2] > 0) || !(v[1] >= v[0]) || !(v[0] > 0)) throw ConfigError("--freqs needs 0 < start <= stop and step > 0");
    const long n = static_cast<long>(std::floor((v[1] - v[0]) / v[2] + 1e-9));
    if (n > 100000) throw ConfigError("--freqs produces too many points");
    std::vector<double> f;
    for (long k = 0; k <= n; ++k) f.push_back((v[0] + k * v[2]) * 1e9);
    return f;
}

inline std::vector<double> default_antenna_freqs() { return parse_freq_range("22:34:0.05"); }
inline std::vector<double> default_amc_freqs() { return parse_freq_range("4:14:0.1"); }

struct RunSettings {
    MeshMode mesh = MeshMode::coarse;
    std::vector<double> freqs;   // empty: scenario default
    std::string weights = "odd";
    int threads = 1;
    RunControl control;
};

// ------------------------------------------------------------------------------------------------
// Antenna scenarios
// ------------------------------------------------------------------------------------------------

struct AntennaRun {
    Scene scene;
    YeeGrid grid;
    double dt = 0;
    double pattern_freq = 0;
    std::vector<Recordings> runs;           // successful excitations
    std::vector<std::string> failures;      // one line per failed excitation
    std::vector<int> converged;             // per port: 1, 0, or -1 when the run failed
    std::optional<SMatrix> S;
    std::vector<FarField> per_port;         // unit incident wave at each port
    std::optional<FarField> combined;
    std::vector<double> gain_db;
    Polarization polarization = Polarization::x;
    std::vector<std::string> errors;        // recorded errors; empty means success
};

/// Largest element of a frequency list closest to f0, which must lie within the list's range.
inline double nearest_freq(const std::vector<double> &freqs, double f0) {
    if (freqs.empty() || f0 < freqs.front() * (1 - 1e-9) || f0 > freqs.back() * (1 + 1e-9))
        throw ConfigError("the pattern frequency " + detail::fmt_value(f0 / 1e9) + " GHz lies outside --freqs");
    double best = freqs.front();
    for (double f : freqs)
        if (std::abs(f - f0) < std::abs(best - f0)) best = f;
    return best;
}

/// Meshes the scenario and runs one excitation per port; far fields at the element's f0.
inline AntennaRun simulate_antenna(const ScenarioConfig &cfg, const RunSettings &rs) {
    AntennaRun out;
    out.scene = build_scenario_scene(cfg);
    const auto diags = validate_scene(out.scene);
    if (!diags.empty()) throw GeometryError(diags.front().rule, diags.front().message);
    out.grid = generate_mesh(out.scene, MeshPolicy::for_scene(out.scene, rs.mesh));
    out.dt = cfl_timestep(out.grid, 0.99);
    const std::vector<double> freqs = rs.freqs.empty() ? default_antenna_freqs() : rs.freqs;
    out.pattern_freq = nearest_freq(freqs, cfg.element.f0);
    const int n = static_cast<int>(out.grid.ports.size());
    const std::vector<cplx> w = parse_weights(rs.weights, n);

    RunOptions opt;
    opt.threads = rs.threads;
    opt.huygens = default_huygens_box(out.grid, {out.pattern_freq});
    out.converged.assign(n, -1);
    for (int p = 1; p <= n; ++p) {
        try {
            out.runs.push_back(run_excitation<float>(out.grid, p, Excitation{}, rs.control, opt));
            out.converged[p - 1] = out.runs.back().converged ? 1 : 0;
        } catch (const Error &e) {
            out.failures.push_back("port " + std::to_string(p) + ": " + e.what());
            out.errors.push_back(out.failures.back());
        }
    }
    try {
        out.S = extract_sparams(out.runs, freqs, cfg.port_impedance);
    } catch (const IncompleteMatrixError &e) {
        out.errors.push_back(e.what());
        return out;
    }
    for (const Recordings &r : out.runs) {
        FarField ff = ntff(*r.huygens, out.pattern_freq, AngleGrid{}, rs.threads);
        const PortRecord &pr = r.ports[static_cast<std::size_t>(r.excited - 1)];
        const auto vi = port_phasors(pr, r.dt, out.pattern_freq);
        const cplx a = (vi[0] + cfg.port_impedance * vi[1]) / (2 * std::sqrt(cfg.port_impedance));
        ff.scale(1.0 / a);
        out.per_port.push_back(std::move(ff));
    }
    out.combined = superpose_excitations(out.per_port, w, *out.S);
    for (int p = 1; p <= n; ++p)
        if (w[p - 1] != 0.0) {
            out.polarization = out.scene.ports[p - 1].polarization;
            break;
        }
    if (!(out.combined->accepted_power > 0)) {
        out.errors.push_back("excitation weights deliver no power; gain undefined");
        out.combined.reset();
        return out;
    }
    out.gain_db = gain_pattern(*out.combined, out.combined->accepted_power);
    return out;
}

// ------------------------------------------------------------------------------------------------
// Metrics summary
// ------------------------------------------------------------------------------------------------

using json = nlohmann::ordered_json;

namespace detail {

inline json unavailable(const std::string &reason) { return json{{"available", false}, {"reason", reason}}; }

/// Rounds to 9 significant digits so that values survive a text round trip unchanged.
inline double r9(double v) {
    if (!std::isfinite(v) || v == 0) return v;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::strtod(buf, nullptr);
}

} // namespace detail

struct MetricsInputs {
    const SMatrix *S = nullptr;
    const FarField *ff = nullptr;
    const std::vector<double> *gain_db = nullptr;
    double area = 0;   // m^2
    double freq = 0;   // Hz, the pattern frequency
    Polarization polarization = Polarization::x;
};

/// All network and far-field metrics; each entry is present or marked unavailable with a reason.
inline json compute_metrics(const MetricsInputs &in) {
    json m;
    if (in.S) {
        const SMatrix &S = *in.S;
        const PortBandwidths bw = port_bandwidths(S);
        json per = json::array();
        for (int p = 1; p <= S.ports(); ++p) {
            const auto &b = bw.per_port[p - 1];
            if (b)
                per.push_back({{"port", p}, {"available", true}, {"f_lo_ghz", detail::r9(b->f_lo / 1e9)},
                               {"f_hi_ghz", detail::r9(b->f_hi / 1e9)},
                               {"bandwidth_ghz", detail::r9(b->bandwidth() / 1e9)},
                               {"center_ghz", detail::r9(b->center() / 1e9)}});
            else
                per.push_back({{"port", p}, {"available", false}, {"reason", "|S" + std::to_string(p) + std::to_string(p) +
                                                                                 "| never below -10 dB in the sweep"}});
        }
        json bwj = {{"threshold_db", -10.0}, {"per_port", per},
                    {"matched", std::to_string(bw.matched) + "/" + std::to_string(S.ports())}};
        if (bw.matched)
            bwj["mean_bandwidth_ghz"] = detail::r9(bw.mean_bandwidth / 1e9);
        else
            bwj["mean_bandwidth_ghz"] = detail::unavailable("no port is matched");
        m["bandwidth"] = bwj;

        if (S.ports() < 2) {
            m["isolation"] = detail::unavailable("single-port network");
        } else {
            Isolation worst;
            int src = 0;
            std::array<double, 2> band{};
            for (int p = 1; p <= S.ports(); ++p) {
                const auto b = operating_band(S, p);
                std::array<double, 2> clip = {std::max(b[0], S.freqs.front()), std::min(b[1], S.freqs.back())};
                if (clip[0] > clip[1]) continue;
                Isolation iso;
                try {
                    iso = worst_isolation(S, p, clip);
                } catch (const ConfigError &) {
                    continue;
                }
                if (iso.db > worst.db) worst = iso, src = p, band = clip;
            }
            if (src == 0)
                m["isolation"] = detail::unavailable("no operating band overlaps the frequency list");
            else
                m["isolation"] = {{"worst_db", detail::r9(worst.db)}, {"port_pair", {src, worst.victim}},
                                  {"freq_ghz", detail::r9(worst.freq / 1e9)},
                                  {"band_ghz", {detail::r9(band[0] / 1e9), detail::r9(band[1] / 1e9)}}};
        }
        json warn = json::array();
        for (const auto &w : S.warnings) warn.push_back(w);
        m["network_warnings"] = warn;
    } else {
        m["bandwidth"] = detail::unavailable("no S-parameters");
        m["isolation"] = detail::unavailable("no S-parameters");
    }

    if (in.ff && in.gain_db) {
        const FarField &ff = *in.ff;
        const auto &g = *in.gain_db;
        const Direction pk = pattern_peak(ff, g);
        m["gain"] = {{"peak_dbi", detail::r9(pk.value)}, {"theta_deg", pk.theta}, {"phi_deg", pk.phi},
                     {"freq_ghz", detail::r9(in.freq / 1e9)}};
        json hp;
        for (double phi : {0.0, 90.0}) {
            const std::string key = phi == 0 ? "phi0_deg" : "phi90_deg";
            try {
                hp[key] = detail::r9(hpbw(ff, g, phi));
            } catch (const Error &e) {
                hp[key] = detail::unavailable(e.what());
            }
        }
        m["hpbw"] = hp;
        if (in.area > 0)
            m["aperture_efficiency"] = {{"value", detail::r9(aperture_efficiency(pk.value, in.area, in.freq))},
                                        {"area_mm2", detail::r9(in.area * 1e6)}};
        else
            m["aperture_efficiency"] = detail::unavailable("no aperture area given");
        json x = {{"polarization", in.polarization == Polarization::x ? "x" : "y"}, {"basis", "ludwig3"}};
        for (double phi : {0.0, 90.0}) {
            const std::string key = phi == 0 ? "phi0_db" : "phi90_db";
            try {
                x[key] = detail::r9(xpd(ff, phi, in.polarization));
            } catch (const Error &e) {
                x[key] = detail::unavailable(e.what());
            }
        }
        m["xpd"] = x;
        m["front_to_back"] = detail::unavailable(
            ff.upper_only ? "infinite ground-plane model radiates into the upper hemisphere only"
                          : "not computed for free-space patterns");
    } else {
        for (const char *k : {"gain", "hpbw", "aperture_efficiency", "xpd", "front_to_back"})
            m[k] = detail::unavailable("no far-field pattern");
    }
    return m;
}

/// Reads a Touchstone file and/or a pattern CSV and computes the metrics (no solver).
inline json metrics_from_files(const std::string &touchstone, const std::string &pattern, double area, double freq,
                               Polarization pol) {
    std::optional<SMatrix> S;
    if (!touchstone.empty()) {
        S = read_touchstone(touchstone);
        S->check_passivity();
    }
    std::optional<FarField> ff;
    std::vector<double> g;
    if (!pattern.empty()) {
        std::ifstream is(pattern);
        if (!is) throw ConfigError("cannot open " + pattern);
        ff = read_pattern_csv(is, g);
        ff->freq = freq;
        ff->upper_only = ff->theta.back() <= 90.0 + 1e-9;
    }
    MetricsInputs in;
    in.S = S ? &*S : nullptr;
    in.ff = ff ? &*ff : nullptr;
    in.gain_db = ff ? &g : nullptr;
    in.area = area;
    in.freq = freq;
    in.polarization = pol;
    return compute_metrics(in);
}

inline std::string touchstone_name(const std::string &scenario, int ports) {
    return scenario + ".s" + std::to_string(ports) + "p";
}

inline double footprint_area(const Scene &sc) {
    return (sc.footprint.x1 - sc.footprint.x0) * (sc.footprint.y1 - sc.footprint.y0);
}

inline void write_text(const std::filesystem::path &p, const std::string &text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + p.string());
    os << text;
    if (!os) throw ConfigError("write failed: " + p.string());
}

/// Mesh statistics used by the build report and the run manifest.
inline json mesh_stats(const YeeGrid &g, double dt) {
    json j;
    j["cells"] = {g.cells(0), g.cells(1), g.cells(2)};
    j["nodes"] = g.node_count();
    j["min_cell_mm"] = {detail::r9(g.min_cell(0) * 1e3), detail::r9(g.min_cell(1) * 1e3), detail::r9(g.min_cell(2) * 1e3)};
    j["pml_cells"] = g.pml[0][0];
    j["pec_edges"] = g.pec_edge_count();
    j["dt_s"] = dt;
    return j;
}

/// Writes the Touchstone, pattern and cut files of a run, then derives the summary from
/// the files just written so that `metrics` on them reproduces it.
inline json write_antenna_outputs(const AntennaRun &run, const std::string &scenario, MeshMode mode,
                                  const std::filesystem::path &dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::string ts, pat;
    if (run.S) {
        ts = (dir / touchstone_name(scenario, run.S->ports())).string();
        write_touchstone(*run.S, ts);
    }
    if (run.combined) {
        pat = (dir / "pattern.csv").string();
        std::ostringstream os;
        write_pattern_csv(*run.combined, run.gain_db, os);
        write_text(pat, os.str());
        for (double phi : {0.0, 90.0}) {
            const auto cut = resample_cut(*run.combined, run.gain_db, phi, 0.5);
            const std::string tag = phi == 0 ? "phi0" : "phi90";
            std::ostringstream c, p;
            write_cut_csv(cut, phi, c);
            write_polar_cut(cut, phi, p);
            write_text(dir / ("cut_" + tag + ".csv"), c.str());
            write_text(dir / ("polar_" + tag + ".dat"), p.str());
        }
    }
    json s;
    s["disclaimer"] = mode == MeshMode::coarse ? coarse_disclaimer : fine_disclaimer;
    s["scenario"] = scenario;
    s["mesh_mode"] = mode == MeshMode::coarse ? "coarse" : "fine";
    // same arithmetic as re-reading the manifest values
    s["metrics"] = metrics_from_files(ts, pat, footprint_area(run.scene) * 1e6 * 1e-6, run.pattern_freq / 1e9 * 1e9,
                                      run.polarization);
    json conv = json::array();
    for (std::size_t p = 0; p < run.converged.size(); ++p) {
        json c = {{"port", p + 1}};
        if (run.converged[p] < 0)
            c["status"] = "failed";
        else
            c["status"] = run.converged[p] ? "converged" : "step limit reached";
        conv.push_back(c);
    }
    s["convergence"] = conv;
    json err = json::array();
    for (const auto &e : run.errors) err.push_back(e);
    s["errors"] = err;
    return s;
}

// ------------------------------------------------------------------------------------------------
// AMC unit cell
// ------------------------------------------------------------------------------------------------

struct AmcResult {
    PhaseCurve analytic, fdtd;
};

inline json band_json(const std::optional<std::array<double, 2>> &b) {
    if (!b) return detail::unavailable("no 0 deg crossing in the frequency range");
    return {{"f_lo_ghz", detail::r9((*b)[0] / 1e9)},
            {"f_hi_ghz", detail::r9((*b)[1] / 1e9)},
            {"bandwidth_ghz", detail::r9(((*b)[1] - (*b)[0]) / 1e9)}};
}

inline AmcResult simulate_amc(const AmcCellParams &p, const RunSettings &rs, bool with_fdtd = true) {
    p.check();
    const std::vector<double> freqs = rs.freqs.empty() ? default_amc_freqs() : rs.freqs;
    AmcResult r;
    r.analytic = analytic_phase(p, freqs);
    if (with_fdtd) {
        AmcFdtdOptions o;
        o.threads = rs.threads;
        r.fdtd = reflection_phase_fdtd(AmcCellKind::mushroom, p, freqs, o);
    }
    return r;
}

inline json amc_circuit(const AmcCellParams &p) {
    return {{"period_mm", detail::r9(p.period() * 1e3)},
            {"inductance_nh", detail::r9(p.inductance() * 1e9)},
            {"capacitance_pf", detail::r9(p.capacitance() * 1e12)},
            {"resonance_ghz", detail::r9(p.resonance() / 1e9)}};
}

inline json amc_summary(const AmcCellParams &p, const AmcResult &r) {
    json s;
    s["circuit"] = amc_circuit(p);
    s["band_analytic"] = band_json(amc_band(r.analytic));
    s["band_fdtd"] = r.fdtd.freqs.empty() ? detail::unavailable("FDTD cell not run") : band_json(amc_band(r.fdtd));
    return s;
}

} // namespace yeefield

#endif
