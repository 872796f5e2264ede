// Copyright 2026 The yeefield Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance runner: one PASS/FAIL line per criterion. Tolerances are pinned below.

#include "yeefield/experiment.hpp"
#include "yeefield/oracles.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>

namespace fs = std::filesystem;
using namespace yeefield;

namespace {

// ---- pinned tolerances ------------------------------------------------------------------------
constexpr double dipole_target_dbi = 1.76, dipole_tol_db = 0.1, dipole_time_s = 60;
constexpr double energy_drift_max = 1e-3, energy_time_s = 60;
constexpr double cpml_max_db = -60.0, cpml_time_s = 120;
constexpr double reciprocity_max = 1e-3, reciprocity_time_s = 300;
constexpr double cavity_rel_tol = 0.05, cavity_time_s = 600;
constexpr double aperture_target = 0.689, aperture_tol = 0.005;
constexpr double frame_depth_db = 3.0, single_run_time_s = 600;
constexpr double symmetry_tol_db = 0.2, hpbw_rel_tol = 0.15, array_run_time_s = 1800;
constexpr double isolation_slack_db = 3.0;
constexpr double pec_phase_tol_deg = 2.0, slab_phase_tol_deg = 5.0, amc_time_s = 300;
constexpr double touchstone_tol = 1e-12, hpbw_tol_deg = 0.1, bandwidth_fixture_tol = 1e-12;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char *f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

class Timer {
public:
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string timing(double s, double limit) { return fmt("%.1f s", s) + (s < limit ? " < " : " >= ") + fmt("%.0f s", limit); }

// Shared scenario runs, computed on first use.
struct Runs {
    RunSettings settings;
    std::map<ScenarioKind, std::pair<AntennaRun, double>> cache;

    const std::pair<AntennaRun, double> &get(ScenarioKind k) {
        auto it = cache.find(k);
        if (it != cache.end()) return it->second;
        ScenarioConfig c;
        c.kind = k;
        const Timer t;
        AntennaRun r = simulate_antenna(c, settings);
        return cache.emplace(k, std::make_pair(std::move(r), t.seconds())).first->second;
    }
};

double min_db(const std::vector<double> &v) { return *std::min_element(v.begin(), v.end()); }

// ---- criteria -----------------------------------------------------------------------------------

Outcome c1_dipole(Runs &) {
    const Timer t;
    const auto r = oracles::hertzian_dipole();
    const double s = t.seconds();
    return {std::abs(r.directivity_dbi - dipole_target_dbi) <= dipole_tol_db && s < dipole_time_s,
            "D = " + fmt("%.3f dBi", r.directivity_dbi) + " (1.76 +- 0.1), z-axis null " +
                fmt("%.1f dB", r.null_depth_db) + ", " + timing(s, dipole_time_s)};
}

Outcome c2_energy(Runs &) {
    const Timer t;
    const double d = oracles::closed_box_energy_drift();
    const double s = t.seconds();
    return {d < energy_drift_max && s < energy_time_s,
            "max drift " + fmt("%.2e", d) + " over 1000 steps (< 1e-3), " + timing(s, energy_time_s)};
}

Outcome c3_cpml(Runs &) {
    const Timer t;
    const double w = oracles::cpml_reflection_db();
    const double s = t.seconds();
    return {w < cpml_max_db && s < cpml_time_s,
            "worst reflection " + fmt("%.1f dB", w) + " over 22-34 GHz (< -60 dB), " + timing(s, cpml_time_s)};
}

Outcome c4_reciprocity(Runs &runs) {
    const auto &[r, s] = runs.get(ScenarioKind::single_no_frame);
    if (!r.S) return {false, "S-matrix unavailable"};
    double worst = 0;
    for (const auto &m : r.S->s) worst = std::max(worst, std::abs(m(0, 1) - m(1, 0)));
    return {worst < reciprocity_max && s < reciprocity_time_s,
            "max |S12 - S21| = " + fmt("%.2e", worst) + " over 22-34 GHz (< 1e-3), coarse single element, " +
                timing(s, reciprocity_time_s)};
}

Outcome c5_cavity(Runs &) {
    const Timer t;
    const oracles::PatchSpec p;
    const auto r = oracles::rect_patch_resonance(p);
    const double s = t.seconds();
    const double err = r.resonance / r.oracle - 1;
    return {std::abs(err) <= cavity_rel_tol && s < cavity_time_s,
            "L 3.0 mm W 4.0 mm h 0.254 mm: FDTD " + fmt("%.3f GHz", r.resonance / 1e9) + " vs cavity model " +
                fmt("%.3f GHz", r.oracle / 1e9) + " (" + fmt("%+.1f%%", 100 * err) + ", limit 5%), " +
                timing(s, cavity_time_s)};
}

Outcome c6_aperture(Runs &) {
    const double eta = aperture_efficiency(11.81, 14.178e-3 * 14.178e-3, 28e9);
    return {std::abs(eta - aperture_target) <= aperture_tol, "eta = " + fmt("%.4f", eta) + " (0.689 +- 0.005)"};
}

Outcome c7_frame(Runs &runs) {
    const auto &[bare, s0] = runs.get(ScenarioKind::single_no_frame);
    const auto &[framed, s1] = runs.get(ScenarioKind::single_with_frame);
    if (!bare.S || !framed.S) return {false, "S-matrix unavailable"};
    const double m0 = min_db(bare.S->trace_db(1, 1)), m1 = min_db(framed.S->trace_db(1, 1));
    const auto band = bandwidth_at_threshold(framed.S->freqs, framed.S->trace_db(1, 1));
    const bool band_ok = !band || band->contains(28e9);
    const bool pass = m1 <= m0 - frame_depth_db && band_ok && s0 < single_run_time_s && s1 < single_run_time_s;
    std::string d = "min |S11| " + fmt("%.2f dB", m1) + " framed vs " + fmt("%.2f dB", m0) +
                    " bare (needs >= 3 dB deeper), -10 dB band ";
    d += band ? fmt("%.2f", band->f_lo / 1e9) + "-" + fmt("%.2f GHz", band->f_hi / 1e9) : std::string("none");
    d += ", runs " + fmt("%.0f s", s0) + " / " + fmt("%.0f s", s1) + " (< 600 s)";
    return {pass, d};
}

Outcome c8_symmetry(Runs &runs) {
    const auto &[r, s] = runs.get(ScenarioKind::array_with_frame);
    if (!r.combined) return {false, "far field unavailable"};
    const FarField &ff = *r.combined;
    const auto &g = r.gain_db;
    const std::size_t np = ff.phi.size();
    double worst = 0, worst_main = 0;
    const double peak = pattern_peak(ff, g).value;
    for (std::size_t it = 0; it < ff.theta.size(); ++it)
        for (std::size_t ip = 0; ip < np; ++ip) {
            const std::size_t a = ff.at(it, ip), b = ff.at(it, (np - ip) % np);
            const double d = std::abs(g[a] - g[b]);
            worst = std::max(worst, d);
            if (std::max(g[a], g[b]) > peak - 20) worst_main = std::max(worst_main, d);
        }
    std::string hp = "HPBW unavailable";
    bool hp_ok = false;
    try {
        const double h0 = hpbw(ff, g, 0.0), h90 = hpbw(ff, g, 90.0);
        const double rel = std::abs(h0 - h90) / (0.5 * (h0 + h90));
        hp_ok = rel < hpbw_rel_tol;
        hp = "HPBW " + fmt("%.1f", h0) + "/" + fmt("%.1f deg", h90) + " (diff " + fmt("%.1f%%", 100 * rel) + ", < 15%)";
    } catch (const Error &e) {
        hp += std::string(": ") + e.what();
    }
    return {worst <= symmetry_tol_db && hp_ok && s < array_run_time_s,
            "max |G(t,p) - G(t,-p)| " + fmt("%.3f dB", worst) + " grid-wide (<= 0.2; " + fmt("%.3f dB", worst_main) +
                " within 20 dB of peak), " + hp + ", 8-port run " + timing(s, array_run_time_s)};
}

std::pair<Isolation, int> array_isolation(const SMatrix &S) {
    Isolation worst;
    int src = 0;
    for (int p = 1; p <= S.ports(); ++p) {
        const auto b = operating_band(S, p);
        const std::array<double, 2> clip = {std::max(b[0], S.freqs.front()), std::min(b[1], S.freqs.back())};
        const Isolation iso = worst_isolation(S, p, clip);
        if (iso.db > worst.db) worst = iso, src = p;
    }
    return {worst, src};
}

Outcome c9_isolation(Runs &runs) {
    const auto &[bare, s0] = runs.get(ScenarioKind::array_no_frame);
    const auto &[framed, s1] = runs.get(ScenarioKind::array_with_frame);
    if (!bare.S || !framed.S) return {false, "S-matrix unavailable"};
    const auto [wf, pf] = array_isolation(*framed.S);
    const auto [wb, pb] = array_isolation(*bare.S);
    const auto band = operating_band(*framed.S, pf);
    const bool in_band = wf.freq >= std::max(band[0], framed.S->freqs.front()) && wf.freq <= band[1];
    const bool pass = std::isfinite(wf.db) && in_band && wf.db <= wb.db + isolation_slack_db;
    return {pass, "framed worst " + fmt("%.2f dB", wf.db) + " (S" + std::to_string(wf.victim) + "," +
                      std::to_string(pf) + " at " + fmt("%.2f GHz", wf.freq / 1e9) + "), bare worst " +
                      fmt("%.2f dB", wb.db) + " (S" + std::to_string(wb.victim) + "," + std::to_string(pb) +
                      "), framed <= bare + 3 dB"};
}

Outcome c10_amc(Runs &) {
    const Timer t;
    const AmcCellParams p;
    const double dc = std::abs(reflection_phase(surface_impedance(p, 1.0)));
    const double res = reflection_phase(surface_impedance(p, p.resonance()));
    std::vector<double> fine;
    for (double f = 1e9; f <= 20e9 + 1; f += 0.01e9) fine.push_back(f);
    const auto band = amc_band(p, fine);
    double edge_err = 1e9;
    if (band)
        edge_err = std::max(std::abs(reflection_phase(surface_impedance(p, (*band)[0])) - 90.0),
                            std::abs(reflection_phase(surface_impedance(p, (*band)[1])) + 90.0));
    std::vector<double> f;
    for (double x = 4e9; x <= 14e9 + 1; x += 1e9) f.push_back(x);
    const PhaseCurve pec = reflection_phase_fdtd(AmcCellKind::pec_sheet, p, f);
    const PhaseCurve slab = reflection_phase_fdtd(AmcCellKind::grounded_slab, p, f);
    double pec_err = 0, slab_err = 0;
    for (std::size_t n = 0; n < f.size(); ++n) {
        pec_err = std::max(pec_err, 180.0 - std::abs(pec.phase_deg[n]));
        slab_err = std::max(slab_err, std::abs(std::remainder(slab.phase_deg[n] - slab_phase(p, f[n]), 360.0)));
    }
    const double s = t.seconds();
    const bool pass = std::abs(dc - 180) < 0.01 && std::abs(res) <= 0.1 && edge_err <= 0.5 &&
                      pec_err <= pec_phase_tol_deg && slab_err <= slab_phase_tol_deg && s < amc_time_s;
    return {pass, "analytic DC " + fmt("%.3f", dc) + ", f_res " + fmt("%.3f", res) + ", band-edge error " +
                      fmt("%.3f deg", edge_err) + "; FDTD PEC error " + fmt("%.2f deg", pec_err) +
                      " (<= 2), slab error " + fmt("%.2f deg", slab_err) + " (<= 5), " + timing(s, amc_time_s)};
}

Outcome c11_formats(Runs &) {
    std::mt19937 rng(2026);
    std::normal_distribution<double> nd;
    double ts_err = 0;
    for (int trial = 0; trial < 5; ++trial) {
        SMatrix S;
        for (int k = 0; k < 7; ++k) S.freqs.push_back(24e9 + k * 1.0e9 + trial * 0.0123e9);
        for (std::size_t k = 0; k < S.freqs.size(); ++k) {
            Eigen::MatrixXcd m(8, 8);
            for (int i = 0; i < 8; ++i)
                for (int j = 0; j < 8; ++j) m(i, j) = cplx(nd(rng), nd(rng));
            m /= 1.01 * Eigen::JacobiSVD<Eigen::MatrixXcd>(m).singularValues()(0);  // strictly passive
            S.s.push_back(m);
        }
        std::stringstream ss;
        write_touchstone(S, ss);
        const SMatrix R = read_touchstone(ss, 8);
        for (std::size_t k = 0; k < S.freqs.size(); ++k) {
            ts_err = std::max(ts_err, std::abs(R.freqs[k] - S.freqs[k]) / S.freqs[k]);
            ts_err = std::max(ts_err, (R.s[k] - S.s[k]).cwiseAbs().maxCoeff());
        }
    }
    double hp_err = 0;
    for (int q = 1; q <= 10; ++q) {
        FarField ff;
        ff.freq = 28e9;
        const AngleGrid grid{1.0, true};
        ff.theta = grid.thetas();
        ff.phi = grid.phis();
        ff.upper_only = true;
        for (double th : ff.theta)
            for (std::size_t ip = 0; ip < ff.phi.size(); ++ip) {
                ff.e_theta.push_back(std::pow(std::cos(th * pi / 180), q));
                ff.e_phi.push_back(0.0);
            }
        const auto g = gain_pattern(ff, 1.0);
        const double expect = 2 * std::acos(std::pow(2.0, -1.0 / (2 * q))) * 180 / pi;
        for (double phi : {0.0, 90.0}) hp_err = std::max(hp_err, std::abs(hpbw(ff, g, phi) - expect));
    }
    const auto b = bandwidth_at_threshold({27e9, 27.5e9, 28.5e9, 29e9}, {-8, -12, -12, -8});
    const double bw = b ? b->bandwidth() / 1e9 : 0;
    const bool pass = ts_err <= touchstone_tol && hp_err <= hpbw_tol_deg && std::abs(bw - 1.5) <= bandwidth_fixture_tol;
    return {pass, "Touchstone 8-port round-trip error " + fmt("%.1e", ts_err) + " (<= 1e-12), cos^2q HPBW error " +
                      fmt("%.4f deg", hp_err) + " (<= 0.1), fixture bandwidth " + fmt("%.15g GHz", bw)};
}

Outcome c12_determinism(Runs &) {
    const fs::path base = fs::temp_directory_path() / "yeefield_acceptance_determinism";
    fs::remove_all(base);
    const std::string cli = YEEFIELD_CLI_PATH;
    for (const char *d : {"a", "b"}) {
        const std::string cmd = "\"" + cli + "\" run single_no_frame --out \"" + (base / d).string() + "\" > \"" +
                                (base / (std::string(d) + ".log")).string() + "\" 2>&1";
        fs::create_directories(base);
        if (std::system(cmd.c_str()) != 0) return {false, "cmd_run failed: " + cmd};
    }
    int compared = 0;
    std::vector<std::string> differ;
    for (const auto &e : fs::directory_iterator(base / "a")) {
        const std::string name = e.path().filename().string();
        if (name == "manifest.json") continue;  // holds the timestamp
        std::ifstream fa(e.path(), std::ios::binary), fb(base / "b" / name, std::ios::binary);
        const std::string a((std::istreambuf_iterator<char>(fa)), {}), b((std::istreambuf_iterator<char>(fb)), {});
        ++compared;
        if (a != b || !fb) differ.push_back(name);
    }
    std::string d = std::to_string(compared) + " output files compared byte for byte";
    for (const auto &n : differ) d += ", differs: " + n;
    const bool pass = differ.empty() && compared >= 5;
    if (pass) fs::remove_all(base);
    return {pass, d};
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"yeefield acceptance checks"};
    std::vector<int> only;
    app.add_option("--only", only, "criterion numbers to run (default: all)")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Outcome(Runs &)>>> checks = {
        {"Hertzian-dipole directivity", c1_dipole},
        {"closed-box energy conservation", c2_energy},
        {"CPML normal-incidence reflection", c3_cpml},
        {"two-port reciprocity", c4_reciprocity},
        {"cavity-model patch resonance", c5_cavity},
        {"aperture-efficiency cross-check", c6_aperture},
        {"frame matching trend", c7_frame},
        {"framed-array pattern symmetry", c8_symmetry},
        {"framed-array isolation trend", c9_isolation},
        {"AMC reflection-phase suite", c10_amc},
        {"Touchstone, HPBW and bandwidth fixtures", c11_formats},
        {"run determinism", c12_determinism},
    };
    const std::set<int> sel(only.begin(), only.end());
    Runs runs;
    if (const char *t = std::getenv("YEEFIELD_THREADS")) runs.settings.threads = std::max(1, std::atoi(t));
    int failed = 0;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        const int n = static_cast<int>(i) + 1;
        if (!sel.empty() && !sel.count(n)) continue;
        Outcome o;
        try {
            o = checks[i].second(runs);
        } catch (const std::exception &e) {
            o = {false, std::string("error: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << n << " " << checks[i].first << ": " << o.detail << std::endl;
    }
    return failed ? 1 : 0;
}
