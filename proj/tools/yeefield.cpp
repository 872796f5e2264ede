// Copyright 2026 The yeefield Authors
// SPDX-License-Identifier: Apache-2.0

#include "yeefield/experiment.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using namespace yeefield;

namespace {

struct Args {
    std::string command, target, config, mesh = "coarse", freqs, weights = "odd", out;
    std::vector<std::string> sets;
};

int env_threads() {
    const char *s = std::getenv("YEEFIELD_THREADS");
    if (!s || !*s) return 1;
    const int n = static_cast<int>(detail::parse_double("YEEFIELD_THREADS", s));
    if (n < 1) throw ConfigError("YEEFIELD_THREADS must be a positive integer");
    return n;
}

std::pair<std::string, std::string> split_set(const std::string &kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + kv + "'");
    return {kv.substr(0, eq), kv.substr(eq + 1)};
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

RunSettings settings_of(const Args &a) {
    RunSettings rs;
    if (a.mesh == "coarse")
        rs.mesh = MeshMode::coarse;
    else if (a.mesh == "fine")
        rs.mesh = MeshMode::fine;
    else
        throw ConfigError("--mesh must be coarse or fine");
    if (!a.freqs.empty()) rs.freqs = parse_freq_range(a.freqs);
    rs.weights = a.weights;
    rs.threads = env_threads();
    return rs;
}

ScenarioConfig load_config(const Args &a, const std::vector<std::pair<std::string, std::string>> &sets) {
    ScenarioConfig c;
    c.kind = parse_scenario(a.target);
    if (!a.config.empty()) load_config_file(c, a.config);
    for (const auto &[k, v] : sets) set_config_value(c, k, v);
    return c;
}

std::vector<std::pair<std::string, std::string>> parse_sets(const Args &a) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto &s : a.sets) out.push_back(split_set(s));
    return out;
}

fs::path out_dir(const Args &a) { return a.out.empty() ? fs::path("yeefield_out") / a.target : fs::path(a.out); }

void write_json(const fs::path &p, const json &j) { write_text(p, j.dump(2) + "\n"); }

// ------------------------------------------------------------------------------------------------

int cmd_build(const Args &a) {
    const ScenarioConfig c = load_config(a, parse_sets(a));
    const fs::path dir = out_dir(a);
    fs::create_directories(dir);
    write_text(dir / "config.ini", canonical_config(c));
    if (c.is_amc()) {
        c.amc.check();
        const json s = amc_circuit(c.amc);
        write_json(dir / "amc_cell.json", s);
        std::cout << s.dump(2) << "\n";
        return 0;
    }
    const Scene sc = build_scenario_scene(c);
    const auto diags = validate_scene(sc);
    for (const Diagnostic &d : diags) std::cerr << "error: " << d.rule << ": " << d.message << "\n";
    if (!diags.empty()) return 1;
    const RunSettings rs = settings_of(a);
    const YeeGrid g = generate_mesh(sc, MeshPolicy::for_scene(sc, rs.mesh));
    write_text(dir / "scene.txt", dump_scene(sc));
    write_text(dir / "mesh.txt", dump_mesh(g));
    json st = mesh_stats(g, cfl_timestep(g, 0.99));
    st["ports"] = sc.ports.size();
    st["vias"] = sc.count_tag("via");
    write_json(dir / "mesh_stats.json", st);
    std::cout << a.target << ": " << sc.ports.size() << " ports, " << sc.count_tag("via") << " vias, "
              << sc.primitives.size() << " primitives\n"
              << st.dump(2) << "\n";
    return 0;
}

json manifest(const ScenarioConfig &c, const std::string &command) {
    json m;
    m["software"] = "yeefield";
    m["version"] = YEEFIELD_VERSION;
    m["command"] = command;
    m["config_hash"] = config_hash(canonical_config(c));
    m["created_utc"] = utc_now();
    m["threads"] = env_threads();
    return m;
}

/// One run into `dir`; returns the summary (with an "errors" list).
json run_once(const ScenarioConfig &c, const RunSettings &rs, const fs::path &dir, const std::string &command) {
    fs::create_directories(dir);
    write_text(dir / "config.ini", canonical_config(c));
    json man = manifest(c, command);
    if (c.is_amc()) {
        const AmcResult r = simulate_amc(c.amc, rs);
        std::ostringstream os;
        write_phase_csv({r.analytic, r.fdtd}, os);
        write_text(dir / "phase.csv", os.str());
        json s;
        s["scenario"] = "amc_cell";
        s["amc"] = amc_summary(c.amc, r);
        s["errors"] = json::array();
        write_json(dir / "summary.json", s);
        write_json(dir / "manifest.json", man);
        return s;
    }
    const AntennaRun run = simulate_antenna(c, rs);
    const std::string name = scenario_name(c.kind);
    json s = write_antenna_outputs(run, name, rs.mesh, dir);
    man["mesh"] = mesh_stats(run.grid, run.dt);
    json steps = json::array();
    for (const Recordings &r : run.runs) steps.push_back({{"port", r.excited}, {"steps", r.steps}});
    man["steps"] = steps;
    man["pattern_freq_ghz"] = run.pattern_freq / 1e9;
    man["aperture_area_mm2"] = footprint_area(run.scene) * 1e6;
    man["polarization"] = run.polarization == Polarization::x ? "x" : "y";
    man["weights"] = rs.weights;
    write_json(dir / "summary.json", s);
    write_json(dir / "manifest.json", man);
    return s;
}

std::string command_line(int argc, char **argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
    return s;
}

int cmd_run(const Args &a, const std::string &cmdline) {
    const ScenarioConfig c = load_config(a, parse_sets(a));
    const json s = run_once(c, settings_of(a), out_dir(a), cmdline);
    std::cout << s.dump(2) << "\n";
    for (const auto &e : s["errors"]) std::cerr << "error: " << e.get<std::string>() << "\n";
    return s["errors"].empty() ? 0 : 1;
}

/// metrics <run-dir | file.sNp> [--set pattern=PATH] [--set area_mm2=A] [--set freq_ghz=F]
///                              [--set polarization=x|y]
int cmd_metrics(const Args &a) {
    std::string ts, pat;
    double area = 0, freq = 28e9;
    Polarization pol = Polarization::x;
    const fs::path target(a.target);
    if (fs::is_directory(target)) {
        for (const auto &e : fs::directory_iterator(target)) {
            const std::string ext = e.path().extension().string();
            if (ext.size() > 3 && ext[1] == 's' && ext.back() == 'p') ts = e.path().string();
        }
        if (fs::exists(target / "pattern.csv")) pat = (target / "pattern.csv").string();
        if (fs::exists(target / "manifest.json")) {
            std::ifstream is(target / "manifest.json");
            const json m = json::parse(is);
            if (m.contains("pattern_freq_ghz")) freq = m["pattern_freq_ghz"].get<double>() * 1e9;
            if (m.contains("aperture_area_mm2")) area = m["aperture_area_mm2"].get<double>() * 1e-6;
            if (m.contains("polarization")) pol = m["polarization"] == "y" ? Polarization::y : Polarization::x;
        }
    } else if (target.extension() == ".csv") {
        pat = target.string();
    } else {
        ts = target.string();
    }
    for (const auto &[k, v] : parse_sets(a)) {
        if (k == "pattern")
            pat = v;
        else if (k == "touchstone")
            ts = v;
        else if (k == "area_mm2")
            area = detail::parse_double(k, v) * 1e-6;
        else if (k == "side_mm")
            area = std::pow(detail::parse_double(k, v) * 1e-3, 2);
        else if (k == "freq_ghz")
            freq = detail::parse_double(k, v) * 1e9;
        else if (k == "polarization") {
            if (v != "x" && v != "y") throw ConfigError("polarization must be x or y");
            pol = v == "x" ? Polarization::x : Polarization::y;
        } else
            throw ConfigError("unknown metrics parameter '" + k +
                              "'; valid names: pattern touchstone area_mm2 side_mm freq_ghz polarization");
    }
    if (ts.empty() && pat.empty()) throw ConfigError("metrics needs a Touchstone file or a pattern CSV");
    const json m = metrics_from_files(ts, pat, area, freq, pol);
    if (!a.out.empty()) {
        fs::create_directories(a.out);
        write_json(fs::path(a.out) / "metrics.json", m);
    }
    std::cout << m.dump(2) << "\n";
    return 0;
}

/// The swept parameter is the --set whose value is a list (a,b,c) or a range (start:stop:step).
int cmd_sweep(const Args &a, const std::string &cmdline) {
    auto sets = parse_sets(a);
    std::string param;
    std::vector<std::string> values;
    std::vector<std::pair<std::string, std::string>> fixed;
    for (const auto &[k, v] : sets) {
        const bool list = v.find(',') != std::string::npos, range = v.find(':') != std::string::npos;
        if (!list && !range) {
            fixed.emplace_back(k, v);
            continue;
        }
        if (!param.empty()) throw ConfigError("sweep takes exactly one list- or range-valued --set");
        param = k;
        if (list) {
            std::stringstream ss(v);
            std::string item;
            while (std::getline(ss, item, ',')) values.push_back(item);
        } else {
            std::vector<double> r;
            std::stringstream ss(v);
            std::string item;
            while (std::getline(ss, item, ':')) r.push_back(detail::parse_double(k, item));
            if (r.size() != 3 || !(r[2] > 0) || r[1] < r[0]) throw ConfigError(k + ": range must be start:stop:step");
            const long n = static_cast<long>(std::floor((r[1] - r[0]) / r[2] + 1e-9));
            for (long i = 0; i <= n; ++i) values.push_back(detail::fmt_value(r[0] + i * r[2]));
        }
    }
    if (param.empty()) {
        // a single point: every --set is fixed, the first one names the column
        if (fixed.empty()) throw ConfigError("sweep needs --set name=v1,v2,... or name=start:stop:step");
        param = fixed.front().first;
        values = {fixed.front().second};
        fixed.erase(fixed.begin());
    }
    ScenarioConfig base = load_config(a, fixed);
    {
        ScenarioConfig probe = base;
        set_config_value(probe, param, values.front());  // rejects unknown names up front
    }
    const RunSettings rs = settings_of(a);
    const fs::path dir = out_dir(a);
    fs::create_directories(dir);
    std::ostringstream csv;
    bool failed = false;
    if (base.is_amc())
        csv << param << ",analytic_f_lo_ghz,analytic_f_hi_ghz,fdtd_f_lo_ghz,fdtd_f_hi_ghz,resonance_ghz\n";
    else
        csv << param << ",matched,mean_bandwidth_ghz,worst_isolation_db,peak_gain_dbi,hpbw_phi0_deg,hpbw_phi90_deg,"
                        "aperture_efficiency,xpd_phi0_db,xpd_phi90_db,errors\n";
    auto num = [](const json &j) -> std::string {
        if (j.is_number()) return detail::csv_num(j.get<double>());
        return "";
    };
    for (std::size_t i = 0; i < values.size(); ++i) {
        ScenarioConfig c = base;
        set_config_value(c, param, values[i]);
        const fs::path pd = dir / ("point_" + std::to_string(i));
        json s;
        try {
            s = run_once(c, rs, pd, cmdline);
        } catch (const Error &e) {
            s["errors"] = json::array({e.what()});
            failed = true;
            std::cerr << "error: " << param << "=" << values[i] << ": " << e.what() << "\n";
            csv << values[i] << (base.is_amc() ? ",,,,," : ",,,,,,,,,,1") << "\n";
            continue;
        }
        if (!s["errors"].empty()) failed = true;
        csv << values[i];
        if (base.is_amc()) {
            const json &m = s["amc"];
            for (const char *b : {"band_analytic", "band_fdtd"})
                csv << ',' << num(m[b].value("f_lo_ghz", json())) << ',' << num(m[b].value("f_hi_ghz", json()));
            csv << ',' << num(m["circuit"]["resonance_ghz"]) << "\n";
        } else {
            const json &m = s["metrics"];
            const json bw = m["bandwidth"].is_object() ? m["bandwidth"] : json::object();
            csv << ',' << bw.value("matched", std::string()) << ',' << num(bw.value("mean_bandwidth_ghz", json()))
                << ',' << num(m["isolation"].value("worst_db", json())) << ','
                << num(m["gain"].value("peak_dbi", json())) << ',' << num(m["hpbw"].value("phi0_deg", json())) << ','
                << num(m["hpbw"].value("phi90_deg", json())) << ','
                << num(m["aperture_efficiency"].value("value", json())) << ','
                << num(m["xpd"].value("phi0_db", json())) << ',' << num(m["xpd"].value("phi90_db", json())) << ','
                << s["errors"].size() << "\n";
        }
    }
    write_text(dir / "sweep.csv", csv.str());
    std::cout << csv.str();
    return failed ? 1 : 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"yeefield: FDTD antenna and unit-cell experiments"};
    app.require_subcommand(1);
    Args a;
    std::map<std::string, CLI::App *> subs;
    const std::map<std::string, std::string> help = {
        {"build", "validate a scenario and write its scene dump and mesh report"},
        {"run", "simulate a scenario: Touchstone, patterns, polar cuts, metrics summary"},
        {"metrics", "metrics from a run directory, a Touchstone file or a pattern CSV"},
        {"sweep", "run a scenario over a list or range of one parameter"}};
    for (const auto &[name, text] : help) {
        CLI::App *s = app.add_subcommand(name, text);
        s->add_option("target", a.target, name == "metrics" ? "run directory or file" : "scenario")->required();
        s->add_option("--config", a.config, "INI scenario file");
        s->add_option("--mesh", a.mesh, "coarse or fine")->check(CLI::IsMember({"coarse", "fine"}));
        s->add_option("--freqs", a.freqs, "GHZ_START:GHZ_STOP:GHZ_STEP");
        s->add_option("--weights", a.weights, "odd, even, all or a comma list");
        s->add_option("--set", a.sets, "key=value override (repeatable)");
        s->add_option("--out", a.out, "output directory");
        subs[name] = s;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    const std::string cmdline = command_line(argc, argv);
    try {
        if (*subs["build"]) return cmd_build(a);
        if (*subs["run"]) return cmd_run(a, cmdline);
        if (*subs["metrics"]) return cmd_metrics(a);
        if (*subs["sweep"]) return cmd_sweep(a, cmdline);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
