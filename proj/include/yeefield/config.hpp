// Copyright 2026 The yeefield Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef YEEFIELD_CONFIG_HPP
#define YEEFIELD_CONFIG_HPP

#include "amc.hpp"
#include "error.hpp"
#include "scene.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

namespace yeefield {

enum class ScenarioKind { single_no_frame, single_with_frame, array_no_frame, array_with_frame, amc_cell };

inline const std::vector<std::string> &scenario_names() {
    static const std::vector<std::string> n = {"single_no_frame", "single_with_frame", "array_no_frame",
                                               "array_with_frame", "amc_cell"};
    return n;
}

inline ScenarioKind parse_scenario(const std::string &s) {
    const auto &n = scenario_names();
    for (std::size_t i = 0; i < n.size(); ++i)
        if (n[i] == s) return static_cast<ScenarioKind>(i);
    std::string all;
    for (const auto &x : n) all += " " + x;
    throw ConfigError("unknown scenario '" + s + "'; expected one of:" + all);
}

inline const std::string &scenario_name(ScenarioKind k) { return scenario_names()[static_cast<std::size_t>(k)]; }

/// Every setting of a scenario. Lengths are metres internally; keys use millimetres.
struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::single_with_frame;
    ElementParams element;
    AmcCellParams amc;
    double port_impedance = 50.0;

    bool is_amc() const { return kind == ScenarioKind::amc_cell; }
    bool is_array() const { return kind == ScenarioKind::array_no_frame || kind == ScenarioKind::array_with_frame; }
    bool with_frame() const {
        return kind == ScenarioKind::single_with_frame || kind == ScenarioKind::array_with_frame;
    }
};

namespace detail {

struct KeyRef {
    std::string section, name;
    double scale;
    double *target;
};

inline std::vector<KeyRef> element_keys(ScenarioConfig &c) {
    ElementParams &p = c.element;
    return {
        {"material", "eps_r", 1.0, &p.eps_r},
        {"material", "tan_delta", 1.0, &p.tan_delta},
        {"material", "f0_ghz", 1e9, &p.f0},
        {"element", "w_s_mm", 1e-3, &p.w_s},
        {"element", "h_mm", 1e-3, &p.h},
        {"element", "l_p_mm", 1e-3, &p.l_p},
        {"element", "w_p_mm", 1e-3, &p.w_p},
        {"element", "s_mm", 1e-3, &p.s},
        {"element", "g_mm", 1e-3, &p.g},
        {"element", "w_pa_mm", 1e-3, &p.w_pa},
        {"element", "l_f_mm", 1e-3, &p.l_f},
        {"array", "w_ebg_mm", 1e-3, &p.w_ebg},
        {"array", "l_ebg_mm", 1e-3, &p.l_ebg},
        {"array", "v_ebg_mm", 1e-3, &p.v_ebg},
        {"array", "frame_margin_mm", 1e-3, &p.frame_margin},
        {"ports", "impedance_ohm", 1.0, &c.port_impedance},
    };
}

inline std::vector<KeyRef> amc_keys(ScenarioConfig &c) {
    AmcCellParams &a = c.amc;
    return {
        {"material", "eps_r", 1.0, &a.eps_r},
        {"element", "w_mm", 1e-3, &a.w},
        {"element", "gap_mm", 1e-3, &a.gap},
        {"element", "h_mm", 1e-3, &a.h},
        {"element", "via_radius_mm", 1e-3, &a.via_radius},
    };
}

inline std::vector<KeyRef> keys_of(ScenarioConfig &c) { return c.is_amc() ? amc_keys(c) : element_keys(c); }

inline double parse_double(const std::string &key, const std::string &v) {
    double x = 0;
    const char *b = v.data(), *e = v.data() + v.size();
    while (b < e && *b == ' ') ++b;
    while (e > b && e[-1] == ' ') --e;
    const auto [end, ec] = std::from_chars(b, e, x);
    if (ec != std::errc() || end != e) throw ConfigError(key + ": '" + v + "' is not a number");
    return x;
}

inline std::string fmt_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

} // namespace detail

/// Names accepted by --set and sweeps for a scenario.
inline std::vector<std::string> config_key_names(ScenarioKind k) {
    ScenarioConfig c;
    c.kind = k;
    std::vector<std::string> out;
    for (const auto &r : detail::keys_of(c)) out.push_back(r.name);
    return out;
}

inline void set_config_value(ScenarioConfig &c, const std::string &key, const std::string &value) {
    for (auto &r : detail::keys_of(c))
        if (r.name == key) {
            *r.target = detail::parse_double(key, value) * r.scale;
            return;
        }
    std::string all;
    for (const auto &n : config_key_names(c.kind)) all += " " + n;
    throw ConfigError("unknown parameter '" + key + "' for " + scenario_name(c.kind) + "; valid names:" + all);
}

inline std::string get_config_value(ScenarioConfig &c, const std::string &key) {
    for (auto &r : detail::keys_of(c))
        if (r.name == key) return detail::fmt_value(*r.target / r.scale);
    throw ConfigError("unknown parameter '" + key + "'");
}

/// Reads an INI file with sections [material] [element] [array] [ports]; an optional
/// top-level `scenario` key must agree with the scenario requested on the command line.
inline void load_config_file(ScenarioConfig &c, const std::string &path) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(path, tree);
    } catch (const pt::ini_parser_error &e) {
        throw ParseError(e.line(), e.message());
    }
    for (const auto &[name, node] : tree) {
        if (node.empty()) {
            if (name != "scenario") throw ConfigError(path + ": unknown top-level key '" + name + "'");
            const ScenarioKind k = parse_scenario(node.data());
            if (k != c.kind)
                throw ConfigError(path + ": file is for scenario '" + node.data() + "', not '" + scenario_name(c.kind) + "'");
            continue;
        }
        for (const auto &[key, leaf] : node) {
            bool found = false;
            for (auto &r : detail::keys_of(c))
                if (r.section == name && r.name == key) {
                    *r.target = detail::parse_double(name + "." + key, leaf.data()) * r.scale;
                    found = true;
                }
            if (!found) throw ConfigError(path + ": unknown key [" + name + "] " + key);
        }
    }
}

/// Canonical INI text of every setting, sections and keys in a fixed order.
inline std::string canonical_config(ScenarioConfig c) {
    std::ostringstream os;
    os << "scenario = " << scenario_name(c.kind) << "\n";
    std::string section;
    for (auto &r : detail::keys_of(c)) {
        if (r.section != section) {
            section = r.section;
            os << "\n[" << section << "]\n";
        }
        os << r.name << " = " << detail::fmt_value(*r.target / r.scale) << "\n";
    }
    return os.str();
}

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string config_hash(const std::string &text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline Scene build_scenario_scene(const ScenarioConfig &c) {
    if (c.is_amc()) throw ConfigError("amc_cell has no antenna scene");
    Scene sc = c.is_array() ? build_array_2x2(c.element, c.with_frame())
                            : build_single_element(c.element, c.with_frame());
    if (!(c.port_impedance > 0)) throw ConfigError("impedance_ohm must be positive");
    for (PortDef &p : sc.ports) p.impedance = c.port_impedance;
    return sc;
}

} // namespace yeefield

#endif
