// Copyright 2026 The yeefield Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef YEEFIELD_SCENE_HPP
#define YEEFIELD_SCENE_HPP

#include "constants.hpp"
#include "error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace yeefield {

// ------------------------------------------------------------------------------------------------
// Materials and primitives
// ------------------------------------------------------------------------------------------------

enum class MaterialKind { dielectric, perfect_conductor };

struct Material {
    std::string name;
    MaterialKind kind = MaterialKind::dielectric;
    double eps_r = 1.0;
    double tan_delta = 0.0;

    static Material vacuum() { return {"vacuum", MaterialKind::dielectric, 1.0, 0.0}; }
    static Material pec() { return {"pec", MaterialKind::perfect_conductor, 1.0, 0.0}; }

    bool is_pec() const { return kind == MaterialKind::perfect_conductor; }

    // Empty string when valid.
    std::string check() const {
        if (is_pec()) return {};
        if (!(eps_r >= 1.0)) return "eps_r must be >= 1";
        if (!(tan_delta >= 0.0 && tan_delta < 1.0)) return "tan_delta must lie in [0, 1)";
        return {};
    }
};

struct Box {
    std::array<double, 3> lo{}, hi{};
};

/// z-axis cylinder.
struct Cylinder {
    double cx = 0, cy = 0, radius = 0, z0 = 0, z1 = 0;
};

/// Zero-thickness rectangle on the plane z.
struct Plate {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0, z = 0;
};

using Shape = std::variant<Box, Cylinder, Plate>;

struct Primitive {
    Shape shape;
    int material = 0;   // index into Scene::materials
    int priority = 0;   // higher wins on overlap
    std::string tag;    // substrate, ground, patch, frame, via

    Box bounding_box() const {
        return std::visit(
            [](const auto &s) -> Box {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Box>) {
                    return s;
                } else if constexpr (std::is_same_v<T, Cylinder>) {
                    return {{s.cx - s.radius, s.cy - s.radius, s.z0}, {s.cx + s.radius, s.cy + s.radius, s.z1}};
                } else {
                    return {{s.x0, s.y0, s.z}, {s.x1, s.y1, s.z}};
                }
            },
            shape);
    }
};

enum class Polarization { x, y };

/// Coaxial feed reduced to a vertical wire from z0 (ground) to z1 (patch layer) with a
/// lumped source gap in the first cell above ground.
struct PortDef {
    int index = 1;   // 1-based
    double x = 0, y = 0;
    double z0 = 0, z1 = 0;
    Polarization polarization = Polarization::x;
    double impedance = 50.0;
};

struct Rect {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    bool intersects(const Rect &o) const {
        return std::min(x1, o.x1) - std::max(x0, o.x0) > 1e-12 && std::min(y1, o.y1) - std::max(y0, o.y0) > 1e-12;
    }
    bool contains(double x, double y, double tol = 1e-12) const {
        return x >= x0 - tol && x <= x1 + tol && y >= y0 - tol && y <= y1 + tol;
    }
};

struct Scene {
    std::string name;
    std::vector<Material> materials;
    std::vector<Primitive> primitives;
    std::vector<PortDef> ports;
    Box bounds;                      // simulation region (without absorbing padding)
    Rect footprint;                  // substrate footprint on the ground plane
    std::vector<Rect> radiator_regions;  // frame cells must stay out of these
    double f0 = 28e9;

    std::size_t count_tag(const std::string &t) const {
        return static_cast<std::size_t>(
            std::count_if(primitives.begin(), primitives.end(), [&](const Primitive &p) { return p.tag == t; }));
    }
};

// ------------------------------------------------------------------------------------------------
// Element parameters
// ------------------------------------------------------------------------------------------------

struct ElementParams {
    double w_s = 7.089e-3;
    double h = 2.5e-3;
    double l_p = 3.115e-3;
    double w_p = 0.354e-3;
    double s = 0.177e-3;
    double g = 0.027e-3;
    double w_pa = 2.478e-3;
    double l_f = 0.354e-3;
    double w_ebg = 0.8e-3;
    double l_ebg = 2.65e-3;
    double v_ebg = 0.2e-3;
    double frame_margin = 1.0e-3;
    double eps_r = 3.5;
    double tan_delta = 0.0041;
    double f0 = 28e9;

    double inner_side() const { return w_s - 2.0 * frame_margin; }

    /// Throws GeometryError naming the first violated dimension.
    void check() const {
        const std::pair<const char *, double> lengths[] = {
            {"w_s", w_s}, {"h", h}, {"l_p", l_p}, {"w_p", w_p}, {"s", s}, {"g", g}, {"w_pa", w_pa},
            {"l_f", l_f}, {"w_ebg", w_ebg}, {"l_ebg", l_ebg}, {"v_ebg", v_ebg}, {"frame_margin", frame_margin}};
        for (auto [n, v] : lengths)
            if (!(v > 0.0)) throw GeometryError(n, "must be positive");
        if (!(f0 > 0.0)) throw GeometryError("f0", "must be positive");
        if (!(s > g)) throw GeometryError("s", "must exceed g");
        if (!(w_p > s)) throw GeometryError("w_p", "must exceed s");
        if (!(w_pa > w_p)) throw GeometryError("w_pa", "must exceed w_p");
        if (!(l_p > w_pa)) throw GeometryError("l_p", "must exceed w_pa");
        if (!(w_s > l_p)) throw GeometryError("w_s", "must exceed l_p");
        if (!(w_ebg > v_ebg)) throw GeometryError("v_ebg", "via diameter must be smaller than w_ebg");
        if (!(l_ebg > w_ebg)) throw GeometryError("w_ebg", "must be smaller than l_ebg");
        const double ratio = w_s / (0.66 * wavelength(f0));
        if (std::abs(ratio - 1.0) > 0.01)
            throw GeometryError("w_s", "must be within 1% of 0.66 free-space wavelengths at f0");
        Material m{"substrate", MaterialKind::dielectric, eps_r, tan_delta};
        if (auto e = m.check(); !e.empty()) throw GeometryError(eps_r < 1.0 ? "eps_r" : "tan_delta", e);
        if (l_f >= w_pa / 2.0) throw GeometryError("l_f", "feed must land on the central patch");
        if (w_pa / 2.0 + s + w_p > inner_side() / 2.0 || l_p > inner_side())
            throw GeometryError(w_pa / 2.0 + s + w_p > inner_side() / 2.0 ? "w_p" : "l_p",
                                "radiator does not fit inside the frame margin");
    }
};

/// Layout of the AMC cells along one side of an element.
struct FrameLayout {
    int cells_per_side = 0;
    double span = 0;          // usable side length (corners excluded)
    double pitch = 0;         // center-to-center spacing along a side
    double gap = 0;           // uniform inter-cell gap along a side (pitch - l_ebg)
    double neighbor_gap = 0;  // edge-to-edge spacing to the next element's frame cell

    static FrameLayout of(const ElementParams &p) {
        if (!(p.w_ebg < p.frame_margin))
            throw GeometryError("w_ebg", "frame cell width does not fit in frame_margin");
        FrameLayout f;
        f.span = p.inner_side();
        f.cells_per_side = static_cast<int>(std::floor((f.span + p.g) / (p.l_ebg + p.g) + 1e-12));
        if (f.cells_per_side < 1) throw GeometryError("l_ebg", "frame cell longer than the element side");
        f.pitch = f.span / f.cells_per_side;
        f.gap = f.pitch - p.l_ebg;
        f.neighbor_gap = p.frame_margin - p.w_ebg;
        return f;
    }
};

namespace detail {

inline int find_or_add_material(Scene &sc, const Material &m) {
    for (std::size_t i = 0; i < sc.materials.size(); ++i)
        if (sc.materials[i].name == m.name) return static_cast<int>(i);
    sc.materials.push_back(m);
    return static_cast<int>(sc.materials.size()) - 1;
}

inline Plate plate_xy(double cx, double cy, double wx, double wy, double z) {
    return {cx - wx / 2, cy - wy / 2, cx + wx / 2, cy + wy / 2, z};
}

// Radiator legend (element centered at (cx, cy), all plates on z = h):
//
//   * central square patch of side w_pa; both probes land on it at distance l_f from
//     the center, port x on +x axis and port y on +y axis;
//   * one arm per side, parallel to that side: l_p long, w_p wide, separated from the
//     central square by a slot of width s;
//   * every arm is split at its midpoint by a gap g, leaving two halves of (l_p - g)/2.
//
// Arms of neighbouring sides merge where they cross near the corners. This is the only
// place that encodes the radiator topology.
inline std::vector<Plate> radiator_plates(const ElementParams &p, double cx, double cy) {
    std::vector<Plate> out;
    out.push_back(plate_xy(cx, cy, p.w_pa, p.w_pa, p.h));
    const double r = p.w_pa / 2 + p.s + p.w_p / 2;
    const double half = (p.l_p - p.g) / 2;
    const double off = p.g / 2 + half / 2;
    for (int side = 0; side < 4; ++side) {
        const double sgn = side % 2 == 0 ? 1.0 : -1.0;
        for (double t : {-off, off}) {
            if (side < 2)  // arms on +-y sides run along x
                out.push_back(plate_xy(cx + t, cy + sgn * r, half, p.w_p, p.h));
            else
                out.push_back(plate_xy(cx + sgn * r, cy + t, p.w_p, half, p.h));
        }
    }
    return out;
}

struct FrameCell {
    Plate plate;
    Cylinder via;
};

inline std::vector<FrameCell> frame_cells(const ElementParams &p, double cx, double cy) {
    const FrameLayout f = FrameLayout::of(p);
    std::vector<FrameCell> out;
    const double r = p.w_s / 2 - p.frame_margin / 2;
    for (int side = 0; side < 4; ++side) {
        const double sgn = side % 2 == 0 ? 1.0 : -1.0;
        for (int n = 0; n < f.cells_per_side; ++n) {
            const double t = -f.span / 2 + f.pitch * (n + 0.5);
            FrameCell c;
            double px, py;
            if (side < 2) {
                px = cx + t;
                py = cy + sgn * r;
                c.plate = plate_xy(px, py, p.l_ebg, p.w_ebg, p.h);
            } else {
                px = cx + sgn * r;
                py = cy + t;
                c.plate = plate_xy(px, py, p.w_ebg, p.l_ebg, p.h);
            }
            c.via = {px, py, p.v_ebg / 2, 0.0, p.h};
            out.push_back(c);
        }
    }
    return out;
}

inline void add_element(Scene &sc, const ElementParams &p, bool with_frame, double cx, double cy,
                        int first_port, int pec) {
    for (const Plate &pl : radiator_plates(p, cx, cy)) sc.primitives.push_back({pl, pec, 20, "patch"});
    if (with_frame) {
        for (const FrameCell &c : frame_cells(p, cx, cy)) {
            sc.primitives.push_back({c.plate, pec, 20, "frame"});
            sc.primitives.push_back({c.via, pec, 30, "via"});
        }
    }
    sc.ports.push_back({first_port, cx + p.l_f, cy, 0.0, p.h, Polarization::x, 50.0});
    sc.ports.push_back({first_port + 1, cx, cy + p.l_f, 0.0, p.h, Polarization::y, 50.0});
    const double in = p.inner_side() / 2;
    sc.radiator_regions.push_back({cx - in, cy - in, cx + in, cy + in});
}

inline void finish_scene(Scene &sc, const ElementParams &p, double half_x, double half_y, int substrate,
                         int pec) {
    sc.f0 = p.f0;
    sc.footprint = {-half_x, -half_y, half_x, half_y};
    sc.primitives.insert(sc.primitives.begin(),
                         {Primitive{Box{{-half_x, -half_y, 0.0}, {half_x, half_y, p.h}}, substrate, 0, "substrate"},
                          Primitive{Plate{-half_x, -half_y, half_x, half_y, 0.0}, pec, 10, "ground"}});
    // Quarter-wave air margin on the open sides, rounded up to 0.1 mm.
    const double margin = std::ceil(wavelength(p.f0) / 4 / 1e-4) * 1e-4;
    sc.bounds = {{-half_x - margin, -half_y - margin, 0.0}, {half_x + margin, half_y + margin, p.h + margin}};
}

} // namespace detail

/// Single dual-polarized element, centered at the origin, ground at z = 0.
inline Scene build_single_element(const ElementParams &p, bool with_frame) {
    p.check();
    if (with_frame) (void)FrameLayout::of(p);
    Scene sc;
    sc.name = with_frame ? "single_with_frame" : "single_no_frame";
    const int substrate = detail::find_or_add_material(
        sc, {"substrate", MaterialKind::dielectric, p.eps_r, p.tan_delta});
    const int pec = detail::find_or_add_material(sc, Material::pec());
    detail::add_element(sc, p, with_frame, 0.0, 0.0, 1, pec);
    detail::finish_scene(sc, p, p.w_s / 2, p.w_s / 2, substrate, pec);
    return sc;
}

/// Element (row, col) of a 2x2 tiling at pitch w_s; ports (2k-1, 2k) with k = 2*row + col + 1.
inline std::array<double, 2> array_element_center(const ElementParams &p, int row, int col) {
    return {(col - 0.5) * p.w_s, (row - 0.5) * p.w_s};
}

inline Scene build_array_2x2(const ElementParams &p, bool with_frame) {
    p.check();
    if (with_frame) (void)FrameLayout::of(p);
    Scene sc;
    sc.name = with_frame ? "array_with_frame" : "array_no_frame";
    const int substrate = detail::find_or_add_material(
        sc, {"substrate", MaterialKind::dielectric, p.eps_r, p.tan_delta});
    const int pec = detail::find_or_add_material(sc, Material::pec());
    for (int row = 0; row < 2; ++row)
        for (int col = 0; col < 2; ++col) {
            const auto c = array_element_center(p, row, col);
            detail::add_element(sc, p, with_frame, c[0], c[1], 2 * (2 * row + col) + 1, pec);
        }
    detail::finish_scene(sc, p, p.w_s, p.w_s, substrate, pec);
    return sc;
}

// ------------------------------------------------------------------------------------------------
// Validation
// ------------------------------------------------------------------------------------------------

struct Diagnostic {
    std::string rule;
    int primitive = -1;  // index into Scene::primitives, -1 if not applicable
    int port = -1;       // 1-based port index, -1 if not applicable
    std::string message;
};

inline std::vector<Diagnostic> validate_scene(const Scene &sc) {
    std::vector<Diagnostic> out;
    auto add = [&](std::string rule, int prim, int port, std::string msg) {
        out.push_back({std::move(rule), prim, port, std::move(msg)});
    };
    constexpr double tol = 1e-12;

    for (std::size_t m = 0; m < sc.materials.size(); ++m)
        if (auto e = sc.materials[m].check(); !e.empty()) add("material", -1, -1, sc.materials[m].name + ": " + e);

    const double margin = wavelength(sc.f0) / 4;
    for (std::size_t i = 0; i < sc.primitives.size(); ++i) {
        const Primitive &pr = sc.primitives[i];
        const int idx = static_cast<int>(i);
        if (pr.material < 0 || static_cast<std::size_t>(pr.material) >= sc.materials.size()) {
            add("material-reference", idx, -1, "primitive " + std::to_string(i) + " references unknown material");
            continue;
        }
        bool extents_ok = std::visit(
            [](const auto &s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Box>)
                    return s.hi[0] > s.lo[0] && s.hi[1] > s.lo[1] && s.hi[2] > s.lo[2];
                else if constexpr (std::is_same_v<T, Cylinder>)
                    return s.radius > 0 && s.z1 > s.z0;
                else
                    return s.x1 > s.x0 && s.y1 > s.y0;
            },
            pr.shape);
        if (!extents_ok) add("extent", idx, -1, "primitive " + std::to_string(i) + " has a non-positive extent");

        const Box bb = pr.bounding_box();
        const bool open_ok = bb.lo[0] >= sc.bounds.lo[0] + margin - tol && bb.hi[0] <= sc.bounds.hi[0] - margin + tol &&
                             bb.lo[1] >= sc.bounds.lo[1] + margin - tol && bb.hi[1] <= sc.bounds.hi[1] - margin + tol &&
                             bb.hi[2] <= sc.bounds.hi[2] - margin + tol && bb.lo[2] >= sc.bounds.lo[2] - tol;
        if (!open_ok)
            add("bounds", idx, -1,
                "primitive " + std::to_string(i) + " (" + pr.tag + ") violates the quarter-wave air margin");

        if (pr.tag == "frame" || pr.tag == "via") {
            const Rect r{bb.lo[0], bb.lo[1], bb.hi[0], bb.hi[1]};
            if (!sc.footprint.contains(r.x0, r.y0) || !sc.footprint.contains(r.x1, r.y1))
                add("frame-footprint", idx, -1, "primitive " + std::to_string(i) + " extends beyond the substrate");
            for (const Rect &rr : sc.radiator_regions)
                if (r.intersects(rr)) {
                    add("frame-overlap", idx, -1,
                        "primitive " + std::to_string(i) + " (" + pr.tag + ") overlaps a radiator region");
                    break;
                }
        }
    }

    for (std::size_t i = 0; i < sc.primitives.size(); ++i) {
        if (sc.primitives[i].tag != "frame") continue;
        const Box a = sc.primitives[i].bounding_box();
        for (std::size_t j = i + 1; j < sc.primitives.size(); ++j) {
            if (sc.primitives[j].tag != "frame") continue;
            const Box b = sc.primitives[j].bounding_box();
            if (Rect{a.lo[0], a.lo[1], a.hi[0], a.hi[1]}.intersects(Rect{b.lo[0], b.lo[1], b.hi[0], b.hi[1]}))
                add("frame-overlap", static_cast<int>(i), -1,
                    "frame cells " + std::to_string(i) + " and " + std::to_string(j) + " overlap");
        }
    }

    for (std::size_t k = 0; k < sc.ports.size(); ++k) {
        const PortDef &pd = sc.ports[k];
        if (!sc.footprint.contains(pd.x, pd.y))
            add("port-footprint", -1, pd.index, "port " + std::to_string(pd.index) + " lies outside the substrate");
        if (pd.index != static_cast<int>(k) + 1)
            add("port-numbering", -1, pd.index, "ports must be numbered consecutively from 1");
        const bool odd = pd.index % 2 == 1;
        if (odd != (pd.polarization == Polarization::x))
            add("port-polarization", -1, pd.index,
                "port " + std::to_string(pd.index) + ": odd ports are x-polarized, even ports y-polarized");
        if (!(pd.z1 > pd.z0)) add("port-extent", -1, pd.index, "port feed has no length");
    }
    return out;
}

// ------------------------------------------------------------------------------------------------
// Canonical dump
// ------------------------------------------------------------------------------------------------

namespace detail {

inline std::string fmt_mm(double v) {
    char buf[32];
    double mm = v * 1e3;
    if (std::abs(mm) < 5e-10) mm = 0.0;  // avoid "-0.000000000"
    std::snprintf(buf, sizeof buf, "%.9f", mm);
    return buf;
}

inline std::string primitive_line(const Scene &sc, const Primitive &p) {
    std::ostringstream os;
    std::visit(
        [&](const auto &s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Box>)
                os << "box x=[" << fmt_mm(s.lo[0]) << "," << fmt_mm(s.hi[0]) << "] y=[" << fmt_mm(s.lo[1]) << ","
                   << fmt_mm(s.hi[1]) << "] z=[" << fmt_mm(s.lo[2]) << "," << fmt_mm(s.hi[2]) << "]";
            else if constexpr (std::is_same_v<T, Cylinder>)
                os << "cylinder c=(" << fmt_mm(s.cx) << "," << fmt_mm(s.cy) << ") r=" << fmt_mm(s.radius) << " z=["
                   << fmt_mm(s.z0) << "," << fmt_mm(s.z1) << "]";
            else
                os << "plate x=[" << fmt_mm(s.x0) << "," << fmt_mm(s.x1) << "] y=[" << fmt_mm(s.y0) << ","
                   << fmt_mm(s.y1) << "] z=" << fmt_mm(s.z);
        },
        p.shape);
    os << " material=" << sc.materials.at(p.material).name << " priority=" << p.priority << " tag=" << p.tag;
    return os.str();
}

} // namespace detail

/// Canonical text form: materials, sorted primitives, ports. Lengths in millimeters.
inline std::string dump_scene(const Scene &sc) {
    std::ostringstream os;
    os << "scene " << sc.name << "\n";
    os << "f0_ghz " << sc.f0 / 1e9 << "\n";
    os << "bounds x=[" << detail::fmt_mm(sc.bounds.lo[0]) << "," << detail::fmt_mm(sc.bounds.hi[0]) << "] y=["
       << detail::fmt_mm(sc.bounds.lo[1]) << "," << detail::fmt_mm(sc.bounds.hi[1]) << "] z=["
       << detail::fmt_mm(sc.bounds.lo[2]) << "," << detail::fmt_mm(sc.bounds.hi[2]) << "]\n";
    for (const Material &m : sc.materials) {
        os << "material " << m.name << (m.is_pec() ? " pec" : " dielectric");
        if (!m.is_pec()) os << " eps_r=" << m.eps_r << " tan_delta=" << m.tan_delta;
        os << "\n";
    }
    std::vector<std::string> lines;
    for (const Primitive &p : sc.primitives) lines.push_back(detail::primitive_line(sc, p));
    std::sort(lines.begin(), lines.end());
    os << "primitives " << lines.size() << "\n";
    for (const auto &l : lines) os << "  " << l << "\n";
    os << "ports " << sc.ports.size() << "\n";
    for (const PortDef &pd : sc.ports)
        os << "  port " << pd.index << " pol=" << (pd.polarization == Polarization::x ? "x" : "y") << " at=("
           << detail::fmt_mm(pd.x) << "," << detail::fmt_mm(pd.y) << ") z=[" << detail::fmt_mm(pd.z0) << ","
           << detail::fmt_mm(pd.z1) << "] z0=" << pd.impedance << "\n";
    return os.str();
}

/// Reflection across the plane x = y; swaps port polarizations.
inline Scene mirror_xy(const Scene &sc) {
    Scene out = sc;
    for (Primitive &p : out.primitives)
        std::visit(
            [](auto &s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Box>) {
                    std::swap(s.lo[0], s.lo[1]);
                    std::swap(s.hi[0], s.hi[1]);
                } else if constexpr (std::is_same_v<T, Cylinder>) {
                    std::swap(s.cx, s.cy);
                } else {
                    std::swap(s.x0, s.y0);
                    std::swap(s.x1, s.y1);
                }
            },
            p.shape);
    for (PortDef &pd : out.ports) {
        std::swap(pd.x, pd.y);
        pd.polarization = pd.polarization == Polarization::x ? Polarization::y : Polarization::x;
    }
    std::swap(out.bounds.lo[0], out.bounds.lo[1]);
    std::swap(out.bounds.hi[0], out.bounds.hi[1]);
    std::swap(out.footprint.x0, out.footprint.y0);
    std::swap(out.footprint.x1, out.footprint.y1);
    return out;
}

} // namespace yeefield

#endif
