// Copyright 2026 The yeefield Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef YEEFIELD_MESH_HPP
#define YEEFIELD_MESH_HPP

#include "constants.hpp"
#include "error.hpp"
#include "scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace yeefield {

enum class MeshMode { coarse, fine };

/// Outer boundary condition of one domain face.
enum class Boundary { pec, cpml, periodic };

/// Faces in the order xlo, xhi, ylo, yhi, zlo, zhi.
using BoundarySet = std::array<Boundary, 6>;

inline constexpr BoundarySet open_above_ground = {Boundary::cpml, Boundary::cpml, Boundary::cpml,
                                                  Boundary::cpml, Boundary::pec,  Boundary::cpml};

struct MeshPolicy {
    double max_cell = 0.0;
    double min_cell = 0.0;
    double grading_ratio = 1.3;
    int min_cells_per_feature = 1;
    double courant = 0.99;
    MeshMode mode = MeshMode::coarse;
    bool symmetrize = true;   // mirror x and y lines about the center of the bounds
    int pml_cells = 10;
    BoundarySet boundary = open_above_ground;

    /// Default policy for a scene: lambda/15 in the densest dielectric at f0.
    static MeshPolicy for_scene(const Scene &sc, MeshMode mode) {
        double eps_max = 1.0;
        for (const Material &m : sc.materials)
            if (!m.is_pec()) eps_max = std::max(eps_max, m.eps_r);
        MeshPolicy p;
        p.mode = mode;
        p.max_cell = wavelength(sc.f0) / std::sqrt(eps_max) / 15.0;
        if (mode == MeshMode::coarse) {
            p.min_cell = 0.15e-3;
            p.min_cells_per_feature = 1;
        } else {
            p.min_cell = 0.02e-3;
            p.min_cells_per_feature = 2;
        }
        return p;
    }

    void check() const {
        if (!(max_cell > 0) || !(min_cell > 0)) throw MeshError("cell sizes must be positive");
        if (min_cell > max_cell) throw MeshError("min_cell must not exceed max_cell");
        if (grading_ratio < 1.0) throw MeshError("grading_ratio must be >= 1");
        if (!(courant > 0.0 && courant <= 1.0)) throw MeshError("courant factor must lie in (0, 1]");
        if (min_cells_per_feature < 1) throw MeshError("min_cells_per_feature must be >= 1");
        if (pml_cells < 4 && std::find(boundary.begin(), boundary.end(), Boundary::cpml) != boundary.end())
            throw MeshError("CPML needs at least 4 cells");
        for (int a = 0; a < 3; ++a)
            if ((boundary[2 * a] == Boundary::periodic) != (boundary[2 * a + 1] == Boundary::periodic))
                throw MeshError("periodic boundaries must be paired on an axis");
    }
};

/// Per-edge material entry; update constants are derived once dt is known.
struct EdgeMaterial {
    double eps_r = 1.0;
    double sigma = 0.0;  // S/m
    bool pec = false;
    bool operator<(const EdgeMaterial &o) const {
        return std::tie(pec, eps_r, sigma) < std::tie(o.pec, o.eps_r, o.sigma);
    }
};

struct GridPort {
    int index = 1;
    int i = 0, j = 0;   // node of the vertical feed
    int k_gap = 0;      // Ez(i, j, k_gap) carries the lumped source
    int k_top = 0;      // wire runs over Ez(i, j, k) for k_gap < k < k_top
    double resistance = 50.0;
    Polarization polarization = Polarization::x;
};

struct SnapReport {
    int primitive = -1;
    std::string tag;
    double error = 0.0;  // largest |original - snapped| coordinate (m)
};

/// Nonuniform staggered grid. Arrays are node-sized, (nx+1)(ny+1)(nz+1); component
/// slots that fall outside the staggered layout are unused.
struct YeeGrid {
    std::array<std::vector<double>, 3> lines;
    std::array<std::array<int, 2>, 3> pml{};  // absorbing cells at lo/hi of each axis
    BoundarySet boundary = open_above_ground;
    std::array<std::vector<std::uint16_t>, 3> edge_material;  // Ex, Ey, Ez
    std::vector<EdgeMaterial> table;
    std::vector<GridPort> ports;
    std::vector<SnapReport> snaps;

    int cells(int axis) const { return static_cast<int>(lines[axis].size()) - 1; }
    int nodes(int axis) const { return static_cast<int>(lines[axis].size()); }
    std::size_t node_count() const {
        return static_cast<std::size_t>(nodes(0)) * nodes(1) * nodes(2);
    }
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * nodes(1) + j) * nodes(2) + k;
    }
    double cell(int axis, int n) const { return lines[axis][n + 1] - lines[axis][n]; }
    double min_cell(int axis) const {
        double m = std::numeric_limits<double>::infinity();
        for (int n = 0; n < cells(axis); ++n) m = std::min(m, cell(axis, n));
        return m;
    }
    /// Interior (non-absorbing) node range on an axis, inclusive.
    std::array<int, 2> interior(int axis) const { return {pml[axis][0], cells(axis) - pml[axis][1]}; }

    /// Calls f(comp, i, j, k) for every E edge that exists in the staggered layout.
    template <class F>
    void for_each_edge(F &&f) const {
        for (int c = 0; c < 3; ++c) {
            std::array<int, 3> lim = {nodes(0), nodes(1), nodes(2)};
            lim[c] -= 1;
            for (int i = 0; i < lim[0]; ++i)
                for (int j = 0; j < lim[1]; ++j)
                    for (int k = 0; k < lim[2]; ++k) f(c, i, j, k);
        }
    }

    bool is_pec(int comp, int i, int j, int k) const { return table[edge_material[comp][index(i, j, k)]].pec; }

    std::size_t pec_edge_count() const {
        std::size_t n = 0;
        for_each_edge([&](int c, int i, int j, int k) { n += is_pec(c, i, j, k); });
        return n;
    }

    int nearest_line(int axis, double x) const {
        const auto &l = lines[axis];
        auto it = std::lower_bound(l.begin(), l.end(), x);
        if (it == l.begin()) return 0;
        if (it == l.end()) return static_cast<int>(l.size()) - 1;
        const int hi = static_cast<int>(it - l.begin());
        return (x - l[hi - 1] <= l[hi] - x) ? hi - 1 : hi;
    }
};

inline double conductivity_from_tan_delta(double eps_r, double tan_delta, double f0) {
    if (!(f0 > 0)) throw Error("conductivity_from_tan_delta: f0 must be positive");
    return 2.0 * pi * f0 * eps0 * eps_r * tan_delta;
}

/// CFL-limited timestep from the smallest cell on each axis.
inline double cfl_timestep(const YeeGrid &g, double courant) {
    if (g.node_count() == 0) throw MeshError("empty grid");
    const double dx = g.min_cell(0), dy = g.min_cell(1), dz = g.min_cell(2);
    return courant / (c0 * std::sqrt(1.0 / (dx * dx) + 1.0 / (dy * dy) + 1.0 / (dz * dz)));
}

namespace detail {

struct Interval {
    double lo, hi;
    int primitive;
};

// Axis-aligned extents of every feature that must be resolved along `axis`.
struct AxisFeatures {
    std::vector<Interval> intervals;               // primitives and same-layer metal gaps
    std::vector<std::pair<double, int>> points;    // plate planes, via centers, port axes
};

inline AxisFeatures collect_features(const Scene &sc, int axis) {
    AxisFeatures f;
    for (std::size_t n = 0; n < sc.primitives.size(); ++n) {
        const Primitive &p = sc.primitives[n];
        const int id = static_cast<int>(n);
        std::visit(
            [&](const auto &s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Box>) {
                    f.intervals.push_back({s.lo[axis], s.hi[axis], id});
                } else if constexpr (std::is_same_v<T, Cylinder>) {
                    if (axis == 2) {
                        f.intervals.push_back({s.z0, s.z1, id});
                    } else {
                        const double c = axis == 0 ? s.cx : s.cy;
                        f.intervals.push_back({c - s.radius, c + s.radius, id});
                        f.points.push_back({c, id});
                    }
                } else {
                    if (axis == 2)
                        f.points.push_back({s.z, id});
                    else
                        f.intervals.push_back({axis == 0 ? s.x0 : s.y0, axis == 0 ? s.x1 : s.y1, id});
                }
            },
            p.shape);
    }
    for (const PortDef &pd : sc.ports) {
        if (axis == 2) {
            f.points.push_back({pd.z0, -1});
            f.points.push_back({pd.z1, -1});
        } else {
            f.points.push_back({axis == 0 ? pd.x : pd.y, -1});
        }
    }
    if (axis == 2) return f;

    // Gaps between metal plates sharing a z-plane and overlapping in the other axis.
    const int other = 1 - axis;
    std::map<double, std::vector<int>> layers;
    for (std::size_t n = 0; n < sc.primitives.size(); ++n) {
        const Primitive &p = sc.primitives[n];
        if (const Plate *pl = std::get_if<Plate>(&p.shape); pl && sc.materials[p.material].is_pec() &&
                                                              p.tag != "ground")
            layers[pl->z].push_back(static_cast<int>(n));
    }
    for (auto &[z, ids] : layers) {
        for (int a : ids)
            for (int b : ids) {
                if (a == b) continue;
                const Box A = sc.primitives[a].bounding_box(), B = sc.primitives[b].bounding_box();
                const double ov = std::min(A.hi[other], B.hi[other]) - std::max(A.lo[other], B.lo[other]);
                if (ov <= 1e-12) continue;
                const double gap = B.lo[axis] - A.hi[axis];
                if (gap <= 1e-12) continue;
                bool blocked = false;  // another plate sits inside the gap
                for (int c : ids) {
                    if (c == a || c == b) continue;
                    const Box C = sc.primitives[c].bounding_box();
                    if (C.hi[axis] > A.hi[axis] + 1e-12 && C.lo[axis] < B.lo[axis] - 1e-12 &&
                        std::min(C.hi[other], std::min(A.hi[other], B.hi[other])) -
                                std::max(C.lo[other], std::max(A.lo[other], B.lo[other])) > 1e-12) {
                        blocked = true;
                        break;
                    }
                }
                if (!blocked) f.intervals.push_back({A.hi[axis], B.lo[axis], a});
            }
    }
    return f;
}

struct Candidate {
    std::vector<double> coords;  // accepted atomically
    int priority;
};

struct AxisMesh {
    std::vector<double> lines;
    std::map<double, double> snap_override;  // original coordinate -> widened line position
};

inline void add_unique(std::vector<double> &v, double x) {
    for (double y : v)
        if (std::abs(x - y) < 1e-12) return;
    v.push_back(x);
}

// Fill the interval [a, b] with lines obeying the size field; returns interior lines.
// Equidistributes integral(dx / size) over [a, b]. `cells` = 0 picks the natural count.
// Returns the interior lines.
template <class SizeField>
std::vector<double> fill_interval(double a, double b, const SizeField &size, int &cells) {
    constexpr int samples = 256;
    std::vector<double> cum(samples + 1, 0.0);
    const double h = (b - a) / samples;
    for (int n = 0; n < samples; ++n) {
        const double x = a + (n + 0.5) * h;
        cum[n + 1] = cum[n] + h / size(x);
    }
    if (cells <= 0) cells = std::max(1, static_cast<int>(std::ceil(cum[samples] - 1e-9)));
    std::vector<double> out;
    for (int c = 1; c < cells; ++c) {
        const double target = cum[samples] * c / cells;
        auto it = std::lower_bound(cum.begin(), cum.end(), target);
        const int n = static_cast<int>(it - cum.begin());
        const double t = (target - cum[n - 1]) / (cum[n] - cum[n - 1]);
        out.push_back(a + (n - 1 + t) * h);
    }
    return out;
}

inline AxisMesh mesh_axis(const Scene &sc, const MeshPolicy &pol, int axis) {
    const AxisFeatures feats = collect_features(sc, axis);
    const double lo = sc.bounds.lo[axis], hi = sc.bounds.hi[axis];
    const bool sym = pol.symmetrize && axis < 2;
    const double center = 0.5 * (lo + hi);
    const double feature_min = pol.min_cell * pol.min_cells_per_feature;

    AxisMesh am;
    std::vector<Candidate> cands;
    struct Source {
        double lo, hi, size;
        bool self = true;  // false: constrains only the outside of [lo, hi] (a neighbor cell)
    };
    std::vector<Source> sources;

    for (const Interval &iv : feats.intervals) {
        const double w = iv.hi - iv.lo;
        if (w < pol.min_cell - 1e-15) {
            if (pol.mode == MeshMode::fine) {
                std::ostringstream os;
                os << "unmeshable feature of width " << w * 1e3 << " mm along axis " << "xyz"[axis]
                   << " at primitive " << iv.primitive;
                if (iv.primitive >= 0) os << " (" << sc.primitives[iv.primitive].tag << ")";
                os << "; min_cell is " << pol.min_cell * 1e3 << " mm";
                throw MeshError(os.str());
            }
            // A widened cell centered on the symmetry line becomes two cells around it.
            const double c = 0.5 * (iv.lo + iv.hi);
            const double half = sym && std::abs(c - center) < 1e-12 ? pol.min_cell : 0.5 * pol.min_cell;
            cands.push_back({{c - half, c + half}, 0});
            am.snap_override[iv.lo] = c - half;
            am.snap_override[iv.hi] = c + half;
            sources.push_back({c - half, c + half, pol.min_cell});
        } else {
            const bool metal = iv.primitive >= 0 && sc.materials[sc.primitives[iv.primitive].material].is_pec();
            cands.push_back({{iv.lo}, metal ? 2 : 3});
            cands.push_back({{iv.hi}, metal ? 2 : 3});
            if (w / pol.min_cells_per_feature < pol.max_cell)
                sources.push_back({iv.lo, iv.hi, std::max(w / pol.min_cells_per_feature, pol.min_cell)});
        }
    }
    for (auto [x, id] : feats.points) cands.push_back({{x}, 1});
    cands.push_back({{lo}, -1});
    cands.push_back({{hi}, -1});

    std::vector<double> fixed;
    if (sym) fixed.push_back(center);
    auto mirror = [&](const Candidate &c) {
        Candidate m = c;
        for (double &x : m.coords) x = 2 * center - x;
        return m;
    };
    auto conflicts = [&](double x) {
        for (double y : fixed) {
            if (sym && y == center) continue;
            if (std::abs(x - y) < pol.min_cell * (1 - 1e-9) && std::abs(x - y) > 1e-12) return true;
        }
        return false;
    };

    if (pol.mode == MeshMode::fine) {
        for (const Candidate &c : cands)
            for (double x : c.coords) {
                add_unique(fixed, x);
                if (sym) add_unique(fixed, 2 * center - x);
            }
    } else {
        std::stable_sort(cands.begin(), cands.end(), [&](const Candidate &a, const Candidate &b) {
            if (a.priority != b.priority) return a.priority < b.priority;
            const double da = std::abs(a.coords.front() - center), db = std::abs(b.coords.front() - center);
            if (da != db) return da < db;
            return a.coords.front() < b.coords.front();
        });
        for (const Candidate &c : cands) {
            std::vector<double> group = c.coords;
            if (sym)
                for (double x : mirror(c).coords) add_unique(group, x);
            if (c.priority < 0) {  // bounds always kept
                for (double x : group) add_unique(fixed, x);
                continue;
            }
            bool ok = true;
            for (double x : group) ok = ok && !conflicts(x);
            if (!ok && sym && group.size() == 2 && std::abs(group[0] - group[1]) < pol.min_cell) {
                // a candidate and its mirror collide: keep the center line only
                continue;
            }
            if (ok)
                for (double x : group) add_unique(fixed, x);
        }
    }
    fixed.erase(std::remove_if(fixed.begin(), fixed.end(), [&](double x) { return x < lo - 1e-12 || x > hi + 1e-12; }),
                fixed.end());
    std::sort(fixed.begin(), fixed.end());

    for (std::size_t n = 0; n + 1 < fixed.size(); ++n) {
        const double len = fixed[n + 1] - fixed[n];
        if (len < pol.max_cell) sources.push_back({fixed[n], fixed[n + 1], len});
    }
    const double growth = 1.0 + 0.75 * (pol.grading_ratio - 1.0);
    auto size = [&](double x) {
        double s = pol.max_cell;
        for (const Source &src : sources) {
            const bool inside = x >= src.lo && x <= src.hi;
            if (inside && !src.self) continue;
            const double d = x < src.lo ? src.lo - x : (x > src.hi ? x - src.hi : 0.0);
            s = std::min(s, src.size + (growth - 1.0) * d);
        }
        return s;
    };

    // Fill the fixed intervals (right half only when symmetric). Every generated cell then
    // becomes a size source itself and the fill is repeated until the cell counts settle.
    // Counts only ratchet upward, so a smaller max_cell does not yield fewer cells.
    std::vector<double> anchors;
    if (sym) {
        for (double x : fixed)
            if (x >= center - 1e-12) anchors.push_back(x);
        anchors.front() = center;
    } else {
        anchors = fixed;
    }
    const std::size_t nint = anchors.size() - 1;
    const std::vector<Source> base_sources = sources;
    std::vector<int> counts(nint, 0), prev;
    std::vector<double> half;
    for (int iter = 0; iter < 200; ++iter) {
        half.assign(1, anchors.front());
        for (std::size_t n = 0; n < nint; ++n) {
            int c = 0;
            (void)fill_interval(anchors[n], anchors[n + 1], size, c);
            c = std::max(c, counts[n]);
            for (double x : fill_interval(anchors[n], anchors[n + 1], size, c)) half.push_back(x);
            half.push_back(anchors[n + 1]);
            counts[n] = c;
        }
        bool graded = true;
        for (std::size_t n = 0; n + 2 < half.size() && graded; ++n) {
            const double a = half[n + 1] - half[n], b = half[n + 2] - half[n + 1];
            graded = std::max(a, b) / std::min(a, b) <= pol.grading_ratio * (1 + 1e-9);
        }
        if (graded && counts == prev) break;
        if (!graded && counts == prev) {
            // stalled: split the interval holding the larger cell of each violating pair
            std::size_t cell = 0;
            std::vector<int> bump(nint, 0);
            for (std::size_t n = 0; n < nint; ++n)
                for (int c = 0; c < counts[n]; ++c, ++cell) {
                    const double w = half[cell + 1] - half[cell];
                    for (std::size_t nb : {cell - 1, cell + 1}) {
                        if (nb == std::size_t(-1) || nb + 1 >= half.size()) continue;
                        const double v = half[nb + 1] - half[nb];
                        if (w > v * pol.grading_ratio) {
                            bump[n] = 1;
                            break;
                        }
                    }
                }
            for (std::size_t n = 0; n < nint; ++n) counts[n] += bump[n];
        }
        prev = counts;
        sources = base_sources;
        // a cell tracks the size field at its center; leave room for the growth over half a cell
        const double reach = pol.grading_ratio * (1.0 - 0.5 * (growth - 1.0));
        for (std::size_t n = 0; n + 1 < half.size(); ++n) {
            const double w = (half[n + 1] - half[n]) * reach;
            sources.push_back({half[n], half[n + 1], w, false});
            if (sym) sources.push_back({2 * center - half[n + 1], 2 * center - half[n], w, false});
        }
    }
    std::vector<double> lines;
    if (sym) {
        for (std::size_t n = half.size(); n-- > 1;) lines.push_back(2 * center - half[n]);
        lines.insert(lines.end(), half.begin(), half.end());
    } else {
        lines = std::move(half);
    }
    am.lines = std::move(lines);
    return am;
}

inline void pad_axis(std::vector<double> &lines, int lo_cells, int hi_cells) {
    const double dlo = lines[1] - lines[0];
    const double dhi = lines[lines.size() - 1] - lines[lines.size() - 2];
    std::vector<double> out;
    for (int n = lo_cells; n > 0; --n) out.push_back(lines.front() - n * dlo);
    out.insert(out.end(), lines.begin(), lines.end());
    const double last = lines.back();
    for (int n = 1; n <= hi_cells; ++n) out.push_back(last + n * dhi);
    lines = std::move(out);
}

} // namespace detail

/// Builds a grid directly from coordinate lines (bounds included); all edges vacuum.
inline YeeGrid make_vacuum_grid(std::array<std::vector<double>, 3> lines, const BoundarySet &boundary,
                                int pml_cells) {
    YeeGrid g;
    g.boundary = boundary;
    for (int a = 0; a < 3; ++a) {
        for (int s = 0; s < 2; ++s) g.pml[a][s] = boundary[2 * a + s] == Boundary::cpml ? pml_cells : 0;
        detail::pad_axis(lines[a], g.pml[a][0], g.pml[a][1]);
        for (std::size_t n = 1; n < lines[a].size(); ++n)
            if (!(lines[a][n] > lines[a][n - 1])) throw MeshError("coordinate lines must be strictly increasing");
    }
    g.lines = std::move(lines);
    g.table = {EdgeMaterial{1.0, 0.0, false}, EdgeMaterial{1.0, 0.0, true}};
    for (int c = 0; c < 3; ++c) g.edge_material[c].assign(g.node_count(), 0);
    return g;
}

inline std::vector<double> uniform_lines(double lo, double hi, double cell) {
    const int n = std::max(1, static_cast<int>(std::lround((hi - lo) / cell)));
    std::vector<double> v(n + 1);
    for (int i = 0; i <= n; ++i) v[i] = lo + (hi - lo) * i / n;
    return v;
}

namespace detail {

// Assigns dielectric edge materials by area-weighted averaging of the four cells
// surrounding each edge. `cell_mat` holds one table-like entry per cell.
inline void assign_dielectric_edges(YeeGrid &g, const std::vector<EdgeMaterial> &cell_mat,
                                    std::map<EdgeMaterial, std::uint16_t> &lookup) {
    const int nx = g.cells(0), ny = g.cells(1), nz = g.cells(2);
    auto cidx = [&](int i, int j, int k) { return (static_cast<std::size_t>(i) * ny + j) * nz + k; };
    auto intern = [&](EdgeMaterial m) {
        auto it = lookup.find(m);
        if (it != lookup.end()) return it->second;
        const auto id = static_cast<std::uint16_t>(g.table.size());
        g.table.push_back(m);
        lookup[m] = id;
        return id;
    };
    // Edge along axis a at node (n0 along a is the cell index), averaged over the
    // cells adjacent in the two transverse axes b, c.
    for (int a = 0; a < 3; ++a) {
        const int b = (a + 1) % 3, c = (a + 2) % 3;
        const std::array<int, 3> cells = {nx, ny, nz};
        std::array<int, 3> lim = {nx + 1, ny + 1, nz + 1};
        lim[a] = cells[a];
        for (int i = 0; i < lim[0]; ++i)
            for (int j = 0; j < lim[1]; ++j)
                for (int k = 0; k < lim[2]; ++k) {
                    const std::array<int, 3> p = {i, j, k};
                    double w_sum = 0, eps = 0, sig = 0;
                    for (int db = -1; db <= 0; ++db)
                        for (int dc = -1; dc <= 0; ++dc) {
                            std::array<int, 3> q = p;
                            q[b] += db;
                            q[c] += dc;
                            if (q[b] < 0 || q[b] >= cells[b] || q[c] < 0 || q[c] >= cells[c]) continue;
                            const double w = g.cell(b, q[b]) * g.cell(c, q[c]);
                            const EdgeMaterial &m = cell_mat[cidx(q[0], q[1], q[2])];
                            w_sum += w;
                            eps += w * m.eps_r;
                            sig += w * m.sigma;
                        }
                    EdgeMaterial em{eps / w_sum, sig / w_sum, false};
                    g.edge_material[a][g.index(i, j, k)] = intern(em);
                }
    }
}

} // namespace detail

/// Meshes a scene: graded lines, absorbing padding, edge materials, ports and snap report.
inline YeeGrid generate_mesh(const Scene &sc, const MeshPolicy &pol) {
    pol.check();
    if (!validate_scene(sc).empty()) throw MeshError("scene '" + sc.name + "' failed validation");

    std::array<detail::AxisMesh, 3> am;
    std::array<std::vector<double>, 3> lines;
    for (int a = 0; a < 3; ++a) {
        am[a] = detail::mesh_axis(sc, pol, a);
        lines[a] = am[a].lines;
    }
    YeeGrid g = make_vacuum_grid(lines, pol.boundary, pol.pml_cells);
    g.table.clear();
    std::map<EdgeMaterial, std::uint16_t> lookup;

    auto snap = [&](int axis, double x) {
        auto it = am[axis].snap_override.find(x);
        if (it != am[axis].snap_override.end()) return g.nearest_line(axis, it->second);
        return g.nearest_line(axis, x);
    };

    // Cell materials: highest-priority dielectric volume containing the cell center.
    const int nx = g.cells(0), ny = g.cells(1), nz = g.cells(2);
    std::vector<EdgeMaterial> cell_mat(static_cast<std::size_t>(nx) * ny * nz, EdgeMaterial{1.0, 0.0, false});
    std::vector<int> cell_prio(cell_mat.size(), std::numeric_limits<int>::min());
    for (const Primitive &p : sc.primitives) {
        const Material &m = sc.materials[p.material];
        if (m.is_pec() || std::holds_alternative<Plate>(p.shape)) continue;
        const EdgeMaterial em{m.eps_r, conductivity_from_tan_delta(m.eps_r, m.tan_delta, sc.f0), false};
        const Box bb = p.bounding_box();
        const int i0 = snap(0, bb.lo[0]), i1 = snap(0, bb.hi[0]);
        const int j0 = snap(1, bb.lo[1]), j1 = snap(1, bb.hi[1]);
        const int k0 = snap(2, bb.lo[2]), k1 = snap(2, bb.hi[2]);
        const Cylinder *cyl = std::get_if<Cylinder>(&p.shape);
        for (int i = i0; i < i1; ++i)
            for (int j = j0; j < j1; ++j) {
                if (cyl) {
                    const double x = 0.5 * (g.lines[0][i] + g.lines[0][i + 1]) - cyl->cx;
                    const double y = 0.5 * (g.lines[1][j] + g.lines[1][j + 1]) - cyl->cy;
                    if (x * x + y * y > cyl->radius * cyl->radius) continue;
                }
                for (int k = k0; k < k1; ++k) {
                    const std::size_t c = (static_cast<std::size_t>(i) * ny + j) * nz + k;
                    if (p.priority >= cell_prio[c]) {
                        cell_prio[c] = p.priority;
                        cell_mat[c] = em;
                    }
                }
            }
    }
    detail::assign_dielectric_edges(g, cell_mat, lookup);

    auto pec_id = [&]() {
        const EdgeMaterial em{1.0, 0.0, true};
        auto it = lookup.find(em);
        if (it != lookup.end()) return it->second;
        const auto id = static_cast<std::uint16_t>(g.table.size());
        g.table.push_back(em);
        lookup[em] = id;
        return id;
    }();
    auto set_pec = [&](int comp, int i, int j, int k) { g.edge_material[comp][g.index(i, j, k)] = pec_id; };

    for (std::size_t n = 0; n < sc.primitives.size(); ++n) {
        const Primitive &p = sc.primitives[n];
        const Box bb = p.bounding_box();
        SnapReport rep{static_cast<int>(n), p.tag, 0.0};
        for (int a = 0; a < 3; ++a)
            for (double x : {bb.lo[a], bb.hi[a]})
                rep.error = std::max(rep.error, std::abs(g.lines[a][snap(a, x)] - x));
        g.snaps.push_back(rep);

        if (!sc.materials[p.material].is_pec()) continue;
        const int i0 = snap(0, bb.lo[0]), i1 = snap(0, bb.hi[0]);
        const int j0 = snap(1, bb.lo[1]), j1 = snap(1, bb.hi[1]);
        const int k0 = snap(2, bb.lo[2]), k1 = snap(2, bb.hi[2]);
        if (const Cylinder *cyl = std::get_if<Cylinder>(&p.shape)) {
            auto inside = [&](int i, int j) {
                const double x = g.lines[0][i] - cyl->cx, y = g.lines[1][j] - cyl->cy;
                return x * x + y * y <= cyl->radius * cyl->radius * (1 + 1e-9);
            };
            bool any = false;
            for (int i = i0; i <= i1; ++i)
                for (int j = j0; j <= j1; ++j)
                    if (inside(i, j)) {
                        any = true;
                        for (int k = k0; k < k1; ++k) set_pec(2, i, j, k);
                        for (int k = k0; k <= k1; ++k) {
                            if (i < i1 && inside(i + 1, j)) set_pec(0, i, j, k);
                            if (j < j1 && inside(i, j + 1)) set_pec(1, i, j, k);
                        }
                    }
            if (!any) {
                const int i = g.nearest_line(0, cyl->cx), j = g.nearest_line(1, cyl->cy);
                for (int k = k0; k < k1; ++k) set_pec(2, i, j, k);
            }
        } else {
            // Plates have k0 == k1; boxes fill every edge inside their snapped extent.
            for (int i = i0; i <= i1; ++i)
                for (int j = j0; j <= j1; ++j)
                    for (int k = k0; k <= k1; ++k) {
                        if (i < i1) set_pec(0, i, j, k);
                        if (j < j1) set_pec(1, i, j, k);
                        if (k < k1) set_pec(2, i, j, k);
                    }
        }
    }

    for (const PortDef &pd : sc.ports) {
        GridPort gp;
        gp.index = pd.index;
        gp.i = g.nearest_line(0, pd.x);
        gp.j = g.nearest_line(1, pd.y);
        gp.k_gap = snap(2, pd.z0);
        gp.k_top = snap(2, pd.z1);
        gp.resistance = pd.impedance;
        gp.polarization = pd.polarization;
        if (gp.k_top <= gp.k_gap) throw MeshError("port " + std::to_string(pd.index) + " feed collapsed to zero cells");
        for (int k = gp.k_gap + 1; k < gp.k_top; ++k) set_pec(2, gp.i, gp.j, k);
        g.ports.push_back(gp);
    }
    return g;
}

/// Plain-text listing of the coordinate lines and per-material edge counts.
inline std::string dump_mesh(const YeeGrid &g) {
    std::ostringstream os;
    os.precision(9);
    os << "cells " << g.cells(0) << " " << g.cells(1) << " " << g.cells(2) << "\n";
    os << "pml " << g.pml[0][0] << " " << g.pml[0][1] << " " << g.pml[1][0] << " " << g.pml[1][1] << " "
       << g.pml[2][0] << " " << g.pml[2][1] << "\n";
    for (int a = 0; a < 3; ++a) {
        os << "lines_" << "xyz"[a] << "_mm";
        for (double x : g.lines[a]) os << " " << std::fixed << x * 1e3;
        os << "\n";
        os.unsetf(std::ios::fixed);
    }
    std::vector<std::size_t> counts(g.table.size(), 0);
    g.for_each_edge([&](int c, int i, int j, int k) { ++counts[g.edge_material[c][g.index(i, j, k)]]; });
    for (std::size_t m = 0; m < g.table.size(); ++m) {
        if (g.table[m].pec)
            os << "material pec edges " << counts[m] << "\n";
        else
            os << "material eps_r=" << g.table[m].eps_r << " sigma=" << g.table[m].sigma << " edges " << counts[m]
               << "\n";
    }
    for (const GridPort &p : g.ports)
        os << "port " << p.index << " node " << p.i << " " << p.j << " gap_k " << p.k_gap << " top_k " << p.k_top
           << "\n";
    return os.str();
}

} // namespace yeefield

#endif
