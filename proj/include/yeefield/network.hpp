// Copyright 2026 The yeefield Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef YEEFIELD_NETWORK_HPP
#define YEEFIELD_NETWORK_HPP

#include "constants.hpp"
#include "error.hpp"
#include "solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace yeefield {

/// n257 coverage used when a structure has no -10 dB band of its own.
inline constexpr double n257_lo = 24.25e9;
inline constexpr double n257_hi = 29.5e9;

/// Scattering matrix over a frequency list; s[f](m, n) is S_{m+1,n+1}.
struct SMatrix {
    std::vector<double> freqs;  // Hz, strictly increasing
    std::vector<Eigen::MatrixXcd> s;
    double z0 = 50.0;
    std::vector<bool> converged;        // per excitation (port n at index n-1)
    std::vector<std::string> warnings;  // passivity and similar non-fatal findings

    int ports() const { return s.empty() ? 0 : static_cast<int>(s.front().rows()); }

    std::vector<cplx> trace(int m, int n) const {
        std::vector<cplx> out;
        out.reserve(s.size());
        for (const auto &x : s) out.push_back(x(m - 1, n - 1));
        return out;
    }

    std::vector<double> trace_db(int m, int n) const {
        std::vector<double> out;
        out.reserve(s.size());
        for (const auto &x : s) out.push_back(db20(std::abs(x(m - 1, n - 1))));
        return out;
    }

    void check_frequencies() const {
        for (std::size_t k = 1; k < freqs.size(); ++k)
            if (!(freqs[k] > freqs[k - 1])) throw ConfigError("S-matrix frequencies must be strictly increasing");
        if (freqs.size() != s.size()) throw ConfigError("S-matrix frequency count does not match its data");
    }

    /// Appends a warning for every frequency whose largest singular value exceeds 1 + tol.
    void check_passivity(double tol = 1e-6) {
        for (std::size_t k = 0; k < s.size(); ++k) {
            const double smax = Eigen::JacobiSVD<Eigen::MatrixXcd>(s[k]).singularValues()(0);
            if (smax > 1.0 + tol) {
                std::ostringstream os;
                os.precision(9);
                os << "non-passive at " << freqs[k] / 1e9 << " GHz: largest singular value " << smax;
                warnings.push_back(os.str());
            }
        }
    }
};

namespace detail {

/// Sum x[n] exp(-j w (t0 + n dt)) dt; the rotating phasor is re-seeded exactly every
/// 512 samples so roundoff cannot accumulate.
inline cplx dft_at(const std::vector<double> &x, double t0, double dt, double f) {
    const double w = 2 * pi * f;
    const cplx rot = std::polar(1.0, -w * dt);
    cplx acc = 0, ph;
    for (std::size_t n = 0; n < x.size(); ++n) {
        if (n % 512 == 0) ph = std::polar(1.0, -w * (t0 + static_cast<double>(n) * dt));
        acc += x[n] * ph;
        ph *= rot;
    }
    return acc * dt;
}

} // namespace detail

/// Voltage and current phasors of one port record at `f`, each at its exact sample times.
inline std::array<cplx, 2> port_phasors(const PortRecord &p, double dt, double f) {
    return {detail::dft_at(p.v, 0.0, dt, f), detail::dft_at(p.i, 0.5 * dt, dt, f)};
}

/// S_mn = b_m / a_n with port n excited, a = (V + Z0 I)/(2 sqrt Z0), b = (V - Z0 I)/(2 sqrt Z0).
/// Ports are identified by their 1-based index; every index needs one excitation.
inline SMatrix extract_sparams(const std::vector<Recordings> &runs, const std::vector<double> &freqs,
                               double z0 = 50.0) {
    if (runs.empty()) throw IncompleteMatrixError({});
    const int n = static_cast<int>(runs.front().ports.size());
    std::vector<const Recordings *> by_port(n, nullptr);
    for (const Recordings &r : runs) {
        if (static_cast<int>(r.ports.size()) != n) throw ConfigError("recordings disagree on the port count");
        if (r.excited < 1 || r.excited > n) throw ConfigError("recording has no valid excited port");
        by_port[r.excited - 1] = &r;
    }
    std::vector<int> missing;
    for (int p = 0; p < n; ++p)
        if (!by_port[p]) missing.push_back(p + 1);
    if (!missing.empty()) throw IncompleteMatrixError(missing);

    SMatrix S;
    S.freqs = freqs;
    S.z0 = z0;
    S.s.assign(freqs.size(), Eigen::MatrixXcd::Zero(n, n));
    const double k = 1.0 / (2.0 * std::sqrt(z0));
    for (int col = 0; col < n; ++col) {
        const Recordings &r = *by_port[col];
        S.converged.push_back(r.converged);
        std::vector<int> row(n, -1);
        for (int m = 0; m < n; ++m) {
            const int idx = r.ports[m].index;
            if (idx < 1 || idx > n || row[idx - 1] != -1) throw ConfigError("port indices must be 1..N and unique");
            row[idx - 1] = m;
        }
        for (std::size_t fi = 0; fi < freqs.size(); ++fi) {
            const auto inc = port_phasors(r.ports[row[col]], r.dt, freqs[fi]);
            const cplx a = (inc[0] + z0 * inc[1]) * k;
            for (int m = 0; m < n; ++m) {
                const auto vi = m == col ? inc : port_phasors(r.ports[row[m]], r.dt, freqs[fi]);
                S.s[fi](m, col) = (vi[0] - z0 * vi[1]) * k / a;
            }
        }
    }
    S.check_frequencies();
    S.check_passivity();
    return S;
}

// ------------------------------------------------------------------------------------------------
// Band metrics
// ------------------------------------------------------------------------------------------------

struct BandMetric {
    double f_lo = 0, f_hi = 0;
    double threshold_db = -10;
    double bandwidth() const { return f_hi - f_lo; }
    double center() const { return 0.5 * (f_lo + f_hi); }
    bool contains(double f) const { return f >= f_lo && f <= f_hi; }
};

/// Widest contiguous interval with level <= threshold, edges interpolated linearly in dB.
inline std::optional<BandMetric> bandwidth_at_threshold(const std::vector<double> &freqs,
                                                        const std::vector<double> &level_db,
                                                        double threshold_db = -10.0) {
    if (freqs.size() < 2 || freqs.size() != level_db.size())
        throw ConfigError("bandwidth needs at least two samples with matching levels");
    auto cross = [&](std::size_t a, std::size_t b) {
        const double t = (threshold_db - level_db[a]) / (level_db[b] - level_db[a]);
        return freqs[a] + t * (freqs[b] - freqs[a]);
    };
    std::optional<BandMetric> best;
    const std::size_t n = freqs.size();
    for (std::size_t a = 0; a < n;) {
        if (!(level_db[a] <= threshold_db)) {
            ++a;
            continue;
        }
        std::size_t b = a;
        while (b + 1 < n && level_db[b + 1] <= threshold_db) ++b;
        BandMetric m;
        m.threshold_db = threshold_db;
        m.f_lo = a > 0 ? cross(a - 1, a) : freqs[a];
        m.f_hi = b + 1 < n ? cross(b, b + 1) : freqs[b];
        if (m.f_hi > m.f_lo && (!best || m.bandwidth() > best->bandwidth())) best = m;
        a = b + 1;
    }
    return best;
}

struct PortBandwidths {
    std::vector<std::optional<BandMetric>> per_port;  // port n at index n-1
    int matched = 0;                                  // ports with a band
    double mean_bandwidth = 0;                        // arithmetic mean over matched ports only
};

inline PortBandwidths port_bandwidths(const SMatrix &S, double threshold_db = -10.0) {
    PortBandwidths out;
    double sum = 0;
    for (int p = 1; p <= S.ports(); ++p) {
        out.per_port.push_back(bandwidth_at_threshold(S.freqs, S.trace_db(p, p), threshold_db));
        if (out.per_port.back()) {
            ++out.matched;
            sum += out.per_port.back()->bandwidth();
        }
    }
    out.mean_bandwidth = out.matched ? sum / out.matched : 0.0;
    return out;
}

/// Isolation band for a port: its own -10 dB band, or n257 when it is unmatched.
inline std::array<double, 2> operating_band(const SMatrix &S, int port, double threshold_db = -10.0) {
    if (auto b = bandwidth_at_threshold(S.freqs, S.trace_db(port, port), threshold_db)) return {b->f_lo, b->f_hi};
    return {n257_lo, n257_hi};
}

struct Isolation {
    double db = -std::numeric_limits<double>::infinity();
    int victim = 0;  // port m achieving the maximum
    double freq = 0;
};

/// max |S_m,port| in dB over frequency samples inside [band] and m != port.
inline Isolation worst_isolation(const SMatrix &S, int port, std::array<double, 2> band) {
    if (port < 1 || port > S.ports()) throw ConfigError("isolation port out of range");
    if (S.freqs.empty() || band[0] > band[1] || band[0] < S.freqs.front() * (1 - 1e-12) ||
        band[1] > S.freqs.back() * (1 + 1e-12))
        throw ConfigError("isolation band lies outside the frequency list");
    Isolation w;
    bool any = false;
    for (std::size_t k = 0; k < S.freqs.size(); ++k) {
        if (S.freqs[k] < band[0] || S.freqs[k] > band[1]) continue;
        any = true;
        for (int m = 1; m <= S.ports(); ++m) {
            if (m == port) continue;
            const double v = db20(std::abs(S.s[k](m - 1, port - 1)));
            if (v > w.db) w = {v, m, S.freqs[k]};
        }
    }
    if (!any) throw ConfigError("isolation band contains no frequency samples");
    return w;
}

// ------------------------------------------------------------------------------------------------
// Touchstone v1
// ------------------------------------------------------------------------------------------------

namespace detail {

/// Shortest round-trip decimal, always carrying a decimal point or exponent.
inline std::string fmt_num(double v) {
    if (v == 0.0) v = 0.0;  // drop the sign of -0
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, end);
    if (s.find_first_of(".eni") == std::string::npos) s += ".0";
    return s;
}

} // namespace detail

/// Writes `# GHz S RI R <z0>`. One and two ports use the single-row layout (two-port
/// order S11 S21 S12 S22); larger matrices are written row by row, four pairs per line.
inline void write_touchstone(const SMatrix &S, std::ostream &os) {
    const int n = S.ports();
    if (n < 1) throw ConfigError("cannot write an empty S-matrix");
    os << "! yeefield S-parameters, " << n << " port(s)\n";
    os << "# GHz S RI R " << detail::fmt_num(S.z0) << "\n";
    auto pair = [&](const cplx &z) { return detail::fmt_num(z.real()) + " " + detail::fmt_num(z.imag()); };
    for (std::size_t k = 0; k < S.s.size(); ++k) {
        const auto &m = S.s[k];
        os << detail::fmt_num(S.freqs[k] / 1e9);
        if (n == 1) {
            os << " " << pair(m(0, 0)) << "\n";
        } else if (n == 2) {
            os << " " << pair(m(0, 0)) << " " << pair(m(1, 0)) << " " << pair(m(0, 1)) << " " << pair(m(1, 1)) << "\n";
        } else {
            for (int r = 0; r < n; ++r) {
                for (int c = 0; c < n; ++c) {
                    if (c > 0 && c % 4 == 0) os << "\n";
                    os << (r == 0 && c == 0 ? " " : (c % 4 == 0 ? "    " : " ")) << pair(m(r, c));
                }
                os << "\n";
            }
        }
    }
}

inline void write_touchstone(const SMatrix &S, const std::string &path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path);
    write_touchstone(S, os);
}

/// Parses Touchstone v1 with `ports` ports; accepts Hz/kHz/MHz/GHz and RI/MA/DB.
inline SMatrix read_touchstone(std::istream &is, int ports) {
    if (ports < 1) throw ConfigError("port count must be positive");
    double fscale = 1e9, z0 = 50.0;
    std::string format = "MA";
    bool have_option = false;
    struct Tok {
        double v;
        std::size_t line;
    };
    std::vector<Tok> toks;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto c = line.find('!'); c != std::string::npos) line.erase(c);
        std::istringstream ls(line);
        std::string w;
        if (!(ls >> w)) continue;
        if (w[0] == '#') {
            if (have_option) throw ParseError(lineno, "second option line");
            have_option = true;
            std::vector<std::string> words;
            if (w.size() > 1) words.push_back(w.substr(1));
            while (ls >> w) words.push_back(w);
            for (std::size_t i = 0; i < words.size(); ++i) {
                std::string u = words[i];
                std::transform(u.begin(), u.end(), u.begin(), [](unsigned char ch) { return std::toupper(ch); });
                if (u == "HZ") fscale = 1;
                else if (u == "KHZ") fscale = 1e3;
                else if (u == "MHZ") fscale = 1e6;
                else if (u == "GHZ") fscale = 1e9;
                else if (u == "RI" || u == "MA" || u == "DB") format = u;
                else if (u == "S") continue;
                else if (u == "Y" || u == "Z" || u == "H" || u == "G")
                    throw ParseError(lineno, "only S parameters are supported");
                else if (u == "R") {
                    if (i + 1 >= words.size()) throw ParseError(lineno, "R without a reference impedance");
                    try {
                        std::size_t used = 0;
                        z0 = std::stod(words[++i], &used);
                        if (used != words[i].size()) throw std::invalid_argument("");
                    } catch (const std::exception &) {
                        throw ParseError(lineno, "bad reference impedance '" + words[i] + "'");
                    }
                } else
                    throw ParseError(lineno, "unknown option '" + words[i] + "'");
            }
            continue;
        }
        if (!have_option) throw ParseError(lineno, "data before the option line");
        do {
            double v = 0;
            auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
            if (ec != std::errc() || p != w.data() + w.size()) throw ParseError(lineno, "bad number '" + w + "'");
            toks.push_back({v, lineno});
        } while (ls >> w);
    }
    if (!have_option) throw ParseError(lineno, "missing option line");
    const std::size_t per = 1 + 2 * static_cast<std::size_t>(ports) * ports;
    if (toks.empty()) throw ParseError(lineno, "no data");
    if (toks.size() % per != 0)
        throw ParseError(toks.back().line, "incomplete frequency record (expected " + std::to_string(per) +
                                               " numbers per frequency)");
    SMatrix S;
    S.z0 = z0;
    for (std::size_t b = 0; b < toks.size(); b += per) {
        const double f = toks[b].v * fscale;
        if (!S.freqs.empty() && !(f > S.freqs.back()))
            throw ParseError(toks[b].line, "frequencies must be strictly increasing");
        Eigen::MatrixXcd m(ports, ports);
        for (int q = 0; q < ports * ports; ++q) {
            const double x = toks[b + 1 + 2 * q].v, y = toks[b + 2 + 2 * q].v;
            cplx z;
            if (format == "RI") z = {x, y};
            else if (format == "MA") z = std::polar(x, y * pi / 180);
            else z = std::polar(std::pow(10.0, x / 20), y * pi / 180);
            int r = q / ports, c = q % ports;
            if (ports == 2) std::swap(r, c);  // two-port order is S11 S21 S12 S22
            m(r, c) = z;
        }
        S.freqs.push_back(f);
        S.s.push_back(m);
    }
    S.converged.assign(ports, true);
    return S;
}

/// Port count from a `.sNp` extension.
inline int touchstone_ports(const std::string &path) {
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos || dot + 3 > path.size()) throw ConfigError("cannot infer port count from " + path);
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext.front() != 's' || ext.back() != 'p') throw ConfigError("not a Touchstone extension: " + path);
    int n = 0;
    auto [p, ec] = std::from_chars(ext.data() + 1, ext.data() + ext.size() - 1, n);
    if (ec != std::errc() || p != ext.data() + ext.size() - 1 || n < 1)
        throw ConfigError("not a Touchstone extension: " + path);
    return n;
}

inline SMatrix read_touchstone(const std::string &path) {
    const int n = touchstone_ports(path);
    std::ifstream is(path);
    if (!is) throw Error("cannot read " + path);
    return read_touchstone(is, n);
}

} // namespace yeefield

#endif
