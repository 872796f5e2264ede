// Copyright 2026 The yeefield Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "yeefield/network.hpp"

#include <random>
#include <sstream>

using namespace yeefield;
using namespace yeefield::testing;
using Catch::Approx;

namespace {

std::vector<double> band_freqs() {
    std::vector<double> f;
    for (double x = 22e9; x <= 34e9 + 1; x += 0.5e9) f.push_back(x);
    return f;
}

Recordings run_micro(const YeeGrid &g, int excited) {
    Simulation<double> sim(g, cfl_timestep(g, 0.99));
    for (const GridPort &p : g.ports) sim.add_port(p, p.index == excited, Excitation{});
    RunControl rc;
    rc.max_steps = 200000;
    return sim.run(rc);
}

SMatrix synthetic(int n, const std::vector<double> &freqs, double off_db) {
    SMatrix S;
    S.freqs = freqs;
    for (std::size_t k = 0; k < freqs.size(); ++k) {
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Constant(n, n, cplx(std::pow(10.0, off_db / 20), 0));
        m.diagonal().setConstant(0.1);
        S.s.push_back(m);
    }
    S.converged.assign(n, true);
    return S;
}

} // namespace

TEST_CASE("Matched 50 ohm load across the port reflects nothing") {
    const YeeGrid g = micro_box(50.0);
    const Recordings r = run_micro(g, 1);
    REQUIRE(r.converged);
    const SMatrix S = extract_sparams({r}, band_freqs());
    for (const cplx &s : S.trace(1, 1)) CHECK(std::abs(s) < 0.02);
}

TEST_CASE("Open-circuited port reflects fully") {
    const YeeGrid g = micro_box(0.0);
    const Recordings r = run_micro(g, 1);
    REQUIRE(r.converged);
    const SMatrix S = extract_sparams({r}, band_freqs());
    for (const cplx &s : S.trace(1, 1)) CHECK(std::abs(s) == Approx(1.0).margin(0.02));
}

TEST_CASE("Asymmetric two-port is reciprocal and extraction is amplitude independent") {
    YeeGrid g = micro_box(0.0, {{2, 3}, {5, 6}});
    // a load on port 2's wire only, so the two ports see different structures
    g.table.push_back({1.0, 1.0 / (80.0 * micro), false});
    g.edge_material[2][g.index(5, 6, 2)] = static_cast<std::uint16_t>(g.table.size() - 1);
    std::vector<Recordings> runs = {run_micro(g, 1), run_micro(g, 2)};
    const auto f = band_freqs();
    const SMatrix S = extract_sparams(runs, f);
    for (std::size_t k = 0; k < f.size(); ++k) CHECK(std::abs(S.s[k](0, 1) - S.s[k](1, 0)) < 1e-3);
    CHECK(S.warnings.empty());

    for (Recordings &r : runs)
        for (PortRecord &p : r.ports) {
            for (double &x : p.v) x *= 3.0;
            for (double &x : p.i) x *= 3.0;
        }
    const SMatrix T = extract_sparams(runs, f);
    for (std::size_t k = 0; k < f.size(); ++k) CHECK((T.s[k] - S.s[k]).norm() < 1e-12);
}

TEST_CASE("Missing excitations are listed") {
    Recordings r;
    r.excited = 2;
    r.dt = 1e-13;
    for (int p = 1; p <= 3; ++p) r.ports.push_back({p, 50.0, {0.0, 0.0}, {0.0}});
    try {
        extract_sparams({r}, {28e9});
        FAIL("expected an incomplete-matrix error");
    } catch (const IncompleteMatrixError &e) {
        CHECK(e.missing() == std::vector<int>{1, 3});
    }
}

TEST_CASE("Passivity violations are attached as warnings") {
    SMatrix S = synthetic(2, {28e9}, -3.0);
    S.s[0].diagonal().setConstant(0.5);  // singular values 1.207 and 0.207
    S.check_passivity();
    CHECK(S.warnings.size() == 1);
    SMatrix P = synthetic(2, {28e9}, -20.0);
    P.check_passivity();
    CHECK(P.warnings.empty());
}

TEST_CASE("Bandwidth edges interpolate linearly in dB") {
    const auto b = bandwidth_at_threshold({27, 27.5, 28.5, 29}, {-8, -12, -12, -8});
    REQUIRE(b);
    CHECK(b->f_lo == Approx(27.25).epsilon(1e-14));
    CHECK(b->f_hi == Approx(28.75).epsilon(1e-14));
    CHECK(b->bandwidth() == Approx(1.5).epsilon(1e-14));
    CHECK(b->center() == Approx(28.0).epsilon(1e-14));

    CHECK_FALSE(bandwidth_at_threshold({27, 28, 29}, {-8, -8, -8}));
}

TEST_CASE("Bandwidth is invariant under refinement of a linear-in-dB curve") {
    // V-shaped curve: -20 dB at 28 GHz, 10 dB/GHz slopes; the -10 dB band is 27..29 GHz
    auto curve = [](double f) { return -20 + 10 * std::abs(f - 28.0); };
    for (int n : {5, 9, 17, 33}) {
        std::vector<double> f, l;
        for (int k = 0; k < n; ++k) {
            f.push_back(26.0 + 4.0 * k / (n - 1));
            l.push_back(curve(f.back()));
        }
        const auto b = bandwidth_at_threshold(f, l);
        REQUIRE(b);
        CHECK(b->f_lo == Approx(27.0).epsilon(1e-12));
        CHECK(b->f_hi == Approx(29.0).epsilon(1e-12));
    }
}

TEST_CASE("Widest contiguous band wins") {
    const auto b = bandwidth_at_threshold({1, 2, 3, 4, 5, 6, 7}, {-12, -8, -12, -12, -12, -8, -8});
    REQUIRE(b);
    CHECK(b->f_lo == Approx(2.5));
    CHECK(b->f_hi == Approx(5.5));
}

TEST_CASE("Worst isolation over an operating band") {
    const std::vector<double> f = {26e9, 27e9, 28e9, 29e9, 30e9};
    SMatrix S = synthetic(3, f, -40.0);
    CHECK(worst_isolation(S, 1, {26e9, 30e9}).db == Approx(-40.0));

    S.s[2](2, 0) = std::pow(10.0, -12.0 / 20);
    const Isolation w = worst_isolation(S, 1, {27e9, 29e9});
    CHECK(w.db == Approx(-12.0));
    CHECK(w.victim == 3);
    CHECK(w.freq == 28e9);

    CHECK_THROWS_AS(worst_isolation(S, 1, {27.2e9, 27.8e9}), ConfigError);
    CHECK_THROWS_AS(worst_isolation(S, 1, {20e9, 27.8e9}), ConfigError);
}

TEST_CASE("Operating band falls back to n257 for an unmatched port") {
    const std::vector<double> f = {24e9, 26e9, 28e9, 30e9};
    SMatrix S = synthetic(2, f, -30.0);  // |S11| = -20 dB everywhere: matched across the list
    auto b = operating_band(S, 1);
    CHECK(b[0] == 24e9);
    CHECK(b[1] == 30e9);
    for (auto &m : S.s) m(0, 0) = 0.9;
    b = operating_band(S, 1);
    CHECK(b[0] == n257_lo);
    CHECK(b[1] == n257_hi);
}

TEST_CASE("Per-port bandwidths and their labelled mean") {
    const std::vector<double> f = {27e9, 27.5e9, 28.5e9, 29e9};
    SMatrix S = synthetic(2, f, -30.0);
    const double lv[] = {-8, -12, -12, -8};
    for (std::size_t k = 0; k < f.size(); ++k) {
        S.s[k](0, 0) = std::pow(10.0, lv[k] / 20);
        S.s[k](1, 1) = 0.9;
    }
    const PortBandwidths pb = port_bandwidths(S);
    CHECK(pb.matched == 1);
    REQUIRE(pb.per_port[0]);
    CHECK_FALSE(pb.per_port[1]);
    CHECK(pb.mean_bandwidth == Approx(1.5e9));
}

TEST_CASE("Touchstone one-port line format") {
    SMatrix S;
    S.freqs = {28e9};
    S.s = {Eigen::MatrixXcd::Constant(1, 1, cplx(0.5, 0.0))};
    std::ostringstream os;
    write_touchstone(S, os);
    const std::string text = os.str();
    CHECK(text.find("\n# GHz S RI R 50.0\n") != std::string::npos);
    CHECK(text.find("\n28.0 0.5 0.0\n") != std::string::npos);
}

TEST_CASE("Touchstone two-port uses S11 S21 S12 S22 order") {
    std::istringstream is("# GHz S RI R 50\n28 0.1 0 0.2 0 0.3 0 0.4 0\n");
    const SMatrix S = read_touchstone(is, 2);
    CHECK(S.s[0](1, 0) == cplx(0.2, 0));
    CHECK(S.s[0](0, 1) == cplx(0.3, 0));
    std::ostringstream os;
    write_touchstone(S, os);
    CHECK(os.str().find("\n28.0 0.1 0.0 0.2 0.0 0.3 0.0 0.4 0.0\n") != std::string::npos);
}

TEST_CASE("Random passive 8-port matrices survive a Touchstone round trip") {
    std::mt19937 rng(7);
    std::normal_distribution<double> nd;
    SMatrix S;
    for (int k = 0; k < 12; ++k) {
        S.freqs.push_back(24e9 + 0.437e9 * k);
        Eigen::MatrixXcd m(8, 8);
        for (int r = 0; r < 8; ++r)
            for (int c = 0; c < 8; ++c) m(r, c) = {nd(rng), nd(rng)};
        m *= 0.99 / Eigen::JacobiSVD<Eigen::MatrixXcd>(m).singularValues()(0);
        S.s.push_back(m);
    }
    std::stringstream ss;
    write_touchstone(S, ss);
    const SMatrix R = read_touchstone(ss, 8);
    REQUIRE(R.s.size() == S.s.size());
    for (std::size_t k = 0; k < S.s.size(); ++k) {
        CHECK(R.freqs[k] == Approx(S.freqs[k]).epsilon(1e-15));
        CHECK((R.s[k] - S.s[k]).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK(R.z0 == 50.0);
}

TEST_CASE("Touchstone reader converts MHz and MA/DB formats") {
    std::istringstream ma("! comment line\n# MHz S MA R 50\n28000 0.5 90\n29000 0.25 -45 ! trailing\n");
    const SMatrix S = read_touchstone(ma, 1);
    CHECK(S.freqs[0] == Approx(28e9).epsilon(1e-15));
    CHECK(std::abs(S.s[0](0, 0) - cplx(0, 0.5)) < 1e-9);
    CHECK(std::abs(S.s[1](0, 0) - std::polar(0.25, -pi / 4)) < 1e-9);

    std::istringstream db("# Hz S DB R 75\n28e9 -20 180\n");
    const SMatrix D = read_touchstone(db, 1);
    CHECK(D.z0 == 75.0);
    CHECK(std::abs(D.s[0](0, 0) - cplx(-0.1, 0)) < 1e-9);
}

TEST_CASE("Malformed Touchstone files report the line") {
    auto line_of = [](const std::string &text, int ports) -> std::size_t {
        std::istringstream is(text);
        try {
            read_touchstone(is, ports);
        } catch (const ParseError &e) {
            return e.line();
        }
        return 0;
    };
    CHECK(line_of("# GHz S RI R 50\n28 0.5 x\n", 1) == 2);
    CHECK(line_of("# GHz S RI R 50\n28 0.5 0\n27 0.1 0\n", 1) == 3);
    CHECK(line_of("# GHz Z RI R 50\n", 1) == 1);
    CHECK(line_of("28 0.5 0\n", 1) == 1);
    CHECK(line_of("# GHz S RI R 50\n28 0.1 0 0.2\n", 2) == 2);
    std::istringstream empty("");
    CHECK_THROWS_AS(read_touchstone(empty, 1), ParseError);
}

TEST_CASE("Port count from the file extension") {
    CHECK(touchstone_ports("a/b/array.s8p") == 8);
    CHECK(touchstone_ports("x.S2P") == 2);
    CHECK_THROWS_AS(touchstone_ports("x.csv"), ConfigError);
}
