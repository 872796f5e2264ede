// Copyright 2026 The yeefield Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include "yeefield/farfield.hpp"

#include <functional>
#include <sstream>

using namespace yeefield;
using Catch::Approx;

namespace {

using Vec3c = std::array<cplx, 3>;

// Electric dipole of moment p along `d` at r0 (exp(+jwt) convention).
struct Dipole {
    std::array<double, 3> r0{}, d{0, 0, 1};
    cplx p = 1e-12;
};

void dipole_fields(const std::vector<Dipole> &ds, double k, const std::array<double, 3> &r, Vec3c &E, Vec3c &H) {
    E = {0, 0, 0}, H = {0, 0, 0};
    const double w = k * c0;
    for (const Dipole &dp : ds) {
        std::array<double, 3> R;
        for (int a = 0; a < 3; ++a) R[a] = r[a] - dp.r0[a];
        const double rr = std::sqrt(R[0] * R[0] + R[1] * R[1] + R[2] * R[2]);
        std::array<double, 3> n;
        for (int a = 0; a < 3; ++a) n[a] = R[a] / rr;
        const std::array<double, 3> nxd = {n[1] * dp.d[2] - n[2] * dp.d[1], n[2] * dp.d[0] - n[0] * dp.d[2],
                                           n[0] * dp.d[1] - n[1] * dp.d[0]};
        const std::array<double, 3> nxdxn = {nxd[1] * n[2] - nxd[2] * n[1], nxd[2] * n[0] - nxd[0] * n[2],
                                             nxd[0] * n[1] - nxd[1] * n[0]};
        const double nd = n[0] * dp.d[0] + n[1] * dp.d[1] + n[2] * dp.d[2];
        const cplx ph = std::polar(1.0, -k * rr);
        const cplx near = 1.0 / (rr * rr * rr) + cplx(0, k) / (rr * rr);
        for (int a = 0; a < 3; ++a) {
            E[a] += dp.p / (4 * pi * eps0) * (k * k * nxdxn[a] * ph / rr + (3 * n[a] * nd - dp.d[a]) * near * ph);
            H[a] += dp.p * w * k / (4 * pi) * nxd[a] * ph / rr * (1.0 + 1.0 / cplx(0, k * rr));
        }
    }
}

// Uniformly sampled cube [-half, half]^2 x [zlo, zhi]; the bottom face is dropped with a ground.
HuygensRecord analytic_record(const std::vector<Dipole> &ds, double freq, double half, double zlo, double zhi,
                              int cells, bool ground) {
    HuygensRecord rec;
    rec.freqs = {freq};
    rec.ground_image = ground;
    rec.ground_z = zlo;
    const double k = 2 * pi * freq / c0;
    const double lo[3] = {-half, -half, zlo}, hi[3] = {half, half, zhi};
    for (int a = 0; a < 3; ++a)
        for (int side = 0; side < 2; ++side) {
            if (ground && a == 2 && side == 0) continue;
            HuygensFace f;
            f.axis = a;
            f.normal = side ? 1 : -1;
            f.position = side ? hi[a] : lo[a];
            const int t1 = (a + 1) % 3, t2 = (a + 2) % 3;
            const double d1 = (hi[t1] - lo[t1]) / cells, d2 = (hi[t2] - lo[t2]) / cells;
            for (int p = 0; p < cells; ++p) {
                f.u.push_back(lo[t1] + (p + 0.5) * d1);
                f.du.push_back(d1);
                f.v.push_back(lo[t2] + (p + 0.5) * d2);
                f.dv.push_back(d2);
            }
            f.e1.assign(1, std::vector<cplx>(f.cells()));
            f.e2 = f.h1 = f.h2 = f.e1;
            for (int p = 0; p < cells; ++p)
                for (int q = 0; q < cells; ++q) {
                    std::array<double, 3> r;
                    r[a] = f.position, r[t1] = f.u[p], r[t2] = f.v[q];
                    Vec3c E, H;
                    dipole_fields(ds, k, r, E, H);
                    const std::size_t c = static_cast<std::size_t>(p) * cells + q;
                    f.e1[0][c] = E[t1], f.e2[0][c] = E[t2], f.h1[0][c] = H[t1], f.h2[0][c] = H[t2];
                }
            rec.faces.push_back(std::move(f));
        }
    return rec;
}

constexpr double f28 = 28e9;
const double lam = c0 / f28;

FarField synthetic(double step, bool upper, const std::function<std::array<cplx, 2>(double, double)> &field) {
    AngleGrid g{step, upper};
    FarField ff;
    ff.freq = f28;
    ff.theta = g.thetas();
    ff.phi = g.phis();
    ff.upper_only = upper;
    for (double t : ff.theta)
        for (double p : ff.phi) {
            const auto e = field(t * pi / 180, p * pi / 180);
            ff.e_theta.push_back(e[0]);
            ff.e_phi.push_back(e[1]);
        }
    return ff;
}

} // namespace

TEST_CASE("Hertzian dipole directivity is 1.76 dBi with a null along its axis") {
    const auto rec = analytic_record({Dipole{}}, f28, 0.6 * lam, -0.6 * lam, 0.6 * lam, 24, false);
    const FarField ff = ntff(rec, f28);
    const double prad = integrate_power(ff);
    const auto d = gain_pattern(ff, prad);
    const Direction pk = pattern_peak(ff, d);
    CHECK(pk.value == Approx(db10(1.5)).margin(0.1));
    CHECK(pk.theta == Approx(90.0));
    CHECK(d[ff.at(0, 0)] - pk.value < -40.0);
    CHECK(prad == Approx(ff.radiated_power).epsilon(0.01));
}

TEST_CASE("Two in-phase dipoles half a wavelength apart have endfire nulls") {
    Dipole a, b;
    a.r0 = {-lam / 4, 0, 0};
    b.r0 = {lam / 4, 0, 0};
    const auto rec = analytic_record({a, b}, f28, 0.75 * lam, -0.6 * lam, 0.6 * lam, 30, false);
    const FarField ff = ntff(rec, f28, AngleGrid{1.0});
    const auto g = gain_pattern(ff, integrate_power(ff));
    for (double phi : {0.0, 180.0}) {
        const std::size_t ip = ff.phi_index(phi);
        std::size_t best = 0;
        for (std::size_t it = 45; it <= 135; ++it)
            if (g[ff.at(it, ip)] < g[ff.at(best ? best : 45, ip)]) best = it;
        CHECK(std::abs(ff.theta[best] - 90.0) <= 1.0);
    }
    CHECK(integrate_power(ff) == Approx(ff.radiated_power).epsilon(0.01));
}

TEST_CASE("Ground image doubles a vertical monopole's directivity") {
    // dipole at the ground plane: total field is twice the free-space dipole field
    Dipole d;
    d.p = 2e-12;
    const auto rec = analytic_record({d}, f28, 0.6 * lam, 0.0, 0.6 * lam, 24, true);
    const FarField ff = ntff(rec, f28);
    CHECK(ff.upper_only);
    CHECK(ff.theta.back() == 90.0);
    const double prad = integrate_power(ff);
    CHECK(prad == Approx(ff.radiated_power).epsilon(0.01));
    const Direction pk = pattern_peak(ff, gain_pattern(ff, prad));
    CHECK(pk.value == Approx(db10(3.0)).margin(0.1));
}

TEST_CASE("Horizontal dipole above ground follows the image array factor") {
    const double h = lam / 4;
    Dipole d, img;
    d.d = {1, 0, 0};
    d.r0 = {0, 0, h};
    img = d;
    img.r0 = {0, 0, -h};
    img.p = -d.p;
    const auto rec = analytic_record({d, img}, f28, 0.6 * lam, 0.0, 0.7 * lam, 26, true);
    const FarField ff = ntff(rec, f28);
    const std::size_t ip = ff.phi_index(90.0);  // yz-plane: element factor is flat
    const double k = 2 * pi / lam;
    const double ref = ff.intensity(ff.at(0, ip));
    for (double t : {10.0, 30.0, 50.0, 70.0}) {
        const double af = std::pow(std::sin(k * h * std::cos(t * pi / 180)), 2);
        CHECK(db10(ff.intensity(ff.at(ff.theta_index(t), ip)) / ref) == Approx(db10(af)).margin(0.1));
    }
}

TEST_CASE("NTFF is linear in the recorded fields and rejects unknown frequencies") {
    auto rec = analytic_record({Dipole{}}, f28, 0.6 * lam, -0.6 * lam, 0.6 * lam, 12, false);
    const FarField a = ntff(rec, f28, AngleGrid{5.0});
    for (auto &f : rec.faces)
        for (auto *arr : {&f.e1, &f.e2, &f.h1, &f.h2})
            for (auto &x : (*arr)[0]) x *= cplx(0, 2);
    const FarField b = ntff(rec, f28, AngleGrid{5.0});
    for (std::size_t n = 0; n < a.e_theta.size(); ++n)
        CHECK(std::abs(b.e_theta[n] - cplx(0, 2) * a.e_theta[n]) <= 1e-12 * (1 + std::abs(b.e_theta[n])));
    try {
        ntff(rec, 30e9);
        FAIL("expected an error");
    } catch (const ConfigError &e) {
        CHECK(std::string(e.what()).find("28") != std::string::npos);
    }
}

TEST_CASE("Gain scales with accepted power") {
    const auto rec = analytic_record({Dipole{}}, f28, 0.6 * lam, -0.6 * lam, 0.6 * lam, 12, false);
    const FarField ff = ntff(rec, f28, AngleGrid{2.0});
    const double p = integrate_power(ff);
    const auto g1 = gain_pattern(ff, p), g2 = gain_pattern(ff, p / 2);
    for (std::size_t n = 0; n < g1.size(); ++n)
        if (std::isfinite(g1[n])) CHECK(g2[n] - g1[n] == Approx(db10(2.0)).margin(1e-9));
    // lossless: accepted == radiated gives gain == directivity
    const auto d = gain_pattern(ff, ff.radiated_power);
    CHECK(pattern_peak(ff, d).value == Approx(pattern_peak(ff, g1).value).margin(0.05));
    CHECK_THROWS_AS(gain_pattern(ff, 0.0), ConfigError);
}

TEST_CASE("HPBW of analytic cos^2q patterns") {
    for (int q : {1, 10}) {
        const FarField ff = synthetic(1.0, true, [&](double t, double) {
            return std::array<cplx, 2>{std::pow(std::cos(t), q), 0.0};
        });
        const auto g = gain_pattern(ff, 1.0);
        const double expect = 2 * std::acos(std::pow(2.0, -1.0 / (2 * q))) * 180 / pi;
        CHECK(hpbw(ff, g, 0.0) == Approx(expect).margin(0.1));
        CHECK(hpbw(ff, g, 90.0) == Approx(expect).margin(0.1));
    }
    // q = 10 closed form: 2 acos(2^(-1/20)) = 29.995 deg
    CHECK(2 * std::acos(std::pow(2.0, -1.0 / 20)) * 180 / pi == Approx(29.995).margin(1e-3));
}

TEST_CASE("HPBW without a crossing on one side is an error") {
    const std::vector<double> a = {0, 1, 2, 3, 4};
    CHECK_THROWS_AS(hpbw(a, {0, -1, -2, -10, -20}), OneSidedBeamError);
    // triangle in dB: crossings at 2 -+ (1 - 0.30103)
    CHECK(hpbw(a, {-20, -10, 0, -10, -20}) == Approx(2 * -db10(0.5) / 10).epsilon(1e-12));
}

TEST_CASE("Aperture efficiency cross-check") {
    const double area = 14.178e-3 * 14.178e-3;
    CHECK(aperture_efficiency(11.81, area, 28e9) == Approx(0.689).margin(0.005));
    const double l = c0 / 28e9;
    CHECK(aperture_efficiency(db10(4 * pi * area / (l * l)), area, 28e9) == Approx(1.0).epsilon(1e-12));
    CHECK(aperture_efficiency(11.81, 2 * area, 28e9) == Approx(aperture_efficiency(11.81, area, 28e9) / 2));
    CHECK_THROWS_AS(aperture_efficiency(10, 0, 28e9), ConfigError);
}

TEST_CASE("Cross-polarization discrimination in Ludwig-3") {
    const FarField pure = synthetic(1.0, true, [](double t, double) {
        return std::array<cplx, 2>{std::cos(t), 0.0};
    });
    CHECK(xpd(pure, 0.0, Polarization::x) == 60.0);
    // on phi = 0: co = E_theta, cross = E_phi
    const FarField ten = synthetic(1.0, true, [](double t, double) {
        return std::array<cplx, 2>{std::cos(t), 0.1 * std::cos(t)};
    });
    CHECK(xpd(ten, 0.0, Polarization::x) == Approx(20.0).margin(1e-9));
    // y reference on phi = 90: co = E_theta sin + E_phi cos = E_theta
    CHECK(xpd(ten, 90.0, Polarization::y) == Approx(20.0).margin(1e-9));
    const FarField none = synthetic(1.0, true, [](double, double) { return std::array<cplx, 2>{0.0, 0.0}; });
    CHECK_THROWS_AS(xpd(none, 0.0, Polarization::x), ConfigError);
}

TEST_CASE("Superposition of excitations") {
    const auto rec = analytic_record({Dipole{}}, f28, 0.6 * lam, -0.6 * lam, 0.6 * lam, 10, false);
    const FarField a = ntff(rec, f28, AngleGrid{5.0});
    SMatrix S;
    S.freqs = {f28};
    S.s = {Eigen::MatrixXcd::Zero(2, 2)};
    FarField b = a;
    b.scale(cplx(0, 3));
    const FarField one = superpose_excitations({a, b}, {2.0, 0.0}, S);
    for (std::size_t n = 0; n < a.e_theta.size(); ++n) CHECK(std::abs(one.e_theta[n] - 2.0 * a.e_theta[n]) < 1e-15 + 1e-12 * std::abs(one.e_theta[n]));
    CHECK(one.accepted_power == Approx(2.0));  // 1/2 |w|^2 with no reflection
    const FarField zero = superpose_excitations({a, b}, {0.0, 0.0}, S);
    for (const cplx &x : zero.e_theta) CHECK(x == 0.0);
    CHECK_THROWS_AS(superpose_excitations({a, b}, {1.0}, S), ConfigError);
    CHECK(parse_weights("odd", 4) == std::vector<cplx>{1.0, 0.0, 1.0, 0.0});
    CHECK(parse_weights("even", 2) == std::vector<cplx>{0.0, 1.0});
    CHECK(parse_weights("1,0.5", 2) == std::vector<cplx>{1.0, 0.5});
    CHECK_THROWS_AS(parse_weights("1,2,3", 2), ConfigError);
}

TEST_CASE("Pattern CSV round trip and half-degree cuts") {
    const FarField ff = synthetic(2.0, true, [](double t, double p) {
        return std::array<cplx, 2>{std::cos(t) * std::cos(p), cplx(0, 0.1) * std::sin(p)};
    });
    const auto g = gain_pattern(ff, 1.0);
    std::stringstream ss;
    write_pattern_csv(ff, g, ss);
    CHECK(ss.str().rfind(std::string(pattern_csv_header) + "\n", 0) == 0);
    std::vector<double> g2;
    const FarField back = read_pattern_csv(ss, g2);
    CHECK(back.theta == ff.theta);
    CHECK(back.phi == ff.phi);
    for (std::size_t n = 0; n < g.size(); ++n)
        if (std::isfinite(g[n])) CHECK(g2[n] == Approx(g[n]).margin(1e-6));

    const auto cut = resample_cut(ff, g, 0.0, 0.5);
    CHECK(cut.front().angle == -90.0);
    CHECK(cut.back().angle == 90.0);
    CHECK(cut.size() == 361);
    CHECK(cut[180].angle == 0.0);
    CHECK(cut[180].gain_db == Approx(g[ff.at(0, 0)]));

    std::stringstream bad("theta_deg,phi_deg\n");
    CHECK_THROWS_AS(read_pattern_csv(bad, g2), ParseError);
}
