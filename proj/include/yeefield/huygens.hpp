// Copyright 2026 The yeefield Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef YEEFIELD_HUYGENS_HPP
#define YEEFIELD_HUYGENS_HPP

#include <complex>
#include <cstddef>
#include <vector>

namespace yeefield {

using cplx = std::complex<double>;

/// One planar face of a Huygens box: a rectangular patch of cells normal to `axis`.
/// Tangential axes are t1 = (axis+1)%3 and t2 = (axis+2)%3; cell (p, q) lives at
/// index p * v.size() + q.
struct HuygensFace {
    int axis = 2;
    int normal = +1;         // outward normal sign along axis
    double position = 0.0;   // plane coordinate (m)
    std::vector<double> u, v;    // cell centers along t1, t2
    std::vector<double> du, dv;  // cell sizes along t1, t2
    // phasors per frequency, per cell
    std::vector<std::vector<cplx>> e1, e2, h1, h2;

    std::size_t cells() const { return u.size() * v.size(); }
};

/// Frequency-domain tangential fields on a closed surface. With ground_image set,
/// the surface is open at z = ground_z and closed by the image in an infinite PEC plane.
struct HuygensRecord {
    std::vector<double> freqs;
    std::vector<HuygensFace> faces;
    bool ground_image = false;
    double ground_z = 0.0;

    /// Index of `f` in freqs, or -1.
    int find(double f) const {
        for (std::size_t n = 0; n < freqs.size(); ++n)
            if (std::abs(freqs[n] - f) <= 1e-6 * f) return static_cast<int>(n);
        return -1;
    }
};

} // namespace yeefield

#endif
