// Copyright 2026 The yeefield Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef YEEFIELD_CONSTANTS_HPP
#define YEEFIELD_CONSTANTS_HPP

#include <cmath>
#include <numbers>

namespace yeefield {

inline constexpr double pi = std::numbers::pi;
inline constexpr double c0 = 299792458.0;           // m/s
inline constexpr double mu0 = 1.25663706212e-6;     // H/m
inline constexpr double eps0 = 8.8541878128e-12;    // F/m
inline constexpr double eta0 = 376.730313668;       // ohm

inline double wavelength(double freq) { return c0 / freq; }

inline double db20(double mag) { return 20.0 * std::log10(mag); }
inline double db10(double pow) { return 10.0 * std::log10(pow); }

} // namespace yeefield

#endif
