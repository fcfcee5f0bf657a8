#pragma once

// Unit conversions used at the library boundary. Internals are atomic units
// (hartree, bohr); configuration files and outputs use eV and Mb.

namespace slhf::units {

inline constexpr double hartree_ev = 27.211386;
inline constexpr double bohr2_mb = 28.00286;     // 1 bohr^2 in megabarn
inline constexpr double speed_of_light = 137.035999; // atomic units
inline constexpr double pi = 3.14159265358979323846;

constexpr double to_ev(double hartree) { return hartree * hartree_ev; }
constexpr double to_hartree(double ev) { return ev / hartree_ev; }

} // namespace slhf::units
