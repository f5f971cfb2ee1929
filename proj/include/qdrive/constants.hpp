#pragma once

#include <numbers>

/// CODATA-2018 exact and recommended values, SI units.
namespace qdrive::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double c = 299792458.0;
inline constexpr double h = 6.62607015e-34;
inline constexpr double hbar = h / (2.0 * pi);
inline constexpr double e = 1.602176634e-19;
inline constexpr double k_B = 1.380649e-23;
inline constexpr double phi0 = h / (2.0 * e);

inline constexpr double two_pi = 2.0 * pi;

} // namespace qdrive::constants
