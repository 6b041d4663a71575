#ifndef CSTSIM_UNITS_HPP
#define CSTSIM_UNITS_HPP

#include <numbers>

namespace cstsim {

/// Bohr magneton over Planck constant, MHz per mT.
inline constexpr double kMuBOverH = 13.996;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Ordinary frequency (MHz) to angular frequency (rad/us).
constexpr double mhz_to_angular(double f_mhz) noexcept { return kTwoPi * f_mhz; }

constexpr double angular_to_mhz(double w) noexcept { return w / kTwoPi; }

}  // namespace cstsim

#endif
