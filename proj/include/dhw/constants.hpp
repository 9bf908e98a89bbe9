#pragma once

// CODATA 2018 exact / recommended values, SI units.
namespace dhw::constants {

inline constexpr double planck_h = 6.62607015e-34;           // J s
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double electron_mass = 9.1093837015e-31;     // kg
inline constexpr double speed_of_light = 299792458.0;         // m / s

inline constexpr double pi = 3.141592653589793238462643383279502884;

}  // namespace dhw::constants
