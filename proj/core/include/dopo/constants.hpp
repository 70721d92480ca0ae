#ifndef DOPO_CONSTANTS_HPP
#define DOPO_CONSTANTS_HPP

namespace dopo::constants {

// CODATA 2018 values, SI units.
inline constexpr double c_light  = 299792458.0;       // m/s (exact)
inline constexpr double hbar     = 1.054571817e-34;   // J s
inline constexpr double epsilon0 = 8.8541878128e-12;  // F/m

} // namespace dopo::constants

#endif
