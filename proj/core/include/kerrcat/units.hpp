#pragma once

#include <numbers>

namespace kerrcat::units {

// Public interfaces quote ordinary frequencies in MHz and times in ns.
// Internally every generator is angular (rad/ns), so that exp(-i H t) takes
// H in rad/ns and t in ns with no loose 2*pi factors.
inline constexpr double rad_per_ns_per_mhz = 2.0e-3 * std::numbers::pi;

constexpr double to_angular(double f_mhz) { return f_mhz * rad_per_ns_per_mhz; }
constexpr double to_mhz(double w_rad_per_ns) { return w_rad_per_ns / rad_per_ns_per_mhz; }

constexpr double us_to_ns(double t_us) { return t_us * 1.0e3; }

}  // namespace kerrcat::units
