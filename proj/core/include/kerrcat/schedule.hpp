#pragma once

#include <vector>

namespace kerrcat {

// How the drive frequency tracks the pump-induced shift of the mode.
//   None:    half-pump frame pinned to the bare mode frequency.
//   Static:  one constant offset, sized for the plateau amplitude, applied
//            for the whole schedule (ramps included).
//   Dynamic: offset follows gamma * eps2(t)^2 instantaneously, cancelling
//            the shift at every instant.
enum class CompensationStrategy { None, Static, Dynamic };

struct RampSpec {
  double eps2_kc_mhz = 0.0;  // plateau two-photon amplitude
  double t_up_ns = 0.0;
  double t_hold_ns = 0.0;
  double t_down_ns = -1.0;  // < 0: mirror the ramp-up duration
  double sharpness = 3.0;   // tanh envelope steepness
  CompensationStrategy strategy = CompensationStrategy::Dynamic;
  double gamma_per_mhz = 0.0;        // PIFS gain, 1/MHz
  double static_delta_as_mhz = -1.0; // < 0: gamma * eps2_kc^2
  // Gain used to size the Dynamic offset; < 0 uses gamma_per_mhz. Lets a
  // calibration scan steer a mis-sized compensation against the true shift.
  double dynamic_gain_per_mhz = -1.0;
};

struct ScheduleSample {
  double t_ns = 0.0;
  double eps2_mhz = 0.0;
  double delta_as_mhz = 0.0;
  double delta_mhz = 0.0;
};

// Piecewise pump trajectory: tanh ramp-up, flat hold, mirrored ramp-down.
// All outputs in MHz; the effective detuning folds in the pump-induced
// shift: delta(t) = delta_as(t) - gamma * eps2(t)^2.
class PumpSchedule {
 public:
  explicit PumpSchedule(const RampSpec& spec);

  double eps2_mhz(double t_ns) const;
  double delta_as_mhz(double t_ns) const;
  double delta_mhz(double t_ns) const;

  double t_up_ns() const { return spec_.t_up_ns; }
  double t_hold_ns() const { return spec_.t_hold_ns; }
  double t_down_ns() const { return t_down_ns_; }
  double t_total_ns() const { return spec_.t_up_ns + spec_.t_hold_ns + t_down_ns_; }
  const RampSpec& spec() const { return spec_; }

  // Integrator segment boundaries (envelope derivative kinks).
  std::vector<double> breakpoints() const;

  // Ramp slow compared to the gap scale: t_up * 2K (angular) >= 5.
  bool is_adiabatic(double k_mhz) const;

  std::vector<ScheduleSample> sample(int n_points) const;

 private:
  RampSpec spec_;
  double t_down_ns_ = 0.0;
  double static_offset_mhz_ = 0.0;
};

}  // namespace kerrcat
