#include "kerrcat/schedule.hpp"

#include <cmath>

#include "kerrcat/errors.hpp"
#include "kerrcat/units.hpp"

namespace kerrcat {

PumpSchedule::PumpSchedule(const RampSpec& spec) : spec_(spec) {
  if (spec_.eps2_kc_mhz < 0.0) throw ConfigError("plateau amplitude must be >= 0");
  if (spec_.t_up_ns <= 0.0) throw ConfigError("ramp-up duration must be > 0");
  if (spec_.t_hold_ns < 0.0) throw ConfigError("hold duration must be >= 0");
  if (spec_.sharpness <= 0.0) throw ConfigError("envelope sharpness must be > 0");
  if (spec_.gamma_per_mhz < 0.0) throw ConfigError("shift gain must be >= 0");
  t_down_ns_ = spec_.t_down_ns < 0.0 ? spec_.t_up_ns : spec_.t_down_ns;
  if (t_down_ns_ <= 0.0) throw ConfigError("ramp-down duration must be > 0");
  static_offset_mhz_ = spec_.static_delta_as_mhz < 0.0
                           ? spec_.gamma_per_mhz * spec_.eps2_kc_mhz * spec_.eps2_kc_mhz
                           : spec_.static_delta_as_mhz;
}

double PumpSchedule::eps2_mhz(double t_ns) const {
  const double t1 = spec_.t_up_ns;
  const double t2 = t1 + spec_.t_hold_ns;
  const double t3 = t2 + t_down_ns_;
  const double s = spec_.sharpness;
  // Centered tanh S-curve, exactly 0/1 at the segment ends, slope suppressed
  // by sech^2(s) there. Peak slope sits mid-ramp where the spectral gap has
  // already opened; a one-sided tanh (max slope at t=0, against the smallest
  // gap) costs percent-level diabatic leakage at large pump.
  const auto rise = [s](double frac) {
    return (std::tanh(s * (2.0 * frac - 1.0)) + std::tanh(s)) / (2.0 * std::tanh(s));
  };
  if (t_ns <= 0.0 || t_ns >= t3) return 0.0;
  if (t_ns < t1) return spec_.eps2_kc_mhz * rise(t_ns / t1);
  if (t_ns <= t2) return spec_.eps2_kc_mhz;
  return spec_.eps2_kc_mhz * rise((t3 - t_ns) / t_down_ns_);
}

double PumpSchedule::delta_as_mhz(double t_ns) const {
  switch (spec_.strategy) {
    case CompensationStrategy::None:
      return 0.0;
    case CompensationStrategy::Static:
      return (t_ns >= 0.0 && t_ns <= t_total_ns()) ? static_offset_mhz_ : 0.0;
    case CompensationStrategy::Dynamic: {
      const double e2 = eps2_mhz(t_ns);
      const double gain = spec_.dynamic_gain_per_mhz < 0.0 ? spec_.gamma_per_mhz
                                                           : spec_.dynamic_gain_per_mhz;
      return gain * e2 * e2;
    }
  }
  return 0.0;
}

double PumpSchedule::delta_mhz(double t_ns) const {
  const double e2 = eps2_mhz(t_ns);
  return delta_as_mhz(t_ns) - spec_.gamma_per_mhz * e2 * e2;
}

std::vector<double> PumpSchedule::breakpoints() const {
  const double t1 = spec_.t_up_ns;
  const double t2 = t1 + spec_.t_hold_ns;
  if (spec_.t_hold_ns == 0.0) return {0.0, t1, t2 + t_down_ns_};
  return {0.0, t1, t2, t2 + t_down_ns_};
}

bool PumpSchedule::is_adiabatic(double k_mhz) const {
  return spec_.t_up_ns * 2.0 * units::to_angular(k_mhz) >= 5.0;
}

std::vector<ScheduleSample> PumpSchedule::sample(int n_points) const {
  if (n_points < 2) throw ConfigError("schedule sampling needs at least two points");
  std::vector<ScheduleSample> out(n_points);
  const double dt = t_total_ns() / (n_points - 1);
  for (int i = 0; i < n_points; ++i) {
    const double t = i == n_points - 1 ? t_total_ns() : i * dt;
    out[i] = {t, eps2_mhz(t), delta_as_mhz(t), delta_mhz(t)};
  }
  return out;
}

}  // namespace kerrcat
