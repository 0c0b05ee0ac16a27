#pragma once

#include <functional>
#include <span>

#include "kerrcat/linalg.hpp"

namespace kerrcat {

struct IntegratorOptions {
  double rtol = 1.0e-9;
  double atol = 1.0e-12;
  double max_step_ns = 0.0;  // 0 = unlimited
  long max_steps = 50'000'000;
};

struct IntegratorStats {
  long steps_accepted = 0;
  long steps_rejected = 0;
  long rhs_evaluations = 0;
  double max_local_error = 0.0;  // largest accepted scaled error estimate
};

using OdeRhs = std::function<void(double t, const VectorXc& y, VectorXc& dydt)>;
using OdeObserver = std::function<void(double t, const VectorXc& y)>;

// Adaptive explicit Dormand-Prince 5(4) integrator over [t0, t1].
// sample_times must be sorted and lie in [t0, t1]; steps land exactly on
// each sample (and on t1), where the observer is invoked. No renormalization
// of the state is performed at any point.
IntegratorStats integrate_rk45(const OdeRhs& f, VectorXc& y, double t0, double t1,
                               std::span<const double> sample_times,
                               const OdeObserver& on_sample,
                               const IntegratorOptions& opts = {});

}  // namespace kerrcat
