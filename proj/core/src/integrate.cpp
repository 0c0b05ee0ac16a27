#include "kerrcat/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kerrcat/errors.hpp"

namespace kerrcat {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// y5 - y4 error weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

double scaled_error(const VectorXc& err, const VectorXc& y0, const VectorXc& y1,
                    double atol, double rtol) {
  double acc = 0.0;
  const Eigen::Index n = err.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    double sc = atol + rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
    double r = std::abs(err(i)) / sc;
    acc += r * r;
  }
  return std::sqrt(acc / double(n));
}

}  // namespace

IntegratorStats integrate_rk45(const OdeRhs& f, VectorXc& y, double t0, double t1,
                               std::span<const double> sample_times,
                               const OdeObserver& on_sample, const IntegratorOptions& opts) {
  if (t1 < t0) throw ConfigError("integrate_rk45: t1 < t0");
  IntegratorStats stats;
  const Eigen::Index n = y.size();
  VectorXc k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);

  f(t0, y, k1);
  stats.rhs_evaluations++;

  // Conservative initial step from the RHS magnitude.
  double d0 = y.norm() + opts.atol;
  double d1 = k1.norm() + 1.0e-300;
  double h = std::max(std::min(0.01 * d0 / d1, (t1 - t0) / 10.0 + 1.0e-300), 1.0e-8);
  if (opts.max_step_ns > 0.0) h = std::min(h, opts.max_step_ns);

  size_t next_sample = 0;
  double t = t0;

  while (true) {
    double teps = 1.0e-12 * std::max(1.0, std::abs(t));
    while (next_sample < sample_times.size() && sample_times[next_sample] <= t + teps) {
      if (on_sample) on_sample(sample_times[next_sample], y);
      ++next_sample;
    }
    if (t >= t1 - teps) break;

    double target = t1;
    if (next_sample < sample_times.size()) target = std::min(target, sample_times[next_sample]);

    if (stats.steps_accepted + stats.steps_rejected >= opts.max_steps) {
      throw ToleranceNotMet("integrate_rk45: exceeded max_steps");
    }
    double h_try = std::min(h, target - t);
    if (h_try < 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), 1.0)) {
      throw StepSizeUnderflow("integrate_rk45: step size underflow at t=" + std::to_string(t));
    }

    ytmp = y + h_try * (a21 * k1);
    f(t + c2 * h_try, ytmp, k2);
    ytmp = y + h_try * (a31 * k1 + a32 * k2);
    f(t + c3 * h_try, ytmp, k3);
    ytmp = y + h_try * (a41 * k1 + a42 * k2 + a43 * k3);
    f(t + c4 * h_try, ytmp, k4);
    ytmp = y + h_try * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(t + c5 * h_try, ytmp, k5);
    ytmp = y + h_try * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f(t + h_try, ytmp, k6);
    ynew = y + h_try * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    f(t + h_try, ynew, k7);
    stats.rhs_evaluations += 6;

    err = h_try * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double en = scaled_error(err, y, ynew, opts.atol, opts.rtol);

    if (en <= 1.0) {
      t += h_try;
      y.swap(ynew);
      k1.swap(k7);  // first-same-as-last: k7 = f(t_new, y_new)
      stats.steps_accepted++;
      stats.max_local_error = std::max(stats.max_local_error, en);
      double factor = (en == 0.0) ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(en, -0.2)));
      h = h_try * factor;
    } else {
      stats.steps_rejected++;
      h = h_try * std::max(0.2, 0.9 * std::pow(en, -0.2));
      // y and k1 are untouched; retry with the smaller step.
    }
    if (opts.max_step_ns > 0.0) h = std::min(h, opts.max_step_ns);
  }
  return stats;
}

}  // namespace kerrcat
