#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>

namespace kerrcat {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit linear_regression(std::span<const double> x, std::span<const double> y);

// y = amplitude * exp(-t / tau) + offset
struct ExponentialFit {
  double amplitude = 0.0;
  double tau = 0.0;
  double offset = 0.0;
  double rms_residual = 0.0;
};

ExponentialFit fit_exponential(std::span<const double> t, std::span<const double> y);

// y = amplitude * cos(2*pi*freq*t + phase) + offset, amplitude >= 0
struct CosineFit {
  double amplitude = 0.0;
  double freq = 0.0;
  double phase = 0.0;
  double offset = 0.0;
  double rms_residual = 0.0;
};

CosineFit fit_cosine(std::span<const double> t, std::span<const double> y);

// Exponent p from a log-log linear regression of y = c * x^p. Requires
// strictly positive data (callers pass magnitudes).
LinearFit fit_power_law(std::span<const double> x, std::span<const double> y);

// Damped Levenberg-Marquardt with a forward-difference Jacobian. residual
// maps parameters to the residual vector; returns the refined parameters.
// Deterministic and seedless.
Eigen::VectorXd levenberg_marquardt(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
    Eigen::VectorXd p0, int max_iterations = 200, double param_tol = 1.0e-9);

}  // namespace kerrcat
