#include "kerrcat/fit.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "kerrcat/errors.hpp"

namespace kerrcat {

LinearFit linear_regression(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw FitFailed("linear_regression: need >= 2 points");
  const double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  double den = n * sxx - sx * sx;
  if (std::abs(den) < 1.0e-300) throw FitFailed("linear_regression: degenerate abscissa");
  LinearFit f;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  double ss_tot = syy - sy * sy / n;
  double ss_res = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - (f.slope * x[i] + f.intercept);
    ss_res += r * r;
  }
  f.r_squared = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

Eigen::VectorXd levenberg_marquardt(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
    Eigen::VectorXd p, int max_iterations, double param_tol) {
  Eigen::VectorXd r = residual(p);
  if (!r.allFinite()) throw FitFailed("levenberg_marquardt: non-finite residual at seed");
  double cost = r.squaredNorm();
  double lambda = 1.0e-3;
  const int np = int(p.size());
  const int nr = int(r.size());

  for (int it = 0; it < max_iterations; ++it) {
    Eigen::MatrixXd jac(nr, np);
    for (int j = 0; j < np; ++j) {
      double step = 1.0e-7 * std::max(1.0, std::abs(p(j)));
      Eigen::VectorXd pj = p;
      pj(j) += step;
      jac.col(j) = (residual(pj) - r) / step;
    }
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::VectorXd jtr = jac.transpose() * r;

    bool improved = false;
    for (int tries = 0; tries < 12; ++tries) {
      Eigen::MatrixXd m = jtj;
      m.diagonal() += lambda * jtj.diagonal().cwiseMax(1.0e-12);
      Eigen::VectorXd dp = m.ldlt().solve(-jtr);
      Eigen::VectorXd pn = p + dp;
      Eigen::VectorXd rn = residual(pn);
      if (rn.allFinite() && rn.squaredNorm() < cost) {
        double shift = dp.cwiseAbs().maxCoeff();
        double scale = p.cwiseAbs().maxCoeff() + 1.0;
        p = pn;
        r = rn;
        cost = rn.squaredNorm();
        lambda = std::max(lambda * 0.3, 1.0e-12);
        improved = true;
        if (shift < param_tol * scale) return p;
        break;
      }
      lambda *= 10.0;
      if (lambda > 1.0e12) break;
    }
    if (!improved) break;
  }
  if (!p.allFinite()) throw FitFailed("levenberg_marquardt: diverged");
  return p;
}

ExponentialFit fit_exponential(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size() || t.size() < 3) throw FitFailed("fit_exponential: need >= 3 points");
  const size_t n = t.size();

  // Seed: offset from the final point, rate from a log-linear regression on
  // the samples that keep the sign of the initial deviation.
  double c0 = y[n - 1];
  double a0 = y[0] - c0;
  if (a0 == 0.0) a0 = 1.0e-12;
  std::vector<double> lx, ly;
  for (size_t i = 0; i + 1 < n; ++i) {
    double d = (y[i] - c0) / a0;
    if (d > 1.0e-6) {
      lx.push_back(t[i]);
      ly.push_back(std::log(d));
    }
  }
  double tau0 = (t[n - 1] - t[0]);
  if (lx.size() >= 2) {
    LinearFit lin = linear_regression(lx, ly);
    if (lin.slope < -1.0e-300) tau0 = -1.0 / lin.slope;
  }

  Eigen::VectorXd p0(3);
  p0 << a0, std::max(tau0, 1.0e-9), c0;
  auto resid = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(n);
    for (size_t i = 0; i < n; ++i) {
      r(i) = p(0) * std::exp(-t[i] / std::max(p(1), 1.0e-12)) + p(2) - y[i];
    }
    return r;
  };
  Eigen::VectorXd p = levenberg_marquardt(resid, p0);
  ExponentialFit f;
  f.amplitude = p(0);
  f.tau = p(1);
  f.offset = p(2);
  f.rms_residual = std::sqrt(resid(p).squaredNorm() / double(n));
  return f;
}

CosineFit fit_cosine(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size() || t.size() < 5) throw FitFailed("fit_cosine: need >= 5 points");
  const size_t n = t.size();
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= double(n);

  double tmin = t[0], tmax = t[0];
  for (double v : t) {
    tmin = std::min(tmin, v);
    tmax = std::max(tmax, v);
  }
  double span_t = std::max(tmax - tmin, 1.0e-12);
  double dt_min = span_t;
  for (size_t i = 1; i < n; ++i) dt_min = std::min(dt_min, std::abs(t[i] - t[i - 1]));
  dt_min = std::max(dt_min, span_t / double(4 * n));

  // Coarse periodogram seed between one half cycle over the record and the
  // Nyquist frequency of the densest sampling.
  double f_lo = 0.25 / span_t, f_hi = 0.5 / dt_min;
  double best_f = f_lo, best_p = -1.0;
  const int nf = 4000;
  for (int k = 0; k <= nf; ++k) {
    double fr = f_lo + (f_hi - f_lo) * double(k) / double(nf);
    std::complex<double> z = 0.0;
    for (size_t i = 0; i < n; ++i) {
      z += (y[i] - mean) * std::polar(1.0, -2.0 * std::numbers::pi * fr * t[i]);
    }
    double pw = std::norm(z);
    if (pw > best_p) {
      best_p = pw;
      best_f = fr;
    }
  }
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= double(n);
  double a0 = std::sqrt(2.0 * var);

  // Phase seed from the quadratures at the seeded frequency.
  std::complex<double> z = 0.0;
  for (size_t i = 0; i < n; ++i) {
    z += (y[i] - mean) * std::polar(1.0, -2.0 * std::numbers::pi * best_f * t[i]);
  }
  double ph0 = std::arg(z);

  Eigen::VectorXd p0(4);
  p0 << a0, best_f, ph0, mean;
  auto resid = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(n);
    for (size_t i = 0; i < n; ++i) {
      r(i) = p(0) * std::cos(2.0 * std::numbers::pi * p(1) * t[i] + p(2)) + p(3) - y[i];
    }
    return r;
  };
  Eigen::VectorXd p = levenberg_marquardt(resid, p0);
  CosineFit f;
  f.amplitude = p(0);
  f.freq = p(1);
  f.phase = p(2);
  f.offset = p(3);
  if (f.amplitude < 0.0) {
    f.amplitude = -f.amplitude;
    f.phase += std::numbers::pi;
  }
  if (f.freq < 0.0) {
    f.freq = -f.freq;
    f.phase = -f.phase;
  }
  f.phase = std::remainder(f.phase, 2.0 * std::numbers::pi);
  f.rms_residual = std::sqrt(resid(p).squaredNorm() / double(n));
  return f;
}

LinearFit fit_power_law(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  for (size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 2) throw FitFailed("fit_power_law: need >= 2 positive points");
  return linear_regression(lx, ly);
}

}  // namespace kerrcat
