#include "kerrcat/circuit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "kerrcat/errors.hpp"
#include "kerrcat/fit.hpp"

namespace kerrcat {
namespace {

constexpr double kPi = std::numbers::pi;

// One cosine branch: contributes -amp * cos((phi - offset) / scale).
struct Branch {
  double amp = 0.0;
  double scale = 1.0;
  double offset = 0.0;

  double d(int order, double phi) const {
    const double u = (phi - offset) / scale;
    const double p = std::pow(scale, order);
    switch (order) {
      case 0: return -amp * std::cos(u);
      case 1: return amp * std::sin(u) / p;
      case 2: return amp * std::cos(u) / p;
      case 3: return -amp * std::sin(u) / p;
      case 4: return -amp * std::cos(u) / p;
      default: throw ConfigError("potential derivative order must be 0..4");
    }
  }
};

void validate(const JunctionConfig& config) {
  if (config.ej_mhz <= 0.0 || config.ec_mhz <= 0.0)
    throw ConfigError("junction energies must be positive");
  if (config.r1 < 0.0 || config.r2 < 0.0 || config.r3 < 0.0)
    throw ConfigError("junction ratios must be non-negative");
  if (config.n_r < 1 || config.n_l < 1)
    throw ConfigError("junction array counts must be >= 1");
}

PotentialModel from_branches(std::array<Branch, 4> branches) {
  return PotentialModel{[branches](int order, double phi) {
    double sum = 0.0;
    for (const Branch& b : branches) sum += b.d(order, phi);
    return sum;
  }};
}

std::array<Branch, 4> make_branches(const JunctionConfig& config, const FluxPoint& flux,
                                    double pump_scale) {
  const double ej = config.ej_mhz;
  return {Branch{config.r1 * ej * pump_scale, 1.0, -flux.phi_e1},
          Branch{config.r2 * ej, 1.0, -(flux.phi_e1 + flux.phi_e2)},
          Branch{config.n_r * config.r3 * ej * pump_scale, double(config.n_r), flux.phi_e3},
          Branch{double(config.n_l) * ej, double(config.n_l), 0.0}};
}

double pump_scale_factor(double eps_p) {
  if (std::abs(eps_p) > 0.9)
    throw PumpTooStrong("pump amplitude |eps_p| > 0.9 is outside the rectified-potential regime");
  return 1.0 - 0.25 * eps_p * eps_p;
}

struct HarmonicParams {
  double omega_mhz;
  double phi_zpf;
};

HarmonicParams harmonic_from_curvature(double u2_mhz, double u4_mhz, double ec_mhz) {
  if (u2_mhz <= 0.0)
    throw NegativeCurvature("potential curvature at the minimum is not positive");
  const double omega0 = std::sqrt(8.0 * ec_mhz * u2_mhz);
  const double omega = omega0 + ec_mhz * u4_mhz / u2_mhz;
  const double phi_zpf = std::pow(2.0 * ec_mhz / u2_mhz, 0.25);
  return {omega, phi_zpf};
}

}  // namespace

FluxPoint working_point(double delta_phi) {
  return FluxPoint{-delta_phi, kPi + delta_phi, 0.0};
}

PotentialModel potential(const JunctionConfig& config, const FluxPoint& flux) {
  validate(config);
  return from_branches(make_branches(config, flux, 1.0));
}

PotentialModel pumped_static_potential(const JunctionConfig& config, double delta_phi,
                                       double eps_p) {
  validate(config);
  return from_branches(
      make_branches(config, working_point(delta_phi), pump_scale_factor(eps_p)));
}

double find_minimum(const PotentialModel& model, const MinimumSearchOptions& opts) {
  double lo = opts.window_lo;
  double hi = opts.window_hi;
  if (lo == hi) {
    lo = -5.0 * kPi;
    hi = 5.0 * kPi;
  }
  if (!(hi > lo)) throw ConfigError("minimum search window is empty");
  const int n = std::max(opts.coarse_points, 11);

  int best = -1;
  double best_val = std::numeric_limits<double>::infinity();
  double best_abs = std::numeric_limits<double>::infinity();
  std::vector<double> vals(n);
  const double dx = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) {
    const double phi = lo + i * dx;
    vals[i] = model(phi);
    const double a = std::abs(phi);
    if (vals[i] < best_val - 1e-12 * std::abs(best_val) ||
        (std::abs(vals[i] - best_val) <= 1e-12 * std::abs(best_val) && a < best_abs)) {
      best = i;
      best_val = vals[i];
      best_abs = a;
    }
  }
  if (best <= 0 || best >= n - 1)
    throw NoMinimumFound("potential minimum sits on the search-window edge");

  // Golden-section on the bracketing triple.
  double a = lo + (best - 1) * dx;
  double b = lo + (best + 1) * dx;
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = model(c);
  double fd = model(d);
  for (int it = 0; it < 200 && (b - a) > 1e-12; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = model(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = model(d);
    }
  }
  double phi = 0.5 * (a + b);

  // Newton polish on the gradient.
  for (int it = 0; it < 50; ++it) {
    const double g = model.d(1, phi);
    const double h = model.d(2, phi);
    if (h <= 0.0) break;
    const double step = g / h;
    phi -= step;
    if (std::abs(step) < 1e-14) break;
  }
  if (model.d(2, phi) <= 0.0)
    throw NegativeCurvature("refined stationary point is not a minimum");
  return phi;
}

ExtractedParams hoa_extract(const PotentialModel& model, double ec_mhz,
                            const HoaOptions& opts) {
  if (ec_mhz <= 0.0) throw ConfigError("charging energy must be positive");
  ExtractedParams out;
  out.phi_min = find_minimum(model, opts.search);
  out.u2_mhz = model.d(2, out.phi_min);
  out.u3_mhz = model.d(3, out.phi_min);
  out.u4_mhz = model.d(4, out.phi_min);

  const HarmonicParams h = harmonic_from_curvature(out.u2_mhz, out.u4_mhz, ec_mhz);
  out.omega_a_mhz = h.omega_mhz;
  out.phi_zpf = h.phi_zpf;
  out.g4_mhz = out.u4_mhz * std::pow(out.phi_zpf, 4) / 24.0;
  out.k_mhz = -6.0 * out.g4_mhz;
  if (opts.cubic_correction) {
    const double g3 = out.u3_mhz * std::pow(out.phi_zpf, 3) / 6.0;
    out.k_cubic_mhz = out.k_mhz + 30.0 * g3 * g3 / out.omega_a_mhz;
  }
  return out;
}

double g2_ac(const JunctionConfig& config, double delta_phi, double eps_p) {
  validate(config);
  const PotentialModel model = pumped_static_potential(config, delta_phi, eps_p);
  const double phi_min = find_minimum(model);
  const double u2 = model.d(2, phi_min);
  const HarmonicParams h = harmonic_from_curvature(u2, model.d(4, phi_min), config.ec_mhz);
  // Drive bracket B(phi) = Ej [r1 sin(phi - delta_phi) - n_r r3 sin(phi / n_r)];
  // the (a + a^dag)^2 coefficient is B''(phi_min) phi_zpf^2 / 2.
  const double b2 = config.ej_mhz * (-config.r1 * std::sin(phi_min - delta_phi) +
                                     (config.r3 / config.n_r) * std::sin(phi_min / config.n_r));
  return 0.5 * b2 * h.phi_zpf * h.phi_zpf;
}

namespace {

struct SeriesCoeffs {
  double c2;
  double c4;
};

// Quadratic/quartic expansion coefficients of U/Ej at phi = 0 for the
// symmetric bias points, parameterized by the signs the biases put on the
// two large-junction cosines.
SeriesCoeffs symmetric_point_coeffs(double s1, double s2, const JunctionConfig& c) {
  const double nr = c.n_r;
  const double nl = c.n_l;
  return {s1 * c.r1 + s2 * c.r2 + c.r3 / nr + 1.0 / nl,
          s1 * c.r1 + s2 * c.r2 + c.r3 / (nr * nr * nr) + 1.0 / (nl * nl * nl)};
}

double closed_form_frequency(const SeriesCoeffs& sc, double ej, double ec) {
  if (sc.c2 <= 0.0)
    throw InvalidRegime("bias point has non-positive curvature; no harmonic mode");
  return std::sqrt(8.0 * ej * ec * sc.c2) - ec * sc.c4 / sc.c2;
}

}  // namespace

SpecialPointFrequencies special_point_frequencies(const JunctionConfig& config) {
  validate(config);
  SpecialPointFrequencies out;
  out.f_000_mhz = closed_form_frequency(symmetric_point_coeffs(1.0, 1.0, config),
                                        config.ej_mhz, config.ec_mhz);
  out.f_0p0_mhz = closed_form_frequency(symmetric_point_coeffs(1.0, -1.0, config),
                                        config.ej_mhz, config.ec_mhz);
  out.f_pp0_mhz = closed_form_frequency(symmetric_point_coeffs(-1.0, 1.0, config),
                                        config.ej_mhz, config.ec_mhz);
  return out;
}

JunctionSolveResult solve_junction_params(double f_000_mhz, double f_0p0_mhz,
                                          double f_pp0_mhz, double ec_mhz, int n_r,
                                          int n_l) {
  if (ec_mhz <= 0.0) throw ConfigError("charging energy must be positive");
  if (f_000_mhz <= 0.0 || f_0p0_mhz <= 0.0 || f_pp0_mhz <= 0.0)
    throw ConfigError("measured frequencies must be positive");

  const double nr = n_r;
  const double nl = n_l;
  const double q1 = f_000_mhz * f_000_mhz;
  const double q2 = f_0p0_mhz * f_0p0_mhz;
  const double q3 = f_pp0_mhz * f_pp0_mhz;

  // Seed from the leading sqrt terms: c2 coefficients are linear in
  // s = r1 + r2 and d = r1 - r2 with r3 = s / 2.
  const double arr = 1.0 + 0.5 / nr;          // c2_000 = arr * s + 1/nl
  const double off = 1.0 / nl;
  const double rho = (q2 + q3) / q1;
  const double denom = 1.0 / nr - rho * arr;
  double s = denom != 0.0 ? (rho - 2.0) * off / denom : 0.3;
  if (!(s > 0.0)) s = 0.3;
  double ejec = q1 / (8.0 * (arr * s + off));
  double dd = (q2 - q3) / (16.0 * ejec);
  double ej = ejec / ec_mhz;

  // Newton on (Ej, s, d) against the full closed forms.
  Eigen::Vector3d x(ej, s, dd);
  const Eigen::Vector3d target(f_000_mhz, f_0p0_mhz, f_pp0_mhz);
  auto freqs = [&](const Eigen::Vector3d& p) {
    JunctionConfig c;
    c.ej_mhz = p[0];
    c.ec_mhz = ec_mhz;
    c.r1 = 0.5 * (p[1] + p[2]);
    c.r2 = 0.5 * (p[1] - p[2]);
    c.r3 = 0.5 * p[1];
    c.n_r = n_r;
    c.n_l = n_l;
    const SpecialPointFrequencies f = special_point_frequencies(c);
    return Eigen::Vector3d(f.f_000_mhz, f.f_0p0_mhz, f.f_pp0_mhz);
  };

  double cond = 0.0;
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    Eigen::Vector3d r;
    try {
      r = freqs(x) - target;
    } catch (const Error&) {
      throw NoConvergence("junction parameter solve left the physical regime");
    }
    if (r.norm() < 1e-10) {
      converged = true;
    }
    Eigen::Matrix3d jac;
    for (int j = 0; j < 3; ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(x[j]));
      Eigen::Vector3d xp = x;
      xp[j] += h;
      jac.col(j) = (freqs(xp) - target - r) / h;
    }
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(jac, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double smin = svd.singularValues()(2);
    if (smin <= 0.0) throw NoConvergence("junction solve Jacobian is singular");
    cond = svd.singularValues()(0) / smin;
    if (converged) break;
    x -= svd.solve(r);
    if (x[0] <= 0.0 || x[1] <= 0.0)
      throw NoConvergence("junction solve stepped to non-physical parameters");
  }
  if (!converged) throw NoConvergence("junction parameter solve did not converge");

  JunctionSolveResult out;
  out.ej_mhz = x[0];
  out.r1 = 0.5 * (x[1] + x[2]);
  out.r2 = 0.5 * (x[1] - x[2]);
  out.r3 = 0.5 * x[1];
  out.residual_mhz = (freqs(x) - target).norm();
  out.jacobian_condition = cond;
  return out;
}

PifsCurve pifs_curve(const JunctionConfig& config, double delta_phi,
                     std::span<const double> eps_p_values) {
  validate(config);
  if (eps_p_values.empty()) throw ConfigError("pifs_curve needs at least one pump amplitude");

  const ExtractedParams base =
      hoa_extract(pumped_static_potential(config, delta_phi, 0.0), config.ec_mhz);

  PifsCurve out;
  out.points.reserve(eps_p_values.size());
  for (const double ep : eps_p_values) {
    const ExtractedParams p =
        hoa_extract(pumped_static_potential(config, delta_phi, ep), config.ec_mhz);
    PifsPoint pt;
    pt.eps_p = ep;
    pt.omega_a_mhz = p.omega_a_mhz;
    pt.delta_omega_mhz = p.omega_a_mhz - base.omega_a_mhz;
    pt.k_mhz = p.k_mhz;
    pt.delta_k_mhz = p.k_mhz - base.k_mhz;
    pt.g2_ac_mhz = g2_ac(config, delta_phi, ep);
    pt.eps2_mhz = 0.5 * pt.g2_ac_mhz * ep;
    pt.alpha_sq = p.k_mhz != 0.0 ? std::abs(pt.eps2_mhz / p.k_mhz) : 0.0;
    out.points.push_back(pt);
  }

  // gamma: through-origin least squares of the downward shift against eps2^2.
  double sxx = 0.0;
  double sxy = 0.0;
  std::vector<double> log_x;
  std::vector<double> log_y;
  std::vector<double> ep_lin;
  std::vector<double> e2_lin;
  for (const PifsPoint& pt : out.points) {
    const double x = pt.eps2_mhz * pt.eps2_mhz;
    const double y = -pt.delta_omega_mhz;
    sxx += x * x;
    sxy += x * y;
    if (std::abs(pt.eps2_mhz) > 0.0 && std::abs(pt.delta_omega_mhz) > 0.0) {
      log_x.push_back(std::abs(pt.eps2_mhz));
      log_y.push_back(std::abs(pt.delta_omega_mhz));
    }
    ep_lin.push_back(pt.eps_p);
    e2_lin.push_back(pt.eps2_mhz);
  }
  out.gamma_per_mhz = sxx > 0.0 ? sxy / sxx : 0.0;
  if (log_x.size() >= 2) {
    const LinearFit pl = fit_power_law(log_x, log_y);
    out.fit_exponent = pl.slope;
  }
  if (ep_lin.size() >= 2) {
    const LinearFit lf = linear_regression(ep_lin, e2_lin);
    out.eps2_linearity_r2 = lf.r_squared;
  }
  return out;
}

FluxPoint flux_from_currents(const PhiMatrix& pm, const Eigen::Vector3d& currents_ma) {
  const Eigen::Vector3d phi = pm.m_rad_per_ma * (currents_ma - pm.i0_ma);
  return FluxPoint{phi[0], phi[1], phi[2]};
}

Eigen::Vector3d currents_from_flux(const PhiMatrix& pm, const FluxPoint& flux) {
  Eigen::FullPivLU<Eigen::Matrix3d> lu(pm.m_rad_per_ma);
  if (!lu.isInvertible())
    throw SingularMatrix("current-to-flux matrix is not invertible");
  const Eigen::Vector3d phi(flux.phi_e1, flux.phi_e2, flux.phi_e3);
  return pm.i0_ma + lu.solve(phi);
}

}  // namespace kerrcat
