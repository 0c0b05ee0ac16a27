#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace kerrcat {

// Junction stack: two large junctions (ratios r1, r2), an n_r-junction array
// (ratio r3 each), and an n_l-junction linear inductance branch. Energies in
// MHz (values of E/h).
struct JunctionConfig {
  double ej_mhz = 0.0;
  double ec_mhz = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  double r3 = 0.0;
  int n_r = 3;
  int n_l = 5;
};

// External fluxes threading the three loops, in radians.
struct FluxPoint {
  double phi_e1 = 0.0;
  double phi_e2 = 0.0;
  double phi_e3 = 0.0;
};

// Potential with analytic derivatives; eval(order, phi) returns the order-th
// derivative (order 0..4) in MHz.
struct PotentialModel {
  std::function<double(int order, double phi)> eval;

  double operator()(double phi) const { return eval(0, phi); }
  double d(int order, double phi) const { return eval(order, phi); }
};

// The biased operating configuration: phi_e1 = -delta_phi,
// phi_e2 = pi + delta_phi, phi_e3 = 0.
FluxPoint working_point(double delta_phi);

PotentialModel potential(const JunctionConfig& config, const FluxPoint& flux);

// Static potential seen by the mode while the flux pump runs: the pump
// rectifies the r1 and r3 branches by the factor 1 - (eps_p/2)^2 (leading
// Jacobi-Anger order); the r2 and inductive branches are untouched.
PotentialModel pumped_static_potential(const JunctionConfig& config, double delta_phi,
                                       double eps_p);

struct MinimumSearchOptions {
  double window_lo = 0.0;  // defaults to -pi*n_l .. pi*n_l when lo == hi
  double window_hi = 0.0;
  int coarse_points = 4001;
};

// Global minimum of the potential in the window; ties resolved toward the
// smallest |phi|. Coarse scan, golden-section refinement, Newton polish.
double find_minimum(const PotentialModel& model, const MinimumSearchOptions& opts = {});

struct HoaOptions {
  MinimumSearchOptions search;
  bool cubic_correction = false;
};

// Harmonic-oscillator approximation of the mode at the potential minimum.
struct ExtractedParams {
  double phi_min = 0.0;
  double u2_mhz = 0.0;
  double u3_mhz = 0.0;
  double u4_mhz = 0.0;
  double phi_zpf = 0.0;
  double omega_a_mhz = 0.0;
  double g4_mhz = 0.0;
  double k_mhz = 0.0;  // always -6 * g4
  std::optional<double> k_cubic_mhz;  // second-order cubic-term correction
};

ExtractedParams hoa_extract(const PotentialModel& model, double ec_mhz,
                            const HoaOptions& opts = {});

// Two-photon coupling rate from the first-order driven term: coefficient of
// (a + a^dag)^2 in the expansion of Ej*[r1 sin(phi - delta_phi)
// - n_r r3 sin(phi/n_r)] at the minimum of the pumped static potential.
double g2_ac(const JunctionConfig& config, double delta_phi, double eps_p = 0.0);

struct SpecialPointFrequencies {
  double f_000_mhz = 0.0;   // all loops unbiased
  double f_0p0_mhz = 0.0;   // second loop at pi (operating bias class)
  double f_pp0_mhz = 0.0;   // first and second loops at pi
};

// Closed-form mode frequencies at the three symmetric bias points.
SpecialPointFrequencies special_point_frequencies(const JunctionConfig& config);

struct JunctionSolveResult {
  double ej_mhz = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  double r3 = 0.0;  // tied to (r1 + r2) / 2
  double residual_mhz = 0.0;
  double jacobian_condition = 0.0;
};

// Recover (Ej, r1, r2) from the three measured symmetric-point frequencies
// under the symmetric-array assumption r3 = (r1 + r2) / 2.
JunctionSolveResult solve_junction_params(double f_000_mhz, double f_0p0_mhz,
                                          double f_pp0_mhz, double ec_mhz, int n_r = 3,
                                          int n_l = 5);

struct PifsPoint {
  double eps_p = 0.0;
  double omega_a_mhz = 0.0;
  double delta_omega_mhz = 0.0;  // omega(eps_p) - omega(0), negative at the working point
  double k_mhz = 0.0;
  double delta_k_mhz = 0.0;
  double g2_ac_mhz = 0.0;
  double eps2_mhz = 0.0;  // g2_ac * eps_p / 2
  double alpha_sq = 0.0;  // eps2 / K
};

struct PifsCurve {
  std::vector<PifsPoint> points;
  // Least-squares gain of the downward shift: omega(0) - omega(eps_p)
  // = gamma * eps2^2.
  double gamma_per_mhz = 0.0;
  double fit_exponent = 0.0;       // log-log slope of |delta_omega| vs eps2
  double eps2_linearity_r2 = 0.0;  // R^2 of eps2 vs eps_p
};

PifsCurve pifs_curve(const JunctionConfig& config, double delta_phi,
                     std::span<const double> eps_p_values);

// Linear current-to-flux map phi_e = M (I - I0).
struct PhiMatrix {
  Eigen::Matrix3d m_rad_per_ma = Eigen::Matrix3d::Zero();
  Eigen::Vector3d i0_ma = Eigen::Vector3d::Zero();
};

FluxPoint flux_from_currents(const PhiMatrix& pm, const Eigen::Vector3d& currents_ma);
Eigen::Vector3d currents_from_flux(const PhiMatrix& pm, const FluxPoint& flux);

}  // namespace kerrcat
