#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <kerrcat/circuit.hpp>

using namespace kerrcat;

namespace {

constexpr double kPi = std::numbers::pi;

JunctionConfig stock_junction() { return {69500.0, 226.0, 0.16, 0.16, 0.16, 3, 5}; }

}  // namespace

TEST_CASE("potential derivatives agree with finite differences") {
  const PotentialModel u = potential(stock_junction(), working_point(0.08 * kPi));
  const double h = 1.0e-4;
  for (double phi : {-0.9, -0.2, 0.3, 1.1, 2.4}) {
    const double d1 = (u(phi + h) - u(phi - h)) / (2.0 * h);
    const double d2 = (u(phi + h) - 2.0 * u(phi) + u(phi - h)) / (h * h);
    CHECK(u.d(1, phi) == doctest::Approx(d1).epsilon(1e-6));
    CHECK(u.d(2, phi) == doctest::Approx(d2).epsilon(1e-4));
    // Third derivative from the second, same stencil.
    const double d3 = (u.d(2, phi + h) - u.d(2, phi - h)) / (2.0 * h);
    CHECK(u.d(3, phi) == doctest::Approx(d3).epsilon(1e-6));
  }
}

TEST_CASE("working point biases the loops as (-d, pi + d, 0)") {
  const FluxPoint fp = working_point(0.2);
  CHECK(fp.phi_e1 == doctest::Approx(-0.2));
  CHECK(fp.phi_e2 == doctest::Approx(kPi + 0.2));
  CHECK(fp.phi_e3 == 0.0);
}

TEST_CASE("find_minimum lands on a stationary point with positive curvature") {
  const PotentialModel u = potential(stock_junction(), working_point(0.08 * kPi));
  const double phi0 = find_minimum(u);
  CHECK(std::abs(u.d(1, phi0)) < 1.0e-6 * std::abs(u.d(2, phi0)));
  CHECK(u.d(2, phi0) > 0.0);
}

TEST_CASE("mode frequency and Kerr at the operating bias") {
  const JunctionConfig cfg = stock_junction();
  const ExtractedParams p =
      hoa_extract(potential(cfg, working_point(0.08 * kPi)), cfg.ec_mhz);
  // Target band: 5.6 GHz +- 10%, Kerr a few MHz and positive.
  CHECK(std::abs(p.omega_a_mhz - 5600.0) / 5600.0 < 0.10);
  CHECK(p.k_mhz > 2.0);
  CHECK(p.k_mhz < 12.0);
  CHECK(p.k_mhz == doctest::Approx(-6.0 * p.g4_mhz).epsilon(1e-12));
  CHECK(p.phi_zpf > 0.0);
}

TEST_CASE("special-point closed forms match the generic extraction") {
  const JunctionConfig cfg = stock_junction();
  const SpecialPointFrequencies sf = special_point_frequencies(cfg);
  const FluxPoint pts[3] = {{0.0, 0.0, 0.0}, {0.0, kPi, 0.0}, {kPi, kPi, 0.0}};
  const double closed[3] = {sf.f_000_mhz, sf.f_0p0_mhz, sf.f_pp0_mhz};
  for (int i = 0; i < 3; ++i) {
    const ExtractedParams p = hoa_extract(potential(cfg, pts[i]), cfg.ec_mhz);
    CHECK(std::abs(p.omega_a_mhz - closed[i]) / closed[i] < 0.002);
  }
  CHECK(sf.f_000_mhz > sf.f_0p0_mhz);  // unbiased stack is stiffer
}

TEST_CASE("junction parameters are recoverable from the three frequencies") {
  const JunctionConfig cfg = stock_junction();
  const SpecialPointFrequencies sf = special_point_frequencies(cfg);
  const JunctionSolveResult r =
      solve_junction_params(sf.f_000_mhz, sf.f_0p0_mhz, sf.f_pp0_mhz, cfg.ec_mhz);
  CHECK(r.ej_mhz == doctest::Approx(cfg.ej_mhz).epsilon(1e-6));
  CHECK(r.r1 == doctest::Approx(cfg.r1).epsilon(1e-6));
  CHECK(r.r2 == doctest::Approx(cfg.r2).epsilon(1e-6));
  CHECK(r.r3 == doctest::Approx((cfg.r1 + cfg.r2) / 2.0).epsilon(1e-6));
  CHECK(std::abs(r.residual_mhz) < 1.0e-6);
}

TEST_CASE("pump rectification reduces to the static potential at zero drive") {
  const JunctionConfig cfg = stock_junction();
  const double dphi = 0.08 * kPi;
  const PotentialModel a = potential(cfg, working_point(dphi));
  const PotentialModel b = pumped_static_potential(cfg, dphi, 0.0);
  for (double phi : {-0.7, 0.0, 0.4, 1.3}) {
    CHECK(b(phi) == doctest::Approx(a(phi)).epsilon(1e-12));
  }
  CHECK(g2_ac(cfg, dphi) > 0.0);
}

TEST_CASE("shift curve: quadratic in pump amplitude, linear transduction") {
  const JunctionConfig cfg = stock_junction();
  std::vector<double> eps;
  for (int i = 1; i <= 12; ++i) eps.push_back(0.02 * i);
  const PifsCurve curve = pifs_curve(cfg, 0.08 * kPi, eps);

  REQUIRE(curve.points.size() == eps.size());
  CHECK(curve.gamma_per_mhz > 0.0);
  CHECK(std::abs(curve.fit_exponent - 2.0) < 0.1);
  CHECK(curve.eps2_linearity_r2 > 0.999);
  for (const PifsPoint& p : curve.points) {
    CHECK(p.delta_omega_mhz < 0.0);  // mode always shifts down
    CHECK(p.alpha_sq == doctest::Approx(p.eps2_mhz / p.k_mhz).epsilon(1e-12));
    CHECK(std::abs(p.delta_k_mhz / p.k_mhz) < 0.3);
  }
  // gamma reproduces the shift it was fitted from, point by point.
  for (const PifsPoint& p : curve.points) {
    const double predicted = -curve.gamma_per_mhz * p.eps2_mhz * p.eps2_mhz;
    CHECK(p.delta_omega_mhz == doctest::Approx(predicted).epsilon(0.08));
  }
}

TEST_CASE("current-to-flux map round trips") {
  PhiMatrix pm;
  pm.m_rad_per_ma << 0.9, 0.1, 0.0, 0.05, 1.1, 0.02, 0.0, 0.03, 0.95;
  pm.i0_ma << 0.2, -0.4, 0.1;
  const FluxPoint fp = working_point(0.11);
  const Eigen::Vector3d i = currents_from_flux(pm, fp);
  const FluxPoint back = flux_from_currents(pm, i);
  CHECK(back.phi_e1 == doctest::Approx(fp.phi_e1).epsilon(1e-12));
  CHECK(back.phi_e2 == doctest::Approx(fp.phi_e2).epsilon(1e-12));
  CHECK(back.phi_e3 == doctest::Approx(fp.phi_e3).epsilon(1e-12));
}
