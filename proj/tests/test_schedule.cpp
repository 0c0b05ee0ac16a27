#include <doctest.h>

#include <cmath>

#include <kerrcat/schedule.hpp>
#include <kerrcat/units.hpp>

using namespace kerrcat;

namespace {

RampSpec base_spec() {
  RampSpec s;
  s.eps2_kc_mhz = 9.7;
  s.t_up_ns = 320.0;
  s.t_hold_ns = 100.0;
  s.gamma_per_mhz = 0.0542;
  s.strategy = CompensationStrategy::Dynamic;
  return s;
}

}  // namespace

TEST_CASE("envelope endpoints and plateau are exact") {
  const PumpSchedule sched(base_spec());
  CHECK(sched.eps2_mhz(0.0) == 0.0);
  CHECK(sched.eps2_mhz(-5.0) == 0.0);
  CHECK(sched.eps2_mhz(320.0) == 9.7);
  CHECK(sched.eps2_mhz(370.0) == 9.7);
  CHECK(sched.eps2_mhz(420.0) == 9.7);
  CHECK(sched.eps2_mhz(sched.t_total_ns()) == 0.0);
  CHECK(sched.eps2_mhz(sched.t_total_ns() + 1.0) == 0.0);
  CHECK(sched.t_down_ns() == 320.0);  // mirrors t_up by default
  CHECK(sched.t_total_ns() == 740.0);
}

TEST_CASE("rise curve: centered tanh with frozen waypoints") {
  const PumpSchedule sched(base_spec());
  // Midpoint of the ramp is exactly half amplitude.
  CHECK(sched.eps2_mhz(160.0) == doctest::Approx(0.5 * 9.7).epsilon(1e-14));
  // Three-quarter point: (tanh(1.5) + tanh(3)) / (2 tanh 3), frozen.
  CHECK(sched.eps2_mhz(240.0) ==
        doctest::Approx(9.7 * 0.9548233402690879).epsilon(1e-12));
  // Point symmetry about the midpoint.
  for (double t : {40.0, 75.0, 111.0, 150.0}) {
    CHECK(sched.eps2_mhz(t) + sched.eps2_mhz(320.0 - t) ==
          doctest::Approx(9.7).epsilon(1e-13));
  }
  // Monotone rise.
  double prev = -1.0;
  for (int i = 0; i <= 64; ++i) {
    const double v = sched.eps2_mhz(320.0 * i / 64.0);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("ramp-down mirrors the ramp-up") {
  const PumpSchedule sched(base_spec());
  for (double x : {10.0, 47.0, 160.0, 290.0}) {
    CHECK(sched.eps2_mhz(420.0 + x) ==
          doctest::Approx(sched.eps2_mhz(320.0 - x)).epsilon(1e-13));
  }
}

TEST_CASE("explicit down duration rescales the mirrored ramp") {
  RampSpec s = base_spec();
  s.t_down_ns = 160.0;
  const PumpSchedule sched(s);
  CHECK(sched.t_down_ns() == 160.0);
  CHECK(sched.t_total_ns() == 580.0);
  CHECK(sched.eps2_mhz(420.0 + 80.0) == doctest::Approx(0.5 * 9.7).epsilon(1e-13));
}

TEST_CASE("dynamic compensation cancels the shift at every instant") {
  const PumpSchedule sched(base_spec());
  for (double t : {0.0, 55.0, 160.0, 280.0, 320.0, 400.0, 500.0, 739.0}) {
    const double e2 = sched.eps2_mhz(t);
    CHECK(sched.delta_as_mhz(t) == doctest::Approx(0.0542 * e2 * e2).epsilon(1e-13));
    CHECK(std::abs(sched.delta_mhz(t)) < 1.0e-12);
  }
}

TEST_CASE("static compensation holds one plateau-sized offset") {
  RampSpec s = base_spec();
  s.strategy = CompensationStrategy::Static;
  const PumpSchedule sched(s);
  const double plateau_offset = 0.0542 * 9.7 * 9.7;
  for (double t : {0.0, 100.0, 320.0, 500.0}) {
    CHECK(sched.delta_as_mhz(t) == doctest::Approx(plateau_offset).epsilon(1e-13));
  }
  // During the ramp the uncancelled part is positive; zero on the plateau.
  CHECK(sched.delta_mhz(100.0) > 0.0);
  CHECK(std::abs(sched.delta_mhz(330.0)) < 1.0e-12);

  s.static_delta_as_mhz = 3.0;  // explicit override
  const PumpSchedule forced(s);
  CHECK(forced.delta_as_mhz(200.0) == 3.0);
}

TEST_CASE("no compensation leaves the raw negative shift") {
  RampSpec s = base_spec();
  s.strategy = CompensationStrategy::None;
  const PumpSchedule sched(s);
  CHECK(sched.delta_as_mhz(250.0) == 0.0);
  CHECK(sched.delta_mhz(330.0) ==
        doctest::Approx(-0.0542 * 9.7 * 9.7).epsilon(1e-13));
}

TEST_CASE("mis-sized dynamic gain leaves the residual (gain - gamma) eps2^2") {
  RampSpec s = base_spec();
  s.dynamic_gain_per_mhz = 0.07;
  const PumpSchedule sched(s);
  const double e2 = sched.eps2_mhz(200.0);
  CHECK(sched.delta_mhz(200.0) ==
        doctest::Approx((0.07 - 0.0542) * e2 * e2).epsilon(1e-12));
}

TEST_CASE("breakpoints mark the envelope kinks") {
  const PumpSchedule sched(base_spec());
  const std::vector<double> bp = sched.breakpoints();
  REQUIRE(bp.size() == 4);
  CHECK(bp[0] == 0.0);
  CHECK(bp[1] == 320.0);
  CHECK(bp[2] == 420.0);
  CHECK(bp[3] == 740.0);
}

TEST_CASE("adiabaticity threshold sits at t_up * 2K_angular = 5") {
  RampSpec s = base_spec();
  const double k = 6.9;
  const double t_edge = 5.0 / (2.0 * units::to_angular(k));
  s.t_up_ns = t_edge * 1.01;
  CHECK(PumpSchedule(s).is_adiabatic(k));
  s.t_up_ns = t_edge * 0.99;
  CHECK_FALSE(PumpSchedule(s).is_adiabatic(k));
}

TEST_CASE("sample grid covers the schedule and stays self-consistent") {
  const PumpSchedule sched(base_spec());
  const auto rows = sched.sample(17);
  REQUIRE(rows.size() == 17);
  CHECK(rows.front().t_ns == 0.0);
  CHECK(rows.back().t_ns == doctest::Approx(740.0).epsilon(1e-13));
  for (const auto& r : rows) {
    CHECK(r.delta_mhz ==
          doctest::Approx(r.delta_as_mhz - 0.0542 * r.eps2_mhz * r.eps2_mhz)
              .epsilon(1e-12));
  }
}
