#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <kerrcat/errors.hpp>
#include <kerrcat/tomography.hpp>
#include <kerrcat/units.hpp>

using namespace kerrcat;

namespace {

const Complex kI(0.0, 1.0);
constexpr double kTwoOverPi = 2.0 / std::numbers::pi;

MatrixXc pure(const VectorXc& psi) { return psi * psi.adjoint(); }

// Deterministic, platform-independent "measurement noise".
double bump(std::size_t i) { return std::sin(13.37 * double(i + 1)); }

}  // namespace

TEST_CASE("p_vector axis conventions in the fock frame") {
  const HilbertSpace sp(8);
  const QubitFrame fr = QubitFrame::fock(sp);
  const VectorXc e0 = fr.basis0();
  const VectorXc e1 = fr.basis1();

  PVector p = p_vector(e0, fr);
  CHECK(p.p_z == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(p.p_i == doctest::Approx(1.0).epsilon(1e-14));

  p = p_vector(VectorXc(((e0 + e1) / std::sqrt(2.0)).eval()), fr);
  CHECK(p.p_x == doctest::Approx(1.0).epsilon(1e-13));
  p = p_vector(VectorXc(((e0 + kI * e1) / std::sqrt(2.0)).eval()), fr);
  CHECK(p.p_y == doctest::Approx(1.0).epsilon(1e-13));

  // Leakage outside the frame shows as p_i < 1.
  p = p_vector(StateVector::basis(sp, 3).vec(), fr);
  CHECK(p.p_i == doctest::Approx(0.0).epsilon(1e-14));

  // A non-state violates the Bloch bound.
  MatrixXc bad = MatrixXc::Zero(8, 8);
  bad(0, 0) = 1.2;
  bad(1, 1) = -0.2;
  CHECK_THROWS_AS(p_vector(bad, fr), ToleranceNotMet);
}

TEST_CASE("sigma matrices follow the frame") {
  const HilbertSpace sp(20);
  const QubitFrame fr = QubitFrame::kerr_cat(sp, Complex(1.1, 0.0));
  CHECK((fr.sigma_x() * fr.sigma_x() - fr.identity_projector()).norm() < 1e-12);
  const MatrixXc xy = fr.sigma_x() * fr.sigma_y() - fr.sigma_y() * fr.sigma_x();
  CHECK((xy - 2.0 * kI * fr.sigma_z()).norm() < 1e-12);

  // +X of the cat frame is the state nearest |+alpha>.
  const VectorXc plus_x =
      ((fr.basis0() + fr.basis1()) / std::sqrt(2.0)).eval();
  const VectorXc coh = coherent_state(Complex(1.1, 0.0), sp).vec();
  CHECK(std::norm(coh.dot(plus_x)) > 0.98);
}

TEST_CASE("r_matrix recovers a known channel exactly") {
  const HilbertSpace sp(6);
  const QubitFrame fr = QubitFrame::fock(sp);
  Eigen::Matrix4d r_true = Eigen::Matrix4d::Identity();
  const double th = 0.61, c = 0.87;  // rotation plus uniform contraction
  r_true(1, 1) = c * std::cos(th);
  r_true(1, 2) = -c * std::sin(th);
  r_true(2, 1) = c * std::sin(th);
  r_true(2, 2) = c * std::cos(th);
  r_true(3, 3) = c;

  const std::array<PVector, 4> ins = {
      p_vector(fr.basis0(), fr),
      p_vector(VectorXc(((fr.basis0() + fr.basis1()) / std::sqrt(2.0)).eval()), fr),
      p_vector(VectorXc(((fr.basis0() + kI * fr.basis1()) / std::sqrt(2.0)).eval()), fr),
      p_vector(fr.basis1(), fr)};
  std::array<PVector, 4> outs;
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector4d v = r_true * ins[i].col();
    outs[i] = PVector{v(0), v(1), v(2), v(3)};
  }
  const Eigen::Matrix4d r = r_matrix(ins, outs);
  CHECK((r - r_true).norm() < 1e-12);

  // Coplanar inputs cannot determine the channel.
  std::array<PVector, 4> degenerate = ins;
  degenerate[3] = ins[0];
  CHECK_THROWS_AS(r_matrix(degenerate, outs), SingularInputSet);
}

TEST_CASE("process fidelity closed forms") {
  const Eigen::Matrix4d id = Eigen::Matrix4d::Identity();
  CHECK(process_fidelity(id, id) == 1.0);

  Eigen::Matrix4d dep = Eigen::Matrix4d::Zero();
  dep(0, 0) = 1.0;
  CHECK(process_fidelity(dep, id) == 0.5);

  Eigen::Matrix4d rz = Eigen::Matrix4d::Identity();
  const double th = 0.37;
  rz(1, 1) = rz(2, 2) = std::cos(th);
  rz(1, 2) = -std::sin(th);
  rz(2, 1) = std::sin(th);
  CHECK(process_fidelity(rz, id) ==
        doctest::Approx(0.9774424485353448).epsilon(1e-12));
}

TEST_CASE("cat readout separates poles and leakage") {
  const HilbertSpace sp(26);
  const Complex alpha(1.3, 0.0);
  CatReadout r = cat_readout(coherent_state(alpha, sp).vec(), alpha);
  CHECK(r.p_plus > 0.99);
  CHECK(r.signal > 0.99);
  r = cat_readout(coherent_state(-alpha, sp).vec(), alpha);
  CHECK(r.p_minus > 0.99);
  CHECK(r.signal < 0.01);

  // An even cat sits astride both poles.
  r = cat_readout(cat_state(alpha, CatKind::Plus, sp).vec(), alpha);
  CHECK(r.p_plus == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(r.signal == doctest::Approx(0.5).epsilon(1e-6));

  // A high Fock state is pure leakage and reads the 0.5 midpoint.
  r = cat_readout(StateVector::basis(sp, 9).vec(), alpha);
  CHECK(r.p_leak > 0.98);
  CHECK(r.signal == doctest::Approx(0.5).epsilon(2e-2));
  CHECK(r.p_plus + r.p_minus + r.p_leak == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("wigner function oracles") {
  const HilbertSpace sp(30);
  MatrixXc vac = MatrixXc::Zero(30, 30);
  vac(0, 0) = 1.0;
  CHECK(std::abs(wigner_point(vac, Complex(0, 0)) - kTwoOverPi) < 1e-12);

  // Coherent state: W(beta) = (2/pi) exp(-2 |beta - alpha|^2), frozen.
  const MatrixXc coh = pure(coherent_state(Complex(0.7, 0.0), sp).vec());
  CHECK(wigner_point(coh, Complex(0.2, 0.3)) ==
        doctest::Approx(0.3225223943573304).epsilon(1e-9));

  // Any even-parity state peaks at 2/pi at the origin.
  const MatrixXc cat = pure(cat_state(Complex(1.3, 0.0), CatKind::Plus, sp).vec());
  CHECK(wigner_point(cat, Complex(0, 0)) == doctest::Approx(kTwoOverPi).epsilon(1e-10));

  // Truncation-tail guard.
  VectorXc tail = VectorXc::Zero(8);
  tail(7) = 1.0;
  CHECK_THROWS_AS(wigner_point(pure(tail), Complex(0, 0)), TruncationTooSmall);
}

TEST_CASE("wigner grid layout and parallel determinism") {
  const std::vector<Complex> g = wigner_grid(2.0, 5);
  REQUIRE(g.size() == 25);
  CHECK(g.front() == Complex(-2.0, -2.0));
  CHECK(g.back() == Complex(2.0, 2.0));
  CHECK(g[1] == Complex(-1.0, -2.0));  // real part varies fastest

  const HilbertSpace sp(24);
  const MatrixXc rho = pure(cat_state(Complex(1.2, 0.0), CatKind::Minus, sp).vec());
  const std::vector<Complex> grid = wigner_grid(3.0, 17);
  const WignerMap serial = wigner(rho, grid, 1);
  const WignerMap parallel = wigner(rho, grid, 3);
  REQUIRE(serial.values.size() == parallel.values.size());
  for (std::size_t i = 0; i < serial.values.size(); ++i)
    CHECK(serial.values[i] == parallel.values[i]);
}

TEST_CASE("mle round trips") {
  const HilbertSpace sp(20);
  MleOptions opts;
  opts.dim = 20;
  opts.max_iterations = 800;

  SUBCASE("vacuum") {
    MatrixXc vac = MatrixXc::Zero(20, 20);
    vac(0, 0) = 1.0;
    const WignerMap wm = wigner(vac, wigner_grid(3.0, 21), 1);
    MleOptions deep = opts;
    deep.max_iterations = 4000;
    const MleResult res = mle_reconstruct(wm, deep);
    CHECK(std::real(res.rho(0, 0)) > 0.995);
  }

  SUBCASE("cat, clean and with bounded deterministic noise") {
    const VectorXc cat = cat_state(Complex(std::sqrt(1.41), 0.0), CatKind::Plus, sp).vec();
    WignerMap wm = wigner(pure(cat), wigner_grid(3.5, 41), 1);
    MleOptions heavy = opts;
    heavy.max_iterations = 1500;
    const MleResult clean = mle_reconstruct(wm, heavy);
    const double f_clean = std::real(cat.dot(clean.rho * cat));
    CHECK(f_clean > 0.97);

    for (std::size_t i = 0; i < wm.values.size(); ++i) wm.values[i] += 0.02 * bump(i);
    const MleResult noisy = mle_reconstruct(wm, heavy);
    const double f_noisy = std::real(cat.dot(noisy.rho * cat));
    CHECK(f_noisy > 0.95);

    // Physical output regardless of noise.
    CHECK(std::abs(std::real(noisy.rho.trace()) - 1.0) < 1e-9);
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(noisy.rho, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > -1e-10);
  }
}

TEST_CASE("kerr distortion of the readout pulse is undone by the phase unwind") {
  const HilbertSpace sp(24);
  const double k = 6.9, pulse = 3.0;
  const VectorXc cat = cat_state(Complex(1.2, 0.0), CatKind::Plus, sp).vec();

  // Free forward evolution under -K n(n-1) over the pulse dwell.
  VectorXc distorted = cat;
  for (int n = 0; n < 24; ++n)
    distorted(n) *= std::exp(kI * units::to_angular(k) * pulse * double(n) * double(n - 1));
  const MatrixXc undone = kerr_correct(pure(distorted), k, 2.0 * pulse);
  CHECK(std::abs(std::real(cat.dot(undone * cat)) - 1.0) < 1e-12);

  DistortionModel model;
  model.k_mhz = k;
  model.pulse_ns = pulse;
  const auto grid = wigner_grid(3.0, 25);
  MleOptions opts;
  opts.dim = 24;
  opts.max_iterations = 600;
  const DistortedWignerResult res =
      distorted_wigner_pipeline(pure(cat), model, grid, opts);
  const double f_cor = std::real(cat.dot(res.corrected * cat));
  const double f_raw = std::real(cat.dot(res.uncorrected * cat));
  CHECK(f_cor > f_raw);
  CHECK(f_cor > 0.95);

  const TCorScan scan = scan_t_cor(res.uncorrected, pure(cat), k, 0.0, 12.0, 49);
  CHECK(std::abs(scan.best_t_cor_ns - 2.0 * pulse) < 0.5);
}

TEST_CASE("pump-off wait: bare Kerr revives, off-detuning winds the qubit") {
  const HilbertSpace sp(30);
  GateContext ctx{sp, 6.9, 0.0, 9.7, 0.0};
  const double t_revival = std::numbers::pi / units::to_angular(6.9);

  // With no off detuning the revival-time propagator is exactly identity:
  // n(n-1) is even, so the Kerr phases all wind full turns.
  ZHalfGate revival{t_revival, +1};
  const VectorXc probe = coherent_state(Complex(1.2, 0.4), sp).vec();
  const VectorXc back = apply_z_half(ctx, revival, probe);
  CHECK(std::abs(std::abs(probe.dot(back)) - 1.0) < 1e-10);

  // Calibration needs something to wind the phase.
  CHECK_THROWS_AS(calibrate_z_half(ctx, Complex(1.2, 0.0)), ConfigError);

  ctx.delta_off_mhz = 9.66;
  const Complex alpha(std::sqrt(9.7 / 6.9), 0.0);
  const ZHalfCalibration cal = calibrate_z_half(ctx, alpha);
  CHECK(cal.contrast > 0.97);
  CHECK(cal.gate.duration_ns > 0.0);

  // A calibrated quarter turn moves the +Y cat onto a pole.
  const VectorXc plus_y =
      plateau_qubit_state(sp, 6.9, 0.0, 9.7, Complex(1.0, 0.0) / std::sqrt(2.0),
                          kI / std::sqrt(2.0));
  const CatReadout r = cat_readout(apply_z_half(ctx, cal.gate, plus_y), alpha);
  CHECK(std::max(r.p_plus, r.p_minus) > 0.98);
}

TEST_CASE("x-half calibration produces a quarter rotation about X") {
  const HilbertSpace sp(26);
  GateContext ctx{sp, 6.9, 0.0, 9.7, 9.66};
  const Complex alpha(std::sqrt(9.7 / 6.9), 0.0);
  const ZHalfCalibration zc = calibrate_z_half(ctx, alpha);
  const XHalfCalibration xc =
      calibrate_x_half(ctx, alpha, zc.gate, 96.0, 0.0, 31);
  CHECK(xc.gate.amp_mhz > 0.0);

  const VectorXc top = plateau_qubit_state(sp, 6.9, 0.0, 9.7, 1.0, 0.0);
  const VectorXc rotated = apply_x_half(ctx, xc.gate, top);
  const QubitFrame fr(sp, plateau_qubit_state(sp, 6.9, 0.0, 9.7, 1.0, 0.0),
                      plateau_qubit_state(sp, 6.9, 0.0, 9.7, 0.0, 1.0));
  const PVector p = p_vector(rotated, fr);
  CHECK(std::abs(p.p_z) < 0.05);          // off the pole
  CHECK(std::abs(p.p_y) > 0.93);          // onto the equator, about X
  CHECK(p.p_i > 0.99);                    // without leaking
}

TEST_CASE("frame calibration recovers a synthetic ramp azimuth") {
  const HilbertSpace sp(26);
  const double theta = 0.83;
  const VectorXc even = plateau_qubit_state(sp, 6.9, 0.0, 9.7, 1.0, 0.0);
  const VectorXc odd = plateau_qubit_state(sp, 6.9, 0.0, 9.7, 0.0, 1.0);
  const auto runner = [&](const VectorXc& psi) {
    const VectorXc out = psi(0) * even + psi(1) * std::exp(kI * theta) * odd;
    return pure(out);
  };
  const FrameCalibration fc =
      calibrate_frame(sp, runner, Complex(std::sqrt(9.7 / 6.9), 0.0));
  // The returned azimuth is the input phase to prepare, i.e. the one that
  // cancels the phase the channel adds.
  CHECK(fc.theta2_rad == doctest::Approx(-theta).epsilon(1e-6));
}

TEST_CASE("fock qpt: identity and a known rotation") {
  const HilbertSpace sp(12);
  const auto ident = [](const VectorXc& psi) { return pure(psi); };
  const QptResult qi = fock_qpt(sp, ident);
  CHECK(qi.fidelity == doctest::Approx(1.0).epsilon(1e-10));

  const double phi = 0.37;
  const auto rotate = [&](const VectorXc& psi) {
    VectorXc out = psi;
    for (int n = 0; n < 12; ++n) out(n) *= std::exp(-kI * phi * double(n));
    return pure(out);
  };
  const QptResult qr = fock_qpt(sp, rotate);
  CHECK(qr.fidelity == doctest::Approx(0.9774424485353448).epsilon(1e-9));
}

TEST_CASE("cat qpt with an ideal ramp surrogate is the identity channel") {
  const HilbertSpace sp(26);
  const VectorXc even = plateau_qubit_state(sp, 6.9, 0.0, 9.7, 1.0, 0.0);
  const VectorXc odd = plateau_qubit_state(sp, 6.9, 0.0, 9.7, 0.0, 1.0);
  const auto runner = [&](const VectorXc& psi) {
    return pure(VectorXc(psi(0) * even + psi(1) * odd));
  };
  const CatQptSpec spec{sp,
                        runner,
                        Complex(std::sqrt(9.7 / 6.9), 0.0),
                        GateContext{sp, 6.9, 0.0, 9.7, 9.66},
                        GateSet{},
                        NoiseParams{},
                        0.0,
                        SpamTable{},
                        IntegratorOptions{},
                        /*ideal_readout=*/true};
  const QptResult q = cat_qpt(spec);
  CHECK(q.fidelity == doctest::Approx(1.0).epsilon(1e-9));
  CHECK((q.r - q.r_ideal).norm() < 1e-6);
}
