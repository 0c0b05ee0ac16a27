#include "kerrcat/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "kerrcat/errors.hpp"
#include "kerrcat/parallel.hpp"
#include "kerrcat/units.hpp"

namespace kerrcat {

namespace {

constexpr Complex kI{0.0, 1.0};

void check_state_size(const HilbertSpace& space, Eigen::Index rows, const char* who) {
  if (rows != space.dim) {
    throw DimensionMismatch(std::string(who) + ": state size does not match the space");
  }
}

// Free pump-off evolution for time t: phases exp(+i K t n(n-1)) per level.
VectorXc kerr_phases(double k_mhz, double t_ns, int dim) {
  const double k_ang = units::to_angular(k_mhz);
  VectorXc u(dim);
  for (int n = 0; n < dim; ++n) {
    u(n) = std::exp(kI * (k_ang * t_ns * static_cast<double>(n) * (n - 1.0)));
  }
  return u;
}

// Full pump-off propagator exp(-i (delta_off n - K n(n-1)) t). The detuning
// term is the one that rotates the cat qubit: a^2 C+- = alpha^2 C+-, so the
// bare Kerr leaves the pole pair exactly degenerate.
VectorXc pump_off_phases(const GateContext& ctx, double t_ns) {
  const double k_ang = units::to_angular(ctx.k_mhz);
  const double off_ang = units::to_angular(ctx.delta_off_mhz);
  VectorXc u(ctx.space.dim);
  for (int n = 0; n < ctx.space.dim; ++n) {
    const double nd = static_cast<double>(n);
    u(n) = std::exp(kI * t_ns * (k_ang * nd * (nd - 1.0) - off_ang * nd));
  }
  return u;
}

template <class F>
double golden_max(const F& f, double lo, double hi, int iters = 100) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

Drive plateau_drive(const GateContext& ctx) {
  Drive d;
  d.k_mhz = ctx.k_mhz;
  if (ctx.delta_mhz != 0.0) d.delta_mhz = [v = ctx.delta_mhz](double) { return v; };
  if (ctx.eps2_mhz != 0.0) d.eps2_mhz = [v = ctx.eps2_mhz](double) { return v; };
  return d;
}

std::function<Complex(double)> gaussian_pulse(double amp_mhz, double duration_ns) {
  const double sigma = duration_ns / 6.0;
  const double mid = duration_ns / 2.0;
  return [=](double t) {
    const double x = (t - mid) / sigma;
    return Complex(amp_mhz * std::exp(-0.5 * x * x), 0.0);
  };
}

MatrixXc embed_two_level(int dim, const Eigen::Matrix2cd& u) {
  MatrixXc m = MatrixXc::Identity(dim, dim);
  m.topLeftCorner<2, 2>() = u;
  return m;
}

// Equator preparation unitary: |0> -> (|0> + e^{i theta} |1>)/sqrt2.
Eigen::Matrix2cd equator_prep(double theta) {
  Eigen::Matrix2cd p;
  p << 1.0, -std::exp(-kI * theta), std::exp(kI * theta), 1.0;
  return p / std::numbers::sqrt2;
}

double wigner_point_impl(const MatrixXc& rho, Complex alpha) {
  const int d = static_cast<int>(rho.rows());
  const MatrixXc disp = displacement_analytic(2.0 * alpha, d);
  Complex tr = 0.0;
  double sign = 1.0;
  for (int m = 0; m < d; ++m) {
    tr += sign * (rho.row(m) * disp.col(m)).value();
    sign = -sign;
  }
  return (2.0 / std::numbers::pi) * tr.real();
}

void check_wigner_truncation(const MatrixXc& rho) {
  const int d = static_cast<int>(rho.rows());
  if (d < 2 || rho.cols() != d) throw ConfigError("wigner: density matrix must be square, dim >= 2");
  const double tail = rho(d - 1, d - 1).real() + rho(d - 2, d - 2).real();
  if (tail > 1.0e-6) {
    throw TruncationTooSmall("wigner: state tail population " + std::to_string(tail) +
                             " exceeds 1e-6; enlarge the space");
  }
}

double contrast_loss(double signal, double f) { return (2.0 * f - 1.0) * signal + (1.0 - f); }

}  // namespace

// ---------------------------------------------------------------------------
// QubitFrame

QubitFrame::QubitFrame(HilbertSpace space, VectorXc b0, VectorXc b1)
    : space_(space), b0_(std::move(b0)), b1_(std::move(b1)) {
  check_state_size(space_, b0_.size(), "QubitFrame");
  check_state_size(space_, b1_.size(), "QubitFrame");
  const double n0 = std::abs(b0_.norm() - 1.0);
  const double n1 = std::abs(b1_.norm() - 1.0);
  const double ov = std::abs(b0_.dot(b1_));
  if (n0 > 1.0e-10 || n1 > 1.0e-10 || ov > 1.0e-10) {
    throw DegenerateBasis("QubitFrame: basis pair is not orthonormal");
  }
}

QubitFrame QubitFrame::fock(HilbertSpace space) {
  return QubitFrame(space, StateVector::basis(space, 0).vec(), StateVector::basis(space, 1).vec());
}

QubitFrame QubitFrame::kerr_cat(HilbertSpace space, Complex alpha) {
  return QubitFrame(space, cat_state(alpha, CatKind::Plus, space).vec(),
                    cat_state(alpha, CatKind::Minus, space).vec());
}

MatrixXc QubitFrame::identity_projector() const {
  return b0_ * b0_.adjoint() + b1_ * b1_.adjoint();
}
MatrixXc QubitFrame::sigma_x() const { return b0_ * b1_.adjoint() + b1_ * b0_.adjoint(); }
MatrixXc QubitFrame::sigma_y() const {
  return -kI * (b0_ * b1_.adjoint()) + kI * (b1_ * b0_.adjoint());
}
MatrixXc QubitFrame::sigma_z() const { return b0_ * b0_.adjoint() - b1_ * b1_.adjoint(); }

namespace {

PVector assemble_p(Complex r00, Complex r11, Complex r10) {
  PVector p;
  p.p_i = (r00 + r11).real();
  p.p_z = (r00 - r11).real();
  p.p_x = 2.0 * r10.real();
  p.p_y = 2.0 * r10.imag();
  const double bloch = p.p_x * p.p_x + p.p_y * p.p_y + p.p_z * p.p_z;
  if (bloch > p.p_i * p.p_i + 1.0e-9) {
    throw ToleranceNotMet("p_vector: Bloch bound violated; input is not a physical state");
  }
  return p;
}

}  // namespace

PVector p_vector(const MatrixXc& rho, const QubitFrame& frame) {
  check_state_size(frame.space(), rho.rows(), "p_vector");
  const VectorXc& b0 = frame.basis0();
  const VectorXc& b1 = frame.basis1();
  return assemble_p(b0.dot(rho * b0), b1.dot(rho * b1), b1.dot(rho * b0));
}

PVector p_vector(const VectorXc& psi, const QubitFrame& frame) {
  check_state_size(frame.space(), psi.size(), "p_vector");
  const Complex c0 = frame.basis0().dot(psi);
  const Complex c1 = frame.basis1().dot(psi);
  return assemble_p(std::norm(c0), std::norm(c1), c1 * std::conj(c0));
}

Eigen::Matrix4d r_matrix(std::span<const PVector> inputs, std::span<const PVector> outputs) {
  if (inputs.size() != outputs.size()) {
    throw ConfigError("r_matrix: input/output count mismatch");
  }
  const int n = static_cast<int>(inputs.size());
  if (n < 4) throw SingularInputSet("r_matrix: need at least four input states");
  // Solve P_in^T R^T = P_out^T; exact for four independent inputs, least
  // squares beyond that.
  Eigen::MatrixXd pin_t(n, 4);
  Eigen::MatrixXd pout_t(n, 4);
  for (int j = 0; j < n; ++j) {
    pin_t.row(j) = inputs[j].col().transpose();
    pout_t.row(j) = outputs[j].col().transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(pin_t, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.rank() < 4) {
    throw SingularInputSet("r_matrix: input Pauli vectors are linearly dependent");
  }
  return svd.solve(pout_t).transpose();
}

double process_fidelity(const Eigen::Matrix4d& r, const Eigen::Matrix4d& r_ideal) {
  return ((r_ideal.transpose() * r).trace() + 2.0) / 6.0;
}

// ---------------------------------------------------------------------------
// Cat-pole readout

namespace {

CatReadout readout_from_populations(double pp, double pm) {
  CatReadout r;
  r.p_plus = pp;
  r.p_minus = pm;
  r.p_leak = 1.0 - pp - pm;
  r.signal = pp + 0.5 * r.p_leak;
  return r;
}

}  // namespace

CatReadout cat_readout(const MatrixXc& rho, Complex alpha) {
  const HilbertSpace space(static_cast<int>(rho.rows()));
  const VectorXc cp = cat_state(alpha, CatKind::Plus, space).vec();
  const VectorXc cm = cat_state(alpha, CatKind::Minus, space).vec();
  const VectorXc op = (cp + cm) / std::numbers::sqrt2;
  const VectorXc om = (cp - cm) / std::numbers::sqrt2;
  return readout_from_populations(op.dot(rho * op).real(), om.dot(rho * om).real());
}

CatReadout cat_readout(const VectorXc& psi, Complex alpha) {
  const HilbertSpace space(static_cast<int>(psi.size()));
  const VectorXc cp = cat_state(alpha, CatKind::Plus, space).vec();
  const VectorXc cm = cat_state(alpha, CatKind::Minus, space).vec();
  const VectorXc op = (cp + cm) / std::numbers::sqrt2;
  const VectorXc om = (cp - cm) / std::numbers::sqrt2;
  return readout_from_populations(std::norm(op.dot(psi)), std::norm(om.dot(psi)));
}

// ---------------------------------------------------------------------------
// Wigner maps

double wigner_point(const MatrixXc& rho, Complex alpha) {
  check_wigner_truncation(rho);
  return wigner_point_impl(rho, alpha);
}

WignerMap wigner(const MatrixXc& rho, std::span<const Complex> grid, int jobs) {
  check_wigner_truncation(rho);
  if (grid.empty()) throw ConfigError("wigner: empty grid");
  WignerMap map;
  map.grid.assign(grid.begin(), grid.end());
  map.values.resize(grid.size());
  parallel_for(static_cast<int>(grid.size()), jobs,
               [&](int i) { map.values[i] = wigner_point_impl(rho, map.grid[i]); });
  return map;
}

std::vector<Complex> wigner_grid(double half_width, int n) {
  if (half_width <= 0.0 || n < 2) throw ConfigError("wigner_grid: need half_width > 0, n >= 2");
  const double step = 2.0 * half_width / (n - 1);
  std::vector<Complex> grid;
  grid.reserve(static_cast<std::size_t>(n) * n);
  for (int iy = 0; iy < n; ++iy) {
    const double im = -half_width + iy * step;
    for (int ix = 0; ix < n; ++ix) {
      grid.emplace_back(-half_width + ix * step, im);
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Maximum-likelihood reconstruction

MleResult mle_reconstruct(const WignerMap& data, const MleOptions& opts) {
  const int d = opts.dim;
  if (d < 2) throw ConfigError("mle_reconstruct: dim must be >= 2");
  const int n = static_cast<int>(data.grid.size());
  if (n == 0 || data.values.size() != data.grid.size()) {
    throw ConfigError("mle_reconstruct: grid/value size mismatch");
  }

  // Stack of vectorized parity-witness operators M_j = D(2 alpha_j) Pi,
  // hermitized against recurrence roundoff. Tr(rho M_j) is one gemv.
  MatrixXc mstack(d * d, n);
  for (int j = 0; j < n; ++j) {
    MatrixXc m = displacement_analytic(2.0 * data.grid[j], d);
    for (int c = 1; c < d; c += 2) m.col(c) *= -1.0;
    m = 0.5 * (m + m.adjoint()).eval();
    mstack.col(j) = Eigen::Map<const VectorXc>(m.data(), d * d);
  }

  Eigen::VectorXd f_plus(n);
  for (int j = 0; j < n; ++j) {
    f_plus(j) = std::clamp((1.0 + 0.5 * std::numbers::pi * data.values[j]) / 2.0, 0.0, 1.0);
  }

  MatrixXc rho = MatrixXc::Identity(d, d) / static_cast<double>(d);
  MatrixXc best_rho = rho;
  double best_ll = -std::numeric_limits<double>::infinity();
  double prev_ll = -std::numeric_limits<double>::infinity();

  MleResult result;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    const Eigen::VectorXd g =
        (mstack.adjoint() * Eigen::Map<const VectorXc>(rho.data(), d * d)).real();
    const Eigen::VectorXd p_plus = ((1.0 + g.array()) / 2.0).max(1.0e-12).matrix();
    const Eigen::VectorXd p_minus = ((1.0 - g.array()) / 2.0).max(1.0e-12).matrix();

    double ll = 0.0;
    for (int j = 0; j < n; ++j) {
      if (f_plus(j) > 0.0) ll += f_plus(j) * std::log(p_plus(j));
      if (f_plus(j) < 1.0) ll += (1.0 - f_plus(j)) * std::log(p_minus(j));
    }
    if (ll > best_ll) {
      best_ll = ll;
      best_rho = rho;
    }
    if (it > 0 && std::abs(ll - prev_ll) < opts.likelihood_tol) {
      result.converged = true;
      break;
    }
    prev_ll = ll;

    // R = sum_j [f+/p+ E+ + f-/p- E-] collapses to w0*I + sum_j w_j M_j.
    double w0 = 0.0;
    Eigen::VectorXd w(n);
    for (int j = 0; j < n; ++j) {
      const double a = f_plus(j) / p_plus(j);
      const double b = (1.0 - f_plus(j)) / p_minus(j);
      w0 += 0.5 * (a + b);
      w(j) = 0.5 * (a - b);
    }
    const VectorXc rvec = mstack * w.cast<Complex>();
    MatrixXc r_op = Eigen::Map<const MatrixXc>(rvec.data(), d, d);
    r_op += w0 * MatrixXc::Identity(d, d);
    r_op = 0.5 * (r_op + r_op.adjoint()).eval();

    rho = r_op * rho * r_op;
    rho = 0.5 * (rho + rho.adjoint()).eval();
    rho /= rho.trace().real();
  }

  result.iterations = it;
  result.log_likelihood = best_ll;
  result.rho = project_to_psd(best_rho);
  return result;
}

// ---------------------------------------------------------------------------
// Kerr distortion and correction

MatrixXc kerr_correct(const MatrixXc& rho, double k_mhz, double t_cor_ns) {
  const int d = static_cast<int>(rho.rows());
  const VectorXc u = kerr_phases(-0.5 * k_mhz, t_cor_ns, d);
  return u.asDiagonal() * rho * u.conjugate().asDiagonal();
}

DistortedWignerResult distorted_wigner_pipeline(const MatrixXc& rho,
                                                const DistortionModel& model,
                                                std::span<const Complex> grid,
                                                const MleOptions& mle_opts, int jobs) {
  if (model.k_mhz < 0.0 || model.pulse_ns < 0.0) {
    throw ConfigError("distorted_wigner_pipeline: negative Kerr or pulse duration");
  }
  DistortedWignerResult res;
  res.pulse_too_long =
      model.k_mhz > 0.0 && model.pulse_ns >= 1.0e3 / (20.0 * model.k_mhz);

  const int d = static_cast<int>(rho.rows());
  const VectorXc u = kerr_phases(model.k_mhz, model.pulse_ns, d);
  const MatrixXc distorted = u.asDiagonal() * rho * u.conjugate().asDiagonal();

  res.raw = wigner(distorted, grid, jobs);
  res.mle = mle_reconstruct(res.raw, mle_opts);
  res.uncorrected = res.mle.rho;
  const double t_cor = model.t_cor_ns < 0.0 ? 2.0 * model.pulse_ns : model.t_cor_ns;
  res.corrected = kerr_correct(res.uncorrected, model.k_mhz, t_cor);
  return res;
}

TCorScan scan_t_cor(const MatrixXc& reconstructed, const MatrixXc& reference, double k_mhz,
                    double t_lo_ns, double t_hi_ns, int n_points) {
  if (n_points < 2 || t_hi_ns <= t_lo_ns) {
    throw ConfigError("scan_t_cor: need n_points >= 2 and t_hi > t_lo");
  }
  const HilbertSpace space(static_cast<int>(reconstructed.rows()));
  const DensityMatrix ref(space, project_to_psd(0.5 * (reference + reference.adjoint())));

  TCorScan scan;
  scan.best_fidelity = -1.0;
  const double step = (t_hi_ns - t_lo_ns) / (n_points - 1);
  for (int i = 0; i < n_points; ++i) {
    const double t = t_lo_ns + i * step;
    const DensityMatrix corrected(space, kerr_correct(reconstructed, k_mhz, t));
    const double f = state_fidelity(corrected, ref);
    scan.t_cor_ns.push_back(t);
    scan.fidelity.push_back(f);
    if (f > scan.best_fidelity) {
      scan.best_fidelity = f;
      scan.best_t_cor_ns = t;
    }
  }
  return scan;
}

// ---------------------------------------------------------------------------
// Plateau gates

VectorXc apply_x_half(const GateContext& ctx, const XHalfGate& gate, const VectorXc& psi,
                      const IntegratorOptions& opts) {
  if (gate.duration_ns <= 0.0) throw ConfigError("x/2 gate: duration must be positive");
  check_state_size(ctx.space, psi.size(), "apply_x_half");
  Drive d = plateau_drive(ctx);
  d.eps_x_mhz = gaussian_pulse(gate.amp_mhz, gate.duration_ns);
  return evolve_schrodinger(ctx.space, d, psi, 0.0, gate.duration_ns, {}, opts).states.back();
}

MatrixXc apply_x_half(const GateContext& ctx, const XHalfGate& gate, const MatrixXc& rho,
                      const NoiseParams& noise, const IntegratorOptions& opts) {
  if (gate.duration_ns <= 0.0) throw ConfigError("x/2 gate: duration must be positive");
  check_state_size(ctx.space, rho.rows(), "apply_x_half");
  Drive d = plateau_drive(ctx);
  d.eps_x_mhz = gaussian_pulse(gate.amp_mhz, gate.duration_ns);
  return evolve_lindblad(ctx.space, d, noise, rho, 0.0, gate.duration_ns, {}, opts)
      .states.back();
}

VectorXc apply_z_half(const GateContext& ctx, const ZHalfGate& gate, const VectorXc& psi) {
  if (gate.duration_ns < 0.0) throw ConfigError("z/2 gate: negative duration");
  check_state_size(ctx.space, psi.size(), "apply_z_half");
  const VectorXc u = pump_off_phases(ctx, gate.duration_ns);
  return u.asDiagonal() * psi;
}

MatrixXc apply_z_half(const GateContext& ctx, const ZHalfGate& gate, const MatrixXc& rho,
                      const NoiseParams& noise, const IntegratorOptions& opts) {
  if (gate.duration_ns < 0.0) throw ConfigError("z/2 gate: negative duration");
  check_state_size(ctx.space, rho.rows(), "apply_z_half");
  if (gate.duration_ns == 0.0) return rho;
  if (!noise.any()) {
    const VectorXc u = pump_off_phases(ctx, gate.duration_ns);
    return u.asDiagonal() * rho * u.conjugate().asDiagonal();
  }
  Drive d;  // pump off: Kerr plus the off detuning
  d.k_mhz = ctx.k_mhz;
  if (ctx.delta_off_mhz != 0.0) {
    d.delta_mhz = [v = ctx.delta_off_mhz](double) { return v; };
  }
  return evolve_lindblad(ctx.space, d, noise, rho, 0.0, gate.duration_ns, {}, opts)
      .states.back();
}

VectorXc plateau_qubit_state(HilbertSpace space, double k_mhz, double delta_mhz,
                             double eps2_mhz, Complex c_even, Complex c_odd) {
  if (k_mhz <= 0.0 || eps2_mhz <= 0.0) {
    throw ConfigError("plateau_qubit_state: need k > 0 and eps2 > 0");
  }
  const HamiltonianTerms terms{delta_mhz, k_mhz, eps2_mhz, 0.0};
  VectorXc ve = top_eigenstate(space, terms, +1);
  VectorXc vo = top_eigenstate(space, terms, -1);
  const Complex alpha = std::sqrt(eps2_mhz / k_mhz);
  const VectorXc coh = coherent_state(alpha, space).vec();
  if (coh.dot(ve).real() < 0.0) ve = -ve;
  if (coh.dot(vo).real() < 0.0) vo = -vo;
  VectorXc v = c_even * ve + c_odd * vo;
  const double nrm = v.norm();
  if (nrm < 1.0e-12) throw ConfigError("plateau_qubit_state: zero superposition");
  return v / nrm;
}

// ---------------------------------------------------------------------------
// Gate calibrations

ZHalfCalibration calibrate_z_half(const GateContext& ctx, Complex alpha, int scan_points) {
  if (ctx.k_mhz <= 0.0) throw ConfigError("calibrate_z_half: need k > 0");
  if (scan_points < 8) throw ConfigError("calibrate_z_half: need at least 8 scan points");
  const double omega_est = omega_z_analytic(ctx.delta_off_mhz, std::norm(alpha));
  if (std::abs(omega_est) < 1.0e-9) {
    throw ConfigError("calibrate_z_half: pump-off detuning winds no qubit phase");
  }
  const VectorXc y_plus =
      plateau_qubit_state(ctx.space, ctx.k_mhz, ctx.delta_mhz, ctx.eps2_mhz, 1.0, kI);

  // Quarter turn of the precession, padded so the nearest-revival peak is
  // inside the window even when it falls past the estimate.
  const double t_quarter = 0.25e3 / std::abs(omega_est);
  const double t_revival = std::numbers::pi / units::to_angular(ctx.k_mhz);
  const double t_max = t_quarter + 1.5 * t_revival;
  const auto imbalance = [&](double t) {
    const VectorXc u = pump_off_phases(ctx, t);
    const CatReadout r = cat_readout(VectorXc(u.asDiagonal() * y_plus), alpha);
    return r.p_plus - r.p_minus;
  };

  ZHalfCalibration cal;
  int jbest = 0;
  double cbest = -1.0;
  for (int j = 1; j <= scan_points; ++j) {
    const double t = t_max * j / scan_points;
    const double c = std::abs(imbalance(t));
    cal.scan_t_ns.push_back(t);
    cal.scan_contrast.push_back(c);
    if (c > cbest) {
      cbest = c;
      jbest = j;
    }
  }
  const double lo = t_max * std::max(1, jbest - 1) / scan_points;
  const double hi = t_max * std::min(scan_points, jbest + 1) / scan_points;
  const double t_opt = golden_max([&](double t) { return std::abs(imbalance(t)); }, lo, hi);

  const double raw = imbalance(t_opt);
  cal.gate.duration_ns = t_opt;
  cal.gate.pole_sign = raw >= 0.0 ? +1 : -1;
  cal.contrast = std::abs(raw);
  return cal;
}

XHalfCalibration calibrate_x_half(const GateContext& ctx, Complex alpha,
                                  const ZHalfGate& z_half, double duration_ns,
                                  double amp_max_mhz, int n_points,
                                  const IntegratorOptions& opts) {
  if (duration_ns <= 0.0) throw ConfigError("calibrate_x_half: duration must be positive");
  if (n_points < 16) throw ConfigError("calibrate_x_half: need at least 16 fringe points");
  const VectorXc even =
      plateau_qubit_state(ctx.space, ctx.k_mhz, ctx.delta_mhz, ctx.eps2_mhz, 1.0, 0.0);

  // Auto range: about three full fringes. The pulse area of the truncated
  // Gaussian is amp * sigma * sqrt(2 pi) * erf(3/sqrt2) and the Rabi angle is
  // 4 |alpha| times that.
  const double sigma = duration_ns / 6.0;
  const double area_per_amp =
      units::to_angular(1.0) * sigma * std::sqrt(2.0 * std::numbers::pi) *
      std::erf(3.0 / std::numbers::sqrt2);
  if (amp_max_mhz <= 0.0) {
    amp_max_mhz = 6.0 * std::numbers::pi / (4.0 * std::abs(alpha) * area_per_amp);
  }

  XHalfCalibration cal;
  for (int j = 0; j < n_points; ++j) {
    const double amp = amp_max_mhz * j / (n_points - 1);
    const XHalfGate pulse{amp, duration_ns, +1};
    const VectorXc rotated = apply_x_half(ctx, pulse, even, opts);
    const VectorXc mapped = apply_z_half(ctx, z_half, rotated);
    cal.amps_mhz.push_back(amp);
    cal.signals.push_back(cat_readout(mapped, alpha).signal);
  }

  cal.fringe = fit_cosine(cal.amps_mhz, cal.signals);
  if (cal.fringe.freq <= 0.0 || cal.fringe.amplitude < 0.05) {
    throw FitFailed("calibrate_x_half: no usable Rabi fringe");
  }
  const double sp = std::sin(cal.fringe.phase);
  if (std::abs(sp) < 0.3) {
    throw FitFailed("calibrate_x_half: fringe phase does not resolve the rotation sense");
  }
  cal.gate.amp_mhz = 1.0 / (4.0 * cal.fringe.freq);
  cal.gate.duration_ns = duration_ns;
  // signal = 1/2 - sense * sin(angle)/2 matches cos(angle + phase) with
  // phase = sense * pi/2.
  cal.gate.chain_sign = sp > 0.0 ? -1 : +1;
  return cal;
}

// ---------------------------------------------------------------------------
// Process tomography

QptResult fock_qpt(HilbertSpace space, const ProtocolRunner& run,
                   const Eigen::Matrix4d& r_ideal) {
  if (!run) throw ConfigError("fock_qpt: null protocol runner");
  const int d = space.dim;
  const VectorXc e0 = StateVector::basis(space, 0).vec();
  const VectorXc e1 = StateVector::basis(space, 1).vec();

  const std::array<VectorXc, 4> psis = {
      e0, e1, VectorXc((e0 + e1) / std::numbers::sqrt2),
      VectorXc((e0 - kI * e1) / std::numbers::sqrt2)};
  const std::array<PVector, 4> p_in = {PVector{1, 0, 0, 1}, PVector{1, 0, 0, -1},
                                       PVector{1, 1, 0, 0}, PVector{1, 0, -1, 0}};

  // Measurement axes +Z, +Y, -X, -Z: pre-rotations mapping the axis onto the
  // readout basis, then the mean photon number as the raw observable.
  Eigen::Matrix2cd xflip;
  xflip << 0.0, 1.0, 1.0, 0.0;
  const std::array<MatrixXc, 4> pre = {
      embed_two_level(d, Eigen::Matrix2cd::Identity()),
      embed_two_level(d, equator_prep(std::numbers::pi / 2.0).adjoint()),
      embed_two_level(d, equator_prep(std::numbers::pi).adjoint()),
      embed_two_level(d, xflip)};

  QptResult result;
  result.inputs = p_in;
  result.r_ideal = r_ideal;
  for (int j = 0; j < 4; ++j) {
    const MatrixXc rho = run(psis[j]);
    check_state_size(space, rho.rows(), "fock_qpt runner");
    std::array<double, 4> nbar{};
    for (int a = 0; a < 4; ++a) {
      const MatrixXc rotated = pre[a] * rho * pre[a].adjoint();
      double s = 0.0;
      for (int n = 1; n < d; ++n) s += n * rotated(n, n).real();
      nbar[a] = s;
    }
    // Population leaked above |1> shifts every readout equally; the +-Z pair
    // measures it, and the Z estimate is its own offset-free difference.
    const double offset = 0.5 * (nbar[0] + nbar[3] - 1.0);
    PVector p;
    p.p_i = 1.0;  // the readout cannot separate leakage from qubit population
    p.p_x = 2.0 * (nbar[2] - offset) - 1.0;
    p.p_y = 1.0 - 2.0 * (nbar[1] - offset);
    p.p_z = nbar[3] - nbar[0];
    result.outputs[j] = p;
  }

  result.r = r_matrix(result.inputs, result.outputs);
  result.fidelity = process_fidelity(result.r, result.r_ideal);
  return result;
}

QptResult cat_qpt(const CatQptSpec& spec) {
  if (!spec.run) throw ConfigError("cat_qpt: null protocol runner");
  const auto check_contrast = [](double f, const char* who) {
    if (f <= 0.0 || f > 1.0) {
      throw ConfigError(std::string("cat_qpt: ") + who + " contrast must be in (0, 1]");
    }
  };
  check_contrast(spec.spam.z_half_contrast, "z/2");
  check_contrast(spec.spam.x_half_contrast, "x/2");

  const VectorXc e0 = StateVector::basis(spec.space, 0).vec();
  const VectorXc e1 = StateVector::basis(spec.space, 1).vec();
  const Complex ph = std::exp(kI * spec.theta2_rad);

  const std::array<VectorXc, 4> psis = {
      VectorXc((e0 + ph * e1) / std::numbers::sqrt2),
      VectorXc((e0 - ph * e1) / std::numbers::sqrt2), e0,
      VectorXc((e0 + kI * ph * e1) / std::numbers::sqrt2)};
  const std::array<PVector, 4> p_in = {PVector{1, 1, 0, 0}, PVector{1, -1, 0, 0},
                                       PVector{1, 0, 0, 1}, PVector{1, 0, 1, 0}};

  QptResult result;
  result.inputs = p_in;
  result.r_ideal = Eigen::Matrix4d::Identity();
  if (spec.ideal_readout) {
    // The code space the ramp targets is the plateau eigenpair, not the
    // idealized cats; at moderate pump they differ by enough to matter here.
    const QubitFrame frame(
        spec.space,
        plateau_qubit_state(spec.space, spec.ctx.k_mhz, spec.ctx.delta_mhz,
                            spec.ctx.eps2_mhz, 1.0, 0.0),
        plateau_qubit_state(spec.space, spec.ctx.k_mhz, spec.ctx.delta_mhz,
                            spec.ctx.eps2_mhz, 0.0, 1.0));
    for (int j = 0; j < 4; ++j) {
      const MatrixXc rho = spec.run(psis[j]);
      check_state_size(spec.space, rho.rows(), "cat_qpt runner");
      result.outputs[j] = p_vector(rho, frame);
    }
    result.r = r_matrix(result.inputs, result.outputs);
    result.fidelity = process_fidelity(result.r, result.r_ideal);
    return result;
  }
  for (int j = 0; j < 4; ++j) {
    const MatrixXc rho = spec.run(psis[j]);
    check_state_size(spec.space, rho.rows(), "cat_qpt runner");

    // +-X: direct pole readout, leakage cancels in the difference.
    const double s_x = cat_readout(rho, spec.alpha).signal;

    // +Z: X/2 then Z/2 maps the pole axis onto the readout poles.
    const MatrixXc after_x =
        apply_x_half(spec.ctx, spec.gates.x_half, rho, spec.gate_noise, spec.integrator);
    const MatrixXc after_xz =
        apply_z_half(spec.ctx, spec.gates.z_half, after_x, spec.gate_noise, spec.integrator);
    double s_z = cat_readout(after_xz, spec.alpha).signal;
    s_z = contrast_loss(contrast_loss(s_z, spec.spam.z_half_contrast),
                        spec.spam.x_half_contrast);

    // +Y: Z/2 alone.
    const MatrixXc after_z =
        apply_z_half(spec.ctx, spec.gates.z_half, rho, spec.gate_noise, spec.integrator);
    double s_y = cat_readout(after_z, spec.alpha).signal;
    s_y = contrast_loss(s_y, spec.spam.z_half_contrast);

    PVector p;
    p.p_i = 1.0;
    p.p_x = 2.0 * s_x - 1.0;
    p.p_z = spec.gates.x_half.chain_sign * (2.0 * s_z - 1.0);
    p.p_y = spec.gates.z_half.pole_sign * (2.0 * s_y - 1.0);
    result.outputs[j] = p;
  }

  result.r = r_matrix(result.inputs, result.outputs);
  result.fidelity = process_fidelity(result.r, result.r_ideal);
  return result;
}

FrameCalibration calibrate_frame(HilbertSpace space, const ProtocolRunner& run,
                                 Complex alpha) {
  if (!run) throw ConfigError("calibrate_frame: null protocol runner");
  const VectorXc e0 = StateVector::basis(space, 0).vec();
  const VectorXc e1 = StateVector::basis(space, 1).vec();
  const auto signal = [&](const VectorXc& psi) {
    return cat_readout(run(psi), alpha).signal;
  };
  FrameCalibration cal;
  cal.s_mix = 0.5 * (signal(e0) + signal(e1));
  cal.s_plus = signal(VectorXc((e0 + e1) / std::numbers::sqrt2));
  cal.s_i = signal(VectorXc((e0 + kI * e1) / std::numbers::sqrt2));
  const double dx = cal.s_plus - cal.s_mix;
  const double dy = cal.s_i - cal.s_mix;
  cal.theta2_rad = std::hypot(dx, dy) < 1.0e-6 ? 0.0 : std::atan2(dy, dx);
  return cal;
}

// ---------------------------------------------------------------------------
// Plateau rate measurements

namespace {

std::vector<double> sample_grid(double t_max, int n) {
  std::vector<double> ts(n);
  for (int i = 0; i < n; ++i) ts[i] = t_max * i / (n - 1);
  return ts;
}

}  // namespace

double omega_z_fitted(HilbertSpace space, double k_mhz, double delta_mhz, double eps2_mhz,
                      double t_max_ns, int n_samples, const IntegratorOptions& opts) {
  if (t_max_ns <= 0.0 || n_samples < 16) {
    throw ConfigError("omega_z_fitted: need t_max > 0 and n_samples >= 16");
  }
  const VectorXc pole = plateau_qubit_state(space, k_mhz, 0.0, eps2_mhz, 1.0, 1.0);
  const Complex alpha = std::sqrt(eps2_mhz / k_mhz);

  Drive d;
  d.k_mhz = k_mhz;
  d.delta_mhz = [delta_mhz](double) { return delta_mhz; };
  d.eps2_mhz = [eps2_mhz](double) { return eps2_mhz; };
  const auto res =
      evolve_schrodinger(space, d, pole, 0.0, t_max_ns, sample_grid(t_max_ns, n_samples), opts);

  std::vector<double> pop(res.states.size());
  for (std::size_t i = 0; i < res.states.size(); ++i) {
    pop[i] = cat_readout(res.states[i], alpha).p_plus;
  }
  return 1.0e3 * fit_cosine(res.times_ns, pop).freq;
}

double omega_x_fitted(HilbertSpace space, double k_mhz, double eps_x_mhz, double eps2_mhz,
                      double t_max_ns, int n_samples, const IntegratorOptions& opts) {
  if (t_max_ns <= 0.0 || n_samples < 16) {
    throw ConfigError("omega_x_fitted: need t_max > 0 and n_samples >= 16");
  }
  const VectorXc even = plateau_qubit_state(space, k_mhz, 0.0, eps2_mhz, 1.0, 0.0);

  Drive d;
  d.k_mhz = k_mhz;
  d.eps2_mhz = [eps2_mhz](double) { return eps2_mhz; };
  d.eps_x_mhz = [eps_x_mhz](double) { return Complex(eps_x_mhz, 0.0); };
  const auto res =
      evolve_schrodinger(space, d, even, 0.0, t_max_ns, sample_grid(t_max_ns, n_samples), opts);

  std::vector<double> par(res.states.size());
  for (std::size_t i = 0; i < res.states.size(); ++i) {
    double s = 0.0;
    double sign = 1.0;
    for (int n = 0; n < space.dim; ++n) {
      s += sign * std::norm(res.states[i](n));
      sign = -sign;
    }
    par[i] = s;
  }
  return 1.0e3 * fit_cosine(res.times_ns, par).freq;
}

}  // namespace kerrcat
