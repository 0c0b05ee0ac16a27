#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "kerrcat/dynamics.hpp"
#include "kerrcat/fit.hpp"
#include "kerrcat/fock.hpp"
#include "kerrcat/integrate.hpp"

namespace kerrcat {

// ---------------------------------------------------------------------------
// Qubit frames and Pauli vectors.

// Orthonormal two-level frame embedded in the oscillator space. basis0 is the
// +Z pole. fock() uses {|0>,|1>}. kerr_cat() uses the even/odd cat pair
// {C+, C-}; its X eigenstates (C+ +- C-)/sqrt2 are the symmetric
// orthonormalization of the coherent poles |+-alpha>, so "+X" is the state
// closest to |+alpha>.
class QubitFrame {
 public:
  // Arbitrary orthonormal pair; deviation beyond 1e-10 -> DegenerateBasis.
  QubitFrame(HilbertSpace space, VectorXc b0, VectorXc b1);

  static QubitFrame fock(HilbertSpace space);
  static QubitFrame kerr_cat(HilbertSpace space, Complex alpha);

  const HilbertSpace& space() const { return space_; }
  const VectorXc& basis0() const { return b0_; }
  const VectorXc& basis1() const { return b1_; }

  MatrixXc identity_projector() const;
  MatrixXc sigma_x() const;
  MatrixXc sigma_y() const;
  MatrixXc sigma_z() const;

 private:
  HilbertSpace space_;
  VectorXc b0_, b1_;
};

// Pauli expectation vector (P_I, P_X, P_Y, P_Z). P_I = in-frame population;
// leakage shows up as P_I < 1.
struct PVector {
  double p_i = 0.0;
  double p_x = 0.0;
  double p_y = 0.0;
  double p_z = 0.0;

  Eigen::Vector4d col() const { return {p_i, p_x, p_y, p_z}; }
};

// Projection of a state onto the frame. Enforces the Bloch bound
// px^2+py^2+pz^2 <= pi^2 + 1e-9 (violations mean the input was not a state).
PVector p_vector(const MatrixXc& rho, const QubitFrame& frame);
PVector p_vector(const VectorXc& psi, const QubitFrame& frame);

// Pauli transfer matrix R with R * p_in = p_out for all four pairs; exact
// solve, SingularInputSet when the input vectors are not independent.
Eigen::Matrix4d r_matrix(std::span<const PVector> inputs,
                         std::span<const PVector> outputs);

// Average gate fidelity between the channels, (Tr(R_ideal^T R) + 2) / 6.
double process_fidelity(const Eigen::Matrix4d& r, const Eigen::Matrix4d& r_ideal);

// ---------------------------------------------------------------------------
// Cat-pole readout.

// Populations of the symmetric orthonormalized |+-alpha> pole pair. The
// single-shot observable is `signal`: leakage population is outside both
// poles and reads out at the 0.5 midpoint.
struct CatReadout {
  double p_plus = 0.0;
  double p_minus = 0.0;
  double p_leak = 0.0;   // 1 - p_plus - p_minus
  double signal = 0.0;   // p_plus + p_leak / 2
};

CatReadout cat_readout(const MatrixXc& rho, Complex alpha);
CatReadout cat_readout(const VectorXc& psi, Complex alpha);

// ---------------------------------------------------------------------------
// Wigner maps.

struct WignerMap {
  std::vector<Complex> grid;
  std::vector<double> values;
};

// W(alpha) = (2/pi) Tr[rho D(2 alpha) Pi], using the exact matrix elements of
// the displacement, so large |alpha| is safe; what must fit in the truncation
// is the state itself (tail population above 1e-6 -> TruncationTooSmall).
double wigner_point(const MatrixXc& rho, Complex alpha);
WignerMap wigner(const MatrixXc& rho, std::span<const Complex> grid, int jobs = 1);

// n x n square grid spanning [-half_width, half_width] in both quadratures,
// row-major with the real part varying fastest.
std::vector<Complex> wigner_grid(double half_width, int n);

// ---------------------------------------------------------------------------
// Maximum-likelihood reconstruction from displaced-parity data.

struct MleOptions {
  int dim = 0;  // reconstruction space size (required)
  int max_iterations = 2000;
  double likelihood_tol = 1.0e-10;  // stop when the log-likelihood gain drops below
};

struct MleResult {
  MatrixXc rho;
  bool converged = false;
  int iterations = 0;
  double log_likelihood = 0.0;
};

// Iterated R rho R on the two-outcome POVMs E+- = (1 +- M(alpha))/2 with
// M = D(2 alpha) Pi; outcome frequencies come from the Wigner values via
// f+ = (1 + pi W / 2)/2, clipped to [0,1]. Non-convergence is reported, not
// thrown; the best iterate is returned after a PSD projection.
MleResult mle_reconstruct(const WignerMap& data, const MleOptions& opts);

// ---------------------------------------------------------------------------
// Kerr distortion of the displacement pulse, and its correction.

// Number-diagonal correction U = exp(-i (K t_cor / 2) n(n-1)) applied as
// U rho U^dag.
MatrixXc kerr_correct(const MatrixXc& rho, double k_mhz, double t_cor_ns);

// Finite-duration displacement pulse model: the Kerr rotation accumulated
// over the pulse dwell acts on the state first, the displacement itself is
// ideal. Free forward evolution under -K n(n-1) for `pulse_ns` is undone by
// kerr_correct with t_cor = 2 * pulse_ns (the default).
struct DistortionModel {
  double k_mhz = 0.0;
  double pulse_ns = 0.0;
  double t_cor_ns = -1.0;  // < 0: 2 * pulse_ns
};

struct DistortedWignerResult {
  WignerMap raw;          // Wigner map of the distorted state
  MatrixXc uncorrected;   // MLE reconstruction of `raw`
  MatrixXc corrected;     // kerr_correct applied to the reconstruction
  bool pulse_too_long = false;  // pulse dwell not << Kerr period (1 / 20K)
  MleResult mle;
};

DistortedWignerResult distorted_wigner_pipeline(const MatrixXc& rho,
                                                const DistortionModel& model,
                                                std::span<const Complex> grid,
                                                const MleOptions& mle_opts,
                                                int jobs = 1);

// Sweep of the correction wait against a known reference state; returns the
// fidelity curve and its argmax (simulation-side calibration of t_cor).
struct TCorScan {
  std::vector<double> t_cor_ns;
  std::vector<double> fidelity;
  double best_t_cor_ns = 0.0;
  double best_fidelity = 0.0;
};

TCorScan scan_t_cor(const MatrixXc& reconstructed, const MatrixXc& reference,
                    double k_mhz, double t_lo_ns, double t_hi_ns, int n_points);

// ---------------------------------------------------------------------------
// Plateau gates.

// Constant plateau drive a gate acts in. Pump-off gates (Z/2) see only the
// Kerr term: switching the pump off removes both the squeezing drive and its
// frequency shift, so no detuning survives in the rotating frame.
struct GateContext {
  HilbertSpace space;
  double k_mhz = 0.0;
  double delta_mhz = 0.0;      // residual plateau detuning (pump on)
  double eps2_mhz = 0.0;       // plateau pump amplitude
  double delta_off_mhz = 0.0;  // detuning with the pump off: the induced
                               // shift vanishes with the pump, so the mode
                               // sits at the asymptotic offset again
};

// Resonant Gaussian single-photon drive, sigma = duration / 6, truncated to
// [0, duration]. chain_sign is the sign relating the X/2+Z/2 readout chain's
// pole signal to <Z>, fixed by the fringe phase during calibration.
struct XHalfGate {
  double amp_mhz = 0.0;
  double duration_ns = 0.0;
  int chain_sign = +1;
};

// Pump-off wait: the off detuning winds the C+/C- relative phase at
// Omega_Z = 4 delta_off |alpha|^2 exp(-2|alpha|^2) while the bare Kerr only
// deforms the poles transiently -- n(n-1) is even, so exp(i K t n(n-1)) is
// exactly identity at every t = j pi / K and the poles revive. pole_sign
// records which pole the +Y cat lands on (+1 -> |+alpha>), i.e. the rotation
// sense the calibration settled on.
struct ZHalfGate {
  double duration_ns = 0.0;
  int pole_sign = +1;
};

struct GateSet {
  XHalfGate x_half;
  ZHalfGate z_half;
};

VectorXc apply_x_half(const GateContext& ctx, const XHalfGate& gate,
                      const VectorXc& psi, const IntegratorOptions& opts = {});
MatrixXc apply_x_half(const GateContext& ctx, const XHalfGate& gate,
                      const MatrixXc& rho, const NoiseParams& noise = {},
                      const IntegratorOptions& opts = {});
// Pump-off evolution is diagonal in the number basis, so the noiseless forms
// are analytic.
VectorXc apply_z_half(const GateContext& ctx, const ZHalfGate& gate,
                      const VectorXc& psi);
MatrixXc apply_z_half(const GateContext& ctx, const ZHalfGate& gate,
                      const MatrixXc& rho, const NoiseParams& noise = {},
                      const IntegratorOptions& opts = {});

// Top even/odd eigenpair of the plateau Hamiltonian, phase-aligned to the
// +alpha coherent state, combined as c_even * e + c_odd * o and normalized.
VectorXc plateau_qubit_state(HilbertSpace space, double k_mhz, double delta_mhz,
                             double eps2_mhz, Complex c_even, Complex c_odd);

// ---------------------------------------------------------------------------
// Gate calibrations (noiseless, like the experimental tune-up).

struct ZHalfCalibration {
  ZHalfGate gate;
  double contrast = 0.0;  // |p_plus - p_minus| at the optimum
  std::vector<double> scan_t_ns;
  std::vector<double> scan_contrast;
};

// Prepare the +Y plateau state, wait t, read the poles: the imbalance peaks
// at the Kerr revival nearest a quarter turn of the off-detuning precession.
// Scans out past the estimated quarter-turn time and refines. Needs
// delta_off != 0 -- with no off detuning nothing winds the qubit phase.
ZHalfCalibration calibrate_z_half(const GateContext& ctx, Complex alpha,
                                  int scan_points = 400);

struct XHalfCalibration {
  XHalfGate gate;
  CosineFit fringe;
  std::vector<double> amps_mhz;
  std::vector<double> signals;
};

// Rabi fringe in drive amplitude at fixed duration: prepare the top even
// state, pulse, rotate into the pole basis with the calibrated Z/2, read the
// +alpha pole. The pi/2 amplitude is 1/(4 f_fit); the fringe phase fixes
// chain_sign.
XHalfCalibration calibrate_x_half(const GateContext& ctx, Complex alpha,
                                  const ZHalfGate& z_half, double duration_ns,
                                  double amp_max_mhz = 0.0, int n_points = 61,
                                  const IntegratorOptions& opts = {});

// ---------------------------------------------------------------------------
// Process tomography.

// Channel under test: input pure state -> output density matrix.
using ProtocolRunner = std::function<MatrixXc(const VectorXc&)>;

struct QptResult {
  Eigen::Matrix4d r;
  Eigen::Matrix4d r_ideal;
  double fidelity = 0.0;
  std::array<PVector, 4> inputs;
  std::array<PVector, 4> outputs;
};

// Fock-qubit process tomography with the photon-number readout chain.
// Inputs {|0>,|1>,|+>,|-i>}; axes {+Z,+Y,-X,-Z} via instantaneous
// pre-rotations; raw observable is <n>; the common leakage offset
// [n(+Z) + n(-Z) - 1]/2 is subtracted per input, and P_I is pinned to 1
// because the readout cannot separate leakage from qubit population.
QptResult fock_qpt(HilbertSpace space, const ProtocolRunner& run,
                   const Eigen::Matrix4d& r_ideal = Eigen::Matrix4d::Identity());

// Per-pulse symmetric readout contrast loss, s' = (2f - 1) s + (1 - f),
// applied once per gate pulse in a measurement recipe. f = 1 is ideal.
struct SpamTable {
  double z_half_contrast = 1.0;
  double x_half_contrast = 1.0;
};

struct CatQptSpec {
  HilbertSpace space;
  ProtocolRunner run;       // ramp-up channel: Fock input -> plateau state
  Complex alpha;            // plateau cat amplitude (readout poles)
  GateContext ctx;          // plateau drive for the readout gates
  GateSet gates;
  NoiseParams gate_noise = {};  // decoherence during the readout pulses; part
                                // of the measurement error, not the channel
  double theta2_rad = 0.0;  // input-frame azimuth from calibrate_frame
  SpamTable spam = {};
  IntegratorOptions integrator = {};
  bool ideal_readout = false;  // true: skip the pulse chain and project the
                               // outputs straight onto the cat frame -- the
                               // measurement-error-free projection
};

// Cat-qubit process tomography: inputs are the Fock-qubit states
// {|+>,|->,|0>,|i>} (azimuth theta2), which map to cat {+X,-X,+Z,+Y} under
// an ideal ramp; measurement recipes read poles after {nothing, nothing,
// X/2+Z/2, Z/2}. P_X = s(+X) - s(-X) cancels leakage; the gated recipes use
// 2s - 1 with the calibrated signs and take the SPAM contrast loss.
QptResult cat_qpt(const CatQptSpec& spec);

// Azimuth of the Fock-qubit equator image under a ramp channel, recovered
// from four runs via linearity: theta2 = atan2(s_i - s_mix, s_plus - s_mix),
// where s_phi is the +alpha pole signal of the ramped (|0>+e^{i phi}|1>)/sqrt2
// and s_mix the average over ramped |0> and |1>.
struct FrameCalibration {
  double theta2_rad = 0.0;
  double s_plus = 0.0;
  double s_i = 0.0;
  double s_mix = 0.0;
};

FrameCalibration calibrate_frame(HilbertSpace space, const ProtocolRunner& run,
                                 Complex alpha);

// ---------------------------------------------------------------------------
// Plateau rate measurements (time-domain fits).

// Z precession: prepare the +alpha pole, evolve with detuning, cosine-fit the
// pole population. Returns the fitted rate as an ordinary frequency in MHz.
double omega_z_fitted(HilbertSpace space, double k_mhz, double delta_mhz,
                      double eps2_mhz, double t_max_ns, int n_samples = 201,
                      const IntegratorOptions& opts = {});

// X Rabi: prepare the top even state, drive with constant eps_x, cosine-fit
// the photon-parity expectation.
double omega_x_fitted(HilbertSpace space, double k_mhz, double eps_x_mhz,
                      double eps2_mhz, double t_max_ns, int n_samples = 201,
                      const IntegratorOptions& opts = {});

}  // namespace kerrcat
