#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "kerrcat/fock.hpp"
#include "kerrcat/integrate.hpp"
#include "kerrcat/schedule.hpp"

namespace kerrcat {

// Rotating-frame Hamiltonian terms, all in MHz:
//   H = delta a^dag a - K a^dag a^dag a a + eps2 (a^dag^2 + a^2)
//       + (eps_x a^dag + conj(eps_x) a).
struct HamiltonianTerms {
  double delta_mhz = 0.0;
  double k_mhz = 0.0;
  double eps2_mhz = 0.0;
  Complex eps_x_mhz = 0.0;
};

// Dense Hamiltonian in angular units (rad/ns).
Operator hamiltonian(HilbertSpace space, const HamiltonianTerms& terms);

// Time-dependent controls for one contiguous evolution; values in MHz as
// functions of absolute time in ns.
struct Drive {
  double k_mhz = 0.0;
  std::function<double(double)> delta_mhz;   // null -> 0
  std::function<double(double)> eps2_mhz;    // null -> 0
  std::function<Complex(double)> eps_x_mhz;  // null -> 0
  std::vector<double> breakpoints;  // integration restarts (control kinks)
};

Drive schedule_drive(const PumpSchedule& schedule, double k_mhz);

// T1/T2 decoherence. Collapse operators sqrt(1/T1) a and
// sqrt(2 Gamma_phi) a^dag a with Gamma_phi = 1/T2 - 1/(2 T1) >= 0, so a
// number-basis coherence <m|rho|n> with |m - n| = 1 decays at exactly 1/T2.
struct NoiseParams {
  double t1_us = 0.0;  // <= 0: no photon loss
  double t2_us = 0.0;  // <= 0: no pure dephasing beyond the T1 limit

  bool any() const { return t1_us > 0.0 || t2_us > 0.0; }
};

struct SchrodingerResult {
  std::vector<double> times_ns;
  std::vector<VectorXc> states;
  IntegratorStats stats;
};

struct LindbladResult {
  std::vector<double> times_ns;
  std::vector<MatrixXc> states;
  IntegratorStats stats;
};

SchrodingerResult evolve_schrodinger(HilbertSpace space, const Drive& drive,
                                     const VectorXc& psi0, double t0_ns, double t1_ns,
                                     std::vector<double> sample_times = {},
                                     const IntegratorOptions& opts = {});

LindbladResult evolve_lindblad(HilbertSpace space, const Drive& drive,
                               const NoiseParams& noise, const MatrixXc& rho0,
                               double t0_ns, double t1_ns,
                               std::vector<double> sample_times = {},
                               const IntegratorOptions& opts = {});

// ---------------------------------------------------------------------------
// Adiabatic eigenlevel tracing.

struct TracePoint {
  double delta_mhz = 0.0;
  double eps2_mhz = 0.0;
};

std::vector<TracePoint> delta_sweep(double delta_lo_mhz, double delta_hi_mhz, int n_points,
                                    double eps2_mhz = 0.0);

struct BranchInfo {
  int fock_label = 0;  // Fock index the branch starts on
  int parity = +1;     // +1 even, -1 odd (conserved along the trace)
};

// Exact level crossing between two traced branches (sign change of the
// energy difference, linearly interpolated). parity: +1/-1 when both
// branches share that parity, 0 for an opposite-parity crossing.
struct Crossing {
  int branch_a = 0;  // Fock labels
  int branch_b = 0;
  int parity = 0;
  double delta_mhz = 0.0;
};

struct EigenTraceInput {
  HilbertSpace space;
  double k_mhz = 0.0;
  std::vector<TracePoint> path;
};

struct EigenTraceResult {
  std::vector<TracePoint> path;
  std::vector<BranchInfo> branches;  // size dim; branch order = Fock order
  // energies(i, b): energy in MHz of branch b at path point i.
  Eigen::MatrixXd energies_mhz;
  // Per path point, column b = adiabatically continued eigenvector of
  // branch b (empty when vectors are not kept).
  std::vector<MatrixXc> vectors;
  std::vector<Crossing> crossings;
  // (path index, branch) where max-overlap continuation fell below 1/2.
  std::vector<std::pair<int, int>> diabatic_events;
  bool continuation_ok = true;
};

// Diagonalizes the drive Hamiltonian along the path per parity block and
// stitches branches by maximum overlap (optimal assignment each step).
// Requires eps_x = 0 so parity is exact.
EigenTraceResult eigen_trace(const EigenTraceInput& input, bool keep_vectors = true);

// Location and size of the minimum |E_a - E_b| gap along the traced path.
struct GapScan {
  double delta_mhz = 0.0;
  double gap_mhz = 0.0;
};
GapScan min_gap(const EigenTraceResult& trace, int fock_a, int fock_b);

// Highest-energy eigenvector in one parity sector (+1/-1) of the
// Hamiltonian; the confining manifold states of the two-photon pump.
VectorXc top_eigenstate(HilbertSpace space, const HamiltonianTerms& terms, int parity);

// Top `count` eigenvectors of one parity sector, highest first, as columns.
MatrixXc top_eigenstates(HilbertSpace space, const HamiltonianTerms& terms, int parity,
                         int count);

// ---------------------------------------------------------------------------
// Ramp initialization fidelity.

struct RampFidelityPoint {
  double delta_as_kc_mhz = 0.0;
  double fidelity = 0.0;              // |<top even | psi(t_up)>|^2
  double second_branch_overlap = 0.0; // |<2nd even | psi(t_up)>|^2
};

struct RampSweepSpec {
  HilbertSpace space;
  double k_mhz = 0.0;
  RampSpec ramp;  // see RampSpec.strategy; hold/down not simulated here
  std::vector<double> delta_as_values_mhz;
  IntegratorOptions integrator;
};

// Vacuum ramped to the plateau for each plateau-offset value; fidelity is
// taken against the top even-parity eigenstate of the end-of-ramp
// Hamiltonian. Static compensation uses each swept value as its constant
// offset; dynamic compensation is unaffected by the sweep axis by design.
std::vector<RampFidelityPoint> ramp_fidelity_sweep(const RampSweepSpec& spec, int jobs = 1);

// ---------------------------------------------------------------------------
// Pauli-rate calibrations in the confined manifold.

// Perturbative detuning-induced splitting of the top eigenstate pair:
// 4 delta alpha^2 exp(-2 alpha^2). Valid for |delta| small against K.
double omega_z_analytic(double delta_mhz, double alpha_sq);

// Exact two-level projection of a single-photon drive onto the cat pair,
// alpha real: 4 alpha sqrt(Re(eps_x)^2 + s^2 Im(eps_x)^2) / sqrt(1 - s^2)
// with s = exp(-2 alpha^2).
double omega_x_analytic(Complex eps_x_mhz, double alpha);

// Numerical counterparts: splitting of the two highest eigenvalues.
double omega_z_measured(HilbertSpace space, double k_mhz, double eps2_mhz,
                        double delta_mhz);
double omega_x_measured(HilbertSpace space, double k_mhz, double eps2_mhz,
                        Complex eps_x_mhz);

// ---------------------------------------------------------------------------
// Coherence-lifetime scan used to locate the shift gain in situ.

struct LifetimeScanSpec {
  HilbertSpace space;
  double k_mhz = 0.0;
  RampSpec ramp;                      // strategy/static offset overridden per point
  NoiseParams noise;
  std::vector<double> theta2_rad;     // Fock-qubit superposition phases
  std::vector<double> delta_as_values_mhz;  // candidate plateau offsets
  std::vector<double> hold_times_ns;  // plateau durations sampled
  IntegratorOptions integrator;
};

struct LifetimePoint {
  double theta2_rad = 0.0;
  double delta_as_mhz = 0.0;
  double lifetime_ns = 0.0;
  bool no_decay = false;  // return probability never dropped measurably
  std::vector<double> return_probability;  // per hold time
};

struct LifetimeScanResult {
  std::vector<LifetimePoint> points;
  double best_delta_as_mhz = 0.0;  // argmax of lifetime, averaged over theta2
  double best_theta2_rad = 0.0;
};

// Prepares (|0> + e^{i theta2} |1>)/sqrt(2), ramps up with a static offset
// shaped like the dynamic law but sized by the candidate value, holds,
// ramps down, undoes the preparation, and fits the decay of the return
// probability over hold time. The candidate equal to the true shift
// maximizes the fitted lifetime.
LifetimeScanResult lifetime_scan(const LifetimeScanSpec& spec, int jobs = 1);

}  // namespace kerrcat
