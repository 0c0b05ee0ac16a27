#include "kerrcat/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kerrcat/errors.hpp"
#include "kerrcat/fit.hpp"
#include "kerrcat/parallel.hpp"
#include "kerrcat/units.hpp"

namespace kerrcat {
namespace {

double call_or_zero(const std::function<double(double)>& f, double t) {
  return f ? f(t) : 0.0;
}

Complex call_or_zero_c(const std::function<Complex(double)>& f, double t) {
  return f ? f(t) : Complex(0.0, 0.0);
}

// Fills an angular-units Hamiltonian into a preallocated dense matrix.
void fill_hamiltonian(MatrixXc& h, const HamiltonianTerms& t) {
  const Eigen::Index dim = h.rows();
  h.setZero();
  const double delta = units::to_angular(t.delta_mhz);
  const double k = units::to_angular(t.k_mhz);
  const double eps2 = units::to_angular(t.eps2_mhz);
  const Complex eps_x = units::to_angular(1.0) * t.eps_x_mhz;
  for (Eigen::Index n = 0; n < dim; ++n) {
    h(n, n) = delta * double(n) - k * double(n) * double(n - 1);
    if (n + 2 < dim) {
      const double c = eps2 * std::sqrt(double((n + 1) * (n + 2)));
      h(n + 2, n) += c;
      h(n, n + 2) += c;
    }
    if (n + 1 < dim) {
      const double r = std::sqrt(double(n + 1));
      h(n + 1, n) += eps_x * r;
      h(n, n + 1) += std::conj(eps_x) * r;
    }
  }
}

// Structured apply of -i H(t) psi for the wavefunction integrator.
class SchrodingerRhs {
 public:
  SchrodingerRhs(int dim, const Drive& drive) : dim_(dim), drive_(&drive) {
    sq_.resize(dim + 2);
    for (int n = 0; n < dim + 2; ++n) sq_[n] = std::sqrt(double(n));
  }

  void operator()(double t, const VectorXc& y, VectorXc& dy) const {
    const double delta = units::to_angular(call_or_zero(drive_->delta_mhz, t));
    const double k = units::to_angular(drive_->k_mhz);
    const double eps2 = units::to_angular(call_or_zero(drive_->eps2_mhz, t));
    const Complex eps_x = units::to_angular(1.0) * call_or_zero_c(drive_->eps_x_mhz, t);
    const Complex eps_x_c = std::conj(eps_x);
    const bool drive_on = eps_x != Complex(0.0, 0.0);
    const Complex mi(0.0, -1.0);
    for (int m = 0; m < dim_; ++m) {
      Complex acc = (delta * m - k * double(m) * double(m - 1)) * y[m];
      if (eps2 != 0.0) {
        if (m + 2 < dim_) acc += eps2 * sq_[m + 1] * sq_[m + 2] * y[m + 2];
        if (m >= 2) acc += eps2 * sq_[m] * sq_[m - 1] * y[m - 2];
      }
      if (drive_on) {
        if (m >= 1) acc += eps_x * sq_[m] * y[m - 1];
        if (m + 1 < dim_) acc += eps_x_c * sq_[m + 1] * y[m + 1];
      }
      dy[m] = mi * acc;
    }
  }

 private:
  int dim_;
  const Drive* drive_;
  std::vector<double> sq_;
};

struct NoiseRates {
  double gamma1_per_ns = 0.0;    // 1/T1
  double gamma_phi_per_ns = 0.0; // 1/T2 - 1/(2 T1)
};

NoiseRates noise_rates(const NoiseParams& p) {
  NoiseRates r;
  if (p.t1_us > 0.0) r.gamma1_per_ns = 1.0 / units::us_to_ns(p.t1_us);
  if (p.t2_us > 0.0) {
    r.gamma_phi_per_ns = 1.0 / units::us_to_ns(p.t2_us) - 0.5 * r.gamma1_per_ns;
    if (r.gamma_phi_per_ns < -1.0e-15)
      throw UnphysicalModel("noise: T2 exceeds the 2*T1 limit");
    r.gamma_phi_per_ns = std::max(r.gamma_phi_per_ns, 0.0);
  }
  return r;
}

// Lindblad right-hand side on the flattened density matrix. Photon loss and
// number dephasing enter element-wise; the commutator uses one gemm.
class LindbladRhs {
 public:
  LindbladRhs(int dim, const Drive& drive, const NoiseParams& noise)
      : dim_(dim), drive_(&drive), rates_(noise_rates(noise)) {
    h_.resize(dim, dim);
    hr_.resize(dim, dim);
  }

  void operator()(double t, const VectorXc& y, VectorXc& dy) const {
    const Eigen::Map<const MatrixXc> rho(y.data(), dim_, dim_);
    Eigen::Map<MatrixXc> out(dy.data(), dim_, dim_);

    HamiltonianTerms terms;
    terms.delta_mhz = call_or_zero(drive_->delta_mhz, t);
    terms.k_mhz = drive_->k_mhz;
    terms.eps2_mhz = call_or_zero(drive_->eps2_mhz, t);
    terms.eps_x_mhz = call_or_zero_c(drive_->eps_x_mhz, t);
    fill_hamiltonian(h_, terms);

    hr_.noalias() = h_ * rho;
    out = Complex(0.0, -1.0) * (hr_ - hr_.adjoint());

    const double g1 = rates_.gamma1_per_ns;
    const double gp = rates_.gamma_phi_per_ns;
    if (g1 > 0.0 || gp > 0.0) {
      for (int n = 0; n < dim_; ++n) {
        for (int m = 0; m < dim_; ++m) {
          double d = 0.0;
          if (g1 > 0.0) d -= 0.5 * g1 * double(m + n);
          if (gp > 0.0) d -= gp * double(m - n) * double(m - n);
          Complex v = d * rho(m, n);
          if (g1 > 0.0 && m + 1 < dim_ && n + 1 < dim_) {
            v += g1 * std::sqrt(double((m + 1) * (n + 1))) * rho(m + 1, n + 1);
          }
          out(m, n) += v;
        }
      }
    }
  }

 private:
  int dim_;
  const Drive* drive_;
  NoiseRates rates_;
  mutable MatrixXc h_;
  mutable MatrixXc hr_;
};

// Segment boundaries: t0, interior breakpoints, t1.
std::vector<double> segment_edges(const std::vector<double>& breaks, double t0, double t1) {
  std::vector<double> edges{t0};
  const double teps = 1.0e-9 * std::max(1.0, std::max(std::abs(t0), std::abs(t1)));
  std::vector<double> sorted = breaks;
  std::sort(sorted.begin(), sorted.end());
  for (double b : sorted) {
    if (b > t0 + teps && b < t1 - teps && b > edges.back() + teps) edges.push_back(b);
  }
  edges.push_back(t1);
  return edges;
}

void check_samples(const std::vector<double>& samples, double t0, double t1) {
  const double teps = 1.0e-9 * std::max(1.0, std::max(std::abs(t0), std::abs(t1)));
  double prev = -std::numeric_limits<double>::infinity();
  for (double s : samples) {
    if (s < t0 - teps || s > t1 + teps)
      throw ConfigError("sample time outside the integration window");
    if (s < prev) throw ConfigError("sample times must be ascending");
    prev = s;
  }
}

// Runs one state through the segmented integration, appending samples.
template <typename Rhs>
IntegratorStats integrate_segments(const Rhs& rhs, VectorXc& y,
                                   const std::vector<double>& edges,
                                   const std::vector<double>& samples,
                                   const IntegratorOptions& opts,
                                   const std::function<void(double, const VectorXc&)>& emit) {
  IntegratorStats total;
  std::size_t cursor = 0;
  const double teps =
      1.0e-9 * std::max(1.0, std::max(std::abs(edges.front()), std::abs(edges.back())));
  for (std::size_t seg = 0; seg + 1 < edges.size(); ++seg) {
    const double a = edges[seg];
    const double b = edges[seg + 1];
    std::vector<double> seg_samples;
    while (cursor < samples.size() && samples[cursor] <= b + teps) {
      seg_samples.push_back(std::min(std::max(samples[cursor], a), b));
      ++cursor;
    }
    const IntegratorStats st = integrate_rk45(
        [&rhs](double t, const VectorXc& v, VectorXc& dv) { rhs(t, v, dv); }, y, a, b,
        seg_samples, emit, opts);
    total.steps_accepted += st.steps_accepted;
    total.steps_rejected += st.steps_rejected;
    total.rhs_evaluations += st.rhs_evaluations;
    total.max_local_error = std::max(total.max_local_error, st.max_local_error);
  }
  return total;
}

}  // namespace

Operator hamiltonian(HilbertSpace space, const HamiltonianTerms& terms) {
  MatrixXc h(space.dim, space.dim);
  fill_hamiltonian(h, terms);
  return Operator(space, std::move(h));
}

Drive schedule_drive(const PumpSchedule& schedule, double k_mhz) {
  Drive d;
  d.k_mhz = k_mhz;
  d.delta_mhz = [schedule](double t) { return schedule.delta_mhz(t); };
  d.eps2_mhz = [schedule](double t) { return schedule.eps2_mhz(t); };
  d.breakpoints = schedule.breakpoints();
  return d;
}

SchrodingerResult evolve_schrodinger(HilbertSpace space, const Drive& drive,
                                     const VectorXc& psi0, double t0_ns, double t1_ns,
                                     std::vector<double> sample_times,
                                     const IntegratorOptions& opts) {
  if (psi0.size() != space.dim)
    throw DimensionMismatch("evolve_schrodinger: state length != space dim");
  if (!(t1_ns > t0_ns)) throw ConfigError("evolution window is empty");
  if (sample_times.empty()) sample_times = {t1_ns};
  check_samples(sample_times, t0_ns, t1_ns);

  SchrodingerResult out;
  out.times_ns.reserve(sample_times.size());
  out.states.reserve(sample_times.size());

  const SchrodingerRhs rhs(space.dim, drive);
  VectorXc y = psi0;
  const std::vector<double> edges = segment_edges(drive.breakpoints, t0_ns, t1_ns);
  out.stats = integrate_segments(
      rhs, y, edges, sample_times, opts, [&](double t, const VectorXc& v) {
        out.times_ns.push_back(t);
        out.states.push_back(v);
      });
  return out;
}

LindbladResult evolve_lindblad(HilbertSpace space, const Drive& drive,
                               const NoiseParams& noise, const MatrixXc& rho0,
                               double t0_ns, double t1_ns, std::vector<double> sample_times,
                               const IntegratorOptions& opts) {
  if (rho0.rows() != space.dim || rho0.cols() != space.dim)
    throw DimensionMismatch("evolve_lindblad: density matrix shape != space dim");
  if (!(t1_ns > t0_ns)) throw ConfigError("evolution window is empty");
  if (sample_times.empty()) sample_times = {t1_ns};
  check_samples(sample_times, t0_ns, t1_ns);

  LindbladResult out;
  out.times_ns.reserve(sample_times.size());
  out.states.reserve(sample_times.size());

  const LindbladRhs rhs(space.dim, drive, noise);
  VectorXc y(space.dim * space.dim);
  Eigen::Map<MatrixXc>(y.data(), space.dim, space.dim) = rho0;
  const std::vector<double> edges = segment_edges(drive.breakpoints, t0_ns, t1_ns);
  out.stats = integrate_segments(
      rhs, y, edges, sample_times, opts, [&](double t, const VectorXc& v) {
        out.times_ns.push_back(t);
        out.states.push_back(Eigen::Map<const MatrixXc>(v.data(), space.dim, space.dim));
      });
  return out;
}

// ---------------------------------------------------------------------------

std::vector<TracePoint> delta_sweep(double delta_lo_mhz, double delta_hi_mhz, int n_points,
                                    double eps2_mhz) {
  if (n_points < 2) throw ConfigError("delta_sweep needs at least two points");
  std::vector<TracePoint> out(n_points);
  const double dd = (delta_hi_mhz - delta_lo_mhz) / (n_points - 1);
  for (int i = 0; i < n_points; ++i) {
    out[i] = {delta_lo_mhz + i * dd, eps2_mhz};
  }
  return out;
}

namespace {

std::vector<int> parity_indices(int dim, int parity) {
  std::vector<int> idx;
  for (int n = parity == +1 ? 0 : 1; n < dim; n += 2) idx.push_back(n);
  return idx;
}

// Real symmetric parity-block Hamiltonian in MHz.
Eigen::MatrixXd parity_block(const std::vector<int>& idx, double k_mhz,
                             const TracePoint& pt) {
  const int s = int(idx.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(s, s);
  for (int i = 0; i < s; ++i) {
    const double n = idx[i];
    h(i, i) = pt.delta_mhz * n - k_mhz * n * (n - 1.0);
    if (i + 1 < s) {
      const double c = pt.eps2_mhz * std::sqrt((n + 1.0) * (n + 2.0));
      h(i + 1, i) = c;
      h(i, i + 1) = c;
    }
  }
  return h;
}

}  // namespace

EigenTraceResult eigen_trace(const EigenTraceInput& input, bool keep_vectors) {
  const int dim = input.space.dim;
  if (input.path.size() < 1) throw ConfigError("eigen_trace needs a non-empty path");
  if (input.k_mhz <= 0.0) throw ConfigError("eigen_trace needs K > 0");

  const int n_points = int(input.path.size());
  EigenTraceResult out;
  out.path = input.path;
  out.branches.resize(dim);
  out.energies_mhz.resize(n_points, dim);
  if (keep_vectors) out.vectors.assign(n_points, MatrixXc::Zero(dim, dim));

  for (int parity : {+1, -1}) {
    const std::vector<int> idx = parity_indices(dim, parity);
    const int s = int(idx.size());
    if (s == 0) continue;

    Eigen::MatrixXd v_prev;
    std::vector<int> label(s);  // sub-branch -> Fock label
    for (int p = 0; p < n_points; ++p) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
          parity_block(idx, input.k_mhz, input.path[p]));
      if (es.info() != Eigen::Success)
        throw NoConvergence("eigen_trace: block diagonalization failed");
      Eigen::VectorXd evals = es.eigenvalues();
      Eigen::MatrixXd vecs = es.eigenvectors();

      std::vector<int> col_of(s);  // sub-branch -> eigencolumn at this point
      if (p == 0) {
        // Label branches by their dominant Fock component, resolved as an
        // optimal assignment so labels are a bijection even near degeneracy.
        Eigen::MatrixXd cost(s, s);
        for (int b = 0; b < s; ++b)
          for (int r = 0; r < s; ++r) cost(b, r) = -std::abs(vecs(r, b));
        const std::vector<int> row_of_col = hungarian(cost);
        std::vector<int> col_of_row(s);
        for (int b = 0; b < s; ++b) col_of_row[row_of_col[b]] = b;
        for (int r = 0; r < s; ++r) {
          label[r] = idx[r];
          col_of[r] = col_of_row[r];
        }
      } else {
        // Continue each branch onto the eigencolumn it overlaps most.
        Eigen::MatrixXd overlap = v_prev.transpose() * vecs;
        Eigen::MatrixXd cost = -overlap.cwiseAbs();
        const std::vector<int> assign = hungarian(cost);  // prev col -> new col
        for (int b = 0; b < s; ++b) {
          col_of[b] = assign[b];
          if (std::abs(overlap(b, assign[b])) < 0.5) {
            out.diabatic_events.emplace_back(p, label[b]);
          }
        }
      }

      // Reorder into branch order and fix continuation sign.
      Eigen::MatrixXd v_now(s, s);
      for (int b = 0; b < s; ++b) {
        Eigen::VectorXd col = vecs.col(col_of[b]);
        if (p > 0 && v_prev.col(b).dot(col) < 0.0) col = -col;
        v_now.col(b) = col;
        out.energies_mhz(p, label[b]) = evals(col_of[b]);
        if (keep_vectors) {
          for (int r = 0; r < s; ++r) out.vectors[p](idx[r], label[b]) = col(r);
        }
      }
      v_prev = std::move(v_now);

      if (p == 0) {
        for (int b = 0; b < s; ++b) out.branches[label[b]] = BranchInfo{label[b], parity};
      }
    }
  }

  // Exact crossings: sign changes of pairwise energy differences.
  for (int a = 0; a < dim; ++a) {
    for (int b = a + 1; b < dim; ++b) {
      const int pa = out.branches[a].parity;
      const int pb = out.branches[b].parity;
      for (int p = 0; p + 1 < n_points; ++p) {
        const double d0 = out.energies_mhz(p, a) - out.energies_mhz(p, b);
        const double d1 = out.energies_mhz(p + 1, a) - out.energies_mhz(p + 1, b);
        const double x0 = out.path[p].delta_mhz;
        const double x1 = out.path[p + 1].delta_mhz;
        if (d0 == 0.0 && d1 != 0.0) {
          out.crossings.push_back({a, b, pa == pb ? pa : 0, x0});
        } else if (d0 * d1 < 0.0) {
          const double x = x0 + d0 / (d0 - d1) * (x1 - x0);
          out.crossings.push_back({a, b, pa == pb ? pa : 0, x});
        }
      }
    }
  }
  out.continuation_ok = out.diabatic_events.empty();
  return out;
}

GapScan min_gap(const EigenTraceResult& trace, int fock_a, int fock_b) {
  const int n = int(trace.path.size());
  if (fock_a < 0 || fock_b < 0 || fock_a >= trace.energies_mhz.cols() ||
      fock_b >= trace.energies_mhz.cols())
    throw ConfigError("min_gap: branch label out of range");
  GapScan best{0.0, std::numeric_limits<double>::infinity()};
  for (int p = 0; p < n; ++p) {
    const double g = std::abs(trace.energies_mhz(p, fock_a) - trace.energies_mhz(p, fock_b));
    if (g < best.gap_mhz) best = {trace.path[p].delta_mhz, g};
  }
  return best;
}

namespace {

// Top eigenvectors of one parity block, highest first, embedded in the full
// space; count columns.
MatrixXc top_parity_vectors(HilbertSpace space, const HamiltonianTerms& terms, int parity,
                            int count) {
  const std::vector<int> idx = parity_indices(space.dim, parity);
  const int s = int(idx.size());
  if (count > s) throw ConfigError("top_parity_vectors: not enough levels in block");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      parity_block(idx, terms.k_mhz, TracePoint{terms.delta_mhz, terms.eps2_mhz}));
  if (es.info() != Eigen::Success)
    throw NoConvergence("parity block diagonalization failed");
  MatrixXc out = MatrixXc::Zero(space.dim, count);
  for (int c = 0; c < count; ++c) {
    const Eigen::VectorXd col = es.eigenvectors().col(s - 1 - c);
    for (int r = 0; r < s; ++r) out(idx[r], c) = col(r);
  }
  return out;
}

}  // namespace

VectorXc top_eigenstate(HilbertSpace space, const HamiltonianTerms& terms, int parity) {
  if (terms.eps_x_mhz != Complex(0.0, 0.0))
    throw ConfigError("top_eigenstate: single-photon drive breaks parity");
  if (parity != +1 && parity != -1) throw ConfigError("parity must be +1 or -1");
  return top_parity_vectors(space, terms, parity, 1).col(0);
}

MatrixXc top_eigenstates(HilbertSpace space, const HamiltonianTerms& terms, int parity,
                         int count) {
  if (terms.eps_x_mhz != Complex(0.0, 0.0))
    throw ConfigError("top_eigenstates: single-photon drive breaks parity");
  if (parity != +1 && parity != -1) throw ConfigError("parity must be +1 or -1");
  if (count < 1) throw ConfigError("top_eigenstates: count must be >= 1");
  return top_parity_vectors(space, terms, parity, count);
}

std::vector<RampFidelityPoint> ramp_fidelity_sweep(const RampSweepSpec& spec, int jobs) {
  const int n = int(spec.delta_as_values_mhz.size());
  if (n == 0) throw ConfigError("ramp_fidelity_sweep needs at least one offset value");
  std::vector<RampFidelityPoint> out(n);

  parallel_for(n, jobs, [&](int i) {
    RampSpec r = spec.ramp;
    if (r.strategy == CompensationStrategy::Static)
      r.static_delta_as_mhz = spec.delta_as_values_mhz[i];
    const PumpSchedule sched(r);
    const Drive drive = schedule_drive(sched, spec.k_mhz);

    VectorXc psi = VectorXc::Zero(spec.space.dim);
    psi[0] = 1.0;
    const SchrodingerResult res =
        evolve_schrodinger(spec.space, drive, psi, 0.0, sched.t_up_ns(), {sched.t_up_ns()},
                           spec.integrator);
    const VectorXc& end = res.states.back();

    HamiltonianTerms plateau;
    plateau.delta_mhz = sched.delta_mhz(sched.t_up_ns());
    plateau.k_mhz = spec.k_mhz;
    plateau.eps2_mhz = sched.eps2_mhz(sched.t_up_ns());
    const MatrixXc targets = top_parity_vectors(spec.space, plateau, +1, 2);

    RampFidelityPoint pt;
    pt.delta_as_kc_mhz = spec.delta_as_values_mhz[i];
    pt.fidelity = std::norm(targets.col(0).dot(end));
    pt.second_branch_overlap = std::norm(targets.col(1).dot(end));
    out[i] = pt;
  });
  return out;
}

// ---------------------------------------------------------------------------

double omega_z_analytic(double delta_mhz, double alpha_sq) {
  return std::abs(4.0 * delta_mhz * alpha_sq * std::exp(-2.0 * alpha_sq));
}

double omega_x_analytic(Complex eps_x_mhz, double alpha) {
  if (alpha <= 0.0) throw ConfigError("omega_x_analytic needs alpha > 0");
  const double s = std::exp(-2.0 * alpha * alpha);
  const double re = eps_x_mhz.real();
  const double im = eps_x_mhz.imag();
  return 4.0 * alpha * std::sqrt(re * re + s * s * im * im) / std::sqrt(1.0 - s * s);
}

double omega_z_measured(HilbertSpace space, double k_mhz, double eps2_mhz,
                        double delta_mhz) {
  const std::vector<int> even = parity_indices(space.dim, +1);
  const std::vector<int> odd = parity_indices(space.dim, -1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ee(
      parity_block(even, k_mhz, {delta_mhz, eps2_mhz}), Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eo(
      parity_block(odd, k_mhz, {delta_mhz, eps2_mhz}), Eigen::EigenvaluesOnly);
  return std::abs(ee.eigenvalues()(even.size() - 1) - eo.eigenvalues()(odd.size() - 1));
}

double omega_x_measured(HilbertSpace space, double k_mhz, double eps2_mhz,
                        Complex eps_x_mhz) {
  HamiltonianTerms t;
  t.k_mhz = k_mhz;
  t.eps2_mhz = eps2_mhz;
  t.eps_x_mhz = eps_x_mhz;
  const Operator h = hamiltonian(space, t);
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(h.matrix(), Eigen::EigenvaluesOnly);
  const Eigen::Index top = es.eigenvalues().size() - 1;
  return units::to_mhz(es.eigenvalues()(top) - es.eigenvalues()(top - 1));
}

// ---------------------------------------------------------------------------

namespace {

// Fock-qubit preparation unitary embedded in the full space:
// |0> -> (|0> + e^{i theta} |1>)/sqrt(2).
MatrixXc prep_unitary(int dim, double theta) {
  MatrixXc u = MatrixXc::Identity(dim, dim);
  const double inv = 1.0 / std::sqrt(2.0);
  const Complex ph = std::exp(Complex(0.0, theta));
  u(0, 0) = inv;
  u(0, 1) = -std::conj(ph) * inv;
  u(1, 0) = ph * inv;
  u(1, 1) = inv;
  return u;
}

}  // namespace

LifetimeScanResult lifetime_scan(const LifetimeScanSpec& spec, int jobs) {
  if (spec.theta2_rad.empty() || spec.delta_as_values_mhz.empty())
    throw ConfigError("lifetime_scan needs a non-empty grid");
  if (spec.hold_times_ns.size() < 3)
    throw ConfigError("lifetime_scan needs at least three hold times");
  std::vector<double> holds = spec.hold_times_ns;
  std::sort(holds.begin(), holds.end());
  if (holds.front() < 0.0) throw ConfigError("hold times must be >= 0");
  if (!(holds.back() > 0.0)) throw ConfigError("longest hold time must be > 0");

  const int n_theta = int(spec.theta2_rad.size());
  const int n_delta = int(spec.delta_as_values_mhz.size());
  const int n = n_theta * n_delta;
  const int dim = spec.space.dim;

  LifetimeScanResult out;
  out.points.resize(n);

  parallel_for(n, jobs, [&](int g) {
    const int it = g % n_theta;
    const int id = g / n_theta;
    const double theta = spec.theta2_rad[it];
    const double cand = spec.delta_as_values_mhz[id];

    RampSpec r = spec.ramp;
    r.strategy = CompensationStrategy::Dynamic;
    r.t_hold_ns = 0.0;
    const double e2 = r.eps2_kc_mhz;
    r.dynamic_gain_per_mhz = e2 > 0.0 ? cand / (e2 * e2) : 0.0;
    const PumpSchedule ramp(r);
    const Drive drive = schedule_drive(ramp, spec.k_mhz);
    const double t_up = ramp.t_up_ns();
    const double t_down = ramp.t_down_ns();

    const MatrixXc prep = prep_unitary(dim, theta);
    const VectorXc qubit = prep.col(0);

    // Hold drive: plateau values are constant, so reuse the schedule at t_up.
    Drive hold_drive;
    hold_drive.k_mhz = spec.k_mhz;
    const double plateau_eps2 = ramp.eps2_mhz(t_up);
    const double plateau_delta = ramp.delta_mhz(t_up);
    hold_drive.eps2_mhz = [plateau_eps2](double) { return plateau_eps2; };
    hold_drive.delta_mhz = [plateau_delta](double) { return plateau_delta; };

    std::vector<double> hold_samples;
    hold_samples.reserve(holds.size());
    for (double h : holds) hold_samples.push_back(t_up + h);

    LifetimePoint pt;
    pt.theta2_rad = theta;
    pt.delta_as_mhz = cand;
    pt.return_probability.resize(holds.size());

    if (spec.noise.any()) {
      MatrixXc rho = qubit * qubit.adjoint();
      const LindbladResult up = evolve_lindblad(spec.space, drive, spec.noise, rho, 0.0,
                                                t_up, {t_up}, spec.integrator);
      std::vector<MatrixXc> held(holds.size());
      if (holds.front() == 0.0) held[0] = up.states.back();
      const double h_end = t_up + holds.back();
      if (holds.back() > 0.0) {
        const LindbladResult hold_res =
            evolve_lindblad(spec.space, hold_drive, spec.noise, up.states.back(), t_up,
                            h_end, hold_samples, spec.integrator);
        for (std::size_t i = 0; i < holds.size(); ++i) held[i] = hold_res.states[i];
      }
      for (std::size_t i = 0; i < holds.size(); ++i) {
        const LindbladResult down = evolve_lindblad(spec.space, drive, spec.noise, held[i],
                                                    t_up, t_up + t_down, {t_up + t_down},
                                                    spec.integrator);
        const MatrixXc undone = prep.adjoint() * down.states.back() * prep;
        pt.return_probability[i] = undone(0, 0).real();
      }
    } else {
      const SchrodingerResult up = evolve_schrodinger(spec.space, drive, qubit, 0.0, t_up,
                                                      {t_up}, spec.integrator);
      std::vector<VectorXc> held(holds.size());
      if (holds.front() == 0.0) held[0] = up.states.back();
      const double h_end = t_up + holds.back();
      if (holds.back() > 0.0) {
        const SchrodingerResult hold_res =
            evolve_schrodinger(spec.space, hold_drive, up.states.back(), t_up, h_end,
                               hold_samples, spec.integrator);
        for (std::size_t i = 0; i < holds.size(); ++i) held[i] = hold_res.states[i];
      }
      for (std::size_t i = 0; i < holds.size(); ++i) {
        const SchrodingerResult down =
            evolve_schrodinger(spec.space, drive, held[i], t_up, t_up + t_down,
                               {t_up + t_down}, spec.integrator);
        const Complex amp = qubit.dot(down.states.back());
        pt.return_probability[i] = std::norm(amp);
      }
    }

    double lo = 1.0;
    for (double p : pt.return_probability) lo = std::min(lo, p);
    if (lo > 0.98) {
      pt.no_decay = true;
      pt.lifetime_ns = std::numeric_limits<double>::infinity();
    } else {
      try {
        const ExponentialFit fit = fit_exponential(holds, pt.return_probability);
        pt.lifetime_ns = std::max(fit.tau, 0.0);
      } catch (const Error&) {
        pt.lifetime_ns = 0.0;
      }
    }
    out.points[g] = pt;
  });

  // Rank candidates by the mean return probability across holds and theta2
  // (a mis-sized offset makes the held superposition precess, so any
  // residual rotation drags the mean toward 1/2 regardless of how the
  // exponential fit reads an oscillating trace); ties break on the tail.
  double best_key1 = -1.0;
  double best_key2 = -1.0;
  int best_id = 0;
  for (int id = 0; id < n_delta; ++id) {
    double sum_all = 0.0;
    double sum_tail = 0.0;
    int count = 0;
    for (int it = 0; it < n_theta; ++it) {
      const LifetimePoint& pt = out.points[id * n_theta + it];
      for (double p : pt.return_probability) {
        sum_all += p;
        ++count;
      }
      sum_tail += pt.return_probability.back();
    }
    const double k1 = sum_all / count;
    const double k2 = sum_tail / n_theta;
    if (k1 > best_key1 + 1.0e-12 || (k1 > best_key1 - 1.0e-12 && k2 > best_key2)) {
      best_key1 = std::max(k1, best_key1);
      best_key2 = k2;
      best_id = id;
    }
  }
  out.best_delta_as_mhz = spec.delta_as_values_mhz[best_id];
  double best_theta_life = -1.0;
  for (int it = 0; it < n_theta; ++it) {
    const LifetimePoint& pt = out.points[best_id * n_theta + it];
    const double l = std::isfinite(pt.lifetime_ns) ? pt.lifetime_ns : 1.0e18;
    if (l > best_theta_life) {
      best_theta_life = l;
      out.best_theta2_rad = pt.theta2_rad;
    }
  }
  return out;
}

}  // namespace kerrcat
