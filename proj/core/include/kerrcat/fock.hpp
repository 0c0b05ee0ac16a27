#pragma once

#include <complex>

#include "kerrcat/linalg.hpp"

namespace kerrcat {

// Truncated single-mode Fock space with dim levels |0..dim-1>.
struct HilbertSpace {
  int dim = 0;

  explicit HilbertSpace(int d);
  bool operator==(const HilbertSpace& o) const { return dim == o.dim; }
  bool operator!=(const HilbertSpace& o) const { return dim != o.dim; }
};

class Operator {
 public:
  Operator(HilbertSpace space, MatrixXc m);

  const HilbertSpace& space() const { return space_; }
  const MatrixXc& matrix() const { return m_; }
  MatrixXc& matrix() { return m_; }

  Operator adjoint() const { return Operator(space_, m_.adjoint()); }
  bool hermitian(double tol = 1.0e-12) const { return is_hermitian(m_, tol); }

  friend Operator operator+(const Operator& a, const Operator& b);
  friend Operator operator-(const Operator& a, const Operator& b);
  friend Operator operator*(const Operator& a, const Operator& b);
  friend Operator operator*(Complex s, const Operator& a);
  friend Operator operator*(double s, const Operator& a);

 private:
  HilbertSpace space_;
  MatrixXc m_;
};

// Normalized pure state. Construction rejects vectors whose norm deviates
// from 1 by more than 1e-6 and then renormalizes to machine precision.
class StateVector {
 public:
  StateVector(HilbertSpace space, VectorXc v);

  static StateVector basis(HilbertSpace space, int n);

  const HilbertSpace& space() const { return space_; }
  const VectorXc& vec() const { return v_; }

 private:
  HilbertSpace space_;
  VectorXc v_;
};

// Mixed state. Construction enforces hermiticity (1e-10 relative), unit
// trace (1e-6, then rescaled exactly), and eigenvalues >= -1e-6; the loose
// thresholds admit well-converged integrator output while still rejecting
// genuinely unphysical matrices.
class DensityMatrix {
 public:
  DensityMatrix(HilbertSpace space, MatrixXc rho);

  static DensityMatrix pure(const StateVector& psi);

  const HilbertSpace& space() const { return space_; }
  const MatrixXc& matrix() const { return m_; }

 private:
  HilbertSpace space_;
  MatrixXc m_;
};

enum class CatKind { Plus, Minus, PlusI, MinusI };

Complex cat_phase(CatKind k);

Operator annihilation(HilbertSpace space);
Operator creation(HilbertSpace space);
Operator number_op(HilbertSpace space);
// parity = exp(i pi a^dag a), diagonal entries (-1)^n.
Operator parity_op(HilbertSpace space);

// Truncation adequacy rule: dim >= |alpha|^2 + 6|alpha| + 10 keeps the
// Poisson tail mass of a coherent state below 1e-10.
int required_dim(Complex alpha);
double poisson_tail_mass(double alpha_sq, int dim);

StateVector coherent_state(Complex alpha, HilbertSpace space);
StateVector cat_state(Complex alpha, CatKind kind, HilbertSpace space);

// exp(beta a^dag - conj(beta) a) as an Operator, via the anti-Hermitian
// generator eigendecomposition route. Checks truncation adequacy for |beta|.
Operator displacement(Complex beta, HilbertSpace space);
// Same unitary through the Pade scaling-and-squaring route (cross-check).
Operator displacement_pade(Complex beta, HilbertSpace space);
// Matrix elements <m|D(beta)|n> from the closed-form Laguerre recurrence.
// Exact in the untruncated space, so valid for arbitrarily large |beta|;
// used by displaced-parity tomography.
MatrixXc displacement_analytic(Complex beta, int dim);

double state_fidelity(const StateVector& a, const StateVector& b);
double state_fidelity(const DensityMatrix& rho, const StateVector& psi);
// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double state_fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

Complex expectation(const Operator& op, const StateVector& psi);
Complex expectation(const Operator& op, const DensityMatrix& rho);

}  // namespace kerrcat
